#include "sfkit/fit.hpp"

#include <cmath>
#include <stdexcept>

namespace sfkit {

namespace {

struct State {
    std::vector<double> x1, x2, sf;

    static State from(const Prediction& p) {
        State s;
        s.x1.assign(p.x1.data.begin(), p.x1.data.end());
        s.x2.assign(p.x2.data.begin(), p.x2.data.end());
        s.sf.assign(p.sf.data.begin(), p.sf.data.end());
        return s;
    }

    Prediction to_prediction(const Prediction& shape) const {
        Prediction p = shape;
        for (size_t i = 0; i < x1.size(); ++i) p.x1.data[i] = static_cast<float>(x1[i]);
        for (size_t i = 0; i < x2.size(); ++i) p.x2.data[i] = static_cast<float>(x2[i]);
        for (size_t i = 0; i < sf.size(); ++i) p.sf.data[i] = static_cast<float>(sf[i]);
        return p;
    }
};

State stepped(const State& s, const LossGradient& g, double alpha) {
    State n = s;
    for (size_t i = 0; i < n.x1.size(); ++i) n.x1[i] -= alpha * g.x1[i];
    for (size_t i = 0; i < n.x2.size(); ++i) n.x2[i] -= alpha * g.x2[i];
    for (size_t i = 0; i < n.sf.size(); ++i) n.sf[i] -= alpha * g.sf[i];
    return n;
}

double grad_norm2(const LossGradient& g) {
    double s = 0.0;
    for (double v : g.x1) s += v * v;
    for (double v : g.x2) s += v * v;
    for (double v : g.sf) s += v * v;
    return s;
}

} // namespace

FitResult fit_free_parameters(const LossSample& gt, const Prediction& init,
                              const FitOptions& opt) {
    constexpr double armijo = 1e-4;
    constexpr int max_halvings = 50;

    FitResult out;
    State state = State::from(init);
    Prediction current = state.to_prediction(init);
    LossReport report = total_loss(gt, current, opt.strategy, opt.mu_weight);
    out.trajectory.push_back(report);

    double alpha = opt.step_size;
    int rising_streak = 0;

    for (int step = 0; step < opt.steps; ++step) {
        if (report.total == 0.0) {
            out.converged = true;
            break;
        }
        const LossGradient g =
            loss_gradient(gt, current, opt.strategy, opt.mu_weight);
        const double gn2 = grad_norm2(g);
        if (gn2 == 0.0) {
            out.converged = true;
            break;
        }

        double trial = alpha;
        bool accepted = false;
        for (int k = 0; k < max_halvings; ++k) {
            const State cand_state = stepped(state, g, trial);
            const Prediction cand = cand_state.to_prediction(init);
            const LossReport cand_report =
                total_loss(gt, cand, opt.strategy, opt.mu_weight);
            if (cand_report.total <= report.total - armijo * trial * gn2) {
                if (cand_report.total > report.total) {
                    if (++rising_streak >= 10)
                        throw std::runtime_error("fit diverged: loss rose for "
                                                 "10 consecutive steps");
                } else {
                    rising_streak = 0;
                }
                state = cand_state;
                current = cand;
                report = cand_report;
                out.trajectory.push_back(report);
                alpha = trial * 2.0; // let the next step grow again
                accepted = true;
                break;
            }
            trial *= 0.5;
        }
        if (!accepted) {
            out.converged = true; // no descent direction at this resolution
            break;
        }
    }

    out.prediction = current;
    return out;
}

} // namespace sfkit
