#include "sfkit/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace sfkit {

namespace {

enum Field { FX1 = 0, FX2 = 1, FSF = 2 };

// Local L1 residuals the coordinate (field, pixel, channel) directly
// drives, paired with the step's worst-case effect on each. A residual
// within margin_factor * effect of zero can change sign under the
// finite-difference step, so the coordinate is not judged.
bool kink_free(const LossSample& gt, const Prediction& pred,
               const ScaleContext& ctx, int field, int y, int x, int c,
               const GradientAuditOptions& opt) {
    const double h = opt.step;
    const double m = opt.margin_factor;

    auto clears = [&](double residual, double effect) {
        return std::fabs(residual) > m * effect;
    };

    if (field == FX1 || field == FX2) {
        const FieldGrid& p = field == FX1 ? pred.x1 : pred.x2;
        const FieldGrid& g = field == FX1 ? gt.x1 : gt.x2;
        const ValidityMask& mm = field == FX1 ? gt.m1 : gt.m2;
        if (mm.valid(y, x)) {
            double r, eff;
            if (ctx.normalize) {
                r = p.at(y, x, c) / ctx.z_pred - g.at(y, x, c) / ctx.z_gt;
                eff = h / ctx.z_pred;
            } else if (ctx.align) {
                r = ctx.align_scale * p.at(y, x, c) - g.at(y, x, c);
                eff = h * ctx.align_scale;
            } else {
                r = p.at(y, x, c) - g.at(y, x, c);
                eff = h;
            }
            if (!clears(r, eff)) return false;
        }
    } else if (gt.m_sf.valid(y, x)) {
        double r, eff;
        if (ctx.normalize) {
            r = pred.sf.at(y, x, c) / ctx.z_pred - gt.sf.at(y, x, c) / ctx.z_gt;
            eff = h / ctx.z_pred;
        } else if (ctx.align) {
            r = ctx.align_scale * pred.sf.at(y, x, c) - gt.sf.at(y, x, c);
            eff = h * ctx.align_scale;
        } else {
            r = pred.sf.at(y, x, c) - gt.sf.at(y, x, c);
            eff = h;
        }
        if (!clears(r, eff)) return false;
    }

    // Flow residuals involve x1 and sf at the same pixel.
    if ((field == FX1 || field == FSF) && gt.m_sf.valid(y, x)) {
        const double ax = pred.x1.at(y, x, 0), ay = pred.x1.at(y, x, 1),
                     az = pred.x1.at(y, x, 2);
        const double ex = ax + pred.sf.at(y, x, 0),
                     ey = ay + pred.sf.at(y, x, 1),
                     ez = az + pred.sf.at(y, x, 2);
        if (az > 0.0 && ez > 0.0) {
            // Depth sign flips within the step are kinks too.
            if (az < m * h || ez < m * h) return false;
            const double ru = gt.k.fx * (ex / ez - ax / az) - gt.flow.at(y, x, 0);
            const double rv = gt.k.fy * (ey / ez - ay / az) - gt.flow.at(y, x, 1);
            const double ju =
                gt.k.fx * (1.0 / ez + 1.0 / az +
                           std::fabs(ex) / (ez * ez) + std::fabs(ax) / (az * az));
            const double jv =
                gt.k.fy * (1.0 / ez + 1.0 / az +
                           std::fabs(ey) / (ez * ez) + std::fabs(ay) / (az * az));
            if (!clears(ru, h * ju) || !clears(rv, h * jv)) return false;
        } else if (az > -m * h || ez > -m * h) {
            return false; // could cross into the projectable region
        }
    }
    return true;
}

} // namespace

namespace {

// Under Align, the fitted scale is a median; if two ratios sit closer
// than the step can move them, the median identity may switch mid
// difference. Returns false when pointmap coordinates cannot be judged.
bool align_median_is_stable(const LossSample& gt, const Prediction& pred,
                            const GradientAuditOptions& opt) {
    std::vector<double> ratios;
    double max_sens = 0.0;
    const FieldGrid* preds[2] = {&pred.x1, &pred.x2};
    const FieldGrid* gts[2] = {&gt.x1, &gt.x2};
    const ValidityMask* ms[2] = {&gt.m1, &gt.m2};
    for (int v = 0; v < 2; ++v) {
        for (int y = 0; y < pred.x1.height; ++y) {
            for (int x = 0; x < pred.x1.width; ++x) {
                if (!ms[v]->valid(y, x)) continue;
                double pn = 0.0, gn = 0.0;
                for (int c = 0; c < 3; ++c) {
                    pn += preds[v]->at(y, x, c) * preds[v]->at(y, x, c);
                    gn += gts[v]->at(y, x, c) * gts[v]->at(y, x, c);
                }
                pn = std::sqrt(pn);
                gn = std::sqrt(gn);
                if (!(pn > 0.0)) continue;
                ratios.push_back(gn / pn);
                max_sens = std::max(max_sens, gn / (pn * pn));
            }
        }
    }
    if (ratios.size() < 3) return false;
    std::sort(ratios.begin(), ratios.end());
    const size_t m = ratios.size() / 2;
    const double gap = std::min(ratios[m] - ratios[m - 1],
                                m + 1 < ratios.size()
                                    ? ratios[m + 1] - ratios[m]
                                    : ratios[m] - ratios[m - 1]);
    return gap > opt.margin_factor * opt.step * max_sens;
}

} // namespace

GradientAuditResult gradient_audit(const LossSample& gt, const Prediction& pred,
                                   const GradientAuditOptions& opt) {
    GradientAuditResult res;
    const LossGradient analytic =
        loss_gradient(gt, pred, opt.strategy, opt.mu_weight);
    const ScaleContext ctx =
        make_scale_context(pred.x1, pred.x2, gt.x1, gt.x2, gt.m1, gt.m2,
                           gt.metric, opt.strategy);
    const bool x_checkable =
        !ctx.align || align_median_is_stable(gt, pred, opt);

    Prediction work = pred;
    FieldGrid* fields[3] = {&work.x1, &work.x2, &work.sf};
    const std::vector<double>* grads[3] = {&analytic.x1, &analytic.x2,
                                           &analytic.sf};

    for (int f = 0; f < 3; ++f) {
        FieldGrid& grid = *fields[f];
        for (int y = 0; y < grid.height; ++y) {
            for (int x = 0; x < grid.width; ++x) {
                for (int c = 0; c < 3; ++c) {
                    if ((f != FSF && !x_checkable) ||
                        !kink_free(gt, pred, ctx, f, y, x, c, opt)) {
                        ++res.skipped_kink;
                        continue;
                    }
                    const size_t idx =
                        (static_cast<size_t>(y) * grid.width + x) * 3 + c;
                    const float orig = grid.data[idx];
                    const float plus =
                        static_cast<float>(static_cast<double>(orig) + opt.step);
                    const float minus =
                        static_cast<float>(static_cast<double>(orig) - opt.step);

                    grid.data[idx] = plus;
                    const double f_plus =
                        total_loss(gt, work, opt.strategy, opt.mu_weight).total;
                    grid.data[idx] = minus;
                    const double f_minus =
                        total_loss(gt, work, opt.strategy, opt.mu_weight).total;
                    grid.data[idx] = orig;

                    const double realized =
                        static_cast<double>(plus) - static_cast<double>(minus);
                    const double fd = (f_plus - f_minus) / realized;
                    const double an = (*grads[f])[idx];

                    ++res.checked;
                    const double mag = std::max(std::fabs(an), std::fabs(fd));
                    if (mag < opt.zero_floor) continue;
                    const double rel = std::fabs(an - fd) / mag;
                    res.max_rel_error = std::max(res.max_rel_error, rel);
                }
            }
        }
    }
    return res;
}

Prediction make_noisy_prediction(const LossSample& gt, uint64_t seed,
                                 double amplitude) {
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 1);
    std::uniform_real_distribution<double> uni(-amplitude, amplitude);
    Prediction pred = prediction_from_gt(gt);
    for (FieldGrid* g : {&pred.x1, &pred.x2, &pred.sf})
        for (float& v : g->data) v = static_cast<float>(v + uni(rng));
    return pred;
}

} // namespace sfkit
