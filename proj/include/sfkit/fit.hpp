#ifndef SFKIT_FIT_HPP
#define SFKIT_FIT_HPP

#include "sfkit/loss.hpp"

namespace sfkit {

struct FitOptions {
    int steps = 2000;
    double step_size = 0.1; // initial line-search trial step
    double mu_weight = 0.1;
    ScaleStrategy strategy = ScaleStrategy::Xor;
};

struct FitResult {
    Prediction prediction;
    std::vector<LossReport> trajectory; // initial point plus accepted steps
    bool converged = false;             // zero loss, zero gradient, or
                                        // exhausted line search
};

/// Gradient descent with backtracking (Armijo) line search over the free
/// per-pixel fields x1, x2, sf. The trajectory is monotonically
/// non-increasing; ten consecutive accepted increases raise a divergence
/// error.
FitResult fit_free_parameters(const LossSample& gt, const Prediction& init,
                              const FitOptions& opt = {});

} // namespace sfkit

#endif
