#ifndef SFKIT_GRADCHECK_HPP
#define SFKIT_GRADCHECK_HPP

#include "sfkit/loss.hpp"

namespace sfkit {

struct GradientAuditOptions {
    double step = 1e-4;         // central-difference half step
    double margin_factor = 10.0; // residuals must clear this multiple of
                                 // the step's local effect, else the
                                 // coordinate sits on an L1 kink and is
                                 // skipped
    double zero_floor = 1e-7;    // both sides below this count as equal
    ScaleStrategy strategy = ScaleStrategy::Xor;
    double mu_weight = 0.1;
};

struct GradientAuditResult {
    double max_rel_error = 0.0;
    size_t checked = 0;
    size_t skipped_kink = 0;
};

/// Central finite differences against the analytic subgradient, one
/// coordinate of each predicted field at a time. Perturbed values are
/// rounded to float exactly as the loss consumes them and the realized
/// step (x+ minus x-) divides the difference, so storage precision does
/// not pollute the check. Coordinates whose own residuals sit within the
/// kink margin are skipped, not judged.
GradientAuditResult gradient_audit(const LossSample& gt, const Prediction& pred,
                                   const GradientAuditOptions& opt = {});

/// Ground truth plus uniform noise in [-amplitude, amplitude] on every
/// coordinate of the three fields; deterministic in seed.
Prediction make_noisy_prediction(const LossSample& gt, uint64_t seed,
                                 double amplitude);

} // namespace sfkit

#endif
