#ifndef SFKIT_EVALUATE_HPP
#define SFKIT_EVALUATE_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sfkit/loss.hpp"
#include "sfkit/metrics.hpp"

namespace sfkit {

/// What a predictor hands the harness: the two pointmaps (camera-1
/// frame), the scene flow map, and optionally its own validity (the
/// depth+flow baseline cannot warp out-of-bounds pixels, for instance).
struct PredictorOutput {
    FieldGrid x1_hat, x2_hat, sf_hat;
    std::optional<ValidityMask> valid;
};

/// Scene flow composed from two predicted depth maps plus optical flow
/// and intrinsics, exactly like the uplift but treating the depths as
/// predictions. With a pose, x2_hat is expressed in the camera-1 frame;
/// without one it stays camera-2 native. The scene flow is always the
/// camera-2 end point minus the camera-1 start.
PredictorOutput baseline_dof(const FieldGrid& d1, const FieldGrid& d2,
                             const ValidityMask& m_d1, const ValidityMask& m_d2,
                             const FieldGrid& flow, const ValidityMask& m_flow,
                             const CameraIntrinsics& k,
                             const std::optional<RelativePose>& pose,
                             Interp interp = Interp::Bilinear);

/// All metrics for one sample against its ground truth. Scene-flow
/// metrics run on the ground-truth validity intersected with the
/// predictor's own mask; depth metrics pool the z channels of both
/// pointmaps, raw for the -m variants and median-rescaled for -r.
MetricsReport compute_metrics(const LossSample& gt,
                              const PredictorOutput& pred);

struct EvalItem {
    std::string id;
    LossSample gt;
};

struct SampleEval {
    std::string id;
    MetricsReport metrics;
    bool failed = false;
    std::string error;
};

struct EvalConfig {
    int jobs = 1;
    bool pixel_pooled = false; // pool pixels across samples instead of
                               // averaging per-sample means
};

struct EvalResult {
    std::vector<SampleEval> samples; // sorted by id
    MetricsReport aggregate;
    size_t failed_count = 0;
};

/// Runs the predictor over every sample (worker pool, deterministic
/// result order) and aggregates. Default aggregation is the mean over
/// samples of per-sample means; per-sample failures are recorded and
/// excluded.
EvalResult evaluate(std::vector<EvalItem> items,
                    const std::function<PredictorOutput(const EvalItem&)>&
                        predictor,
                    const EvalConfig& cfg = {});

} // namespace sfkit

#endif
