#ifndef SFKIT_METRICS_HPP
#define SFKIT_METRICS_HPP

#include <cstddef>

#include "sfkit/grid.hpp"

namespace sfkit {

/// Per-sample evaluation numbers. Scene-flow accuracies and outlier rate
/// are fractions in [0,1]; depth metrics come in aligned (-r) and raw
/// metric (-m) variants.
struct MetricsReport {
    double epe = 0.0;
    double acc_s = 0.0;
    double acc_r = 0.0;
    double out = 0.0;
    double absrel_r = 0.0, delta1_r = 0.0;
    double absrel_m = 0.0, delta1_m = 0.0;
    size_t valid_count = 0; // scene-flow pixels evaluated
    size_t depth_count = 0; // depth pixels evaluated (both views)
    double alignment_scale = 1.0;
};

struct SceneFlowMetrics {
    double epe = 0.0, acc_s = 0.0, acc_r = 0.0, out = 0.0;
    size_t valid_count = 0;
};

/// Per-pixel 3D end point error e = |pred - gt|_2 and relative error
/// e / |gt|_2, averaged over valid pixels. Thresholds are strict:
///   AccS: e < 0.05 or rel < 5%;  AccR: e < 0.1 or rel < 10%;
///   Out:  e > 0.3 or rel > 10%.
/// Pixels with |gt| = 0 are judged on e alone. Throws with zero valid
/// pixels.
SceneFlowMetrics sceneflow_metrics(const FieldGrid& pred_sf,
                                   const FieldGrid& gt_sf,
                                   const ValidityMask& m_sf);

struct DepthMetrics {
    double absrel = 0.0;
    double delta1 = 0.0;
    size_t valid_count = 0;
};

/// AbsRel = mean |d* - d| / d and delta1 = fraction with
/// max(d*/d, d/d*) < 1.25. When `aligned`, predictions are first
/// multiplied by `alignment_scale` (from align_scale). Nonpositive
/// predicted depth counts as a delta1 failure and enters AbsRel as-is.
DepthMetrics depth_metrics(const FieldGrid& pred_z, const FieldGrid& gt_z,
                           const ValidityMask& mask, bool aligned,
                           double alignment_scale = 1.0);

/// Median over valid pixels of |gt|_2 / |pred|_2; pixels with zero
/// predicted norm are skipped, and an all-zero prediction throws. Even
/// counts take the mean of the two middle ratios.
double align_scale(const FieldGrid& pred_points, const FieldGrid& gt_points,
                   const ValidityMask& mask);

/// Same median pooled over both views, matching how the loss scale pools.
double align_scale_pooled(const FieldGrid& pred1, const FieldGrid& pred2,
                          const FieldGrid& gt1, const FieldGrid& gt2,
                          const ValidityMask& m1, const ValidityMask& m2);

/// z channel of a pointmap as a depth grid.
FieldGrid z_channel(const FieldGrid& points);

} // namespace sfkit

#endif
