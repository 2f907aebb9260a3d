#ifndef SFKIT_LOSS_HPP
#define SFKIT_LOSS_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "sfkit/camera.hpp"
#include "sfkit/container.hpp"
#include "sfkit/grid.hpp"
#include "sfkit/recipe.hpp"

namespace sfkit {

/// How to reconcile metric and relative-scale samples in the loss.
///   Align:  rescale predictions onto the ground truth (median ratio).
///   Always: normalize both sides by their own mean point distance.
///   Never:  raw values for every sample.
///   Xor:    normalize exactly when the sample is not metric.
enum class ScaleStrategy { Align, Always, Never, Xor };

ScaleStrategy strategy_from_string(const std::string& s);
std::string strategy_to_string(ScaleStrategy s);

/// Ground-truth bundle the losses compare against.
struct LossSample {
    FieldGrid x1, x2;    // pointmaps in the camera-1 frame (C=3)
    ValidityMask m1, m2; // per-view depth validity
    FieldGrid sf;        // scene flow, camera-2 frame convention (C=3)
    ValidityMask m_sf;
    FieldGrid flow;      // forward optical flow (C=2)
    // Full-precision supervision flow, filled by make_loss_sample as the
    // exact projection of the stored pointmaps and scene flow; the flow
    // grid alone loses the last bits to float storage and would keep the
    // ground truth from being an exact zero of the loss.
    std::vector<double> flow_hi;
    CameraIntrinsics k;
    bool metric = false;

    double flow_at(int y, int x, int c) const {
        return flow_hi.empty()
                   ? static_cast<double>(flow.at(y, x, c))
                   : flow_hi[(static_cast<size_t>(y) * flow.width + x) * 2 +
                             static_cast<size_t>(c)];
    }
};

/// The three predicted maps.
struct Prediction {
    FieldGrid x1, x2, sf;
};

/// Builds the loss bundle from a sample plus its uplift.
LossSample make_loss_sample(const SampleRecord& s, const UpliftResult& u);
/// Ground truth fed back as its own prediction.
Prediction prediction_from_gt(const LossSample& gt);

/// Mean distance from the origin to all valid points across both views.
/// Throws when no valid point exists.
double scale_factor(const FieldGrid& x1, const FieldGrid& x2,
                    const ValidityMask& m1, const ValidityMask& m2);

/// Resolved scale handling for one (sample, prediction) pair. The same
/// factors normalize pointmaps and scene flow; they are never recomputed
/// from flow.
struct ScaleContext {
    double z_gt = 0.0;
    double z_pred = 0.0;
    double align_scale = 1.0; // Align strategy: median of per-pixel
                              // |gt| / |pred| over valid pixels
    bool normalize = false;
    bool align = false;
};

ScaleContext make_scale_context(const FieldGrid& pred1, const FieldGrid& pred2,
                                const FieldGrid& gt1, const FieldGrid& gt2,
                                const ValidityMask& m1, const ValidityMask& m2,
                                bool metric, ScaleStrategy strategy);

/// Masked L1 over both views: raw in metric mode, per-side normalized
/// otherwise, prediction rescaled first under Align. Sum, not mean.
double loss_pointmaps(const FieldGrid& pred1, const FieldGrid& pred2,
                      const FieldGrid& gt1, const FieldGrid& gt2,
                      const ValidityMask& m1, const ValidityMask& m2,
                      bool metric, ScaleStrategy strategy);
double loss_pointmaps_with(const FieldGrid& pred1, const FieldGrid& pred2,
                           const FieldGrid& gt1, const FieldGrid& gt2,
                           const ValidityMask& m1, const ValidityMask& m2,
                           const ScaleContext& ctx);

/// Masked L1 on scene flow, sharing the pointmap-derived scale factors.
double loss_sceneflow(const FieldGrid& pred_sf, const FieldGrid& gt_sf,
                      const ValidityMask& m_sf, const ScaleContext& ctx);

/// Image-space L1 between the ground-truth flow and the projection
/// difference of the predicted end and start points. Never normalized.
/// Pixels with nonpositive depth on either side are skipped and counted.
double loss_flow(const FieldGrid& pred_x1, const FieldGrid& pred_sf,
                 const FieldGrid& gt_flow, const ValidityMask& m_sf,
                 const CameraIntrinsics& k, size_t* skipped = nullptr);

/// Same term against the bundle's full-precision supervision flow.
double loss_flow(const LossSample& gt, const Prediction& pred,
                 size_t* skipped = nullptr);

struct LossReport {
    double l_x = 0.0, l_s = 0.0, l_mu = 0.0, total = 0.0;
    double z_gt = 0.0, z_pred = 0.0;
    double align_scale = 1.0;
    ScaleStrategy strategy = ScaleStrategy::Xor;
    double mu_weight = 0.1;
    size_t flow_skipped = 0; // nonpositive-depth pixels left out of l_mu
    // Per-valid-pixel means, for comparing across resolutions.
    double mean_l_x = 0.0, mean_l_s = 0.0, mean_l_mu = 0.0;
};

/// total = l_x + l_s + mu_weight * l_mu.
LossReport total_loss(const LossSample& gt, const Prediction& pred,
                      ScaleStrategy strategy, double mu_weight = 0.1);

/// Subgradient of the total loss with respect to every predicted value,
/// in double precision, including the projection chain of the flow term,
/// the quotient rule through the normalization factors, and the median
/// pixel of the Align rescale. sign(0) is taken as 0 so the ground truth
/// is a stationary point.
struct LossGradient {
    int height = 0, width = 0;
    std::vector<double> x1, x2, sf; // H*W*3, same layout as FieldGrid
};

LossGradient loss_gradient(const LossSample& gt, const Prediction& pred,
                           ScaleStrategy strategy, double mu_weight = 0.1);

} // namespace sfkit

#endif
