#ifndef SFKIT_RECIPE_HPP
#define SFKIT_RECIPE_HPP

#include <optional>

#include "sfkit/camera.hpp"
#include "sfkit/container.hpp"
#include "sfkit/grid.hpp"

namespace sfkit {

/// Output of the depth + optical flow uplift: pseudo ground-truth scene
/// flow with its composed validity mask, the two pointmaps in the
/// camera-1 frame, and the forward-backward consistency verdict.
struct UpliftResult {
    FieldGrid sf;          // C=3, camera-2 frame end point minus camera-1 start
    ValidityMask mask_sf;
    FieldGrid x1;          // C=3, camera-1 frame at t1
    FieldGrid x2;          // C=3, camera-2 geometry expressed in camera-1 frame
    ValidityMask occlusion; // 1 = passed the consistency check
    bool cyc_skipped = false; // no backward flow; occlusion defaulted to valid
};

struct RecipeOptions {
    double alpha1 = 0.01; // consistency check: quadratic tolerance term
    double alpha2 = 0.5;  // consistency check: constant tolerance term
    Interp interp = Interp::Bilinear;
};

/// Forward-backward consistency: pixel p is kept iff
///   |mu_f(p) + mu_b(p + mu_f(p))|^2
///     < alpha1 * (|mu_f(p)|^2 + |mu_b(p + mu_f(p))|^2) + alpha2,
/// with mu_b sampled bilinearly. Pixels whose target sample is invalid
/// or out of bounds fail the check.
ValidityMask cycle_check(const FieldGrid& flow_fwd, const FieldGrid& flow_bwd,
                         const ValidityMask& m_bwd,
                         const RecipeOptions& opt = {});

/// Elementwise AND of the four validity sources.
ValidityMask compose_validity(const ValidityMask& m_flow,
                              const ValidityMask& m_d1,
                              const ValidityMask& m_d2_at_p2,
                              const ValidityMask& cyc);

/// Ground-truth pointmaps: x1 unprojects d1; x2 unprojects d2 and applies
/// the inverse relative pose so both live in the camera-1 frame.
std::pair<FieldGrid, FieldGrid> gt_pointmaps(const SampleRecord& sample);

/// The full uplift: per source pixel p1, unproject d1, follow the forward
/// flow to p2, sample d2 there, unproject along the ray through p2, and
/// difference the camera-2 end point against the camera-1 start point.
/// The mask composes flow validity, both depth validities (d2 at the
/// warped position), and the consistency check; without backward flow the
/// check is skipped and flagged.
UpliftResult uplift(const SampleRecord& sample, const RecipeOptions& opt = {});

enum class ReferenceFrame { Camera2, Camera1, World };

/// Re-express scene flow end points in another coordinate frame. The
/// native frame is camera-2: end = x1 + sf lives in camera-2 coordinates.
/// camera1 maps the end point back through the inverse pose; world maps
/// both end points through a supplied world-from-camera-1 pose.
FieldGrid reframe_sceneflow(const UpliftResult& result,
                            const RelativePose& pose_1_to_2,
                            ReferenceFrame target,
                            const std::optional<RelativePose>&
                                world_from_cam1 = std::nullopt);

} // namespace sfkit

#endif
