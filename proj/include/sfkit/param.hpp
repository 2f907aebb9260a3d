#ifndef SFKIT_PARAM_HPP
#define SFKIT_PARAM_HPP

#include <utility>

#include "sfkit/camera.hpp"
#include "sfkit/grid.hpp"

namespace sfkit {

/// The three interchangeable scene-flow parameterizations.
///   CSO:  3D offsets added to the frame-1 points (the native form).
///   DDOF: (flow_u, flow_v, depth change), all attached to the source pixel.
///   EP:   end-point coordinates in the camera-2 frame.
enum class SFKind { CSO, DDOF, EP };

/// ep = x1 + sf, elementwise.
FieldGrid cso_to_ep(const FieldGrid& sf, const FieldGrid& x1);

/// sf = ep - x1, elementwise.
FieldGrid ep_to_cso(const FieldGrid& ep, const FieldGrid& x1);

/// Split offsets into image-space flow and per-pixel depth change:
/// mu = project(x1 + sf) - project(x1), dd = (x1 + sf)_z - x1_z. Pixels
/// whose start or end depth is nonpositive are invalidated.
struct DdofFields {
    FieldGrid mu; // C=2
    FieldGrid dd; // C=1
    ValidityMask valid;
};
DdofFields cso_to_ddof(const FieldGrid& sf, const FieldGrid& x1,
                       const CameraIntrinsics& k,
                       const ValidityMask& valid);

/// Compose offsets from flow and depth change: the depth-after-motion
/// field x1_z + dd is formed on the source lattice, unprojected there,
/// then the resulting pointmap is sampled at p + mu (bilinear); the
/// offset is that sample minus x1[p]. Out-of-bounds or invalid-neighbor
/// samples yield mask 0.
std::pair<FieldGrid, ValidityMask> ddof_to_cso(const FieldGrid& mu,
                                               const FieldGrid& dd,
                                               const FieldGrid& x1,
                                               const CameraIntrinsics& k,
                                               const ValidityMask& valid);

} // namespace sfkit

#endif
