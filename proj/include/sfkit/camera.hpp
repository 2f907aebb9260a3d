#ifndef SFKIT_CAMERA_HPP
#define SFKIT_CAMERA_HPP

#include <utility>

#include "sfkit/geometry.hpp"
#include "sfkit/grid.hpp"

namespace sfkit {

/// Skew-free pinhole intrinsics. Pixel (row y, col x) has continuous
/// image coordinates (u, v) = (x, y) at its center.
struct CameraIntrinsics {
    double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;

    void validate() const; // throws unless fx > 0 and fy > 0
};

/// SE(3) transform taking camera-1 coordinates to camera-2 coordinates:
/// x_c2 = R * x_c1 + t.
struct RelativePose {
    Mat3 rotation;
    Vec3 translation;

    void validate() const; // orthonormality and det within 1e-6

    Vec3 apply(const Vec3& x) const { return rotation * x + translation; }
    Vec3 apply_inverse(const Vec3& x) const {
        return rotation.transposed() * (x - translation);
    }
    RelativePose inverse() const {
        const Mat3 rt = rotation.transposed();
        return {rt, rt * (translation * -1.0) * 1.0};
    }
    /// Composition: (*this) after `first`.
    RelativePose compose(const RelativePose& first) const {
        return {rotation * first.rotation,
                rotation * first.translation + translation};
    }
    static RelativePose identity() { return {}; }
};

/// Point on the camera ray through continuous image position (u, v) at
/// the given depth (z coordinate). Every unprojection in the library goes
/// through this one expression so identical inputs give identical bits.
inline Vec3 point_on_ray(double u, double v, double depth,
                         const CameraIntrinsics& k) {
    return {(u - k.cx) * depth / k.fx, (v - k.cy) * depth / k.fy, depth};
}

/// Perspective projection of a 3-channel pointmap. Pixels with z <= 0
/// (where `valid` is set) come back invalid in the output mask rather
/// than raising.
std::pair<FieldGrid, ValidityMask> project(const FieldGrid& points,
                                           const CameraIntrinsics& k,
                                           const ValidityMask& valid);

/// Inverse projection of a depth map: pixel (u,v) with depth d maps to
/// ((u-cx)d/fx, (v-cy)d/fy, d). Validity is whatever the caller's depth
/// mask says; depth 0 gives the origin.
FieldGrid unproject(const FieldGrid& depth, const CameraIntrinsics& k);

/// Rigid transform of a pointmap: forward x -> Rx + t, inverse
/// x -> R^T (x - t).
FieldGrid transform(const FieldGrid& points, const RelativePose& pose,
                    bool inverse);

enum class Interp { Bilinear, Nearest };

struct SampleResult {
    // At most 3 channels anywhere in this library.
    double value[3] = {0.0, 0.0, 0.0};
    bool valid = false;
};

/// Subpixel lookup at (u, v). Bilinear blends the touched neighbors and
/// is valid only when every neighbor with nonzero weight is in bounds and
/// mask-valid; exact integer coordinates therefore reduce to the single
/// cell they name. Out of bounds gives value zero, valid false.
SampleResult sample_bilinear(const FieldGrid& grid, const ValidityMask& mask,
                             double u, double v,
                             Interp interp = Interp::Bilinear);

} // namespace sfkit

#endif
