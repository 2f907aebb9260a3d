#include "sfkit/camera.hpp"

#include <cmath>
#include <stdexcept>

namespace sfkit {

void CameraIntrinsics::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0))
        throw std::invalid_argument("intrinsics: focal lengths must be positive");
    if (!std::isfinite(fx) || !std::isfinite(fy) || !std::isfinite(cx) ||
        !std::isfinite(cy))
        throw std::invalid_argument("intrinsics: non-finite entry");
}

void RelativePose::validate() const {
    const Mat3 rtr = rotation.transposed() * rotation;
    const Mat3 eye = Mat3::identity();
    for (int i = 0; i < 9; ++i)
        if (std::fabs(rtr.m[i] - eye.m[i]) > 1e-6)
            throw std::invalid_argument("pose: rotation is not orthonormal");
    if (std::fabs(rotation.det() - 1.0) > 1e-6)
        throw std::invalid_argument("pose: rotation determinant is not 1");
    if (!std::isfinite(translation.x) || !std::isfinite(translation.y) ||
        !std::isfinite(translation.z))
        throw std::invalid_argument("pose: non-finite translation");
}

std::pair<FieldGrid, ValidityMask> project(const FieldGrid& points,
                                           const CameraIntrinsics& k,
                                           const ValidityMask& valid) {
    if (points.channels != 3)
        throw std::invalid_argument("project: pointmap must have 3 channels");
    if (points.height != valid.height || points.width != valid.width)
        throw std::invalid_argument("project: mask shape mismatch");
    FieldGrid out(points.height, points.width, 2);
    ValidityMask mout(points.height, points.width, 0);
    for (int y = 0; y < points.height; ++y) {
        for (int x = 0; x < points.width; ++x) {
            if (!valid.valid(y, x)) continue;
            const double px = points.at(y, x, 0);
            const double py = points.at(y, x, 1);
            const double pz = points.at(y, x, 2);
            if (!(pz > 0.0)) continue; // behind the camera: invalid, not fatal
            out.at(y, x, 0) = static_cast<float>(k.fx * px / pz + k.cx);
            out.at(y, x, 1) = static_cast<float>(k.fy * py / pz + k.cy);
            mout.at(y, x) = 1;
        }
    }
    return {std::move(out), std::move(mout)};
}

FieldGrid unproject(const FieldGrid& depth, const CameraIntrinsics& k) {
    if (depth.channels != 1)
        throw std::invalid_argument("unproject: depth must have 1 channel");
    FieldGrid out(depth.height, depth.width, 3);
    for (int y = 0; y < depth.height; ++y) {
        for (int x = 0; x < depth.width; ++x) {
            const Vec3 p = point_on_ray(x, y, depth.at(y, x), k);
            out.at(y, x, 0) = static_cast<float>(p.x);
            out.at(y, x, 1) = static_cast<float>(p.y);
            out.at(y, x, 2) = static_cast<float>(p.z);
        }
    }
    return out;
}

FieldGrid transform(const FieldGrid& points, const RelativePose& pose,
                    bool inverse) {
    if (points.channels != 3)
        throw std::invalid_argument("transform: pointmap must have 3 channels");
    FieldGrid out(points.height, points.width, 3);
    for (int y = 0; y < points.height; ++y) {
        for (int x = 0; x < points.width; ++x) {
            const Vec3 p{points.at(y, x, 0), points.at(y, x, 1),
                         points.at(y, x, 2)};
            const Vec3 q = inverse ? pose.apply_inverse(p) : pose.apply(p);
            out.at(y, x, 0) = static_cast<float>(q.x);
            out.at(y, x, 1) = static_cast<float>(q.y);
            out.at(y, x, 2) = static_cast<float>(q.z);
        }
    }
    return out;
}

SampleResult sample_bilinear(const FieldGrid& grid, const ValidityMask& mask,
                             double u, double v, Interp interp) {
    SampleResult r;
    if (!std::isfinite(u) || !std::isfinite(v)) return r;

    if (interp == Interp::Nearest) {
        const int xi = static_cast<int>(std::lround(u));
        const int yi = static_cast<int>(std::lround(v));
        if (xi < 0 || yi < 0 || xi >= grid.width || yi >= grid.height) return r;
        if (!mask.valid(yi, xi)) return r;
        for (int c = 0; c < grid.channels; ++c) r.value[c] = grid.at(yi, xi, c);
        r.valid = true;
        return r;
    }

    const double fu = std::floor(u);
    const double fv = std::floor(v);
    const int x0 = static_cast<int>(fu);
    const int y0 = static_cast<int>(fv);
    const double au = u - fu;
    const double av = v - fv;

    const double w[4] = {(1.0 - au) * (1.0 - av), au * (1.0 - av),
                         (1.0 - au) * av, au * av};
    const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
    const int ys[4] = {y0, y0, y0 + 1, y0 + 1};

    double acc[3] = {0.0, 0.0, 0.0};
    for (int i = 0; i < 4; ++i) {
        if (w[i] == 0.0) continue; // untouched neighbor, not required
        if (xs[i] < 0 || ys[i] < 0 || xs[i] >= grid.width || ys[i] >= grid.height)
            return r;
        if (!mask.valid(ys[i], xs[i])) return r;
        for (int c = 0; c < grid.channels; ++c)
            acc[c] += w[i] * grid.at(ys[i], xs[i], c);
    }
    for (int c = 0; c < grid.channels; ++c) r.value[c] = acc[c];
    r.valid = true;
    return r;
}

} // namespace sfkit
