#include "sfkit/recipe.hpp"

#include <stdexcept>

namespace sfkit {

ValidityMask cycle_check(const FieldGrid& flow_fwd, const FieldGrid& flow_bwd,
                         const ValidityMask& m_bwd, const RecipeOptions& opt) {
    if (!flow_fwd.same_shape(flow_bwd))
        throw std::invalid_argument("cycle_check: flow shape mismatch");
    if (flow_fwd.channels != 2)
        throw std::invalid_argument("cycle_check: flows must have 2 channels");
    ValidityMask out(flow_fwd.height, flow_fwd.width, 0);
    for (int y = 0; y < flow_fwd.height; ++y) {
        for (int x = 0; x < flow_fwd.width; ++x) {
            const double fu = flow_fwd.at(y, x, 0);
            const double fv = flow_fwd.at(y, x, 1);
            const SampleResult b = sample_bilinear(flow_bwd, m_bwd, x + fu,
                                                   y + fv, opt.interp);
            if (!b.valid) continue; // left the frame: treat as occluded
            const double ru = fu + b.value[0];
            const double rv = fv + b.value[1];
            const double fwd2 = fu * fu + fv * fv;
            const double bwd2 = b.value[0] * b.value[0] + b.value[1] * b.value[1];
            if (ru * ru + rv * rv < opt.alpha1 * (fwd2 + bwd2) + opt.alpha2)
                out.at(y, x) = 1;
        }
    }
    return out;
}

ValidityMask compose_validity(const ValidityMask& m_flow,
                              const ValidityMask& m_d1,
                              const ValidityMask& m_d2_at_p2,
                              const ValidityMask& cyc) {
    return mask_and(mask_and(m_flow, m_d1), mask_and(m_d2_at_p2, cyc));
}

std::pair<FieldGrid, FieldGrid> gt_pointmaps(const SampleRecord& sample) {
    FieldGrid x1 = unproject(sample.d1, sample.intrinsics);
    FieldGrid x2 = transform(unproject(sample.d2, sample.intrinsics),
                             sample.pose_1_to_2, /*inverse=*/true);
    return {std::move(x1), std::move(x2)};
}

UpliftResult uplift(const SampleRecord& sample, const RecipeOptions& opt) {
    const int h = sample.height(), w = sample.width();
    const CameraIntrinsics& k = sample.intrinsics;

    UpliftResult r;
    r.sf = FieldGrid(h, w, 3);
    r.mask_sf = ValidityMask(h, w, 0);
    r.x1 = unproject(sample.d1, k);
    r.x2 = transform(unproject(sample.d2, k), sample.pose_1_to_2, true);

    if (sample.flow_bwd) {
        r.occlusion = cycle_check(sample.flow_fwd, *sample.flow_bwd,
                                  *sample.m_flow_bwd, opt);
    } else {
        r.occlusion = ValidityMask(h, w, 1);
        r.cyc_skipped = true;
    }

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!sample.m_flow_fwd.valid(y, x) || !sample.m_d1.valid(y, x))
                continue;
            if (!r.occlusion.valid(y, x)) continue;
            const double p2u = x + sample.flow_fwd.at(y, x, 0);
            const double p2v = y + sample.flow_fwd.at(y, x, 1);
            const SampleResult d2 =
                sample_bilinear(sample.d2, sample.m_d2, p2u, p2v, opt.interp);
            if (!d2.valid) continue;
            const Vec3 start = point_on_ray(x, y, sample.d1.at(y, x), k);
            const Vec3 end = point_on_ray(p2u, p2v, d2.value[0], k);
            r.sf.at(y, x, 0) = static_cast<float>(end.x - start.x);
            r.sf.at(y, x, 1) = static_cast<float>(end.y - start.y);
            r.sf.at(y, x, 2) = static_cast<float>(end.z - start.z);
            r.mask_sf.at(y, x) = 1;
        }
    }
    return r;
}

FieldGrid reframe_sceneflow(const UpliftResult& result,
                            const RelativePose& pose_1_to_2,
                            ReferenceFrame target,
                            const std::optional<RelativePose>& world_from_cam1) {
    if (target == ReferenceFrame::Camera2) return result.sf;
    if (target == ReferenceFrame::World && !world_from_cam1)
        throw std::invalid_argument(
            "reframe_sceneflow: world target needs a world-from-camera pose");

    const int h = result.sf.height, w = result.sf.width;
    FieldGrid out(h, w, 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Vec3 start{result.x1.at(y, x, 0), result.x1.at(y, x, 1),
                             result.x1.at(y, x, 2)};
            const Vec3 sf{result.sf.at(y, x, 0), result.sf.at(y, x, 1),
                          result.sf.at(y, x, 2)};
            // End point in camera-2 coordinates, then back into camera 1.
            const Vec3 end_c1 = pose_1_to_2.apply_inverse(start + sf);
            Vec3 flow = end_c1 - start;
            if (target == ReferenceFrame::World)
                flow = world_from_cam1->rotation * flow;
            out.at(y, x, 0) = static_cast<float>(flow.x);
            out.at(y, x, 1) = static_cast<float>(flow.y);
            out.at(y, x, 2) = static_cast<float>(flow.z);
        }
    }
    return out;
}

} // namespace sfkit
