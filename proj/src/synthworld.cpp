#include "sfkit/synthworld.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace sfkit {

using nlohmann::json;

namespace {

constexpr double kHitEps = 1e-9;
constexpr double kOcclusionEps = 1e-6;

struct Hit {
    double s = std::numeric_limits<double>::infinity(); // ray parameter
    int id = -1; // -1 none, 0 background plane, 1.. objects
    bool ok() const { return id >= 0; }
};

// Primitive states at one timestamp, world coordinates.
struct PlaneState {
    Vec3 normal;
    double offset;
};

struct ObjectState {
    SceneObject::Kind kind;
    Vec3 center;
    double radius;
    Vec3 half_extent;
    Mat3 orientation; // world-from-body
};

struct SceneState {
    PlaneState plane;
    std::vector<ObjectState> objects;
};

Vec3 motion_apply(const RigidMotion& m, const Vec3& anchor, const Vec3& x) {
    return rotation_from_axis_angle(m.axis_angle) * (x - anchor) + anchor +
           m.translation;
}

Vec3 motion_apply_inverse(const RigidMotion& m, const Vec3& anchor,
                          const Vec3& x) {
    return rotation_from_axis_angle(m.axis_angle).transposed() *
               (x - anchor - m.translation) +
           anchor;
}

SceneState scene_at(const SceneSpec& spec, bool second) {
    SceneState st;
    const Vec3 n1 = spec.background.normal.normalized();
    if (!second) {
        st.plane = {n1, spec.background.offset};
    } else {
        const Mat3 rm = rotation_from_axis_angle(spec.background.motion.axis_angle);
        const Vec3 anchor = n1 * spec.background.offset;
        const Vec3 n2 = rm * n1;
        const Vec3 p2 = anchor + spec.background.motion.translation;
        st.plane = {n2, n2.dot(p2)};
    }
    for (const auto& o : spec.objects) {
        ObjectState s;
        s.kind = o.kind;
        s.radius = o.radius;
        s.half_extent = o.half_extent;
        if (!second) {
            s.center = o.center;
            s.orientation = rotation_from_axis_angle(o.orientation_axis_angle);
        } else {
            s.center = o.center + o.motion.translation;
            s.orientation = rotation_from_axis_angle(o.motion.axis_angle) *
                            rotation_from_axis_angle(o.orientation_axis_angle);
        }
        st.objects.push_back(s);
    }
    return st;
}

double intersect_plane(const PlaneState& p, const Vec3& o, const Vec3& d) {
    const double denom = p.normal.dot(d);
    if (std::fabs(denom) < 1e-12) return -1.0;
    const double s = (p.offset - p.normal.dot(o)) / denom;
    return s > kHitEps ? s : -1.0;
}

double intersect_sphere(const ObjectState& b, const Vec3& o, const Vec3& d) {
    const Vec3 oc = o - b.center;
    const double a = d.dot(d);
    const double bq = 2.0 * d.dot(oc);
    const double cq = oc.dot(oc) - b.radius * b.radius;
    const double disc = bq * bq - 4.0 * a * cq;
    if (disc < 0.0) return -1.0;
    const double sq = std::sqrt(disc);
    const double s0 = (-bq - sq) / (2.0 * a);
    if (s0 > kHitEps) return s0;
    const double s1 = (-bq + sq) / (2.0 * a);
    return s1 > kHitEps ? s1 : -1.0;
}

double intersect_box(const ObjectState& b, const Vec3& o, const Vec3& d) {
    const Mat3 rt = b.orientation.transposed();
    const Vec3 ob = rt * (o - b.center);
    const Vec3 db = rt * d;
    const double hx[3] = {b.half_extent.x, b.half_extent.y, b.half_extent.z};
    const double ox[3] = {ob.x, ob.y, ob.z};
    const double dx[3] = {db.x, db.y, db.z};
    double tn = -std::numeric_limits<double>::infinity();
    double tf = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
        if (std::fabs(dx[i]) < 1e-15) {
            if (std::fabs(ox[i]) > hx[i]) return -1.0;
            continue;
        }
        double t0 = (-hx[i] - ox[i]) / dx[i];
        double t1 = (hx[i] - ox[i]) / dx[i];
        if (t0 > t1) std::swap(t0, t1);
        tn = std::max(tn, t0);
        tf = std::min(tf, t1);
        if (tn > tf) return -1.0;
    }
    return tn > kHitEps ? tn : -1.0;
}

Hit trace(const SceneState& st, const Vec3& o, const Vec3& d) {
    Hit h;
    const double sp = intersect_plane(st.plane, o, d);
    if (sp > 0.0) {
        h.s = sp;
        h.id = 0;
    }
    for (size_t i = 0; i < st.objects.size(); ++i) {
        const auto& ob = st.objects[i];
        const double s = ob.kind == SceneObject::Kind::Sphere
                             ? intersect_sphere(ob, o, d)
                             : intersect_box(ob, o, d);
        if (s > 0.0 && s < h.s) {
            h.s = s;
            h.id = static_cast<int>(i) + 1;
        }
    }
    return h;
}

Vec3 anchor_of(const SceneSpec& spec, int id) {
    if (id == 0)
        return spec.background.normal.normalized() * spec.background.offset;
    return spec.objects[static_cast<size_t>(id) - 1].center;
}

const RigidMotion& motion_of(const SceneSpec& spec, int id) {
    if (id == 0) return spec.background.motion;
    return spec.objects[static_cast<size_t>(id) - 1].motion;
}

bool point_inside(const ObjectState& b, const Vec3& p) {
    if (b.kind == SceneObject::Kind::Sphere)
        return (p - b.center).norm() < b.radius;
    const Vec3 q = b.orientation.transposed() * (p - b.center);
    return std::fabs(q.x) < b.half_extent.x &&
           std::fabs(q.y) < b.half_extent.y && std::fabs(q.z) < b.half_extent.z;
}

void validate_spec(const SceneSpec& spec, const SceneState& s1,
                   const SceneState& s2, const Vec3& cam2_origin) {
    if (spec.height <= 0 || spec.width <= 0)
        throw std::invalid_argument("scene: non-positive resolution");
    spec.intrinsics.validate();
    spec.camera_motion.validate();
    for (const auto& st : {s1, s2}) {
        const Vec3 o = (&st == &s1) ? Vec3{} : cam2_origin;
        for (const auto& ob : st.objects)
            if (point_inside(ob, o))
                throw std::invalid_argument("scene: camera inside an object");
        // Every corner ray must hit the plane at positive range so depth
        // is defined everywhere.
        const double us[2] = {-0.5, spec.width - 0.5};
        const double vs[2] = {-0.5, spec.height - 0.5};
        for (double u : us)
            for (double v : vs) {
                Vec3 d = point_on_ray(u, v, 1.0, spec.intrinsics);
                if (&st == &s2)
                    d = spec.camera_motion.rotation.transposed() * d;
                if (intersect_plane(st.plane, o, d) <= 0.0)
                    throw std::invalid_argument(
                        "scene: background plane does not cover the view");
            }
    }
}

} // namespace

RenderResult render(const SceneSpec& spec) {
    const int h = spec.height, w = spec.width;
    const CameraIntrinsics& k = spec.intrinsics;
    const RelativePose& pose = spec.camera_motion;

    const SceneState s1 = scene_at(spec, false);
    const SceneState s2 = scene_at(spec, true);
    const Mat3 r2t = pose.rotation.transposed();
    const Vec3 cam2_origin = r2t * (pose.translation * -1.0);
    validate_spec(spec, s1, s2, cam2_origin);

    RenderResult out;
    SampleRecord& smp = out.sample;
    smp.d1 = FieldGrid(h, w, 1);
    smp.d2 = FieldGrid(h, w, 1);
    smp.flow_fwd = FieldGrid(h, w, 2);
    smp.flow_bwd = FieldGrid(h, w, 2);
    smp.m_d1 = ValidityMask(h, w, 0);
    smp.m_d2 = ValidityMask(h, w, 0);
    smp.m_flow_fwd = ValidityMask(h, w, 0);
    smp.m_flow_bwd = ValidityMask(h, w, 0);
    smp.intrinsics = k;
    smp.pose_1_to_2 = pose;
    smp.metric = spec.metric;

    UpliftResult& gt = out.gt;
    gt.sf = FieldGrid(h, w, 3);
    gt.mask_sf = ValidityMask(h, w, 0);
    gt.x1 = FieldGrid(h, w, 3);
    gt.x2 = FieldGrid(h, w, 3);
    gt.occlusion = ValidityMask(h, w, 0);

    // Frame 1 pass: depth, pointmap, forward flow, scene flow, visibility.
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Vec3 dir = point_on_ray(x, y, 1.0, k);
            const Hit hit = trace(s1, Vec3{}, dir);
            if (!hit.ok()) continue;
            // With the unnormalized direction (z component 1) the ray
            // parameter is the camera depth.
            const Vec3 p1 = dir * hit.s;
            smp.d1.at(y, x) = static_cast<float>(hit.s);
            smp.m_d1.at(y, x) = 1;
            gt.x1.at(y, x, 0) = static_cast<float>(p1.x);
            gt.x1.at(y, x, 1) = static_cast<float>(p1.y);
            gt.x1.at(y, x, 2) = static_cast<float>(p1.z);

            const Vec3 moved =
                motion_apply(motion_of(spec, hit.id), anchor_of(spec, hit.id), p1);
            const Vec3 end_c2 = pose.apply(moved);
            if (!(end_c2.z > kHitEps)) continue; // moved behind camera 2
            const double p2u = k.fx * end_c2.x / end_c2.z + k.cx;
            const double p2v = k.fy * end_c2.y / end_c2.z + k.cy;
            smp.flow_fwd.at(y, x, 0) = static_cast<float>(p2u - x);
            smp.flow_fwd.at(y, x, 1) = static_cast<float>(p2v - y);
            smp.m_flow_fwd.at(y, x) = 1;

            gt.sf.at(y, x, 0) = static_cast<float>(end_c2.x - p1.x);
            gt.sf.at(y, x, 1) = static_cast<float>(end_c2.y - p1.y);
            gt.sf.at(y, x, 2) = static_cast<float>(end_c2.z - p1.z);

            // Exact visibility: trace frame 2 along the ray through the
            // moved point; anything nearer occludes it.
            const Hit vis = trace(s2, cam2_origin, r2t * (end_c2 * (1.0 / end_c2.z)));
            const bool visible = vis.ok() && vis.s >= end_c2.z - kOcclusionEps;
            if (visible) {
                gt.occlusion.at(y, x) = 1;
                gt.mask_sf.at(y, x) = 1;
            }
        }
    }

    // Frame 2 pass: depth, pointmap in camera-1 coordinates, backward flow.
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Vec3 dir_c2 = point_on_ray(x, y, 1.0, k);
            const Vec3 dir = r2t * dir_c2;
            const Hit hit = trace(s2, cam2_origin, dir);
            if (!hit.ok()) continue;
            const Vec3 pw = cam2_origin + dir * hit.s;
            smp.d2.at(y, x) = static_cast<float>(hit.s);
            smp.m_d2.at(y, x) = 1;
            gt.x2.at(y, x, 0) = static_cast<float>(pw.x);
            gt.x2.at(y, x, 1) = static_cast<float>(pw.y);
            gt.x2.at(y, x, 2) = static_cast<float>(pw.z);

            const Vec3 prev = motion_apply_inverse(motion_of(spec, hit.id),
                                                   anchor_of(spec, hit.id), pw);
            if (!(prev.z > kHitEps)) continue;
            const double p1u = k.fx * prev.x / prev.z + k.cx;
            const double p1v = k.fy * prev.y / prev.z + k.cy;
            smp.flow_bwd->at(y, x, 0) = static_cast<float>(p1u - x);
            smp.flow_bwd->at(y, x, 1) = static_cast<float>(p1v - y);
            smp.m_flow_bwd->at(y, x) = 1;
        }
    }
    return out;
}

SceneSpec random_scene(uint64_t seed, const RandomSceneOptions& opt) {
    std::mt19937_64 rng(seed ^ 0x5eedf00dULL);
    auto uni = [&rng](double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    };
    const double deg = M_PI / 180.0;

    SceneSpec spec;
    spec.height = opt.height;
    spec.width = opt.width;
    spec.seed = seed;
    spec.metric = opt.metric;
    spec.intrinsics.fx = opt.width * uni(0.85, 1.1);
    spec.intrinsics.fy = spec.intrinsics.fx * uni(0.98, 1.02);
    spec.intrinsics.cx = (opt.width - 1) / 2.0 + uni(-1.0, 1.0);
    spec.intrinsics.cy = (opt.height - 1) / 2.0 + uni(-1.0, 1.0);

    // Background: near-fronto-parallel plane a few meters out.
    const double z0 = uni(2.5, 4.0);
    const double tilt = uni(0.0, opt.max_tilt_deg) * deg;
    const double phi = uni(0.0, 2.0 * M_PI);
    const Vec3 n{std::sin(tilt) * std::cos(phi), std::sin(tilt) * std::sin(phi),
                 -std::cos(tilt)};
    spec.background.normal = n;
    spec.background.offset = n.dot(Vec3{0.0, 0.0, z0});
    spec.background.motion.axis_angle =
        Vec3{uni(-1, 1), uni(-1, 1), uni(-1, 1)}.normalized() *
        (uni(0.0, 1.2) * deg);
    spec.background.motion.translation = {uni(-0.1, 0.1), uni(-0.1, 0.1),
                                          uni(-0.15, 0.15)};

    const int nobj = std::uniform_int_distribution<int>(opt.min_objects,
                                                        opt.max_objects)(rng);
    for (int i = 0; i < nobj; ++i) {
        SceneObject o;
        const bool sphere = opt.allow_spheres && uni(0.0, 1.0) < 0.4;
        o.kind = sphere ? SceneObject::Kind::Sphere : SceneObject::Kind::Box;
        const double zc = uni(1.4, z0 - 0.6);
        const double span = 0.45 * zc * opt.width / (2.0 * spec.intrinsics.fx);
        o.center = {uni(-span, span), uni(-span, span), zc};
        o.radius = uni(0.12, 0.3);
        // Thin plates: curved or steep side faces stay subpixel.
        o.half_extent = {uni(0.15, 0.4), uni(0.15, 0.4), uni(0.01, 0.03)};
        o.orientation_axis_angle =
            Vec3{uni(-1, 1), uni(-1, 1), uni(-1, 1)}.normalized() *
            (uni(0.0, opt.max_obj_rot_deg) * deg);
        o.motion.axis_angle =
            Vec3{uni(-1, 1), uni(-1, 1), uni(-1, 1)}.normalized() *
            (uni(0.0, opt.max_obj_rot_deg) * deg);
        // Lateral motion big enough that occlusion bands disagree with the
        // background flow by several pixels.
        const double lat = uni(0.08, 0.3);
        const double ang = uni(0.0, 2.0 * M_PI);
        o.motion.translation = {lat * std::cos(ang), lat * std::sin(ang),
                                uni(-0.12, 0.12)};
        spec.objects.push_back(o);
    }

    spec.camera_motion.rotation = rotation_from_axis_angle(
        Vec3{uni(-1, 1), uni(-1, 1), uni(-1, 1)}.normalized() *
        (uni(0.0, opt.max_cam_rot_deg) * deg));
    spec.camera_motion.translation = {
        uni(-opt.max_cam_translation, opt.max_cam_translation),
        uni(-opt.max_cam_translation, opt.max_cam_translation),
        uni(-opt.max_cam_translation, opt.max_cam_translation)};
    return spec;
}

namespace {

json vec_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec_from_json(const json& j) {
    return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

json motion_to_json(const RigidMotion& m) {
    return {{"axis_angle", vec_to_json(m.axis_angle)},
            {"translation", vec_to_json(m.translation)}};
}

RigidMotion motion_from_json(const json& j) {
    return {vec_from_json(j.at("axis_angle")),
            vec_from_json(j.at("translation"))};
}

} // namespace

std::string scene_to_json(const SceneSpec& spec) {
    json j;
    j["height"] = spec.height;
    j["width"] = spec.width;
    j["seed"] = spec.seed;
    j["metric"] = spec.metric;
    j["intrinsics"] = {{"fx", spec.intrinsics.fx},
                       {"fy", spec.intrinsics.fy},
                       {"cx", spec.intrinsics.cx},
                       {"cy", spec.intrinsics.cy}};
    j["background"] = {{"normal", vec_to_json(spec.background.normal)},
                       {"offset", spec.background.offset},
                       {"motion", motion_to_json(spec.background.motion)}};
    json objs = json::array();
    for (const auto& o : spec.objects) {
        json jo;
        jo["kind"] = o.kind == SceneObject::Kind::Sphere ? "sphere" : "box";
        jo["center"] = vec_to_json(o.center);
        jo["radius"] = o.radius;
        jo["half_extent"] = vec_to_json(o.half_extent);
        jo["orientation_axis_angle"] = vec_to_json(o.orientation_axis_angle);
        jo["motion"] = motion_to_json(o.motion);
        objs.push_back(jo);
    }
    j["objects"] = objs;
    json rot = json::array();
    for (double v : spec.camera_motion.rotation.m) rot.push_back(v);
    j["camera_motion"] = {
        {"rotation", rot},
        {"translation", vec_to_json(spec.camera_motion.translation)}};
    return j.dump(2);
}

SceneSpec scene_from_json(const std::string& text) {
    const json j = json::parse(text);
    SceneSpec spec;
    spec.height = j.at("height").get<int>();
    spec.width = j.at("width").get<int>();
    spec.seed = j.value("seed", 0ULL);
    spec.metric = j.value("metric", true);
    const auto& kj = j.at("intrinsics");
    spec.intrinsics = {kj.at("fx").get<double>(), kj.at("fy").get<double>(),
                       kj.at("cx").get<double>(), kj.at("cy").get<double>()};
    const auto& bj = j.at("background");
    spec.background.normal = vec_from_json(bj.at("normal"));
    spec.background.offset = bj.at("offset").get<double>();
    spec.background.motion = motion_from_json(bj.at("motion"));
    for (const auto& jo : j.at("objects")) {
        SceneObject o;
        o.kind = jo.at("kind").get<std::string>() == "sphere"
                     ? SceneObject::Kind::Sphere
                     : SceneObject::Kind::Box;
        o.center = vec_from_json(jo.at("center"));
        o.radius = jo.value("radius", 0.2);
        if (jo.contains("half_extent"))
            o.half_extent = vec_from_json(jo.at("half_extent"));
        if (jo.contains("orientation_axis_angle"))
            o.orientation_axis_angle = vec_from_json(jo.at("orientation_axis_angle"));
        o.motion = motion_from_json(jo.at("motion"));
        spec.objects.push_back(o);
    }
    const auto& cj = j.at("camera_motion");
    for (int i = 0; i < 9; ++i)
        spec.camera_motion.rotation.m[static_cast<size_t>(i)] =
            cj.at("rotation").at(i).get<double>();
    spec.camera_motion.translation = vec_from_json(cj.at("translation"));
    return spec;
}

} // namespace sfkit
