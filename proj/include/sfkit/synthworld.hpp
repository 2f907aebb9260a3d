#ifndef SFKIT_SYNTHWORLD_HPP
#define SFKIT_SYNTHWORLD_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "sfkit/recipe.hpp"

namespace sfkit {

/// Rigid motion applied between the two timestamps: rotate about the
/// anchor by the axis-angle vector, then translate.
struct RigidMotion {
    Vec3 axis_angle;
    Vec3 translation;
};

struct ScenePlane {
    Vec3 normal;   // unit vector; plane is normal . x == offset
    double offset;
    RigidMotion motion;
};

struct SceneObject {
    enum class Kind { Sphere, Box };
    Kind kind = Kind::Box;
    Vec3 center;          // world frame (= camera 1) at t1
    double radius = 0.2;  // sphere only
    Vec3 half_extent{0.2, 0.2, 0.02}; // box only
    Vec3 orientation_axis_angle;      // box orientation at t1
    RigidMotion motion;
};

/// Fully deterministic analytic scene: a background plane, rigid spheres
/// and boxes, a moving camera. Depth, flow, scene flow and occlusion all
/// have closed forms via exact ray-primitive intersection.
struct SceneSpec {
    ScenePlane background{{0.0, 0.0, -1.0}, -3.0, {}};
    std::vector<SceneObject> objects;
    RelativePose camera_motion; // pose from camera-1 to camera-2 coordinates
    CameraIntrinsics intrinsics;
    int height = 64;
    int width = 64;
    uint64_t seed = 0;
    bool metric = true;
};

struct RenderResult {
    SampleRecord sample; // depths, flows, masks, intrinsics, pose; no sf
    UpliftResult gt;     // closed-form scene flow, pointmaps, visibility
};

/// Renders both frames. Scene flow ground truth is the camera-2
/// coordinates of each moved surface point minus its camera-1 start;
/// occlusion ground truth compares exact hit distances at the target
/// pixel (nearer hit within 1e-6 means occluded). Throws on degenerate
/// specs (camera inside a primitive, plane behind the camera).
RenderResult render(const SceneSpec& spec);

/// Options for the randomized scene corpus.
struct RandomSceneOptions {
    int height = 64;
    int width = 64;
    int min_objects = 1;
    int max_objects = 3;
    bool allow_spheres = false;  // spheres have curved depth; boxes stay
                                 // near-fronto-parallel for tight oracles
    double max_tilt_deg = 6.0;   // background plane tilt
    double max_obj_rot_deg = 5.0;
    double max_cam_rot_deg = 3.0;
    double max_cam_translation = 0.2;
    bool metric = true;
};

/// Deterministic random scene: same seed, same spec, same rendered bytes.
SceneSpec random_scene(uint64_t seed, const RandomSceneOptions& opt = {});

std::string scene_to_json(const SceneSpec& spec);
SceneSpec scene_from_json(const std::string& text);

} // namespace sfkit

#endif
