#pragma once

#include "fitngp/density_field.hpp"
#include "fitngp/init.hpp"
#include "fitngp/object_model.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fitngp {

/// Closest point on triangle (a, b, c) to p (Voronoi-region walk).
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

struct SignedDistance {
    double distance = 0.0;  // negative inside
    bool sign_reliable = true;  // false when the mesh is not watertight
};

/// Brute-force signed distance to a mesh in its object frame. Sign comes from
/// ray parity (majority over three fixed rays); on meshes that are not closed
/// 2-manifolds the sign falls back to positive and sign_reliable is false.
class MeshDistanceField {
public:
    explicit MeshDistanceField(const TriangleMesh& mesh);

    bool watertight() const { return watertight_; }
    double unsigned_distance(const Vec3& x) const;
    bool inside(const Vec3& x) const;
    SignedDistance evaluate(const Vec3& x) const;

    const Vec3& aabb_min() const { return lo_; }
    const Vec3& aabb_max() const { return hi_; }

private:
    struct Tri {
        Vec3 a, b, c;
    };
    std::vector<Tri> tris_;
    Vec3 lo_;
    Vec3 hi_;
    bool watertight_ = false;
};

/// True when every undirected edge is shared by exactly two triangles with opposite orientation.
bool is_closed_manifold(const TriangleMesh& mesh);

SignedDistance signed_distance(const TriangleMesh& mesh, const Pose& pose, const Vec3& x);

/// Nearest hit distance of a ray against a mesh (object frame), or nullopt.
std::optional<double> ray_mesh_intersection(const TriangleMesh& mesh, const Vec3& origin, const Vec3& dir);

struct SceneObject {
    std::string id;
    std::filesystem::path mesh_path;  // empty for in-memory meshes
    TriangleMesh mesh;
    Pose pose;
    std::string symmetry;
    /// Clutter such as a support surface: voxelized and occluding, but never
    /// masked, fitted or evaluated.
    bool distractor = false;
};

struct SceneSpec {
    std::vector<SceneObject> objects;
    GridDims dims{64, 64, 64};
    Vec3 bbox_min = Vec3::Constant(-0.2);
    Vec3 bbox_max = Vec3::Constant(0.2);
    double sharpness = 0.0;  // logistic width w in metres; <= 0 means one voxel
    double sigma_in = 8.0;
    double sigma_out = -8.0;
    double noise_std = 1.0;
    double noise_correlation = 3.0;  // box filter width in cells
    std::uint64_t seed = 0;
    std::optional<Camera> camera;  // reference view for masks

    double resolved_sharpness() const;
    /// Occupancy scale for which the sigma midpoint (the true surface) maps to
    /// occupancy 1 - exp(-3), inside the concave part of the occupancy curve.
    double matched_beta() const;
    /// Throws InvalidArgument naming the offending object.
    void validate() const;
};

inline constexpr double kSigmaClamp = 15.0;

/// Reads a scene description; mesh paths are resolved against base_dir.
/// Missing meshes or bad fields raise ConfigError.
SceneSpec scene_spec_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
/// {"objects": {id: {"pose", "symmetry", "mesh"?}}}; distractors are left out.
nlohmann::json ground_truth_json(const SceneSpec& spec);
std::map<std::string, Pose> ground_truth_poses_from_json(const nlohmann::json& j);

/// sigma_out + (sigma_in - sigma_out) * logistic(-d / w) with d the minimum signed
/// distance over objects, no noise.
DensityGrid voxelize_clean(const SceneSpec& spec);
/// Zero-mean, unit-variance Gaussian noise smoothed by a box filter of the given
/// width (cells) and rescaled so an interior voxel keeps unit variance.
std::vector<float> unit_noise_field(const GridDims& dims, double correlation, std::uint64_t seed);
/// clean + noise_std * unit_noise, clamped to [-15, 15].
DensityGrid add_field_noise(const DensityGrid& clean, const SceneSpec& spec);
DensityGrid voxelize_scene(const SceneSpec& spec);

/// Top-down pinhole camera centred over the bounding box.
Camera default_reference_camera(const Vec3& bbox_min, const Vec3& bbox_max, std::uint32_t size = 160);

/// Ground-truth instance segmentation of the posed meshes in the camera
/// (nearest surface wins). One mask per object, in object order.
std::vector<InstanceMask> render_instance_masks(const std::vector<SceneObject>& objects, const Camera& camera);

// Primitive meshes centred on their bounding-box centre, closed and outward-wound.
TriangleMesh make_box(const Vec3& size);
TriangleMesh make_hex_prism(double across_flats, double height);
TriangleMesh make_cylinder(double radius, double height, std::uint32_t segments = 48);
/// L profile in the xy plane (legs along +x and +y) extruded along z.
TriangleMesh make_l_bracket(double leg_x, double leg_y, double thickness, double depth);
/// Extrudes a counter-clockwise simple polygon along z, centred on z = 0.
TriangleMesh extrude_polygon(const std::vector<Eigen::Vector2d>& polygon, double height);

}  // namespace fitngp
