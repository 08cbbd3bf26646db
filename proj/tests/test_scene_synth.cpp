#include "fitngp/errors.hpp"
#include "fitngp/fitting.hpp"
#include "fitngp/scene_synth.hpp"

#include <doctest.h>

#include <cmath>

using namespace fitngp;

namespace {

double segment_distance(const Vec3& p, const Vec3& a, const Vec3& b)
{
    const Vec3 ab = b - a;
    const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    return (a + t * ab - p).norm();
}

// Independent reference: plane projection when it falls inside, edges otherwise.
double reference_unsigned_distance(const TriangleMesh& mesh, const Vec3& p)
{
    double best = std::numeric_limits<double>::infinity();
    for (const auto& t : mesh.triangles) {
        const Vec3& a = mesh.vertices[t[0]];
        const Vec3& b = mesh.vertices[t[1]];
        const Vec3& c = mesh.vertices[t[2]];
        const Vec3 n = (b - a).cross(c - a).normalized();
        const Vec3 q = p - n * (p - a).dot(n);
        const bool inside = (b - a).cross(q - a).dot(n) >= 0 && (c - b).cross(q - b).dot(n) >= 0 &&
                            (a - c).cross(q - c).dot(n) >= 0;
        double d = inside ? std::abs((p - a).dot(n)) : std::numeric_limits<double>::infinity();
        d = std::min({d, segment_distance(p, a, b), segment_distance(p, b, c), segment_distance(p, c, a)});
        best = std::min(best, d);
    }
    return best;
}

SceneSpec single_object_spec(TriangleMesh mesh, const Pose& pose, std::uint32_t n, double extent)
{
    SceneSpec spec;
    SceneObject obj;
    obj.id = "obj";
    obj.mesh = std::move(mesh);
    obj.pose = pose;
    spec.objects.push_back(std::move(obj));
    spec.dims = {n, n, n};
    spec.bbox_min = Vec3::Constant(-extent / 2);
    spec.bbox_max = Vec3::Constant(extent / 2);
    return spec;
}

}  // namespace

TEST_CASE("signed distance examples")
{
    const TriangleMesh cube = make_box(Vec3::Ones());
    CHECK(is_closed_manifold(cube));
    const SignedDistance inside = signed_distance(cube, Pose{}, Vec3::Zero());
    CHECK(inside.distance == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(inside.sign_reliable);
    CHECK(signed_distance(cube, Pose{}, Vec3(2, 0, 0)).distance == doctest::Approx(1.5).epsilon(1e-12));

    Pose moved;
    moved.translation = Vec3(2, 0, 0);
    CHECK(signed_distance(cube, moved, Vec3(2, 0, 0)).distance == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("signed distance matches an independent brute force")
{
    const std::vector<TriangleMesh> meshes = {make_box(Vec3(0.03, 0.02, 0.01)), make_hex_prism(0.013, 0.02),
                                              make_cylinder(0.004, 0.025, 24),
                                              make_l_bracket(0.04, 0.03, 0.008, 0.015)};
    Rng rng(11);
    for (const auto& mesh : meshes) {
        REQUIRE(is_closed_manifold(mesh));
        const MeshDistanceField field(mesh);
        for (int i = 0; i < 200; ++i) {
            const Vec3 x(0.06 * (uniform01(rng) - 0.5), 0.06 * (uniform01(rng) - 0.5), 0.06 * (uniform01(rng) - 0.5));
            const SignedDistance sd = field.evaluate(x);
            CHECK(std::abs(std::abs(sd.distance) - reference_unsigned_distance(mesh, x)) < 1e-9);
        }
    }
    // Sign agrees with the analytic box interior.
    const Vec3 half(0.015, 0.01, 0.005);
    const MeshDistanceField box(meshes[0]);
    for (int i = 0; i < 500; ++i) {
        const Vec3 x(0.04 * (uniform01(rng) - 0.5), 0.04 * (uniform01(rng) - 0.5), 0.04 * (uniform01(rng) - 0.5));
        const bool in = (x.cwiseAbs() - half).maxCoeff() < 0;
        CHECK(box.inside(x) == in);
    }
}

TEST_CASE("open meshes flag an unreliable sign")
{
    TriangleMesh open = make_box(Vec3::Ones());
    open.triangles.pop_back();
    CHECK_FALSE(is_closed_manifold(open));
    const SignedDistance sd = signed_distance(open, Pose{}, Vec3::Zero());
    CHECK_FALSE(sd.sign_reliable);
    CHECK(sd.distance == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("ray mesh intersection")
{
    const TriangleMesh cube = make_box(Vec3::Ones());
    const auto hit = ray_mesh_intersection(cube, Vec3(0.1, 0.2, 3), Vec3(0, 0, -1));
    REQUIRE(hit.has_value());
    CHECK(*hit == doctest::Approx(2.5).epsilon(1e-12));
    CHECK_FALSE(ray_mesh_intersection(cube, Vec3(0.1, 0.2, 3), Vec3(0, 0, 1)).has_value());
}

TEST_CASE("clean voxelization profile")
{
    SceneSpec spec = single_object_spec(make_box(Vec3::Constant(0.04)), Pose{}, 32, 0.1);
    spec.noise_std = 0.0;
    const double w = spec.resolved_sharpness();
    CHECK(w == doctest::Approx(0.1 / 32));
    const DensityGrid g = voxelize_scene(spec);

    CHECK(sample_sigma(g, Vec3::Zero()) > spec.sigma_in - 0.1);

    // 19 logistic widths from the surface the profile is saturated.
    SceneSpec big = single_object_spec(make_box(Vec3::Constant(0.06)), Pose{}, 64, 0.1);
    big.noise_std = 0.0;
    CHECK(std::abs(sample_sigma(voxelize_scene(big), Vec3(0.0008, -0.0008, 0.0008)) - big.sigma_in) < 1e-6);
    // Corner node values against the closed form.
    const MeshDistanceField field(spec.objects[0].mesh);
    for (std::uint32_t k = 0; k < 32; k += 5) {
        for (std::uint32_t j = 0; j < 32; j += 3) {
            for (std::uint32_t i = 0; i < 32; i += 7) {
                const double d = field.evaluate(g.node_position(i, j, k)).distance;
                const double expect = spec.sigma_out + (spec.sigma_in - spec.sigma_out) / (1.0 + std::exp(d / w));
                CHECK(g.at(i, j, k) == doctest::Approx(expect).epsilon(1e-6));
            }
        }
    }

    // The midpoint level set sits within one voxel of the true surface.
    const double mid = 0.5 * (spec.sigma_in + spec.sigma_out);
    for (double x = -0.03; x <= 0.03; x += 0.0005) {
        const double s0 = sample_sigma(g, Vec3(x, 0.001, 0.002));
        if (std::abs(x) < 0.02 - w) {
            CHECK(s0 > mid);
        } else if (std::abs(x) > 0.02 + w) {
            CHECK(s0 < mid);
        }
    }
}

TEST_CASE("surface point maps to the sigma midpoint")
{
    // Node at the cube face: odd cell count puts a node centre on x = 0.
    SceneSpec spec = single_object_spec(make_box(Vec3::Constant(0.04)), Pose{}, 33, 0.1);
    Pose shift;
    shift.translation = Vec3(-0.02, 0, 0);
    spec.objects[0].pose = shift;
    spec.noise_std = 0.0;
    const DensityGrid g = voxelize_clean(spec);
    CHECK(g.at(16, 16, 16) == doctest::Approx(0.5 * (spec.sigma_in + spec.sigma_out)).epsilon(1e-6));
}

TEST_CASE("noise is seeded and clamped")
{
    SceneSpec spec = single_object_spec(make_box(Vec3::Constant(0.04)), Pose{}, 24, 0.1);
    spec.noise_std = 4.0;
    spec.seed = 5;
    const DensityGrid a = voxelize_scene(spec);
    const DensityGrid b = voxelize_scene(spec);
    CHECK(serialize_grid(a) == serialize_grid(b));
    spec.seed = 6;
    CHECK(serialize_grid(voxelize_scene(spec)) != serialize_grid(a));
    for (float s : a.sigma()) {
        CHECK(std::abs(s) <= kSigmaClamp);
    }

    const auto noise = unit_noise_field({40, 40, 40}, 3.0, 1);
    double sum = 0;
    double sq = 0;
    std::size_t n = 0;
    for (std::uint32_t k = 3; k < 37; ++k) {
        for (std::uint32_t j = 3; j < 37; ++j) {
            for (std::uint32_t i = 3; i < 37; ++i) {
                const double v = noise[(std::size_t{k} * 40 + j) * 40 + i];
                sum += v;
                sq += v * v;
                ++n;
            }
        }
    }
    const double mean = sum / static_cast<double>(n);
    CHECK(std::abs(mean) < 0.1);
    CHECK(std::sqrt(sq / static_cast<double>(n) - mean * mean) == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("scene validation names the offending object")
{
    SceneSpec spec = single_object_spec(make_box(Vec3::Constant(0.04)), Pose{}, 16, 0.1);
    spec.objects[0].id = "stray";
    spec.objects[0].pose.translation = Vec3(0.06, 0, 0);
    try {
        spec.validate();
        FAIL("out-of-bounds object accepted");
    } catch (const InvalidArgument& e) {
        CHECK(std::string(e.what()).find("stray") != std::string::npos);
    }
    spec.objects[0].pose.translation = Vec3::Zero();
    spec.noise_std = -1.0;
    CHECK_THROWS_AS(spec.validate(), InvalidArgument);
}

TEST_CASE("scene JSON and ground truth")
{
    const nlohmann::json j = {
        {"grid", {{"dims", {20, 20, 20}}, {"bbox_min", {-0.1, -0.1, -0.1}}, {"bbox_max", {0.1, 0.1, 0.1}}}},
        {"noise_std", 0.5},
        {"seed", 3},
        {"objects",
         {{{"id", "a"}, {"primitive", {{"type", "box"}, {"size", {0.02, 0.02, 0.02}}}}, {"pose", {0, 0, 0, 1, 0, 0, 0}}, {"symmetry", "cube"}}}}};
    const SceneSpec spec = scene_spec_from_json(j, ".");
    CHECK(spec.objects.size() == 1);
    const auto gt = ground_truth_poses_from_json(ground_truth_json(spec));
    REQUIRE(gt.count("a") == 1);
    CHECK(gt.at("a").translation == Vec3::Zero());
    CHECK_THROWS_AS(scene_spec_from_json(nlohmann::json{{"objects", {{{"id", "b"}, {"mesh", "missing.obj"}, {"pose", {0, 0, 0, 1, 0, 0, 0}}}}}}, "."),
                    ConfigError);
}

TEST_CASE("ground truth is a fitness maximum against perturbations")
{
    Rng rng(3);
    Pose gt;
    gt.rotation = random_rotation(rng);
    gt.translation = Vec3(0.004, -0.003, 0.002);
    SceneSpec spec = single_object_spec(make_box(Vec3::Constant(0.03)), gt, 64, 0.1);
    spec.sigma_in = 8.0;
    spec.sigma_out = -8.0;
    spec.noise_std = 1.0;
    spec.seed = 1;
    const DensityGrid grid = voxelize_scene(spec);
    const double beta = spec.matched_beta();
    CHECK(occupancy_from_sigma(0.5 * (spec.sigma_in + spec.sigma_out), beta) == doctest::Approx(1 - std::exp(-3.0)));

    const BandPoints band = band_points(sample_surface(spec.objects[0].mesh, 1280, 0), 0.0, 5e-3);
    const double f_gt = fitness(gt, band, grid, beta);
    int beaten = 0;
    for (int i = 0; i < 100; ++i) {
        Vec3 dt(standard_normal(rng), standard_normal(rng), standard_normal(rng));
        Vec3 axis(standard_normal(rng), standard_normal(rng), standard_normal(rng));
        Pose p;
        p.translation = gt.translation + 5e-3 * dt.normalized();
        p.rotation = rotation_exp(axis.normalized() * (10.0 * M_PI / 180.0)) * gt.rotation;
        if (fitness(p, band, grid, beta) < f_gt) {
            ++beaten;
        }
    }
    CHECK(beaten == 100);
}
