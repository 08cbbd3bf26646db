#include "fitngp/errors.hpp"
#include "fitngp/geometry.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace fitngp;

namespace {

constexpr double kPi = std::numbers::pi;

Pose random_pose(Rng& rng)
{
    return Pose{random_rotation(rng), Vec3(standard_normal(rng), standard_normal(rng), standard_normal(rng)) * 0.1};
}

}  // namespace

TEST_CASE("rotation stores a unit quaternion with non-negative w")
{
    const Rotation r = Rotation::from_quaternion(-2.0, 0.0, 0.0, 2.0);
    CHECK(r.w() >= 0.0);
    CHECK(r.quaternion().norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(geodesic_distance(r, Rotation::from_quaternion(2.0, 0.0, 0.0, -2.0)) == doctest::Approx(0.0));
    CHECK_THROWS_AS(Rotation::from_quaternion(0, 0, 0, 0), InvalidArgument);
    CHECK_THROWS_AS(Rotation::from_quaternion(NAN, 0, 0, 1), InvalidArgument);

    Rng rng(3);
    Rotation acc;
    for (int i = 0; i < 1000; ++i) {
        acc = acc * random_rotation(rng);
    }
    CHECK(acc.quaternion().norm() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(acc.w() >= 0.0);
}

TEST_CASE("rotation_exp examples")
{
    const Rotation id = rotation_exp(Vec3::Zero());
    CHECK(id.w() == 1.0);
    CHECK(id.x() == 0.0);
    CHECK(id.y() == 0.0);
    CHECK(id.z() == 0.0);

    const Vec3 y = rotation_exp(Vec3(0, 0, kPi / 2)).apply(Vec3::UnitX());
    CHECK((y - Vec3::UnitY()).norm() < 1e-12);

    Rng rng(11);
    for (int i = 0; i < 1000; ++i) {
        const Rotation r = random_rotation(rng);
        CHECK(geodesic_distance(rotation_exp(rotation_log(r)), r) < 1e-9);
    }
}

TEST_CASE("rotation_log examples")
{
    CHECK(rotation_log(Rotation{}).norm() == 0.0);
    CHECK((rotation_log(rotation_exp(Vec3(0.3, 0, 0))) - Vec3(0.3, 0, 0)).norm() < 1e-12);

    Rng rng(12);
    for (int i = 0; i < 200; ++i) {
        const Rotation r = random_rotation(rng);
        CHECK(rotation_log(r).norm() == doctest::Approx(geodesic_distance(Rotation{}, r)).epsilon(1e-9));
    }
    // Tiny angles go through the series branch.
    const Vec3 tiny(1e-10, -2e-10, 3e-10);
    CHECK((rotation_log(rotation_exp(tiny)) - tiny).norm() < 1e-20);
}

TEST_CASE("pose_apply and compose")
{
    CHECK(pose_apply(Pose{}, Vec3(1, 2, 3)) == Vec3(1, 2, 3));
    Pose shift;
    shift.translation = Vec3(0, 0, 0.1);
    CHECK(pose_apply(shift, Vec3::Zero()) == Vec3(0, 0, 0.1));

    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        const Pose a = random_pose(rng);
        const Pose b = random_pose(rng);
        const Vec3 x(standard_normal(rng), standard_normal(rng), standard_normal(rng));
        CHECK((pose_apply(compose(a, b), x) - pose_apply(a, pose_apply(b, x))).norm() < 1e-9);
        const Pose e = compose(a, inverse(a));
        CHECK(geodesic_distance(e.rotation, Rotation{}) < 1e-9);
        CHECK(e.translation.norm() < 1e-9);
    }
}

TEST_CASE("geodesic distance")
{
    CHECK(geodesic_distance(Rotation{}, Rotation{}) == 0.0);
    CHECK(geodesic_distance(Rotation{}, Rotation::about_axis(Vec3::UnitZ(), kPi / 2)) ==
          doctest::Approx(kPi / 2).epsilon(1e-12));
    Rng rng(8);
    for (int i = 0; i < 1000; ++i) {
        const Rotation a = random_rotation(rng);
        const Rotation b = random_rotation(rng);
        const Rotation c = random_rotation(rng);
        CHECK(geodesic_distance(a, c) <= geodesic_distance(a, b) + geodesic_distance(b, c) + 1e-12);
        CHECK(geodesic_distance(a, b) == doctest::Approx(geodesic_distance(b, a)));
    }
}

TEST_CASE("pose matrix round trip")
{
    Rng rng(9);
    const Pose p = random_pose(rng);
    const Pose q = Pose::from_matrix(p.matrix());
    CHECK(geodesic_distance(p.rotation, q.rotation) < 1e-12);
    CHECK((p.translation - q.translation).norm() < 1e-15);
}

TEST_CASE("rotation grid")
{
    const auto one = rotation_grid(1, 0);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == Rotation{});

    const auto a = rotation_grid(216, 0);
    const auto b = rotation_grid(216, 0);
    REQUIRE(a.size() == 216);
    CHECK(a == b);
    CHECK(a[0] == Rotation{});
    CHECK(rotation_grid(216, 1) != a);

    double min_pair = kPi;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = i + 1; j < a.size(); ++j) {
            min_pair = std::min(min_pair, geodesic_distance(a[i], a[j]));
        }
    }
    CHECK(min_pair > 0.1);

    CHECK_THROWS_AS(rotation_grid(0, 0), InvalidArgument);
}

TEST_CASE("rotation grid covering radius (reduced sample)")
{
    // The full 1e5-sample measurement lives in the acceptance suite.
    const auto grid = rotation_grid(216, 0);
    Rng rng(12345);
    double worst = 0.0;
    for (int i = 0; i < 20000; ++i) {
        const Rotation r = random_rotation(rng);
        double best = kPi;
        for (const auto& g : grid) {
            best = std::min(best, geodesic_distance(r, g));
        }
        worst = std::max(worst, best);
    }
    CHECK(worst <= 0.6554822483 + 1e-9);
    CHECK(worst > 0.5);
}

TEST_CASE("uniform random baseline covers worse than the spiral grid")
{
    const auto sf = rotation_grid(216, 0);
    const auto ur = rotation_grid(216, 0, RotationGridMethod::UniformRandom);
    REQUIRE(ur.size() == 216);
    CHECK(ur[0] == Rotation{});
    Rng rng(77);
    double worst_sf = 0.0;
    double worst_ur = 0.0;
    for (int i = 0; i < 5000; ++i) {
        const Rotation r = random_rotation(rng);
        double bs = kPi;
        double bu = kPi;
        for (std::size_t k = 0; k < sf.size(); ++k) {
            bs = std::min(bs, geodesic_distance(r, sf[k]));
            bu = std::min(bu, geodesic_distance(r, ur[k]));
        }
        worst_sf = std::max(worst_sf, bs);
        worst_ur = std::max(worst_ur, bu);
    }
    CHECK(worst_sf < worst_ur);
}

TEST_CASE("pose json")
{
    Rng rng(4);
    const Pose p = random_pose(rng);
    const Pose q = pose_from_json(to_json(p));
    CHECK(geodesic_distance(p.rotation, q.rotation) < 1e-15);
    CHECK(p.translation == q.translation);
    CHECK(to_json(p).size() == 7);

    const nlohmann::json nested = {{1, 0, 0, 0.1}, {0, 0, -1, 0.2}, {0, 1, 0, 0.3}, {0, 0, 0, 1}};
    const Pose m = pose_from_json(nested);
    CHECK((m.translation - Vec3(0.1, 0.2, 0.3)).norm() < 1e-15);
    CHECK(geodesic_distance(m.rotation, Rotation::about_axis(Vec3::UnitX(), kPi / 2)) < 1e-12);
    const nlohmann::json flat = {1, 0, 0, 0.1, 0, 0, -1, 0.2, 0, 1, 0, 0.3, 0, 0, 0, 1};
    CHECK(pose_from_json(flat) == m);

    CHECK_THROWS_AS(pose_from_json(nlohmann::json{1, 2, 3}), ConfigError);
    CHECK_THROWS_AS(pose_from_json(nlohmann::json{0, 0, 0, 0, 0, 0, 0}), ConfigError);
    CHECK_THROWS_AS(pose_from_json(nlohmann::json("x")), ConfigError);
}

TEST_CASE("pose json is a fixed point after one write")
{
    Rng rng(31);
    for (int i = 0; i < 500; ++i) {
        const nlohmann::json once = to_json(random_pose(rng));
        CHECK(to_json(pose_from_json(once)) == once);
    }
    const nlohmann::json raw = {0.3, 0.1, -0.7, 0.2, 0.0, 0.0, 0.0};
    const nlohmann::json once = to_json(pose_from_json(raw));
    CHECK(to_json(pose_from_json(once)) == once);
}

TEST_CASE("uniform01 stays in [0, 1) and is reproducible")
{
    Rng a(1);
    Rng b(1);
    for (int i = 0; i < 10000; ++i) {
        const double u = uniform01(a);
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(u == uniform01(b));
    }
}
