#include "fitngp/density_field.hpp"
#include "fitngp/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>

using namespace fitngp;

namespace {

constexpr std::size_t kHeaderBytes = 44;

DensityGrid random_grid(GridDims dims, std::uint64_t seed, double scale = 3.0)
{
    Rng rng(seed);
    std::vector<float> sigma(dims.count());
    for (auto& s : sigma) {
        s = static_cast<float>(scale * standard_normal(rng));
    }
    return DensityGrid(dims, Vec3(-0.125, -0.25, -0.0625), Vec3(0.125, 0.25, 0.1875), std::move(sigma));
}

// A point whose fractional node coordinates stay in [0.1, 0.9] on every axis.
Vec3 interior_point(const DensityGrid& g, Rng& rng)
{
    const auto& d = g.dims();
    const Vec3 n(d.x, d.y, d.z);
    Vec3 local;
    for (int a = 0; a < 3; ++a) {
        const double cell = std::floor(uniform01(rng) * (n[a] - 1.0));
        local[a] = cell + 0.1 + 0.8 * uniform01(rng);
    }
    return g.bbox_min() + (local.array() + 0.5).matrix().cwiseProduct(g.cell_size());
}

std::filesystem::path temp_path(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / "fitngp_unit";
    std::filesystem::create_directories(dir);
    return dir / name;
}

std::int64_t format_offset(const std::vector<std::uint8_t>& bytes)
{
    try {
        parse_grid(bytes);
    } catch (const FormatError& e) {
        return e.byte_offset();
    }
    return -2;
}

}  // namespace

TEST_CASE("grid save/load round trip is bit exact")
{
    const DensityGrid g = random_grid({8, 8, 8}, 1);
    const auto path = temp_path("round_trip.grid");
    save_grid(g, path);
    const DensityGrid h = load_grid(path);
    CHECK(h.dims() == g.dims());
    CHECK(h.bbox_min() == g.bbox_min());
    CHECK(h.bbox_max() == g.bbox_max());
    REQUIRE(h.sigma().size() == g.sigma().size());
    CHECK(std::memcmp(h.sigma().data(), g.sigma().data(), g.sigma().size() * sizeof(float)) == 0);
    CHECK(serialize_grid(h) == serialize_grid(g));
}

TEST_CASE("bounding box is rounded to float precision on every axis")
{
    const DensityGrid g = DensityGrid::filled({4, 4, 4}, Vec3(-0.2, -0.1, -0.3), Vec3(0.2, 0.1, 0.3), 0.0f);
    for (int a = 0; a < 3; ++a) {
        CHECK(g.bbox_min()[a] == static_cast<double>(static_cast<float>(g.bbox_min()[a])));
        CHECK(g.bbox_max()[a] == static_cast<double>(static_cast<float>(g.bbox_max()[a])));
    }
    CHECK(g.bbox_max().x() == static_cast<double>(0.2f));
    CHECK(g.bbox_max().z() == static_cast<double>(0.3f));
    const DensityGrid h = parse_grid(serialize_grid(g));
    CHECK(h.bbox_min() == g.bbox_min());
    CHECK(h.bbox_max() == g.bbox_max());
}

TEST_CASE("grid file layout")
{
    const DensityGrid g = DensityGrid::filled({2, 3, 4}, Vec3::Zero(), Vec3::Ones(), 1.5f);
    const auto bytes = serialize_grid(g);
    CHECK(bytes.size() == kHeaderBytes + 24 * 4);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "FNGP");
    CHECK(bytes[4] == 1);
    CHECK(bytes[8] == 2);
    CHECK(bytes[12] == 3);
    CHECK(bytes[16] == 4);
}

TEST_CASE("grid format errors carry byte offsets")
{
    const auto good = serialize_grid(random_grid({3, 3, 3}, 2));

    auto bad_magic = good;
    bad_magic[0] = 'X';
    CHECK(format_offset(bad_magic) == 0);

    auto bad_version = good;
    bad_version[4] = 7;
    CHECK(format_offset(bad_version) == 4);

    auto zero_dim = good;
    std::memset(zero_dim.data() + 12, 0, 4);
    CHECK(format_offset(zero_dim) == 8);

    auto huge = good;
    std::memset(huge.data() + 8, 0xFF, 12);
    CHECK(format_offset(huge) == static_cast<std::int64_t>(huge.size()));

    auto truncated = good;
    truncated.resize(good.size() - 3);
    CHECK(format_offset(truncated) >= 0);

    auto short_header = good;
    short_header.resize(10);
    CHECK(format_offset(short_header) == 8);

    auto trailing = good;
    trailing.push_back(0);
    CHECK(format_offset(trailing) == static_cast<std::int64_t>(good.size()));

    auto nan_value = good;
    const float nan = std::numeric_limits<float>::quiet_NaN();
    std::memcpy(nan_value.data() + kHeaderBytes + 8, &nan, 4);
    CHECK(format_offset(nan_value) == static_cast<std::int64_t>(kHeaderBytes + 8));

    auto bad_box = good;
    const float one = 1.0f;
    std::memcpy(bad_box.data() + 20, &one, 4);  // bbox_min.x above bbox_max.x
    CHECK(format_offset(bad_box) == 20);

    CHECK_THROWS_AS(load_grid(temp_path("does_not_exist.grid")), IoError);
}

TEST_CASE("grid construction rejects invalid input")
{
    CHECK_THROWS_AS(DensityGrid({0, 1, 1}, Vec3::Zero(), Vec3::Ones(), {}), InvalidArgument);
    CHECK_THROWS_AS(DensityGrid({1, 1, 1}, Vec3::Ones(), Vec3::Zero(), {0.0f}), InvalidArgument);
    CHECK_THROWS_AS(DensityGrid({1, 1, 2}, Vec3::Zero(), Vec3::Ones(), {0.0f}), InvalidArgument);
    CHECK_THROWS_AS(DensityGrid({1, 1, 1}, Vec3::Zero(), Vec3::Ones(), {INFINITY}), InvalidArgument);
}

TEST_CASE("trilinear sampling examples")
{
    std::vector<float> s(8);
    for (int i = 0; i < 8; ++i) {
        s[static_cast<std::size_t>(i)] = static_cast<float>(i);
    }
    const DensityGrid g({2, 2, 2}, Vec3::Zero(), Vec3::Ones(), s);
    CHECK(sample_sigma(g, Vec3(0.5, 0.5, 0.5)) == doctest::Approx(3.5).epsilon(1e-12));

    const DensityGrid r = random_grid({5, 4, 6}, 3);
    for (std::uint32_t k = 0; k < 6; ++k) {
        for (std::uint32_t j = 0; j < 4; ++j) {
            for (std::uint32_t i = 0; i < 5; ++i) {
                CHECK(sample_sigma(r, r.node_position(i, j, k)) == doctest::Approx(r.at(i, j, k)).epsilon(1e-9));
            }
        }
    }
    const Vec3 mid = 0.5 * (r.node_position(1, 2, 3) + r.node_position(2, 2, 3));
    CHECK(sample_sigma(r, mid) == doctest::Approx(0.5 * (r.at(1, 2, 3) + r.at(2, 2, 3))).epsilon(1e-6));

    CHECK(sample_sigma(r, r.bbox_max() + Vec3(1e-3, 0, 0)) == -10.0);
    CHECK(sample_sigma(r, Vec3(NAN, 0, 0)) == -10.0);
}

TEST_CASE("occupancy closed form")
{
    const DensityGrid low = DensityGrid::filled({2, 2, 2}, Vec3::Zero(), Vec3::Ones(), -10.0f);
    CHECK(occupancy(low, Vec3::Constant(0.5), 0.01) == doctest::Approx(4.54e-7).epsilon(1e-3));
    CHECK(occupancy(low, Vec3::Constant(5.0), 0.01) == doctest::Approx(4.54e-7).epsilon(1e-3));

    const double half = std::log(std::log(2.0) / 0.01);
    CHECK(occupancy_from_sigma(half, 0.01) == doctest::Approx(0.5).epsilon(1e-12));

    CHECK(occupancy_from_sigma(-700.0, 0.01) < 1e-300);
    double prev = -1.0;
    for (double s = -10.0; s <= 5.0; s += 0.01) {
        const double v = occupancy_from_sigma(s, 0.01);
        CHECK(v > prev);
        CHECK(v > 0.0);
        CHECK(v < 1.0);
        prev = v;
    }
    CHECK_THROWS_AS(occupancy(low, Vec3::Zero(), 0.0), InvalidArgument);
    CHECK_THROWS_AS(occupancy_gradient(low, Vec3::Zero(), -1.0), InvalidArgument);
}

TEST_CASE("occupancy gradient")
{
    const DensityGrid flat = DensityGrid::filled({4, 4, 4}, Vec3::Zero(), Vec3::Ones(), 2.0f);
    CHECK(occupancy_gradient(flat, Vec3(0.3, 0.4, 0.6), 0.01) == Vec3::Zero());
    CHECK(occupancy_gradient(flat, Vec3(3, 3, 3), 0.01) == Vec3::Zero());

    std::vector<float> lin(64);
    for (std::uint32_t k = 0; k < 4; ++k) {
        for (std::uint32_t j = 0; j < 4; ++j) {
            for (std::uint32_t i = 0; i < 4; ++i) {
                lin[(k * 4 + j) * 4 + i] = static_cast<float>(i);
            }
        }
    }
    const DensityGrid ramp({4, 4, 4}, Vec3::Zero(), Vec3::Ones(), lin);
    const Vec3 g = occupancy_gradient(ramp, Vec3(0.4, 0.55, 0.3), 0.5);
    CHECK(g.x() > 0.0);
    CHECK(g.y() == 0.0);
    CHECK(g.z() == 0.0);

    const DensityGrid r = random_grid({6, 7, 5}, 4, 1.5);
    Rng rng(5);
    const double h = 1e-6;
    for (int n = 0; n < 100; ++n) {
        const Vec3 x = interior_point(r, rng);
        const double beta = 0.3;
        const Vec3 an = occupancy_gradient(r, x, beta);
        Vec3 fd;
        for (int a = 0; a < 3; ++a) {
            Vec3 e = Vec3::Zero();
            e[a] = h;
            fd[a] = (occupancy(r, x + e, beta) - occupancy(r, x - e, beta)) / (2 * h);
        }
        CHECK((an - fd).norm() / std::max(an.norm(), 1e-12) < 1e-4);
    }
}

TEST_CASE("depth rendering")
{
    Camera cam;
    cam.width = 16;
    cam.height = 12;
    cam.fx = cam.fy = 40.0;
    cam.cx = 7.5;
    cam.cy = 5.5;

    SUBCASE("empty grid gives all-NaN depth")
    {
        const DensityGrid empty = DensityGrid::filled({8, 8, 8}, Vec3(-0.1, -0.1, 0.2), Vec3(0.1, 0.1, 0.6), -10.0f);
        const DepthMap d = render_depth(empty, cam);
        for (float v : d.depth) {
            CHECK(std::isnan(v));
        }
    }

    SUBCASE("camera looking away from the grid")
    {
        const DensityGrid full = DensityGrid::filled({4, 4, 4}, Vec3(-0.1, -0.1, -0.6), Vec3(0.1, 0.1, -0.2), 15.0f);
        const DepthMap d = render_depth(full, cam);
        for (float v : d.depth) {
            CHECK(std::isnan(v));
        }
    }

    // Opaque slab filling z >= 0.4 (cell face between nodes 19 and 20).
    std::vector<float> slab(std::size_t{8} * 8 * 40);
    for (std::uint32_t k = 0; k < 40; ++k) {
        for (std::size_t ij = 0; ij < 64; ++ij) {
            slab[k * 64 + ij] = k >= 20 ? 15.0f : -10.0f;
        }
    }
    const DensityGrid g({8, 8, 40}, Vec3(-0.1, -0.1, 0.2), Vec3(0.1, 0.1, 0.6), slab);
    const double dt = 0.5 * g.min_cell_size();

    SUBCASE("opaque slab at a known distance")
    {
        const DepthMap d = render_depth(g, cam);
        CHECK(std::abs(d.at(7, 5) - 0.4) <= 2 * dt);
        for (float v : d.depth) {
            CHECK(std::abs(v - 0.4) <= 2 * dt);
        }
        RenderOptions fine;
        fine.step = 0.5 * dt;
        const DepthMap half = render_depth(g, cam, fine);
        CHECK(std::abs(half.at(7, 5) - d.at(7, 5)) <= 2 * dt);
    }

    SUBCASE("doubling the resolution keeps depths at shared pixel rays")
    {
        Camera big = cam;
        big.width *= 2;
        big.height *= 2;
        big.fx *= 2;
        big.fy *= 2;
        big.cx *= 2;
        big.cy *= 2;
        const DepthMap a = render_depth(g, cam);
        const DepthMap b = render_depth(g, big);
        for (std::uint32_t v = 0; v < cam.height; ++v) {
            for (std::uint32_t u = 0; u < cam.width; ++u) {
                CHECK(std::abs(a.at(u, v) - b.at(2 * u, 2 * v)) <= 1e-6);
            }
        }
    }

    SUBCASE("depth files round trip")
    {
        DepthMap d = render_depth(g, cam);
        d.depth[3] = std::numeric_limits<float>::quiet_NaN();
        const auto path = temp_path("depth.bin");
        save_depth(d, path);
        const DepthMap e = load_depth(path);
        REQUIRE(e.depth.size() == d.depth.size());
        CHECK(std::memcmp(e.depth.data(), d.depth.data(), d.depth.size() * 4) == 0);
        save_depth_pgm16(d, temp_path("depth.pgm"));
        CHECK(std::filesystem::file_size(temp_path("depth.pgm")) > d.depth.size() * 2);
    }
}

TEST_CASE("camera json and validation")
{
    Camera cam;
    cam.width = 10;
    cam.height = 8;
    cam.fx = 12;
    cam.fy = 13;
    cam.cx = 4.5;
    cam.cy = 3.5;
    cam.pose.translation = Vec3(0.1, 0.2, 0.3);
    cam.pose.rotation = Rotation::about_axis(Vec3::UnitX(), 3.0);
    const Camera back = camera_from_json(to_json(cam));
    CHECK(back.fx == cam.fx);
    CHECK(back.cy == cam.cy);
    CHECK(back.width == cam.width);
    CHECK((back.pose.translation - cam.pose.translation).norm() < 1e-15);
    CHECK(geodesic_distance(back.pose.rotation, cam.pose.rotation) < 1e-12);

    Camera bad = cam;
    bad.fx = 0;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    CHECK_THROWS_AS(camera_from_json(nlohmann::json{{"fx", 1}}), ConfigError);
}
