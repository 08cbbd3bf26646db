#include "fitngp/density_field.hpp"

#include "binary_io.hpp"
#include "fitngp/errors.hpp"
#include "fitngp/parallel.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace fitngp {

namespace {

constexpr char kGridMagic[4] = {'F', 'N', 'G', 'P'};
constexpr std::uint32_t kGridVersion = 1;
constexpr std::size_t kGridHeaderBytes = 4 + 4 + 3 * 4 + 6 * 4;

Vec3 round_to_float(const Vec3& v)
{
    Vec3 out;
    for (int a = 0; a < 3; ++a) {
        volatile float f = static_cast<float>(v[a]);
        out[a] = f;
    }
    return out;
}

// Entry/exit parameters of a ray against an axis-aligned box.
bool intersect_box(const Vec3& origin, const Vec3& dir, const Vec3& lo, const Vec3& hi, double& t_near,
                   double& t_far)
{
    t_near = -std::numeric_limits<double>::infinity();
    t_far = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        if (dir[a] == 0.0) {
            if (origin[a] < lo[a] || origin[a] > hi[a]) {
                return false;
            }
            continue;
        }
        double t0 = (lo[a] - origin[a]) / dir[a];
        double t1 = (hi[a] - origin[a]) / dir[a];
        if (t0 > t1) {
            std::swap(t0, t1);
        }
        t_near = std::max(t_near, t0);
        t_far = std::min(t_far, t1);
    }
    return t_far >= std::max(t_near, 0.0);
}

}  // namespace

DensityGrid::DensityGrid(GridDims dims, const Vec3& bbox_min, const Vec3& bbox_max, std::vector<float> sigma)
    : dims_(dims), bbox_min_(round_to_float(bbox_min)), bbox_max_(round_to_float(bbox_max)), sigma_(std::move(sigma))
{
    if (dims.x == 0 || dims.y == 0 || dims.z == 0) {
        throw InvalidArgument("grid dimensions must be positive");
    }
    if (!bbox_min_.allFinite() || !bbox_max_.allFinite() || !(bbox_max_.array() > bbox_min_.array()).all()) {
        throw InvalidArgument("grid bbox_max must exceed bbox_min componentwise");
    }
    if (sigma_.size() != dims.count()) {
        throw InvalidArgument("grid sigma length " + std::to_string(sigma_.size()) + " does not match dims product " +
                              std::to_string(dims.count()));
    }
    for (float v : sigma_) {
        if (!std::isfinite(v)) {
            throw InvalidArgument("grid sigma values must be finite");
        }
    }
    const Vec3 n(dims.x, dims.y, dims.z);
    cell_ = (bbox_max_ - bbox_min_).cwiseQuotient(n);
    inv_cell_ = cell_.cwiseInverse();
}

DensityGrid DensityGrid::filled(GridDims dims, const Vec3& bbox_min, const Vec3& bbox_max, float value)
{
    return DensityGrid(dims, bbox_min, bbox_max, std::vector<float>(dims.count(), value));
}

Vec3 DensityGrid::node_position(std::uint32_t i, std::uint32_t j, std::uint32_t k) const
{
    return bbox_min_ + Vec3(i + 0.5, j + 0.5, k + 0.5).cwiseProduct(cell_);
}

double occupancy(const DensityGrid& grid, const Vec3& x, double beta)
{
    if (!(beta > 0.0)) {
        throw InvalidArgument("occupancy: beta must be positive");
    }
    return occupancy_from_sigma(sample_sigma(grid, x), beta);
}

Vec3 occupancy_gradient(const DensityGrid& grid, const Vec3& x, double beta)
{
    if (!(beta > 0.0)) {
        throw InvalidArgument("occupancy_gradient: beta must be positive");
    }
    const SigmaSample s = sample_sigma_gradient(grid, x);
    return occupancy_slope(s.sigma, beta) * s.gradient;
}

std::vector<std::uint8_t> serialize_grid(const DensityGrid& grid)
{
    io::Writer w;
    w.bytes().reserve(kGridHeaderBytes + 4 * grid.dims().count());
    w.raw(std::span(reinterpret_cast<const std::uint8_t*>(kGridMagic), 4));
    w.u32(kGridVersion);
    w.u32(grid.dims().x);
    w.u32(grid.dims().y);
    w.u32(grid.dims().z);
    for (int a = 0; a < 3; ++a) {
        w.f32(static_cast<float>(grid.bbox_min()[a]));
    }
    for (int a = 0; a < 3; ++a) {
        w.f32(static_cast<float>(grid.bbox_max()[a]));
    }
    for (float v : grid.sigma()) {
        w.f32(v);
    }
    return std::move(w.bytes());
}

DensityGrid parse_grid(std::span<const std::uint8_t> bytes)
{
    io::Reader r(bytes);
    const auto magic = r.take(4, "magic");
    if (!std::equal(magic.begin(), magic.end(), reinterpret_cast<const std::uint8_t*>(kGridMagic))) {
        throw FormatError("bad magic, expected \"FNGP\"", 0);
    }
    const std::size_t version_offset = r.offset();
    const std::uint32_t version = r.u32("version");
    if (version != kGridVersion) {
        throw FormatError("unsupported grid version " + std::to_string(version), static_cast<std::int64_t>(version_offset));
    }
    const std::size_t dims_offset = r.offset();
    GridDims dims;
    dims.x = r.u32("dims");
    dims.y = r.u32("dims");
    dims.z = r.u32("dims");
    if (dims.x == 0 || dims.y == 0 || dims.z == 0) {
        throw FormatError("zero grid dimension", static_cast<std::int64_t>(dims_offset));
    }
    const std::size_t bbox_offset = r.offset();
    Vec3 lo;
    Vec3 hi;
    for (int a = 0; a < 3; ++a) {
        lo[a] = r.f32("bbox_min");
    }
    for (int a = 0; a < 3; ++a) {
        hi[a] = r.f32("bbox_max");
    }
    if (!lo.allFinite() || !hi.allFinite() || !(hi.array() > lo.array()).all()) {
        throw FormatError("invalid bounding box", static_cast<std::int64_t>(bbox_offset));
    }

    // Reject products that overflow or exceed the payload before allocating.
    const std::size_t payload = r.remaining();
    const std::size_t max_cells = payload / 4;
    if (dims.x > max_cells || dims.y > max_cells / dims.x || dims.z > max_cells / (std::size_t{dims.x} * dims.y)) {
        throw FormatError("truncated sigma payload for dims " + std::to_string(dims.x) + "x" + std::to_string(dims.y) +
                              "x" + std::to_string(dims.z),
                          static_cast<std::int64_t>(bytes.size()));
    }
    const std::size_t count = dims.count();
    std::vector<float> sigma(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t at = r.offset();
        sigma[i] = r.f32("sigma");
        if (!std::isfinite(sigma[i])) {
            throw FormatError("non-finite sigma value", static_cast<std::int64_t>(at));
        }
    }
    if (r.remaining() != 0) {
        throw FormatError("trailing bytes after sigma payload", static_cast<std::int64_t>(r.offset()));
    }
    return DensityGrid(dims, lo, hi, std::move(sigma));
}

void save_grid(const DensityGrid& grid, const std::filesystem::path& path)
{
    io::write_file(path, serialize_grid(grid));
}

DensityGrid load_grid(const std::filesystem::path& path) { return parse_grid(io::read_file(path)); }

void Camera::validate() const
{
    if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
        throw InvalidArgument("camera focal lengths must be positive");
    }
    if (!std::isfinite(cx) || !std::isfinite(cy)) {
        throw InvalidArgument("camera principal point must be finite");
    }
    if (width < 1 || height < 1) {
        throw InvalidArgument("camera width and height must be >= 1");
    }
}

nlohmann::json to_json(const Camera& camera)
{
    nlohmann::json m = nlohmann::json::array();
    const Mat4 t = camera.pose.matrix();
    for (int r = 0; r < 4; ++r) {
        m.push_back({t(r, 0), t(r, 1), t(r, 2), t(r, 3)});
    }
    return {{"fx", camera.fx},         {"fy", camera.fy},         {"cx", camera.cx}, {"cy", camera.cy},
            {"width", camera.width}, {"height", camera.height}, {"camera_to_world", m}};
}

Camera camera_from_json(const nlohmann::json& j)
{
    Camera c;
    try {
        c.fx = j.at("fx").get<double>();
        c.fy = j.at("fy").get<double>();
        c.cx = j.at("cx").get<double>();
        c.cy = j.at("cy").get<double>();
        c.width = j.at("width").get<std::uint32_t>();
        c.height = j.at("height").get<std::uint32_t>();
        c.pose = pose_from_json(j.at("camera_to_world"));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("camera: ") + e.what());
    }
    try {
        c.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    return c;
}

DepthMap render_depth(const DensityGrid& grid, const Camera& camera, const RenderOptions& options)
{
    camera.validate();
    const double step = options.step > 0.0 ? options.step : 0.5 * grid.min_cell_size();
    DepthMap map;
    map.width = camera.width;
    map.height = camera.height;
    map.depth.assign(std::size_t{camera.width} * camera.height, std::numeric_limits<float>::quiet_NaN());

    const Mat3 rot = camera.pose.rotation.matrix();
    const Vec3 origin = camera.pose.translation;

    parallel_for(camera.height, [&](std::size_t row) {
        const auto v = static_cast<std::uint32_t>(row);
        for (std::uint32_t u = 0; u < camera.width; ++u) {
            const Vec3 d_cam = camera.pixel_direction(u, v);
            const double d_norm = d_cam.norm();
            const Vec3 dir = rot * (d_cam / d_norm);
            double t_near = 0.0;
            double t_far = 0.0;
            if (!intersect_box(origin, dir, grid.bbox_min(), grid.bbox_max(), t_near, t_far)) {
                continue;
            }
            const double t_start = std::max(t_near, 0.0);
            double transmittance = 1.0;
            double weighted_t = 0.0;
            for (double t = t_start + 0.5 * step; t < t_far; t += step) {
                const double sigma = sample_sigma(grid, origin + t * dir);
                const double alpha = -std::expm1(-std::exp(sigma) * step);
                weighted_t += transmittance * alpha * t;
                transmittance *= 1.0 - alpha;
                if (transmittance < options.min_transmittance) {
                    break;
                }
            }
            const double opacity = 1.0 - transmittance;
            if (opacity < options.min_opacity) {
                continue;
            }
            // Expected ray distance, converted to depth along the optical axis.
            map.depth[std::size_t{v} * camera.width + u] = static_cast<float>(weighted_t / opacity / d_norm);
        }
    });
    return map;
}

void save_depth(const DepthMap& map, const std::filesystem::path& path)
{
    io::Writer w;
    w.u32(map.width);
    w.u32(map.height);
    for (float d : map.depth) {
        w.f32(d);
    }
    io::write_file(path, w.bytes());
}

DepthMap load_depth(const std::filesystem::path& path)
{
    const auto bytes = io::read_file(path);
    io::Reader r(bytes);
    DepthMap map;
    map.width = r.u32("depth header");
    map.height = r.u32("depth header");
    const std::size_t count = std::size_t{map.width} * map.height;
    if (count > r.remaining() / 4 || r.remaining() != 4 * count) {
        throw FormatError("depth payload size does not match header", 8);
    }
    map.depth.resize(count);
    for (auto& d : map.depth) {
        d = r.f32("depth");
    }
    return map;
}

void save_depth_pgm16(const DepthMap& map, const std::filesystem::path& path)
{
    io::Writer w;
    w.text("P5\n" + std::to_string(map.width) + " " + std::to_string(map.height) + "\n65535\n");
    for (float d : map.depth) {
        double mm = std::isnan(d) ? 0.0 : std::round(static_cast<double>(d) * 1000.0);
        mm = std::clamp(mm, 0.0, 65535.0);
        w.u16_be(static_cast<std::uint16_t>(mm));
    }
    io::write_file(path, w.bytes());
}

}  // namespace fitngp
