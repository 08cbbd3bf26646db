#pragma once

#include "fitngp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace fitngp {

struct GridDims {
    std::uint32_t x = 0;
    std::uint32_t y = 0;
    std::uint32_t z = 0;

    std::size_t count() const { return std::size_t{x} * y * z; }
    friend bool operator==(const GridDims&, const GridDims&) = default;
};

inline constexpr double kDefaultSigmaEmpty = -10.0;

/// Axis-aligned voxel grid of pre-activation log-density values. Nodes sit at
/// cell centers; storage is x-fastest, then y, then z. The bounding box is
/// rounded to float precision on construction so that it survives the
/// on-disk format unchanged.
class DensityGrid {
public:
    DensityGrid(GridDims dims, const Vec3& bbox_min, const Vec3& bbox_max, std::vector<float> sigma);
    static DensityGrid filled(GridDims dims, const Vec3& bbox_min, const Vec3& bbox_max, float value);

    const GridDims& dims() const { return dims_; }
    const Vec3& bbox_min() const { return bbox_min_; }
    const Vec3& bbox_max() const { return bbox_max_; }
    const Vec3& cell_size() const { return cell_; }
    double min_cell_size() const { return cell_.minCoeff(); }

    std::span<const float> sigma() const { return sigma_; }
    std::vector<float>& sigma_mutable() { return sigma_; }

    std::size_t index(std::uint32_t i, std::uint32_t j, std::uint32_t k) const
    {
        return (std::size_t{k} * dims_.y + j) * dims_.x + i;
    }
    float at(std::uint32_t i, std::uint32_t j, std::uint32_t k) const { return sigma_[index(i, j, k)]; }
    Vec3 node_position(std::uint32_t i, std::uint32_t j, std::uint32_t k) const;

    bool contains(const Vec3& x) const
    {
        return (x.array() >= bbox_min_.array()).all() && (x.array() <= bbox_max_.array()).all();
    }

    /// Value returned for queries outside the bounding box (not persisted).
    double sigma_empty() const { return sigma_empty_; }
    void set_sigma_empty(double value) { sigma_empty_ = value; }

    const Vec3& inv_cell_size() const { return inv_cell_; }

private:
    GridDims dims_;
    Vec3 bbox_min_;
    Vec3 bbox_max_;
    Vec3 cell_;
    Vec3 inv_cell_;
    std::vector<float> sigma_;
    double sigma_empty_ = kDefaultSigmaEmpty;
};

struct SigmaSample {
    double sigma = 0.0;
    Vec3 gradient = Vec3::Zero();
};

namespace detail {

struct AxisWeights {
    std::uint32_t i0 = 0;
    std::uint32_t i1 = 0;
    double t = 0.0;
    bool clamped = false;
};

inline AxisWeights axis_weights(double local, std::uint32_t n)
{
    AxisWeights w;
    if (n == 1) {
        w.clamped = true;
        return w;
    }
    const double hi = static_cast<double>(n - 1);
    if (local < 0.0) {
        w.i1 = 1;
        w.clamped = true;
        return w;
    }
    if (local > hi) {
        w.i0 = n - 2;
        w.i1 = n - 1;
        w.t = 1.0;
        w.clamped = true;
        return w;
    }
    // local is non-negative here, so truncation is floor.
    w.i0 = std::min(static_cast<std::uint32_t>(local), n - 2);
    w.i1 = w.i0 + 1;
    w.t = local - static_cast<double>(w.i0);
    return w;
}

}  // namespace detail

/// Trilinear sigma and its spatial gradient. Between the bounding box face and
/// the outermost node centers the field is extended as a constant along that
/// axis (zero gradient component); outside the box it is sigma_empty.
inline SigmaSample sample_sigma_gradient(const DensityGrid& grid, const Vec3& x)
{
    const Vec3& lo = grid.bbox_min();
    const Vec3& hi = grid.bbox_max();
    if (!(x.x() >= lo.x() && x.y() >= lo.y() && x.z() >= lo.z() && x.x() <= hi.x() && x.y() <= hi.y() &&
          x.z() <= hi.z())) {
        return {grid.sigma_empty(), Vec3::Zero()};
    }
    const Vec3& inv = grid.inv_cell_size();
    const auto& d = grid.dims();
    const auto wx = detail::axis_weights((x.x() - lo.x()) * inv.x() - 0.5, d.x);
    const auto wy = detail::axis_weights((x.y() - lo.y()) * inv.y() - 0.5, d.y);
    const auto wz = detail::axis_weights((x.z() - lo.z()) * inv.z() - 0.5, d.z);

    const float* s = grid.sigma().data();
    const std::size_t row = d.x;
    const std::size_t slab = std::size_t{d.x} * d.y;
    const std::size_t y0 = wy.i0 * row;
    const std::size_t y1 = wy.i1 * row;
    const std::size_t z0 = wz.i0 * slab;
    const std::size_t z1 = wz.i1 * slab;

    const double c000 = s[z0 + y0 + wx.i0];
    const double c100 = s[z0 + y0 + wx.i1];
    const double c010 = s[z0 + y1 + wx.i0];
    const double c110 = s[z0 + y1 + wx.i1];
    const double c001 = s[z1 + y0 + wx.i0];
    const double c101 = s[z1 + y0 + wx.i1];
    const double c011 = s[z1 + y1 + wx.i0];
    const double c111 = s[z1 + y1 + wx.i1];

    const double tx = wx.t;
    const double ty = wy.t;
    const double tz = wz.t;

    const double c00 = c000 + (c100 - c000) * tx;
    const double c10 = c010 + (c110 - c010) * tx;
    const double c01 = c001 + (c101 - c001) * tx;
    const double c11 = c011 + (c111 - c011) * tx;
    const double c0 = c00 + (c10 - c00) * ty;
    const double c1 = c01 + (c11 - c01) * ty;

    SigmaSample out;
    out.sigma = c0 + (c1 - c0) * tz;

    if (!wx.clamped) {
        const double dx00 = c100 - c000;
        const double dx10 = c110 - c010;
        const double dx01 = c101 - c001;
        const double dx11 = c111 - c011;
        const double dx0 = dx00 + (dx10 - dx00) * ty;
        const double dx1 = dx01 + (dx11 - dx01) * ty;
        out.gradient.x() = (dx0 + (dx1 - dx0) * tz) * grid.inv_cell_size().x();
    }
    if (!wy.clamped) {
        const double dy0 = c10 - c00;
        const double dy1 = c11 - c01;
        out.gradient.y() = (dy0 + (dy1 - dy0) * tz) * grid.inv_cell_size().y();
    }
    if (!wz.clamped) {
        out.gradient.z() = (c1 - c0) * grid.inv_cell_size().z();
    }
    return out;
}

inline double sample_sigma(const DensityGrid& grid, const Vec3& x) { return sample_sigma_gradient(grid, x).sigma; }

/// s = 1 - exp(-exp(sigma) * beta).
inline double occupancy_from_sigma(double sigma, double beta) { return -std::expm1(-std::exp(sigma) * beta); }

/// ds/dsigma = exp(sigma) * beta * exp(-exp(sigma) * beta).
inline double occupancy_slope(double sigma, double beta)
{
    const double a = std::exp(sigma) * beta;
    return a * std::exp(-a);
}

/// Throws InvalidArgument for beta <= 0.
double occupancy(const DensityGrid& grid, const Vec3& x, double beta);
Vec3 occupancy_gradient(const DensityGrid& grid, const Vec3& x, double beta);

void save_grid(const DensityGrid& grid, const std::filesystem::path& path);
DensityGrid load_grid(const std::filesystem::path& path);
/// Parses the binary grid format from memory; errors carry the byte offset.
DensityGrid parse_grid(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> serialize_grid(const DensityGrid& grid);

/// Pinhole camera, OpenCV axes (x right, y down, z forward). Pixel (u, v)
/// looks along ((u - cx) / fx, (v - cy) / fy, 1) in the camera frame.
struct Camera {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    std::uint32_t width = 1;
    std::uint32_t height = 1;
    Pose pose;  // camera-to-world

    void validate() const;
    /// Camera-frame direction with unit z component.
    Vec3 pixel_direction(double u, double v) const { return Vec3((u - cx) / fx, (v - cy) / fy, 1.0); }
};

nlohmann::json to_json(const Camera& camera);
Camera camera_from_json(const nlohmann::json& j);

/// Per-pixel z-depth in metres (distance along the optical axis); NaN marks
/// pixels without a surface.
struct DepthMap {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<float> depth;

    float at(std::uint32_t u, std::uint32_t v) const { return depth[std::size_t{v} * width + u]; }
};

struct RenderOptions {
    double step = 0.0;  // <= 0 means 0.5 * min cell size
    double min_opacity = 0.5;
    double min_transmittance = 1e-4;
};

DepthMap render_depth(const DensityGrid& grid, const Camera& camera, const RenderOptions& options = {});

/// 8-byte header (u32 width, u32 height, little-endian) then width*height f32.
void save_depth(const DepthMap& map, const std::filesystem::path& path);
DepthMap load_depth(const std::filesystem::path& path);
/// 16-bit binary PGM in millimetres, clipped to [0, 65535]; NaN -> 0.
void save_depth_pgm16(const DepthMap& map, const std::filesystem::path& path);

}  // namespace fitngp
