#pragma once

#include "fitngp/geometry.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fitngp {

/// Triangle soup with shared vertices in the canonical object frame.
struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<std::uint32_t, 3>> triangles;
    /// Area-weighted vertex normals (always filled by the loaders).
    std::vector<Vec3> vertex_normals;
    /// Per-corner normals authored in the source file, if any; used for
    /// interpolated sample normals.
    std::optional<std::vector<std::array<Vec3, 3>>> corner_normals;

    /// Throws InvalidArgument on an empty mesh, out-of-range index or non-finite area.
    void validate() const;
    double triangle_area(std::size_t t) const;
    /// Unit normal from the triangle winding (counter-clockwise = outward); zero for degenerate faces.
    Vec3 face_normal(std::size_t t) const;
    double total_area() const;
};

std::vector<Vec3> area_weighted_vertex_normals(const TriangleMesh& mesh);

/// Reads an OBJ subset (v, vn, f; polygons fan-triangulated) or binary STL,
/// chosen by extension. Errors carry the line number (OBJ) or byte offset (STL).
TriangleMesh load_mesh(const std::filesystem::path& path);
TriangleMesh parse_obj(const std::string& text);
TriangleMesh parse_stl_binary(std::span<const std::uint8_t> bytes);
void save_obj(const TriangleMesh& mesh, const std::filesystem::path& path);

struct SampledModel {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;
    std::string source_id;
};

/// Area-weighted uniform surface samples with outward normals. Deterministic in seed.
SampledModel sample_surface(const TriangleMesh& mesh, std::size_t n_s, std::uint64_t seed, std::string source_id = {});

nlohmann::json to_json(const SampledModel& model);
SampledModel sampled_model_from_json(const nlohmann::json& j);

/// Points expected to be occupied (surface band) and free (normal band).
struct BandPoints {
    std::vector<Vec3> surface_band;
    std::vector<Vec3> normal_band;
    double delta_s = 0.0;
    double delta_n = 0.0;
};

/// Offsets along the stored normal are placed deterministically: with k
/// samples they are evenly spaced over the interval (surface band: the
/// closed [-delta_s, delta_s], centre only when k_s = 1; normal band:
/// delta_s + delta_n * (j + 1) / k_n, so k_n = 1 puts the point at the far end).
BandPoints band_points(const SampledModel& model, double delta_s, double delta_n, std::size_t k_s = 1,
                       std::size_t k_n = 1);

}  // namespace fitngp
