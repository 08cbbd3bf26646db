#include "fitngp/object_model.hpp"

#include "binary_io.hpp"
#include "fitngp/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

namespace fitngp {

void TriangleMesh::validate() const
{
    if (triangles.empty()) {
        throw InvalidArgument("mesh has no triangles");
    }
    for (std::size_t t = 0; t < triangles.size(); ++t) {
        for (auto idx : triangles[t]) {
            if (idx >= vertices.size()) {
                throw InvalidArgument("triangle " + std::to_string(t) + " references vertex " + std::to_string(idx) +
                                      " of " + std::to_string(vertices.size()));
            }
        }
        if (!std::isfinite(triangle_area(t))) {
            throw InvalidArgument("triangle " + std::to_string(t) + " has non-finite area");
        }
    }
}

double TriangleMesh::triangle_area(std::size_t t) const
{
    const auto& tri = triangles[t];
    const Vec3& a = vertices[tri[0]];
    return 0.5 * (vertices[tri[1]] - a).cross(vertices[tri[2]] - a).norm();
}

Vec3 TriangleMesh::face_normal(std::size_t t) const
{
    const auto& tri = triangles[t];
    const Vec3& a = vertices[tri[0]];
    const Vec3 n = (vertices[tri[1]] - a).cross(vertices[tri[2]] - a);
    const double len = n.norm();
    return len > 0.0 ? Vec3(n / len) : Vec3::Zero();
}

double TriangleMesh::total_area() const
{
    double sum = 0.0;
    for (std::size_t t = 0; t < triangles.size(); ++t) {
        sum += triangle_area(t);
    }
    return sum;
}

std::vector<Vec3> area_weighted_vertex_normals(const TriangleMesh& mesh)
{
    std::vector<Vec3> normals(mesh.vertices.size(), Vec3::Zero());
    for (const auto& tri : mesh.triangles) {
        const Vec3& a = mesh.vertices[tri[0]];
        // Unnormalized cross product has length 2 * area.
        const Vec3 n = (mesh.vertices[tri[1]] - a).cross(mesh.vertices[tri[2]] - a);
        for (auto idx : tri) {
            normals[idx] += n;
        }
    }
    for (auto& n : normals) {
        const double len = n.norm();
        if (len > 0.0) {
            n /= len;
        }
    }
    return normals;
}

namespace {

bool parse_double(std::string_view token, double& out)
{
    const auto* end = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(token.data(), end, out);
    return ec == std::errc() && ptr == end;
}

bool parse_index(std::string_view token, long& out)
{
    const auto* end = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(token.data(), end, out);
    return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> split_ws(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) {
            ++i;
        }
        const std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) {
            ++i;
        }
        if (i > start) {
            out.push_back(line.substr(start, i - start));
        }
    }
    return out;
}

// OBJ indices are 1-based; negative values count back from the end.
std::uint32_t resolve_index(long raw, std::size_t count, const char* kind, std::int64_t line_no)
{
    long idx = raw > 0 ? raw - 1 : static_cast<long>(count) + raw;
    if (raw == 0 || idx < 0 || static_cast<std::size_t>(idx) >= count) {
        throw FormatError(std::string("face references ") + kind + " " + std::to_string(raw) + " of " +
                              std::to_string(count),
                          -1, line_no);
    }
    return static_cast<std::uint32_t>(idx);
}

}  // namespace

TriangleMesh parse_obj(const std::string& text)
{
    TriangleMesh mesh;
    std::vector<Vec3> file_normals;
    struct Corner {
        std::uint32_t v;
        long n;  // -1 when absent
    };
    std::vector<std::array<Corner, 3>> faces;
    bool any_normals = false;

    std::istringstream in(text);
    std::string line;
    std::int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto tokens = split_ws(line);
        if (tokens.empty() || tokens[0].starts_with('#')) {
            continue;
        }
        const auto& key = tokens[0];
        if (key == "v" || key == "vn") {
            if (tokens.size() < 4) {
                throw FormatError("expected three coordinates", -1, line_no);
            }
            Vec3 p;
            for (int a = 0; a < 3; ++a) {
                if (!parse_double(tokens[static_cast<std::size_t>(a) + 1], p[a]) || !std::isfinite(p[a])) {
                    throw FormatError("invalid coordinate '" + std::string(tokens[static_cast<std::size_t>(a) + 1]) + "'",
                                      -1, line_no);
                }
            }
            (key == "v" ? mesh.vertices : file_normals).push_back(p);
        } else if (key == "f") {
            if (tokens.size() < 4) {
                throw FormatError("face needs at least three vertices", -1, line_no);
            }
            std::vector<Corner> poly;
            for (std::size_t i = 1; i < tokens.size(); ++i) {
                const auto tok = tokens[i];
                const auto s1 = tok.find('/');
                long vi = 0;
                if (!parse_index(tok.substr(0, s1), vi)) {
                    throw FormatError("invalid face index '" + std::string(tok) + "'", -1, line_no);
                }
                Corner c{resolve_index(vi, mesh.vertices.size(), "vertex", line_no), -1};
                if (s1 != std::string_view::npos) {
                    const auto s2 = tok.find('/', s1 + 1);
                    if (s2 != std::string_view::npos && s2 + 1 < tok.size()) {
                        long ni = 0;
                        if (!parse_index(tok.substr(s2 + 1), ni)) {
                            throw FormatError("invalid normal index '" + std::string(tok) + "'", -1, line_no);
                        }
                        c.n = resolve_index(ni, file_normals.size(), "normal", line_no);
                        any_normals = true;
                    }
                }
                poly.push_back(c);
            }
            for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
                faces.push_back({poly[0], poly[i], poly[i + 1]});
            }
        }
    }
    if (faces.empty()) {
        throw FormatError("mesh has no faces", -1, line_no);
    }

    for (const auto& f : faces) {
        mesh.triangles.push_back({f[0].v, f[1].v, f[2].v});
    }
    if (any_normals) {
        std::vector<std::array<Vec3, 3>> corners;
        corners.reserve(faces.size());
        for (std::size_t t = 0; t < faces.size(); ++t) {
            std::array<Vec3, 3> c;
            for (int k = 0; k < 3; ++k) {
                const auto& corner = faces[t][static_cast<std::size_t>(k)];
                c[static_cast<std::size_t>(k)] = corner.n >= 0 ? file_normals[static_cast<std::size_t>(corner.n)].normalized()
                                                               : mesh.face_normal(t);
            }
            corners.push_back(c);
        }
        mesh.corner_normals = std::move(corners);
    }
    mesh.vertex_normals = area_weighted_vertex_normals(mesh);
    return mesh;
}

TriangleMesh parse_stl_binary(std::span<const std::uint8_t> bytes)
{
    io::Reader r(bytes);
    r.take(80, "STL header");
    const std::uint32_t count = r.u32("STL triangle count");
    if (count == 0) {
        throw FormatError("STL has no triangles", 80);
    }
    if (r.remaining() / 50 < count) {
        throw FormatError("truncated STL: " + std::to_string(count) + " triangles declared",
                          static_cast<std::int64_t>(bytes.size()));
    }
    TriangleMesh mesh;
    std::map<std::array<float, 3>, std::uint32_t> lookup;
    for (std::uint32_t t = 0; t < count; ++t) {
        r.take(12, "STL normal");  // recomputed from winding
        std::array<std::uint32_t, 3> tri{};
        for (int k = 0; k < 3; ++k) {
            const std::size_t at = r.offset();
            std::array<float, 3> p{r.f32("STL vertex"), r.f32("STL vertex"), r.f32("STL vertex")};
            if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || !std::isfinite(p[2])) {
                throw FormatError("non-finite STL vertex", static_cast<std::int64_t>(at));
            }
            auto [it, inserted] = lookup.try_emplace(p, static_cast<std::uint32_t>(mesh.vertices.size()));
            if (inserted) {
                mesh.vertices.emplace_back(p[0], p[1], p[2]);
            }
            tri[static_cast<std::size_t>(k)] = it->second;
        }
        r.take(2, "STL attribute");
        mesh.triangles.push_back(tri);
    }
    mesh.vertex_normals = area_weighted_vertex_normals(mesh);
    return mesh;
}

TriangleMesh load_mesh(const std::filesystem::path& path)
{
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    TriangleMesh mesh;
    if (ext == ".obj") {
        mesh = parse_obj(io::read_text(path));
    } else if (ext == ".stl") {
        mesh = parse_stl_binary(io::read_file(path));
    } else {
        throw FormatError("unsupported mesh extension '" + ext + "' for " + path.string(), -1);
    }
    try {
        mesh.validate();
    } catch (const InvalidArgument& e) {
        throw FormatError(path.string() + ": " + e.what(), -1);
    }
    return mesh;
}

void save_obj(const TriangleMesh& mesh, const std::filesystem::path& path)
{
    std::ostringstream out;
    out.precision(17);
    for (const auto& v : mesh.vertices) {
        out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    }
    for (const auto& t : mesh.triangles) {
        out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
    }
    io::write_text(path, out.str());
}

SampledModel sample_surface(const TriangleMesh& mesh, std::size_t n_s, std::uint64_t seed, std::string source_id)
{
    if (n_s == 0) {
        throw InvalidArgument("sample_surface: n_s must be >= 1");
    }
    mesh.validate();
    std::vector<double> cumulative(mesh.triangles.size());
    double total = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        total += mesh.triangle_area(t);
        cumulative[t] = total;
    }
    if (!(total > 0.0)) {
        throw InvalidArgument("sample_surface: mesh has zero total area");
    }

    Rng rng(seed);
    SampledModel model;
    model.source_id = std::move(source_id);
    model.points.reserve(n_s);
    model.normals.reserve(n_s);
    for (std::size_t i = 0; i < n_s; ++i) {
        const double pick = uniform01(rng) * total;
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
        const std::size_t t = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()),
                                                    mesh.triangles.size() - 1);
        const double s1 = std::sqrt(uniform01(rng));
        const double u2 = uniform01(rng);
        const double a = 1.0 - s1;
        const double b = s1 * (1.0 - u2);
        const double c = s1 * u2;
        const auto& tri = mesh.triangles[t];
        model.points.push_back(a * mesh.vertices[tri[0]] + b * mesh.vertices[tri[1]] + c * mesh.vertices[tri[2]]);

        Vec3 n = mesh.face_normal(t);
        if (mesh.corner_normals) {
            const auto& cn = (*mesh.corner_normals)[t];
            const Vec3 interp = a * cn[0] + b * cn[1] + c * cn[2];
            if (interp.norm() > 1e-12) {
                n = interp.normalized();
            }
        }
        model.normals.push_back(n);
    }
    return model;
}

nlohmann::json to_json(const SampledModel& model)
{
    nlohmann::json points = nlohmann::json::array();
    nlohmann::json normals = nlohmann::json::array();
    for (std::size_t i = 0; i < model.points.size(); ++i) {
        points.push_back(to_json(model.points[i]));
        normals.push_back(to_json(model.normals[i]));
    }
    return {{"source_id", model.source_id}, {"points", points}, {"normals", normals}};
}

SampledModel sampled_model_from_json(const nlohmann::json& j)
{
    SampledModel model;
    try {
        model.source_id = j.value("source_id", std::string{});
        for (const auto& p : j.at("points")) {
            model.points.push_back(vec3_from_json(p));
        }
        for (const auto& n : j.at("normals")) {
            model.normals.push_back(vec3_from_json(n));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("sampled model: ") + e.what());
    }
    if (model.points.size() != model.normals.size() || model.points.empty()) {
        throw ConfigError("sampled model: points and normals must be non-empty and of equal length");
    }
    for (const auto& n : model.normals) {
        if (std::abs(n.norm() - 1.0) > 1e-6) {
            throw ConfigError("sampled model: normals must be unit length");
        }
    }
    return model;
}

BandPoints band_points(const SampledModel& model, double delta_s, double delta_n, std::size_t k_s, std::size_t k_n)
{
    if (!(delta_n > 0.0) || !std::isfinite(delta_n)) {
        throw InvalidArgument("band_points: delta_n must be positive");
    }
    if (!(delta_s >= 0.0) || !std::isfinite(delta_s)) {
        throw InvalidArgument("band_points: delta_s must be non-negative");
    }
    if (k_s < 1 || k_n < 1) {
        throw InvalidArgument("band_points: k_s and k_n must be >= 1");
    }
    BandPoints band;
    band.delta_s = delta_s;
    band.delta_n = delta_n;
    band.surface_band.reserve(model.points.size() * k_s);
    band.normal_band.reserve(model.points.size() * k_n);

    std::vector<double> surface_offsets(k_s, 0.0);
    if (k_s > 1) {
        for (std::size_t j = 0; j < k_s; ++j) {
            surface_offsets[j] = -delta_s + 2.0 * delta_s * static_cast<double>(j) / static_cast<double>(k_s - 1);
        }
    }
    std::vector<double> normal_offsets(k_n);
    for (std::size_t j = 0; j < k_n; ++j) {
        normal_offsets[j] = delta_s + delta_n * static_cast<double>(j + 1) / static_cast<double>(k_n);
    }

    for (std::size_t i = 0; i < model.points.size(); ++i) {
        const Vec3& x = model.points[i];
        const Vec3& n = model.normals[i];
        for (double o : surface_offsets) {
            band.surface_band.push_back(o == 0.0 ? x : Vec3(x + o * n));
        }
        for (double o : normal_offsets) {
            band.normal_band.push_back(x + o * n);
        }
    }
    return band;
}

}  // namespace fitngp
