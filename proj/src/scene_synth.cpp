#include "fitngp/scene_synth.hpp"

#include "fitngp/errors.hpp"
#include "fitngp/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <set>

namespace fitngp {

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c)
{
    const Vec3 ab = b - a;
    const Vec3 ac = c - a;
    const Vec3 ap = p - a;
    const double d1 = ab.dot(ap);
    const double d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) {
        return a;
    }
    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp);
    const double d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) {
        return b;
    }
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
        return a + (d1 / (d1 - d3)) * ab;
    }
    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp);
    const double d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) {
        return c;
    }
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
        return a + (d2 / (d2 - d6)) * ac;
    }
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
    }
    const double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

namespace {

// Moller-Trumbore; returns the ray parameter of a hit with t > 0.
std::optional<double> ray_triangle(const Vec3& o, const Vec3& d, const Vec3& a, const Vec3& b, const Vec3& c)
{
    constexpr double eps = 1e-14;
    const Vec3 e1 = b - a;
    const Vec3 e2 = c - a;
    const Vec3 h = d.cross(e2);
    const double det = e1.dot(h);
    if (std::abs(det) < eps) {
        return std::nullopt;
    }
    const double inv = 1.0 / det;
    const Vec3 s = o - a;
    const double u = inv * s.dot(h);
    if (u < 0.0 || u > 1.0) {
        return std::nullopt;
    }
    const Vec3 q = s.cross(e1);
    const double v = inv * d.dot(q);
    if (v < 0.0 || u + v > 1.0) {
        return std::nullopt;
    }
    const double t = inv * e2.dot(q);
    if (t <= 0.0) {
        return std::nullopt;
    }
    return t;
}

bool ray_hits_box(const Vec3& o, const Vec3& d, const Vec3& lo, const Vec3& hi)
{
    double t0 = 0.0;
    double t1 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        if (d[a] == 0.0) {
            if (o[a] < lo[a] || o[a] > hi[a]) {
                return false;
            }
            continue;
        }
        double ta = (lo[a] - o[a]) / d[a];
        double tb = (hi[a] - o[a]) / d[a];
        if (ta > tb) {
            std::swap(ta, tb);
        }
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    return t1 >= t0;
}

// Generic directions so rays rarely graze edges or vertices of axis-aligned meshes.
const std::array<Vec3, 3> kParityRays = {
    Vec3(0.5773502691896258, 0.5773502691896258, 0.5773502691896258) + Vec3(0.0312, -0.0173, 0.0091),
    Vec3(-0.3826834323650898, 0.8314696123025452, 0.4033) + Vec3(0.0117, 0.0041, -0.0263),
    Vec3(0.2104, -0.4471, -0.8694),
};

void aabb_of(const TriangleMesh& mesh, Vec3& lo, Vec3& hi)
{
    lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    hi = -lo;
    for (const auto& v : mesh.vertices) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
}

// World-space AABB of a posed object-frame box.
void posed_aabb(const Vec3& lo, const Vec3& hi, const Pose& pose, Vec3& out_lo, Vec3& out_hi)
{
    out_lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    out_hi = -out_lo;
    for (int corner = 0; corner < 8; ++corner) {
        const Vec3 c((corner & 1) ? hi.x() : lo.x(), (corner & 2) ? hi.y() : lo.y(), (corner & 4) ? hi.z() : lo.z());
        const Vec3 w = pose_apply(pose, c);
        out_lo = out_lo.cwiseMin(w);
        out_hi = out_hi.cwiseMax(w);
    }
}

}  // namespace

bool is_closed_manifold(const TriangleMesh& mesh)
{
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> directed;
    for (const auto& t : mesh.triangles) {
        for (int k = 0; k < 3; ++k) {
            const std::uint32_t a = t[static_cast<std::size_t>(k)];
            const std::uint32_t b = t[static_cast<std::size_t>((k + 1) % 3)];
            if (a == b) {
                return false;
            }
            if (++directed[{a, b}] > 1) {
                return false;
            }
        }
    }
    for (const auto& [edge, n] : directed) {
        if (directed.find({edge.second, edge.first}) == directed.end()) {
            return false;
        }
    }
    return true;
}

MeshDistanceField::MeshDistanceField(const TriangleMesh& mesh)
{
    mesh.validate();
    tris_.reserve(mesh.triangles.size());
    for (const auto& t : mesh.triangles) {
        tris_.push_back({mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]});
    }
    aabb_of(mesh, lo_, hi_);
    watertight_ = is_closed_manifold(mesh);
}

double MeshDistanceField::unsigned_distance(const Vec3& x) const
{
    double best = std::numeric_limits<double>::infinity();
    for (const auto& t : tris_) {
        best = std::min(best, (closest_point_on_triangle(x, t.a, t.b, t.c) - x).squaredNorm());
    }
    return std::sqrt(best);
}

bool MeshDistanceField::inside(const Vec3& x) const
{
    if ((x.array() < lo_.array()).any() || (x.array() > hi_.array()).any()) {
        return false;
    }
    int votes = 0;
    for (const auto& dir : kParityRays) {
        const Vec3 d = dir.normalized();
        int crossings = 0;
        for (const auto& t : tris_) {
            if (ray_triangle(x, d, t.a, t.b, t.c)) {
                ++crossings;
            }
        }
        votes += crossings % 2;
    }
    return votes >= 2;
}

SignedDistance MeshDistanceField::evaluate(const Vec3& x) const
{
    const double d = unsigned_distance(x);
    if (!watertight_) {
        return {d, false};
    }
    return {inside(x) ? -d : d, true};
}

SignedDistance signed_distance(const TriangleMesh& mesh, const Pose& pose, const Vec3& x)
{
    const MeshDistanceField field(mesh);
    return field.evaluate(pose.rotation.inverse().apply(x - pose.translation));
}

std::optional<double> ray_mesh_intersection(const TriangleMesh& mesh, const Vec3& origin, const Vec3& dir)
{
    std::optional<double> best;
    for (const auto& t : mesh.triangles) {
        const auto hit = ray_triangle(origin, dir, mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
        if (hit && (!best || *hit < *best)) {
            best = hit;
        }
    }
    return best;
}

double SceneSpec::matched_beta() const { return 3.0 * std::exp(-0.5 * (sigma_in + sigma_out)); }

double SceneSpec::resolved_sharpness() const
{
    if (sharpness > 0.0) {
        return sharpness;
    }
    const Vec3 n(dims.x, dims.y, dims.z);
    return (bbox_max - bbox_min).cwiseQuotient(n).minCoeff();
}

void SceneSpec::validate() const
{
    if (objects.empty()) {
        throw InvalidArgument("scene has no objects");
    }
    if (dims.x == 0 || dims.y == 0 || dims.z == 0) {
        throw InvalidArgument("grid dimensions must be positive");
    }
    if (!(bbox_max.array() > bbox_min.array()).all()) {
        throw InvalidArgument("grid bbox_max must exceed bbox_min");
    }
    if (!(resolved_sharpness() > 0.0) || !std::isfinite(sharpness)) {
        throw InvalidArgument("sharpness must be positive");
    }
    if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
        throw InvalidArgument("noise_std must be >= 0");
    }
    if (!(noise_correlation >= 1.0)) {
        throw InvalidArgument("noise_correlation must be >= 1 cell");
    }
    if (!std::isfinite(sigma_in) || !std::isfinite(sigma_out)) {
        throw InvalidArgument("sigma_in and sigma_out must be finite");
    }
    std::set<std::string> ids;
    for (const auto& obj : objects) {
        if (!ids.insert(obj.id).second) {
            throw InvalidArgument("duplicate object id '" + obj.id + "'");
        }
        obj.mesh.validate();
        Vec3 lo;
        Vec3 hi;
        aabb_of(obj.mesh, lo, hi);
        Vec3 wlo;
        Vec3 whi;
        posed_aabb(lo, hi, obj.pose, wlo, whi);
        if ((wlo.array() < bbox_min.array()).any() || (whi.array() > bbox_max.array()).any()) {
            throw InvalidArgument("object '" + obj.id + "' extends outside the grid bounding box");
        }
    }
}

namespace {

TriangleMesh primitive_from_json(const nlohmann::json& j)
{
    const std::string type = j.at("type").get<std::string>();
    if (type == "box") {
        return make_box(vec3_from_json(j.at("size")));
    }
    if (type == "hex_prism") {
        return make_hex_prism(j.at("across_flats").get<double>(), j.at("height").get<double>());
    }
    if (type == "cylinder") {
        return make_cylinder(j.at("radius").get<double>(), j.at("height").get<double>(),
                             j.value("segments", 48u));
    }
    if (type == "l_bracket") {
        return make_l_bracket(j.at("leg_x").get<double>(), j.at("leg_y").get<double>(),
                              j.at("thickness").get<double>(), j.at("depth").get<double>());
    }
    throw ConfigError("unknown primitive type '" + type + "'");
}

}  // namespace

SceneSpec scene_spec_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir)
{
    SceneSpec spec;
    try {
        for (const auto& o : j.at("objects")) {
            SceneObject obj;
            obj.id = o.at("id").get<std::string>();
            obj.pose = pose_from_json(o.at("pose"));
            obj.symmetry = o.value("symmetry", std::string{});
            obj.distractor = o.value("distractor", false);
            if (o.contains("mesh")) {
                obj.mesh_path = base_dir / o.at("mesh").get<std::string>();
                if (!std::filesystem::exists(obj.mesh_path)) {
                    throw ConfigError("object '" + obj.id + "': mesh file not found: " + obj.mesh_path.string());
                }
                try {
                    obj.mesh = load_mesh(obj.mesh_path);
                } catch (const FormatError& e) {
                    throw ConfigError(std::string("object '") + obj.id + "': " + e.what());
                }
            } else if (o.contains("primitive")) {
                obj.mesh = primitive_from_json(o.at("primitive"));
            } else {
                throw ConfigError("object '" + obj.id + "' needs a 'mesh' path or a 'primitive'");
            }
            spec.objects.push_back(std::move(obj));
        }
        const auto& g = j.at("grid");
        const auto& d = g.at("dims");
        spec.dims = GridDims{d.at(0).get<std::uint32_t>(), d.at(1).get<std::uint32_t>(), d.at(2).get<std::uint32_t>()};
        spec.bbox_min = vec3_from_json(g.at("bbox_min"));
        spec.bbox_max = vec3_from_json(g.at("bbox_max"));
        if (j.contains("sharpness")) {
            spec.sharpness = j.at("sharpness").get<double>();
        } else if (j.contains("sharpness_voxels")) {
            spec.sharpness = 0.0;
            const Vec3 n(spec.dims.x, spec.dims.y, spec.dims.z);
            spec.sharpness = j.at("sharpness_voxels").get<double>() *
                             (spec.bbox_max - spec.bbox_min).cwiseQuotient(n).minCoeff();
        }
        spec.sigma_in = j.value("sigma_in", spec.sigma_in);
        spec.sigma_out = j.value("sigma_out", spec.sigma_out);
        spec.noise_std = j.value("noise_std", spec.noise_std);
        spec.noise_correlation = j.value("noise_correlation", spec.noise_correlation);
        spec.seed = j.value("seed", spec.seed);
        if (j.contains("camera")) {
            spec.camera = camera_from_json(j.at("camera"));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("scene spec: ") + e.what());
    }
    try {
        spec.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("scene spec: ") + e.what());
    }
    return spec;
}

nlohmann::json ground_truth_json(const SceneSpec& spec)
{
    nlohmann::json objects = nlohmann::json::object();
    for (const auto& obj : spec.objects) {
        if (obj.distractor) {
            continue;
        }
        nlohmann::json entry = {{"pose", to_json(obj.pose)}, {"symmetry", obj.symmetry}};
        if (!obj.mesh_path.empty()) {
            entry["mesh"] = obj.mesh_path.string();
        }
        objects[obj.id] = entry;
    }
    return {{"objects", objects}};
}

std::map<std::string, Pose> ground_truth_poses_from_json(const nlohmann::json& j)
{
    std::map<std::string, Pose> out;
    try {
        for (const auto& [label, entry] : j.at("objects").items()) {
            out.emplace(label, pose_from_json(entry.at("pose")));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("ground truth: ") + e.what());
    }
    return out;
}

DensityGrid voxelize_clean(const SceneSpec& spec)
{
    spec.validate();
    const double w = spec.resolved_sharpness();
    const double margin = 20.0 * w;
    auto grid = DensityGrid::filled(spec.dims, spec.bbox_min, spec.bbox_max, static_cast<float>(spec.sigma_out));
    auto& sigma = grid.sigma_mutable();
    const auto& dims = spec.dims;

    for (const auto& obj : spec.objects) {
        const MeshDistanceField field(obj.mesh);
        Vec3 lo;
        Vec3 hi;
        posed_aabb(field.aabb_min(), field.aabb_max(), obj.pose, lo, hi);
        lo.array() -= margin;
        hi.array() += margin;

        // Node index range covering [lo, hi].
        std::array<std::uint32_t, 3> first{};
        std::array<std::uint32_t, 3> last{};
        const std::array<std::uint32_t, 3> n{dims.x, dims.y, dims.z};
        bool empty = false;
        for (int a = 0; a < 3; ++a) {
            const double h = grid.cell_size()[a];
            const double f0 = std::ceil((lo[a] - grid.bbox_min()[a]) / h - 0.5);
            const double f1 = std::floor((hi[a] - grid.bbox_min()[a]) / h - 0.5);
            const double c0 = std::max(f0, 0.0);
            const double c1 = std::min(f1, static_cast<double>(n[static_cast<std::size_t>(a)]) - 1.0);
            if (c1 < c0) {
                empty = true;
                break;
            }
            first[static_cast<std::size_t>(a)] = static_cast<std::uint32_t>(c0);
            last[static_cast<std::size_t>(a)] = static_cast<std::uint32_t>(c1);
        }
        if (empty) {
            continue;
        }

        const Mat3 rt = obj.pose.rotation.matrix().transpose();
        const Vec3 p = obj.pose.translation;
        const std::size_t slices = last[2] - first[2] + 1;
        parallel_for(slices, [&](std::size_t s) {
            const auto k = static_cast<std::uint32_t>(first[2] + s);
            for (std::uint32_t j = first[1]; j <= last[1]; ++j) {
                for (std::uint32_t i = first[0]; i <= last[0]; ++i) {
                    const Vec3 local = rt * (grid.node_position(i, j, k) - p);
                    const double d = field.evaluate(local).distance;
                    const double value =
                        spec.sigma_out + (spec.sigma_in - spec.sigma_out) / (1.0 + std::exp(d / w));
                    float& cell = sigma[grid.index(i, j, k)];
                    cell = std::max(cell, static_cast<float>(value));
                }
            }
        });
    }
    for (auto& v : sigma) {
        v = std::clamp(v, static_cast<float>(-kSigmaClamp), static_cast<float>(kSigmaClamp));
    }
    return grid;
}

std::vector<float> unit_noise_field(const GridDims& dims, double correlation, std::uint64_t seed)
{
    const std::size_t count = dims.count();
    std::vector<float> field(count);
    Rng rng(seed);
    for (auto& v : field) {
        v = static_cast<float>(standard_normal(rng));
    }
    const auto k = static_cast<std::size_t>(std::max(1.0, std::round(correlation)));
    if (k == 1) {
        return field;
    }

    // Separable moving average with windows truncated at the borders.
    const std::array<std::size_t, 3> n{dims.x, dims.y, dims.z};
    const std::array<std::size_t, 3> stride{1, dims.x, std::size_t{dims.x} * dims.y};
    const auto before = static_cast<std::ptrdiff_t>(k / 2);
    const auto after = static_cast<std::ptrdiff_t>(k) - before - 1;
    for (std::size_t axis = 0; axis < 3; ++axis) {
        const std::size_t len = n[axis];
        const std::size_t step = stride[axis];
        const std::size_t lines = count / len;
        std::vector<float> out(count);
        parallel_for(lines, [&](std::size_t line) {
            // Base index of this line: enumerate the other two axes.
            const std::size_t lo_part = line % step;
            const std::size_t hi_part = line / step;
            const std::size_t base = hi_part * step * len + lo_part;
            std::vector<double> prefix(len + 1, 0.0);
            for (std::size_t t = 0; t < len; ++t) {
                prefix[t + 1] = prefix[t] + field[base + t * step];
            }
            for (std::size_t t = 0; t < len; ++t) {
                const auto tt = static_cast<std::ptrdiff_t>(t);
                const auto a = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, tt - before));
                const auto b = static_cast<std::size_t>(std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(len) - 1, tt + after));
                out[base + t * step] = static_cast<float>((prefix[b + 1] - prefix[a]) / static_cast<double>(b - a + 1));
            }
        });
        field.swap(out);
    }
    const auto scale = static_cast<float>(std::pow(static_cast<double>(k), 1.5));
    for (auto& v : field) {
        v *= scale;
    }
    return field;
}

DensityGrid add_field_noise(const DensityGrid& clean, const SceneSpec& spec)
{
    DensityGrid out = clean;
    auto& sigma = out.sigma_mutable();
    if (spec.noise_std > 0.0) {
        const auto noise = unit_noise_field(clean.dims(), spec.noise_correlation, spec.seed);
        for (std::size_t i = 0; i < sigma.size(); ++i) {
            sigma[i] = static_cast<float>(static_cast<double>(sigma[i]) + spec.noise_std * static_cast<double>(noise[i]));
        }
    }
    for (auto& v : sigma) {
        v = std::clamp(v, static_cast<float>(-kSigmaClamp), static_cast<float>(kSigmaClamp));
    }
    return out;
}

DensityGrid voxelize_scene(const SceneSpec& spec) { return add_field_noise(voxelize_clean(spec), spec); }

Camera default_reference_camera(const Vec3& bbox_min, const Vec3& bbox_max, std::uint32_t size)
{
    const Vec3 center = 0.5 * (bbox_min + bbox_max);
    const Vec3 extent = bbox_max - bbox_min;
    const double height = bbox_max.z() + 0.75 * extent.z();
    const double distance = height - center.z();
    const double half_width = 0.5 * std::max(extent.x(), extent.y());

    Camera cam;
    cam.width = size;
    cam.height = size;
    cam.fx = 0.5 * size * distance / half_width;
    cam.fy = cam.fx;
    cam.cx = 0.5 * (size - 1);
    cam.cy = 0.5 * (size - 1);
    Mat3 r;
    r.col(0) = Vec3(1, 0, 0);
    r.col(1) = Vec3(0, -1, 0);
    r.col(2) = Vec3(0, 0, -1);
    cam.pose.rotation = Rotation::from_matrix(r);
    cam.pose.translation = Vec3(center.x(), center.y(), height);
    return cam;
}

std::vector<InstanceMask> render_instance_masks(const std::vector<SceneObject>& objects, const Camera& camera)
{
    camera.validate();
    std::vector<InstanceMask> masks(objects.size());
    for (std::size_t o = 0; o < objects.size(); ++o) {
        masks[o].width = camera.width;
        masks[o].height = camera.height;
        masks[o].label = objects[o].id;
        masks[o].member.assign(std::size_t{camera.width} * camera.height, 0);
    }
    std::vector<Vec3> lo(objects.size());
    std::vector<Vec3> hi(objects.size());
    for (std::size_t o = 0; o < objects.size(); ++o) {
        aabb_of(objects[o].mesh, lo[o], hi[o]);
    }
    const Mat3 rot = camera.pose.rotation.matrix();
    parallel_for(camera.height, [&](std::size_t row) {
        const auto v = static_cast<std::uint32_t>(row);
        for (std::uint32_t u = 0; u < camera.width; ++u) {
            const Vec3 dir = rot * camera.pixel_direction(u, v).normalized();
            double best_t = std::numeric_limits<double>::infinity();
            std::size_t best = objects.size();
            for (std::size_t o = 0; o < objects.size(); ++o) {
                const Mat3 rt = objects[o].pose.rotation.matrix().transpose();
                const Vec3 origin = rt * (camera.pose.translation - objects[o].pose.translation);
                const Vec3 d = rt * dir;
                if (!ray_hits_box(origin, d, lo[o], hi[o])) {
                    continue;
                }
                const auto t = ray_mesh_intersection(objects[o].mesh, origin, d);
                if (t && *t < best_t) {
                    best_t = *t;
                    best = o;
                }
            }
            if (best < objects.size()) {
                masks[best].member[std::size_t{v} * camera.width + u] = 1;
            }
        }
    });
    return masks;
}

namespace {

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); }

bool point_in_triangle_2d(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                          const Eigen::Vector2d& c)
{
    return cross2(b - a, p - a) >= 0.0 && cross2(c - b, p - b) >= 0.0 && cross2(a - c, p - c) >= 0.0;
}

// Ear clipping of a counter-clockwise simple polygon.
std::vector<std::array<std::uint32_t, 3>> triangulate(const std::vector<Eigen::Vector2d>& poly)
{
    std::vector<std::uint32_t> idx(poly.size());
    for (std::uint32_t i = 0; i < idx.size(); ++i) {
        idx[i] = i;
    }
    std::vector<std::array<std::uint32_t, 3>> out;
    std::size_t guard = 0;
    while (idx.size() > 3 && guard < 10 * poly.size() * poly.size()) {
        ++guard;
        bool clipped = false;
        for (std::size_t i = 0; i < idx.size(); ++i) {
            const std::uint32_t ia = idx[(i + idx.size() - 1) % idx.size()];
            const std::uint32_t ib = idx[i];
            const std::uint32_t ic = idx[(i + 1) % idx.size()];
            if (cross2(poly[ib] - poly[ia], poly[ic] - poly[ib]) <= 0.0) {
                continue;  // reflex
            }
            bool contains = false;
            for (auto other : idx) {
                if (other != ia && other != ib && other != ic &&
                    point_in_triangle_2d(poly[other], poly[ia], poly[ib], poly[ic])) {
                    contains = true;
                    break;
                }
            }
            if (contains) {
                continue;
            }
            out.push_back({ia, ib, ic});
            idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(i));
            clipped = true;
            break;
        }
        if (!clipped) {
            throw InvalidArgument("polygon is not simple or not counter-clockwise");
        }
    }
    out.push_back({idx[0], idx[1], idx[2]});
    return out;
}

}  // namespace

TriangleMesh extrude_polygon(const std::vector<Eigen::Vector2d>& polygon, double height)
{
    if (polygon.size() < 3 || !(height > 0.0)) {
        throw InvalidArgument("extrude_polygon needs >= 3 vertices and a positive height");
    }
    TriangleMesh mesh;
    const auto n = static_cast<std::uint32_t>(polygon.size());
    for (const auto& p : polygon) {
        mesh.vertices.emplace_back(p.x(), p.y(), -0.5 * height);
    }
    for (const auto& p : polygon) {
        mesh.vertices.emplace_back(p.x(), p.y(), 0.5 * height);
    }
    for (std::uint32_t i = 0; i < n; ++i) {
        const std::uint32_t j = (i + 1) % n;
        mesh.triangles.push_back({i, j, n + j});
        mesh.triangles.push_back({i, n + j, n + i});
    }
    for (const auto& t : triangulate(polygon)) {
        mesh.triangles.push_back({n + t[0], n + t[1], n + t[2]});
        mesh.triangles.push_back({t[0], t[2], t[1]});
    }
    mesh.vertex_normals = area_weighted_vertex_normals(mesh);
    return mesh;
}

TriangleMesh make_box(const Vec3& size)
{
    const double hx = 0.5 * size.x();
    const double hy = 0.5 * size.y();
    return extrude_polygon({{-hx, -hy}, {hx, -hy}, {hx, hy}, {-hx, hy}}, size.z());
}

TriangleMesh make_hex_prism(double across_flats, double height)
{
    const double r = across_flats / std::sqrt(3.0);
    std::vector<Eigen::Vector2d> poly;
    for (int k = 0; k < 6; ++k) {
        const double a = std::numbers::pi / 6.0 + k * std::numbers::pi / 3.0;
        poly.emplace_back(r * std::cos(a), r * std::sin(a));
    }
    return extrude_polygon(poly, height);
}

TriangleMesh make_cylinder(double radius, double height, std::uint32_t segments)
{
    if (segments < 3) {
        throw InvalidArgument("cylinder needs >= 3 segments");
    }
    std::vector<Eigen::Vector2d> poly;
    for (std::uint32_t k = 0; k < segments; ++k) {
        const double a = 2.0 * std::numbers::pi * k / segments;
        poly.emplace_back(radius * std::cos(a), radius * std::sin(a));
    }
    return extrude_polygon(poly, height);
}

TriangleMesh make_l_bracket(double leg_x, double leg_y, double thickness, double depth)
{
    if (!(thickness > 0.0) || !(leg_x > thickness) || !(leg_y > thickness)) {
        throw InvalidArgument("L bracket legs must exceed the thickness");
    }
    const Eigen::Vector2d c(0.5 * leg_x, 0.5 * leg_y);
    std::vector<Eigen::Vector2d> poly = {
        {0.0, 0.0}, {leg_x, 0.0}, {leg_x, thickness}, {thickness, thickness}, {thickness, leg_y}, {0.0, leg_y}};
    for (auto& p : poly) {
        p -= c;
    }
    return extrude_polygon(poly, depth);
}

}  // namespace fitngp
