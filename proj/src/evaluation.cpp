#include "fitngp/evaluation.hpp"

#include "fitngp/errors.hpp"
#include "csv.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

namespace fitngp {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

bool has_element(const std::vector<Rotation>& list, const Rotation& r, double tol)
{
    return std::any_of(list.begin(), list.end(), [&](const Rotation& e) { return geodesic_distance(e, r) <= tol; });
}

std::vector<Rotation> closure(const std::vector<Rotation>& generators)
{
    std::vector<Rotation> out{Rotation{}};
    std::deque<Rotation> queue{Rotation{}};
    while (!queue.empty()) {
        const Rotation a = queue.front();
        queue.pop_front();
        for (const auto& g : generators) {
            const Rotation c = g * a;
            if (!has_element(out, c, 1e-9)) {
                out.push_back(c);
                queue.push_back(c);
            }
        }
    }
    return out;
}

Vec3 axis_from_name(const std::string& name)
{
    if (name == "x") {
        return Vec3::UnitX();
    }
    if (name == "y") {
        return Vec3::UnitY();
    }
    if (name == "z") {
        return Vec3::UnitZ();
    }
    throw ConfigError("unknown symmetry axis '" + name + "'");
}

Vec3 default_flip_axis(const Vec3& axis)
{
    const Vec3 a = axis.normalized();
    const Vec3 seed = std::abs(a.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    return (seed - seed.dot(a) * a).normalized();
}

Vec3 parse_axis(const nlohmann::json& j)
{
    if (j.is_string()) {
        return axis_from_name(j.get<std::string>());
    }
    return vec3_from_json(j);
}

double quantize(double v) { return std::round(v * 1e9) / 1e9; }

}  // namespace

SymmetryGroup SymmetryGroup::identity() { return {}; }

SymmetryGroup SymmetryGroup::cyclic(std::size_t order, const Vec3& axis)
{
    if (order < 1) {
        throw InvalidArgument("cyclic symmetry order must be >= 1");
    }
    SymmetryGroup g;
    g.rotations.clear();
    for (std::size_t k = 0; k < order; ++k) {
        g.rotations.push_back(k == 0 ? Rotation{}
                                     : Rotation::about_axis(axis, 2.0 * std::numbers::pi * static_cast<double>(k) /
                                                                      static_cast<double>(order)));
    }
    g.descriptor = "C" + std::to_string(order);
    return g;
}

SymmetryGroup SymmetryGroup::dihedral(std::size_t order, const Vec3& axis, const Vec3& flip_axis)
{
    SymmetryGroup g = cyclic(order, axis);
    const Rotation flip = Rotation::about_axis(flip_axis, std::numbers::pi);
    const std::size_t n = g.rotations.size();
    for (std::size_t k = 0; k < n; ++k) {
        g.rotations.push_back(g.rotations[k] * flip);
    }
    g.descriptor = "D" + std::to_string(order);
    return g;
}

SymmetryGroup SymmetryGroup::continuous(const Vec3& axis, std::size_t steps, bool with_flip, const Vec3& flip_axis)
{
    SymmetryGroup g = with_flip ? dihedral(steps, axis, flip_axis) : cyclic(steps, axis);
    g.descriptor = std::string(with_flip ? "Dinf" : "Cinf") + " discretized " + std::to_string(steps);
    return g;
}

SymmetryGroup SymmetryGroup::cube()
{
    SymmetryGroup g;
    g.rotations = closure({Rotation::about_axis(Vec3::UnitZ(), std::numbers::pi / 2),
                           Rotation::about_axis(Vec3::UnitX(), std::numbers::pi / 2)});
    g.descriptor = "cube";
    return g;
}

SymmetryGroup SymmetryGroup::from_rotations(std::vector<Rotation> rotations, std::string descriptor)
{
    SymmetryGroup g;
    g.rotations = std::move(rotations);
    g.descriptor = std::move(descriptor);
    if (!g.contains_identity()) {
        g.rotations.insert(g.rotations.begin(), Rotation{});
    }
    return g;
}

bool SymmetryGroup::contains_identity(double tol) const { return has_element(rotations, Rotation{}, tol); }

bool SymmetryGroup::is_closed(double tol) const
{
    for (const auto& a : rotations) {
        for (const auto& b : rotations) {
            if (!has_element(rotations, a * b, tol)) {
                return false;
            }
        }
    }
    return true;
}

SymmetryGroup symmetry_from_json(const nlohmann::json& j)
{
    try {
        if (j.is_null()) {
            return SymmetryGroup::identity();
        }
        if (j.is_string()) {
            std::istringstream in(j.get<std::string>());
            std::string kind;
            std::string about;
            std::string axis = "z";
            in >> kind >> about >> axis;
            if (kind.empty() || kind == "none" || kind == "identity") {
                return SymmetryGroup::identity();
            }
            if (kind == "cube") {
                return SymmetryGroup::cube();
            }
            const Vec3 a = axis_from_name(axis);
            if (kind == "Cinf" || kind == "C∞") {
                return SymmetryGroup::continuous(a, 360);
            }
            if (kind == "Dinf" || kind == "D∞") {
                return SymmetryGroup::continuous(a, 360, true, default_flip_axis(a));
            }
            if ((kind[0] == 'C' || kind[0] == 'D') && kind.size() > 1) {
                const auto order = static_cast<std::size_t>(std::stoul(kind.substr(1)));
                return kind[0] == 'C' ? SymmetryGroup::cyclic(order, a)
                                      : SymmetryGroup::dihedral(order, a, default_flip_axis(a));
            }
            throw ConfigError("unknown symmetry shorthand '" + j.get<std::string>() + "'");
        }
        const std::string type = j.at("type").get<std::string>();
        if (type == "none") {
            return SymmetryGroup::identity();
        }
        if (type == "cube") {
            return SymmetryGroup::cube();
        }
        if (type == "explicit") {
            std::vector<Rotation> rots;
            for (const auto& q : j.at("quaternions")) {
                rots.push_back(Rotation::from_quaternion(q.at(0).get<double>(), q.at(1).get<double>(),
                                                         q.at(2).get<double>(), q.at(3).get<double>()));
            }
            return SymmetryGroup::from_rotations(std::move(rots), j.value("descriptor", std::string("explicit")));
        }
        const Vec3 axis = j.contains("axis") ? parse_axis(j.at("axis")) : Vec3::UnitZ();
        const Vec3 flip = j.contains("flip_axis") ? parse_axis(j.at("flip_axis")) : default_flip_axis(axis);
        if (type == "cyclic") {
            return SymmetryGroup::cyclic(j.at("order").get<std::size_t>(), axis);
        }
        if (type == "dihedral") {
            return SymmetryGroup::dihedral(j.at("order").get<std::size_t>(), axis, flip);
        }
        if (type == "continuous") {
            return SymmetryGroup::continuous(axis, j.value("steps", std::size_t{360}), j.value("flip", false), flip);
        }
        throw ConfigError("unknown symmetry type '" + type + "'");
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("symmetry definition: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("symmetry definition: ") + e.what());
    }
}

std::map<std::string, SymmetryGroup> symmetry_registry_from_json(const nlohmann::json& j)
{
    if (!j.is_object()) {
        throw ConfigError("symmetry registry must be a JSON object keyed by label");
    }
    std::map<std::string, SymmetryGroup> out;
    for (const auto& [label, def] : j.items()) {
        out.emplace(label, symmetry_from_json(def));
    }
    return out;
}

PoseError relative_pose_error(const Pose& est_i, const Pose& est_j, const Pose& gt_i, const Pose& gt_j,
                              const SymmetryGroup& sym_i, const SymmetryGroup& sym_j)
{
    const Pose gt_rel = compose(inverse(gt_i), gt_j);
    const Eigen::Quaterniond gt_q = gt_rel.rotation.quaternion();
    const Eigen::Quaterniond ri_inv = est_i.rotation.quaternion().conjugate();
    const Eigen::Quaterniond a = ri_inv * est_j.rotation.quaternion();
    const Vec3 rel_t = ri_inv * (est_j.translation - est_i.translation);

    double best_rot = std::numeric_limits<double>::infinity();
    double best_trans = std::numeric_limits<double>::infinity();
    for (const auto& si : sym_i.rotations) {
        const Eigen::Quaterniond si_inv = si.quaternion().conjugate();
        const double trans = (si_inv * rel_t - gt_rel.translation).norm();
        const Eigen::Quaterniond left = gt_q.conjugate() * si_inv * a;
        for (const auto& sj : sym_j.rotations) {
            const Eigen::Quaterniond d = left * sj.quaternion();
            const double rot = 2.0 * std::atan2(d.vec().norm(), std::abs(d.w()));
            if (rot < best_rot || (rot == best_rot && trans < best_trans)) {
                best_rot = rot;
                best_trans = trans;
            }
        }
    }
    return {quantize(best_trans * 1000.0), quantize(best_rot * kRadToDeg)};
}

double lower_median(std::vector<double> values)
{
    if (values.empty()) {
        throw InvalidArgument("median of an empty list");
    }
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
    std::nth_element(values.begin(), mid, values.end());
    return *mid;
}

namespace {

void fill_medians(SceneEvalReport& report)
{
    std::vector<double> t;
    std::vector<double> r;
    for (const auto& p : report.pairs) {
        t.push_back(p.error.translation_mm);
        r.push_back(p.error.rotation_deg);
    }
    report.pair_count = report.pairs.size();
    if (!report.pairs.empty()) {
        report.median_translation_mm = lower_median(t);
        report.median_rotation_deg = lower_median(r);
    }
}

}  // namespace

SceneEvalReport aggregate_scene(const std::map<std::string, Pose>& estimates,
                                const std::map<std::string, Pose>& ground_truth,
                                const std::map<std::string, SymmetryGroup>& symmetries)
{
    std::vector<std::string> labels;
    for (const auto& [label, pose] : estimates) {
        if (ground_truth.find(label) == ground_truth.end()) {
            throw InvalidArgument("object '" + label + "' has no ground truth");
        }
        labels.push_back(label);
    }
    if (labels.size() < 2) {
        throw InvalidArgument("scene evaluation needs at least two matched objects");
    }
    const SymmetryGroup none = SymmetryGroup::identity();
    const auto sym = [&](const std::string& label) -> const SymmetryGroup& {
        const auto it = symmetries.find(label);
        return it == symmetries.end() ? none : it->second;
    };

    SceneEvalReport report;
    report.object_count = labels.size();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        for (std::size_t j = i + 1; j < labels.size(); ++j) {
            const auto& a = labels[i];
            const auto& b = labels[j];
            report.pairs.push_back({a, b,
                                    relative_pose_error(estimates.at(a), estimates.at(b), ground_truth.at(a),
                                                        ground_truth.at(b), sym(a), sym(b))});
        }
    }
    fill_medians(report);
    return report;
}

SceneEvalReport pool_reports(const std::vector<SceneEvalReport>& reports)
{
    SceneEvalReport pooled;
    for (const auto& r : reports) {
        pooled.pairs.insert(pooled.pairs.end(), r.pairs.begin(), r.pairs.end());
        pooled.object_count += r.object_count;
    }
    fill_medians(pooled);
    return pooled;
}

std::string report_csv(const SceneEvalReport& report)
{
    std::ostringstream out;
    out.precision(9);
    out << std::fixed;
    out << "object_i,object_j,translation_mm,rotation_deg\n";
    for (const auto& p : report.pairs) {
        out << p.label_i << ',' << p.label_j << ',' << p.error.translation_mm << ',' << p.error.rotation_deg << '\n';
    }
    return out.str();
}

SceneEvalReport parse_report_csv(const std::string& text)
{
    SceneEvalReport report;
    std::set<std::string> labels;
    for (const auto& f : csv::read(text, "object_i,object_j,translation_mm,rotation_deg")) {
        report.pairs.push_back({f[0], f[1], PoseError{csv::to_double(f[2]), csv::to_double(f[3])}});
        labels.insert(f[0]);
        labels.insert(f[1]);
    }
    report.object_count = labels.size();
    fill_medians(report);
    return report;
}

nlohmann::json to_json(const SceneEvalReport& report)
{
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : report.pairs) {
        pairs.push_back({{"object_i", p.label_i},
                         {"object_j", p.label_j},
                         {"translation_mm", p.error.translation_mm},
                         {"rotation_deg", p.error.rotation_deg}});
    }
    return {{"pairs", pairs},
            {"median_translation_mm", report.median_translation_mm},
            {"median_rotation_deg", report.median_rotation_deg},
            {"object_count", report.object_count},
            {"pair_count", report.pair_count}};
}

}  // namespace fitngp
