#pragma once

#include "fitngp/geometry.hpp"

#include <map>
#include <string>
#include <vector>

namespace fitngp {

/// Rotations of the canonical object frame that leave the shape unchanged.
/// Continuous symmetries are stored discretized.
struct SymmetryGroup {
    std::vector<Rotation> rotations{Rotation{}};
    std::string descriptor = "none";

    static SymmetryGroup identity();
    static SymmetryGroup cyclic(std::size_t order, const Vec3& axis);
    /// Cyclic group about `axis` plus the half-turns about `flip_axis` (perpendicular).
    static SymmetryGroup dihedral(std::size_t order, const Vec3& axis, const Vec3& flip_axis);
    /// Rotational symmetry about `axis` discretized in `steps` equal increments.
    static SymmetryGroup continuous(const Vec3& axis, std::size_t steps = 360, bool with_flip = false,
                                    const Vec3& flip_axis = Vec3::UnitX());
    /// The 24 proper rotations of a cube aligned with the frame axes.
    static SymmetryGroup cube();
    static SymmetryGroup from_rotations(std::vector<Rotation> rotations, std::string descriptor);

    bool contains_identity(double tol = 1e-9) const;
    /// Every pairwise product is (within tol) an element of the list.
    bool is_closed(double tol = 1e-9) const;
};

/// Accepts shorthands ("none", "cube", "C6 about z", "D6 about z",
/// "Cinf about z", "Dinf about z") or objects with a "type" field:
/// cyclic / dihedral / continuous / cube / none / explicit (quaternion list).
SymmetryGroup symmetry_from_json(const nlohmann::json& j);
std::map<std::string, SymmetryGroup> symmetry_registry_from_json(const nlohmann::json& j);

struct PoseError {
    double translation_mm = 0.0;
    double rotation_deg = 0.0;
};

/// Relative-pose error of the pair (i, j): the estimated transform from i to j
/// against the ground-truth one, minimized over the estimates' symmetry
/// elements. The assignment with the smallest rotation error is reported,
/// together with its translation error. Errors are quantized to 1e-9 units
/// so that symmetric re-expressions of an estimate report identical values.
PoseError relative_pose_error(const Pose& est_i, const Pose& est_j, const Pose& gt_i, const Pose& gt_j,
                              const SymmetryGroup& sym_i, const SymmetryGroup& sym_j);

struct PairError {
    std::string label_i;
    std::string label_j;
    PoseError error;
};

struct SceneEvalReport {
    std::vector<PairError> pairs;
    double median_translation_mm = 0.0;
    double median_rotation_deg = 0.0;
    std::size_t object_count = 0;
    std::size_t pair_count = 0;
};

/// Lower of the two middle values for even counts.
double lower_median(std::vector<double> values);

/// Evaluates all unordered pairs of objects present in both maps (label
/// order). Objects without a symmetry entry use the identity group. Throws
/// InvalidArgument for estimate labels absent from the ground truth or when
/// fewer than two objects match.
SceneEvalReport aggregate_scene(const std::map<std::string, Pose>& estimates,
                                const std::map<std::string, Pose>& ground_truth,
                                const std::map<std::string, SymmetryGroup>& symmetries);

/// Medians over the union of several reports' pair errors.
SceneEvalReport pool_reports(const std::vector<SceneEvalReport>& reports);

std::string report_csv(const SceneEvalReport& report);
/// Reads report_csv output back; medians are recomputed from the pairs.
SceneEvalReport parse_report_csv(const std::string& text);
nlohmann::json to_json(const SceneEvalReport& report);

}  // namespace fitngp
