#pragma once

#include "fitngp/density_field.hpp"
#include "fitngp/evaluation.hpp"
#include "fitngp/fitting.hpp"
#include "fitngp/init.hpp"
#include "fitngp/object_model.hpp"
#include "fitngp/scene_synth.hpp"

#include <functional>
#include <string>
#include <vector>

namespace fitngp {

/// Surface subsampling and band construction per object model.
struct ModelConfig {
    std::size_t n_s = 1280;
    double delta_s = 0.0;
    double delta_n = 5.0e-3;
    std::size_t k_s = 1;
    std::size_t k_n = 1;
    std::uint64_t seed = 0;
};

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig base = {});

enum class Variant { Full, NoNormalBand, NoRefine };

Variant variant_from_string(const std::string& name);
std::string to_string(Variant v);

struct ObjectTask {
    std::string label;
    TriangleMesh mesh;
    InstanceMask mask;
};

struct ObjectOutcome {
    std::string label;
    std::string status;  // "ok" or "init_failed"
    std::string message;
    FitResult fit;
    Vec3 centroid = Vec3::Zero();
    std::size_t init_points = 0;
    bool weak_init = false;
};

/// {"status", "centroid", ...} plus the FitResult fields when status is "ok".
nlohmann::json to_json(const ObjectOutcome& outcome);
/// {"objects": {label: outcome}}; the format written by `fitngp fit`.
nlohmann::json outcomes_to_json(const std::vector<ObjectOutcome>& outcomes);
/// Inverse of outcomes_to_json (objects come back in label order). Throws ConfigError.
std::vector<ObjectOutcome> outcomes_from_json(const nlohmann::json& j);

using LogSink = std::function<void(const std::string&)>;

/// Renders the reference depth from `init_grid`, back-projects each mask,
/// builds hypotheses around the centroid and fits them against `fit_grid`.
/// Objects whose mask yields no point are reported as "init_failed".
std::vector<ObjectOutcome> fit_objects(const std::vector<ObjectTask>& tasks, const DensityGrid& init_grid,
                                       const DensityGrid& fit_grid, const Camera& camera, const FitConfig& fit,
                                       const ModelConfig& model, std::uint64_t init_seed, Variant variant,
                                       const LogSink& log = {});

/// Same as above with a depth map rendered once by the caller.
std::vector<ObjectOutcome> fit_objects(const std::vector<ObjectTask>& tasks, const DepthMap& depth,
                                       const DensityGrid& fit_grid, const Camera& camera, const FitConfig& fit,
                                       const ModelConfig& model, std::uint64_t init_seed, Variant variant,
                                       const LogSink& log = {});

/// Synthetic benchmark: a 30 mm cube, a 13 mm hex prism, an 8 x 25 mm
/// cylinder and an L bracket inside a 0.4 m cube, placed and oriented per seed.
struct BenchmarkOptions {
    std::uint32_t grid_size = 256;
    double extent = 0.4;
    double noise_correlation = 3.0;
    std::uint32_t camera_size = 192;
    /// Objects rest on z = support_top; with `support` a 300 x 300 x 20 mm slab
    /// fills the space below as clutter.
    double support_top = -0.03;
    bool support = true;
};

SceneSpec make_benchmark_scene(std::uint64_t seed, double noise_std, const BenchmarkOptions& options = {});
std::map<std::string, SymmetryGroup> symmetries_for(const SceneSpec& spec);

struct BenchmarkRun {
    std::uint64_t seed = 0;
    double noise_std = 0.0;
    Variant variant = Variant::Full;
    bool failed = false;
    std::string error;
    std::vector<ObjectOutcome> objects;
    SceneEvalReport report;
};

struct SweepSettings {
    FitConfig fit;
    ModelConfig model;
    std::uint64_t init_seed = 0;
    LogSink log;
};

/// Runs one scene (given by `make_scene(seed)`) at every noise level and
/// variant. Initialization (instance masks and the depth map rendered from
/// the noise-free field) is shared by all levels; fitting uses each level's
/// noisy grid.
std::vector<BenchmarkRun> run_scene_levels(const std::function<SceneSpec(std::uint64_t)>& make_scene,
                                           std::uint64_t seed, const std::vector<double>& noise_levels,
                                           const std::vector<Variant>& variants, const SweepSettings& settings);

struct DegradationLevel {
    double noise_std = 0.0;
    double median_translation_mm = 0.0;
    double median_rotation_deg = 0.0;
    std::size_t failed_runs = 0;
};

struct DegradationTable {
    std::vector<BenchmarkRun> runs;  // level-major, then seed
    std::vector<DegradationLevel> levels;
};

/// For every (noise level, seed): synthesize, initialize from the noise-free
/// grid, fit and evaluate. Per-run failures are recorded, not thrown. Level
/// medians pool the pair errors of all successful seeds.
DegradationTable degradation_sweep(const std::function<SceneSpec(std::uint64_t)>& make_scene,
                                   const std::vector<double>& noise_levels, const std::vector<std::uint64_t>& seeds,
                                   const SweepSettings& settings, Variant variant = Variant::Full);
DegradationTable degradation_sweep(const SceneSpec& spec, const std::vector<double>& noise_levels,
                                   const std::vector<std::uint64_t>& seeds, const SweepSettings& settings,
                                   Variant variant = Variant::Full);

/// Builds the table summary from precomputed runs.
DegradationTable summarize_runs(std::vector<BenchmarkRun> runs, const std::vector<double>& noise_levels);

std::string degradation_csv(const DegradationTable& table);
/// Reads degradation_csv rows back (per-run medians only; pairs are not stored).
std::vector<BenchmarkRun> parse_degradation_csv(const std::string& text);

/// Pixel coordinates of model points under `pose`, projected into `camera`
/// (points behind the camera or outside the image are dropped).
std::vector<std::array<int, 2>> project_points(const std::vector<Vec3>& points, const Pose& pose,
                                               const Camera& camera);

}  // namespace fitngp
