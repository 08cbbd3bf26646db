#include "fitngp/pipeline.hpp"

#include "fitngp/errors.hpp"
#include "csv.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <sstream>

namespace fitngp {

nlohmann::json to_json(const ModelConfig& cfg)
{
    return {{"n_s", cfg.n_s}, {"delta_s", cfg.delta_s}, {"delta_n", cfg.delta_n},
            {"k_s", cfg.k_s}, {"k_n", cfg.k_n},         {"seed", cfg.seed}};
}

ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig base)
{
    try {
        base.n_s = j.value("n_s", base.n_s);
        base.delta_s = j.value("delta_s", base.delta_s);
        base.delta_n = j.value("delta_n", base.delta_n);
        base.k_s = j.value("k_s", base.k_s);
        base.k_n = j.value("k_n", base.k_n);
        base.seed = j.value("seed", base.seed);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("model config: ") + e.what());
    }
    if (base.n_s < 1 || base.k_s < 1 || base.k_n < 1 || !(base.delta_n > 0.0) || !(base.delta_s >= 0.0)) {
        throw ConfigError("model config: n_s, k_s, k_n must be >= 1, delta_n > 0 and delta_s >= 0");
    }
    return base;
}

Variant variant_from_string(const std::string& name)
{
    if (name == "full") {
        return Variant::Full;
    }
    if (name == "no_normal_band") {
        return Variant::NoNormalBand;
    }
    if (name == "no_refine") {
        return Variant::NoRefine;
    }
    throw ConfigError("unknown variant '" + name + "' (expected full, no_normal_band or no_refine)");
}

std::string to_string(Variant v)
{
    switch (v) {
    case Variant::Full:
        return "full";
    case Variant::NoNormalBand:
        return "no_normal_band";
    case Variant::NoRefine:
        return "no_refine";
    }
    return "full";
}

std::vector<ObjectOutcome> fit_objects(const std::vector<ObjectTask>& tasks, const DensityGrid& init_grid,
                                       const DensityGrid& fit_grid, const Camera& camera, const FitConfig& fit,
                                       const ModelConfig& model, std::uint64_t init_seed, Variant variant,
                                       const LogSink& log)
{
    const DepthMap depth = render_depth(init_grid, camera);
    return fit_objects(tasks, depth, fit_grid, camera, fit, model, init_seed, variant, log);
}

std::vector<ObjectOutcome> fit_objects(const std::vector<ObjectTask>& tasks, const DepthMap& depth,
                                       const DensityGrid& fit_grid, const Camera& camera, const FitConfig& fit,
                                       const ModelConfig& model, std::uint64_t init_seed, Variant variant,
                                       const LogSink& log)
{
    FitConfig cfg = fit;
    cfg.use_normal_band = fit.use_normal_band && variant != Variant::NoNormalBand;
    cfg.validate();

    std::vector<ObjectOutcome> out;
    for (const auto& task : tasks) {
        ObjectOutcome o;
        o.label = task.label;
        PartialCloud cloud;
        try {
            cloud = backproject_mask(depth, task.mask, camera);
        } catch (const EmptyMaskError& e) {
            o.status = "init_failed";
            o.message = e.what();
            if (log) {
                log("object " + task.label + ": init_failed (" + o.message + ")");
            }
            out.push_back(std::move(o));
            continue;
        }
        o.centroid = cloud.centroid;
        o.init_points = cloud.points.size();
        o.weak_init = cloud.weak;
        if (cloud.weak && log) {
            log("object " + task.label + ": warning, only " + std::to_string(cloud.points.size()) +
                " valid mask pixels");
        }

        const SampledModel sampled = sample_surface(task.mesh, model.n_s, model.seed, task.label);
        const BandPoints band = band_points(sampled, model.delta_s, model.delta_n, model.k_s, model.k_n);
        const HypothesisSet hyps = make_hypotheses(cloud.centroid, cfg.n_hypotheses, init_seed, task.label);

        ProgressCallback progress;
        if (log) {
            progress = [&](std::size_t it, double best) {
                std::ostringstream line;
                line << "object " << task.label << " iter " << it << " best_fitness " << best;
                log(line.str());
            };
        }
        o.fit = variant == Variant::NoRefine ? best_initial_hypothesis(hyps.poses, band, fit_grid, cfg)
                                             : fit_object(hyps.poses, band, fit_grid, cfg, progress);
        o.status = "ok";
        out.push_back(std::move(o));
    }
    return out;
}

SceneSpec make_benchmark_scene(std::uint64_t seed, double noise_std, const BenchmarkOptions& options)
{
    SceneSpec spec;
    spec.dims = GridDims{options.grid_size, options.grid_size, options.grid_size};
    spec.bbox_min = Vec3::Constant(-0.5 * options.extent);
    spec.bbox_max = Vec3::Constant(0.5 * options.extent);
    spec.sharpness = 0.0;  // one voxel
    spec.sigma_in = 8.0;
    spec.sigma_out = -8.0;
    spec.noise_std = noise_std;
    spec.noise_correlation = options.noise_correlation;
    spec.seed = seed;

    Rng rng(seed * 0x9E3779B97F4A7C15ULL + 17);
    const std::array<Eigen::Vector2d, 4> slots = {Eigen::Vector2d(-0.035, -0.035), Eigen::Vector2d(0.035, -0.035),
                                                  Eigen::Vector2d(-0.035, 0.035), Eigen::Vector2d(0.035, 0.035)};
    struct Item {
        const char* id;
        TriangleMesh mesh;
        const char* symmetry;
    };
    std::vector<Item> items;
    items.push_back({"cube", make_box(Vec3::Constant(0.030)), "cube"});
    items.push_back({"hex_prism", make_hex_prism(0.013, 0.0065), "D6 about z"});
    items.push_back({"cylinder", make_cylinder(0.004, 0.025), "Dinf about z"});
    items.push_back({"l_bracket", make_l_bracket(0.030, 0.020, 0.005, 0.015), "none"});
    for (std::size_t k = 0; k < items.size(); ++k) {
        SceneObject obj;
        obj.id = items[k].id;
        obj.mesh = std::move(items[k].mesh);
        obj.symmetry = items[k].symmetry;
        const double jx = 0.01 * (uniform01(rng) - 0.5);
        const double jy = 0.01 * (uniform01(rng) - 0.5);
        obj.pose.rotation = random_rotation(rng);
        // Rest the lowest vertex on the support top.
        double min_z = std::numeric_limits<double>::infinity();
        for (const Vec3& v : obj.mesh.vertices) {
            min_z = std::min(min_z, obj.pose.rotation.apply(v).z());
        }
        obj.pose.translation = Vec3(slots[k].x() + jx, slots[k].y() + jy, options.support_top - min_z);
        spec.objects.push_back(std::move(obj));
    }
    if (options.support) {
        SceneObject table;
        table.id = "support";
        table.mesh = make_box(Vec3(0.30, 0.30, 0.02));
        table.pose.translation = Vec3(0.0, 0.0, options.support_top - 0.01);
        table.distractor = true;
        spec.objects.push_back(std::move(table));
    }
    spec.camera = default_reference_camera(spec.bbox_min, spec.bbox_max, options.camera_size);
    spec.validate();
    return spec;
}

std::map<std::string, SymmetryGroup> symmetries_for(const SceneSpec& spec)
{
    std::map<std::string, SymmetryGroup> out;
    for (const auto& obj : spec.objects) {
        if (obj.distractor) {
            continue;
        }
        out.emplace(obj.id, symmetry_from_json(obj.symmetry.empty() ? nlohmann::json() : nlohmann::json(obj.symmetry)));
    }
    return out;
}

namespace {

SceneEvalReport evaluate_outcomes(const std::vector<ObjectOutcome>& outcomes, const SceneSpec& spec,
                                  const std::map<std::string, SymmetryGroup>& symmetries)
{
    std::map<std::string, Pose> estimates;
    std::map<std::string, Pose> gt;
    for (const auto& o : outcomes) {
        if (o.status == "ok") {
            estimates.emplace(o.label, o.fit.pose);
        }
    }
    for (const auto& obj : spec.objects) {
        if (!obj.distractor) {
            gt.emplace(obj.id, obj.pose);
        }
    }
    return aggregate_scene(estimates, gt, symmetries);
}

}  // namespace

std::vector<BenchmarkRun> run_scene_levels(const std::function<SceneSpec(std::uint64_t)>& make_scene,
                                           std::uint64_t seed, const std::vector<double>& noise_levels,
                                           const std::vector<Variant>& variants, const SweepSettings& settings)
{
    std::vector<BenchmarkRun> runs;
    const auto fail_all = [&](const std::string& why) {
        for (double level : noise_levels) {
            for (auto v : variants) {
                BenchmarkRun r;
                r.seed = seed;
                r.noise_std = level;
                r.variant = v;
                r.failed = true;
                r.error = why;
                runs.push_back(std::move(r));
            }
        }
    };

    SceneSpec spec;
    DensityGrid clean = DensityGrid::filled({1, 1, 1}, Vec3::Zero(), Vec3::Ones(), 0.0f);
    std::vector<ObjectTask> tasks;
    Camera camera;
    std::map<std::string, SymmetryGroup> symmetries;
    DepthMap depth;
    try {
        spec = make_scene(seed);
        spec.seed = seed;
        clean = voxelize_clean(spec);
        camera = spec.camera ? *spec.camera : default_reference_camera(spec.bbox_min, spec.bbox_max);
        const auto masks = render_instance_masks(spec.objects, camera);
        for (std::size_t k = 0; k < spec.objects.size(); ++k) {
            if (spec.objects[k].distractor) {
                continue;
            }
            tasks.push_back({spec.objects[k].id, spec.objects[k].mesh, masks[k]});
        }
        symmetries = symmetries_for(spec);
        depth = render_depth(clean, camera);
    } catch (const std::exception& e) {
        fail_all(e.what());
        return runs;
    }

    for (double level : noise_levels) {
        SceneSpec noisy = spec;
        noisy.noise_std = level;
        std::optional<DensityGrid> grid;
        std::string level_error;
        try {
            grid = add_field_noise(clean, noisy);
        } catch (const std::exception& e) {
            level_error = e.what();
        }
        for (auto variant : variants) {
            BenchmarkRun r;
            r.seed = seed;
            r.noise_std = level;
            r.variant = variant;
            try {
                if (!grid) {
                    throw std::runtime_error(level_error);
                }
                r.objects = fit_objects(tasks, depth, *grid, camera, settings.fit, settings.model, settings.init_seed,
                                        variant, settings.log);
                r.report = evaluate_outcomes(r.objects, spec, symmetries);
            } catch (const std::exception& e) {
                r.failed = true;
                r.error = e.what();
            }
            if (settings.log) {
                std::ostringstream line;
                line << "seed " << seed << " noise " << level << " variant " << to_string(variant);
                if (r.failed) {
                    line << " failed: " << r.error;
                } else {
                    line << " median_trans_mm " << r.report.median_translation_mm << " median_rot_deg "
                         << r.report.median_rotation_deg;
                }
                settings.log(line.str());
            }
            runs.push_back(std::move(r));
        }
    }
    return runs;
}

DegradationTable summarize_runs(std::vector<BenchmarkRun> runs, const std::vector<double>& noise_levels)
{
    DegradationTable table;
    for (double level : noise_levels) {
        DegradationLevel summary;
        summary.noise_std = level;
        std::vector<SceneEvalReport> reports;
        for (const auto& r : runs) {
            if (r.noise_std != level) {
                continue;
            }
            if (r.failed) {
                ++summary.failed_runs;
            } else {
                reports.push_back(r.report);
            }
        }
        if (!reports.empty()) {
            const auto pooled = pool_reports(reports);
            summary.median_translation_mm = pooled.median_translation_mm;
            summary.median_rotation_deg = pooled.median_rotation_deg;
        } else {
            summary.median_translation_mm = std::numeric_limits<double>::quiet_NaN();
            summary.median_rotation_deg = std::numeric_limits<double>::quiet_NaN();
        }
        table.levels.push_back(summary);
    }
    table.runs = std::move(runs);
    return table;
}

DegradationTable degradation_sweep(const std::function<SceneSpec(std::uint64_t)>& make_scene,
                                   const std::vector<double>& noise_levels, const std::vector<std::uint64_t>& seeds,
                                   const SweepSettings& settings, Variant variant)
{
    if (noise_levels.size() < 2 || seeds.size() < 2) {
        throw InvalidArgument("degradation_sweep needs at least two noise levels and two seeds");
    }
    // Seed-major execution reuses the clean grid and the initialization across levels.
    std::vector<std::vector<BenchmarkRun>> per_seed;
    for (auto seed : seeds) {
        per_seed.push_back(run_scene_levels(make_scene, seed, noise_levels, {variant}, settings));
    }
    std::vector<BenchmarkRun> ordered;
    for (std::size_t l = 0; l < noise_levels.size(); ++l) {
        for (auto& runs : per_seed) {
            ordered.push_back(runs[l]);
        }
    }
    return summarize_runs(std::move(ordered), noise_levels);
}

DegradationTable degradation_sweep(const SceneSpec& spec, const std::vector<double>& noise_levels,
                                   const std::vector<std::uint64_t>& seeds, const SweepSettings& settings,
                                   Variant variant)
{
    return degradation_sweep([spec](std::uint64_t) { return spec; }, noise_levels, seeds, settings, variant);
}

std::string degradation_csv(const DegradationTable& table)
{
    std::ostringstream out;
    out.precision(6);
    out << std::fixed;
    out << "noise_std,seed,variant,status,median_translation_mm,median_rotation_deg\n";
    for (const auto& r : table.runs) {
        out << r.noise_std << ',' << r.seed << ',' << to_string(r.variant) << ',' << (r.failed ? "failed" : "ok")
            << ',' << r.report.median_translation_mm << ',' << r.report.median_rotation_deg << '\n';
    }
    return out.str();
}

std::vector<BenchmarkRun> parse_degradation_csv(const std::string& text)
{
    std::vector<BenchmarkRun> runs;
    for (const auto& f :
         csv::read(text, "noise_std,seed,variant,status,median_translation_mm,median_rotation_deg")) {
        BenchmarkRun r;
        r.noise_std = csv::to_double(f[0]);
        r.seed = csv::to_u64(f[1]);
        try {
            r.variant = variant_from_string(f[2]);
        } catch (const ConfigError& e) {
            throw FormatError(e.what(), -1);
        }
        if (f[3] != "ok" && f[3] != "failed") {
            throw FormatError("unknown run status '" + f[3] + "'", -1);
        }
        r.failed = f[3] == "failed";
        r.report.median_translation_mm = csv::to_double(f[4]);
        r.report.median_rotation_deg = csv::to_double(f[5]);
        runs.push_back(std::move(r));
    }
    return runs;
}

nlohmann::json to_json(const ObjectOutcome& outcome)
{
    nlohmann::json j = {{"status", outcome.status},
                        {"centroid", to_json(outcome.centroid)},
                        {"init_points", outcome.init_points},
                        {"weak_init", outcome.weak_init}};
    if (!outcome.message.empty()) {
        j["message"] = outcome.message;
    }
    if (outcome.status == "ok") {
        j.update(to_json(outcome.fit));
    }
    return j;
}

nlohmann::json outcomes_to_json(const std::vector<ObjectOutcome>& outcomes)
{
    nlohmann::json objects = nlohmann::json::object();
    for (const auto& o : outcomes) {
        objects[o.label] = to_json(o);
    }
    return {{"objects", objects}};
}

std::vector<ObjectOutcome> outcomes_from_json(const nlohmann::json& j)
{
    std::vector<ObjectOutcome> out;
    try {
        for (const auto& [label, entry] : j.at("objects").items()) {
            ObjectOutcome o;
            o.label = label;
            o.status = entry.at("status").get<std::string>();
            o.message = entry.value("message", std::string{});
            o.centroid = vec3_from_json(entry.at("centroid"));
            o.init_points = entry.value("init_points", std::size_t{0});
            o.weak_init = entry.value("weak_init", false);
            if (o.status == "ok") {
                o.fit = fit_result_from_json(entry);
            } else if (o.status != "init_failed") {
                throw ConfigError("object '" + label + "': unknown status '" + o.status + "'");
            }
            out.push_back(std::move(o));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("results: ") + e.what());
    }
    return out;
}

std::vector<std::array<int, 2>> project_points(const std::vector<Vec3>& points, const Pose& pose,
                                               const Camera& camera)
{
    const Pose world_to_cam = inverse(camera.pose);
    const Pose object_to_cam = compose(world_to_cam, pose);
    std::vector<std::array<int, 2>> out;
    for (const auto& p : points) {
        const Vec3 c = pose_apply(object_to_cam, p);
        if (c.z() <= 0.0) {
            continue;
        }
        const double u = std::round(camera.fx * c.x() / c.z() + camera.cx);
        const double v = std::round(camera.fy * c.y() / c.z() + camera.cy);
        if (u < 0.0 || v < 0.0 || u >= camera.width || v >= camera.height) {
            continue;
        }
        out.push_back({static_cast<int>(u), static_cast<int>(v)});
    }
    return out;
}

}  // namespace fitngp
