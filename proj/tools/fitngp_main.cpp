#include "fitngp/errors.hpp"
#include "fitngp/parallel.hpp"
#include "fitngp/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace fitngp;
using nlohmann::json;

namespace {

constexpr int kExitNothingFitted = 1;

std::string read_text_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text)) {
        throw IoError("cannot write " + path.string());
    }
}

json read_json_file(const fs::path& path)
{
    if (!fs::exists(path)) {
        throw ConfigError("file not found: " + path.string());
    }
    try {
        return json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what(), static_cast<std::int64_t>(e.byte));
    }
}

void write_json_file(const fs::path& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

/// Applies "a.b.c=value"; the value is parsed as JSON when possible, else kept as a string.
void apply_override(json& config, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override must look like key.path=value: '" + assignment + "'");
    }
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) {
        value = raw;
    }
    json* node = &config;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) {
            throw ConfigError("empty key segment in override '" + assignment + "'");
        }
        if (!node->is_object()) {
            throw ConfigError("override '" + assignment + "' descends into a non-object");
        }
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        if (node->is_null()) {
            *node = json::object();
        }
        start = dot + 1;
    }
}

fs::path resolve(const fs::path& base, const std::string& p)
{
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

fs::path existing(const fs::path& base, const json& value, const std::string& what)
{
    if (!value.is_string()) {
        throw ConfigError(what + " must be a path string");
    }
    const fs::path path = resolve(base, value.get<std::string>());
    if (!fs::exists(path)) {
        throw ConfigError(what + " not found: " + path.string());
    }
    return path;
}

Camera camera_from_entry(const fs::path& base, const json& entry, const std::string& what)
{
    if (entry.is_object()) {
        return camera_from_json(entry);
    }
    return camera_from_json(read_json_file(existing(base, entry, what)));
}

LogSink stderr_log()
{
    return [](const std::string& line) { std::cerr << "fitngp: " << line << '\n'; };
}

std::string fixed3(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

// ---------------------------------------------------------------- gen-scene

SceneSpec load_scene(const fs::path& spec_path, std::optional<double> noise, std::optional<std::uint64_t> seed)
{
    const json j = read_json_file(spec_path);
    SceneSpec spec;
    if (j.contains("benchmark")) {
        const json& b = j.at("benchmark");
        BenchmarkOptions options;
        try {
            options.grid_size = b.value("grid_size", options.grid_size);
            options.extent = b.value("extent", options.extent);
            options.noise_correlation = b.value("noise_correlation", options.noise_correlation);
            options.camera_size = b.value("camera_size", options.camera_size);
            options.support = b.value("support", options.support);
            spec = make_benchmark_scene(seed.value_or(b.value("seed", std::uint64_t{0})),
                                        noise.value_or(b.value("noise_std", 1.0)), options);
        } catch (const json::exception& e) {
            throw ConfigError(std::string("benchmark: ") + e.what());
        }
        return spec;
    }
    spec = scene_spec_from_json(j, spec_path.parent_path());
    if (noise) {
        spec.noise_std = *noise;
    }
    if (seed) {
        spec.seed = *seed;
    }
    try {
        spec.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    return spec;
}

void write_scene_dir(const SceneSpec& spec, const fs::path& grid_path, const fs::path& dir)
{
    fs::create_directories(dir / "masks");
    fs::create_directories(dir / "meshes");
    const fs::path root = fs::absolute(dir);
    const auto rel = [&](const fs::path& p) { return fs::relative(fs::absolute(p), root).generic_string(); };
    const Camera camera = spec.camera ? *spec.camera : default_reference_camera(spec.bbox_min, spec.bbox_max);
    write_json_file(dir / "camera.json", to_json(camera));
    const auto masks = render_instance_masks(spec.objects, camera);

    json symmetries = json::object();
    json objects = json::array();
    for (std::size_t k = 0; k < spec.objects.size(); ++k) {
        const auto& obj = spec.objects[k];
        if (obj.distractor) {
            continue;
        }
        const fs::path mask_path = dir / "masks" / (obj.id + ".pgm");
        save_mask_pgm(masks[k], mask_path);
        fs::path mesh_path = obj.mesh_path;
        if (mesh_path.empty()) {
            mesh_path = dir / "meshes" / (obj.id + ".obj");
            save_obj(obj.mesh, mesh_path);
        }
        symmetries[obj.id] = obj.symmetry.empty() ? "none" : obj.symmetry;
        objects.push_back({{"id", obj.id},
                           {"mesh", rel(mesh_path)},
                           {"mask", rel(mask_path)}});
    }
    write_json_file(dir / "symmetries.json", symmetries);

    FitConfig fit;
    fit.beta = spec.matched_beta();
    const json config = {{"grid", rel(grid_path)},
                         {"camera", "camera.json"},
                         {"objects", objects},
                         {"fit", to_json(fit)},
                         {"model", to_json(ModelConfig{})},
                         {"init", {{"seed", 0}}},
                         {"output_dir", "fit_out"}};
    write_json_file(dir / "fit.json", config);
}

int cmd_gen_scene(const fs::path& spec_path, const fs::path& grid_path, const fs::path& gt_path,
                  const std::optional<fs::path>& scene_dir, std::optional<double> noise,
                  std::optional<std::uint64_t> seed)
{
    const SceneSpec spec = load_scene(spec_path, noise, seed);
    const DensityGrid grid = voxelize_scene(spec);
    if (grid_path.has_parent_path()) {
        fs::create_directories(grid_path.parent_path());
    }
    save_grid(grid, grid_path);
    write_json_file(gt_path, ground_truth_json(spec));
    if (scene_dir) {
        write_scene_dir(spec, grid_path, *scene_dir);
    }
    return 0;
}

// ---------------------------------------------------------------------- fit

struct FitSetup {
    fs::path base;
    fs::path output_dir;
    DensityGrid grid = DensityGrid::filled({1, 1, 1}, Vec3::Zero(), Vec3::Ones(), 0.0f);
    Camera camera;
    std::optional<DepthMap> depth;
    std::vector<ObjectTask> tasks;
    FitConfig fit;
    ModelConfig model;
    std::uint64_t init_seed = 0;
    Variant variant = Variant::Full;
    bool overlay = true;
};

TriangleMesh mesh_from_entry(const fs::path& base, const json& o, const std::string& id)
{
    if (!o.contains("mesh")) {
        throw ConfigError("object '" + id + "' needs a 'mesh' path");
    }
    const fs::path path = existing(base, o.at("mesh"), "object '" + id + "' mesh");
    try {
        return load_mesh(path);
    } catch (const InvalidArgument& e) {
        throw FormatError(path.string() + ": " + e.what(), -1);
    }
}

FitSetup load_fit_setup(const fs::path& config_path, const std::vector<std::string>& overrides,
                        const std::optional<fs::path>& out_override)
{
    json config = read_json_file(config_path);
    for (const auto& o : overrides) {
        apply_override(config, o);
    }
    FitSetup s;
    s.base = config_path.parent_path();
    try {
        s.fit = fit_config_from_json(config.value("fit", json::object()));
        s.model = model_config_from_json(config.value("model", json::object()));
        const json init = config.value("init", json::object());
        if (init.contains("n_h")) {
            s.fit.n_hypotheses = init.at("n_h").get<std::size_t>();
            s.fit.validate();
        }
        s.init_seed = init.value("seed", std::uint64_t{0});
        s.variant = variant_from_string(config.value("variant", std::string("full")));
        s.overlay = config.value("overlay", true);
        s.output_dir = out_override ? *out_override
                                    : resolve(s.base, config.value("output_dir", std::string("fit_out")));

        if (!config.contains("grid")) {
            throw ConfigError("config needs a 'grid' path");
        }
        const fs::path grid_path = existing(s.base, config.at("grid"), "grid");

        if (config.contains("cameras")) {
            std::vector<Camera> cams;
            for (const auto& c : config.at("cameras")) {
                cams.push_back(camera_from_entry(s.base, c, "camera"));
            }
            if (cams.empty()) {
                throw ConfigError("'cameras' is empty");
            }
            const json view = init.value("reference_view", json("auto"));
            std::size_t index = 0;
            if (view.is_string() && view.get<std::string>() == "auto") {
                index = select_reference_view(cams);
            } else if (view.is_number_unsigned()) {
                index = view.get<std::size_t>();
                if (index >= cams.size()) {
                    throw ConfigError("init.reference_view out of range");
                }
            } else {
                throw ConfigError("init.reference_view must be \"auto\" or a camera index");
            }
            s.camera = cams[index];
        } else if (config.contains("camera")) {
            s.camera = camera_from_entry(s.base, config.at("camera"), "camera");
        } else {
            throw ConfigError("config needs a 'camera' (or 'cameras')");
        }
        s.camera.validate();

        std::vector<std::pair<std::string, fs::path>> mask_paths;
        if (!config.contains("objects") || !config.at("objects").is_array() || config.at("objects").empty()) {
            throw ConfigError("config needs a non-empty 'objects' list");
        }
        for (const auto& o : config.at("objects")) {
            const std::string id = o.at("id").get<std::string>();
            if (!o.contains("mask")) {
                throw ConfigError("object '" + id + "' needs a 'mask' path");
            }
            mask_paths.emplace_back(id, existing(s.base, o.at("mask"), "object '" + id + "' mask"));
            ObjectTask task;
            task.label = id;
            task.mesh = mesh_from_entry(s.base, o, id);
            s.tasks.push_back(std::move(task));
        }
        std::optional<fs::path> depth_path;
        if (config.contains("depth")) {
            depth_path = existing(s.base, config.at("depth"), "depth");
        }

        // All paths validated; now parse the binary inputs.
        s.grid = load_grid(grid_path);
        for (std::size_t k = 0; k < s.tasks.size(); ++k) {
            s.tasks[k].mask = load_mask_pgm(mask_paths[k].second, mask_paths[k].first);
        }
        if (depth_path) {
            s.depth = load_depth(*depth_path);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("fit config: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    return s;
}

void write_overlay(const FitSetup& s, const std::vector<ObjectOutcome>& outcomes)
{
    json points = json::object();
    std::vector<std::uint8_t> raster(std::size_t{s.camera.width} * s.camera.height, 0);
    for (std::size_t k = 0; k < outcomes.size(); ++k) {
        const auto& o = outcomes[k];
        if (o.status != "ok") {
            continue;
        }
        const SampledModel sampled = sample_surface(s.tasks[k].mesh, s.model.n_s, s.model.seed, o.label);
        const auto pixels = project_points(sampled.points, o.fit.pose, s.camera);
        json list = json::array();
        const auto level = static_cast<std::uint8_t>(255 * (k + 1) / outcomes.size());
        for (const auto& px : pixels) {
            list.push_back({px[0], px[1]});
            raster[static_cast<std::size_t>(px[1]) * s.camera.width + static_cast<std::size_t>(px[0])] = level;
        }
        points[o.label] = list;
    }
    write_json_file(s.output_dir / "overlay.json", points);

    std::ostringstream pgm;
    pgm << "P5\n" << s.camera.width << ' ' << s.camera.height << "\n255\n";
    pgm.write(reinterpret_cast<const char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
    write_text_file(s.output_dir / "overlay.pgm", pgm.str());
}

int cmd_fit(const fs::path& config_path, const std::vector<std::string>& overrides,
            const std::optional<fs::path>& out_override)
{
    FitSetup s = load_fit_setup(config_path, overrides, out_override);
    const LogSink log = stderr_log();
    const std::vector<ObjectOutcome> outcomes =
        s.depth ? fit_objects(s.tasks, *s.depth, s.grid, s.camera, s.fit, s.model, s.init_seed, s.variant, log)
                : fit_objects(s.tasks, s.grid, s.grid, s.camera, s.fit, s.model, s.init_seed, s.variant, log);

    json results = outcomes_to_json(outcomes);
    results["config"] = {{"fit", to_json(s.fit)},
                         {"model", to_json(s.model)},
                         {"init_seed", s.init_seed},
                         {"variant", to_string(s.variant)}};
    fs::create_directories(s.output_dir);
    write_json_file(s.output_dir / "results.json", results);
    if (s.overlay) {
        write_overlay(s, outcomes);
    }

    std::size_t fitted = 0;
    for (const auto& o : outcomes) {
        if (o.status == "ok") {
            ++fitted;
            std::cout << o.label << " ok fitness=" << o.fit.fitness << " hypothesis=" << o.fit.hypothesis_index
                      << '\n';
        } else {
            std::cout << o.label << ' ' << o.status << ": " << o.message << '\n';
        }
    }
    return fitted > 0 ? 0 : kExitNothingFitted;
}

// --------------------------------------------------------------------- eval

int cmd_eval(const fs::path& results_path, const fs::path& gt_path, const std::optional<fs::path>& sym_path,
             const std::optional<fs::path>& report_path, const std::optional<fs::path>& json_path)
{
    const auto outcomes = outcomes_from_json(read_json_file(results_path));
    const json gt_json = read_json_file(gt_path);
    const auto gt = ground_truth_poses_from_json(gt_json);

    std::map<std::string, SymmetryGroup> symmetries;
    if (sym_path) {
        symmetries = symmetry_registry_from_json(read_json_file(*sym_path));
    } else {
        for (const auto& [label, entry] : gt_json.at("objects").items()) {
            if (entry.contains("symmetry")) {
                symmetries.emplace(label, symmetry_from_json(entry.at("symmetry")));
            }
        }
    }

    std::map<std::string, Pose> estimates;
    for (const auto& o : outcomes) {
        if (gt.find(o.label) == gt.end()) {
            throw ConfigError("results reference unknown object '" + o.label + "'");
        }
        if (o.status == "ok") {
            estimates.emplace(o.label, o.fit.pose);
        }
    }
    SceneEvalReport report;
    try {
        report = aggregate_scene(estimates, gt, symmetries);
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }

    const fs::path csv_path = report_path ? *report_path : results_path.parent_path() / "report.csv";
    write_text_file(csv_path, report_csv(report));
    if (json_path) {
        write_json_file(*json_path, to_json(report));
    }
    std::cout << "median_trans_mm=" << fixed3(report.median_translation_mm)
              << " median_rot_deg=" << fixed3(report.median_rotation_deg) << '\n';
    return 0;
}

// ------------------------------------------------------------------- ablate

int cmd_ablate(const fs::path& config_path, const std::vector<std::string>& variant_names,
               const std::vector<std::string>& overrides, const std::optional<fs::path>& out_path)
{
    json config = read_json_file(config_path);
    for (const auto& o : overrides) {
        apply_override(config, o);
    }

    std::vector<Variant> variants;
    for (const auto& name : variant_names) {
        if (name == "all") {
            variants = {Variant::Full, Variant::NoNormalBand, Variant::NoRefine};
            break;
        }
        variants.push_back(variant_from_string(name));
    }

    BenchmarkOptions options;
    std::vector<std::uint64_t> seeds;
    std::vector<double> levels;
    SweepSettings settings;
    bool beta_given = false;
    try {
        const json b = config.value("benchmark", json::object());
        options.grid_size = b.value("grid_size", options.grid_size);
        options.extent = b.value("extent", options.extent);
        options.noise_correlation = b.value("noise_correlation", options.noise_correlation);
        options.camera_size = b.value("camera_size", options.camera_size);
        options.support = b.value("support", options.support);
        if (config.contains("seeds")) {
            seeds = config.at("seeds").get<std::vector<std::uint64_t>>();
        } else {
            for (std::uint64_t s = 0; s < config.value("n_seeds", std::uint64_t{8}); ++s) {
                seeds.push_back(s);
            }
        }
        if (config.contains("noise_levels")) {
            levels = config.at("noise_levels").get<std::vector<double>>();
        } else {
            levels = {config.value("noise_std", 1.0)};
        }
        const json fit = config.value("fit", json::object());
        beta_given = fit.contains("beta");
        settings.fit = fit_config_from_json(fit);
        settings.model = model_config_from_json(config.value("model", json::object()));
        settings.init_seed = config.value("init", json::object()).value("seed", std::uint64_t{0});
    } catch (const json::exception& e) {
        throw ConfigError(std::string("ablate config: ") + e.what());
    }
    if (seeds.empty() || levels.empty()) {
        throw ConfigError("ablate config: need at least one seed and one noise level");
    }
    if (!beta_given) {
        settings.fit.beta = make_benchmark_scene(seeds.front(), 0.0, options).matched_beta();
    }
    settings.log = stderr_log();

    std::vector<BenchmarkRun> runs;
    for (const auto seed : seeds) {
        auto part = run_scene_levels([&](std::uint64_t s) { return make_benchmark_scene(s, 0.0, options); }, seed,
                                     levels, variants, settings);
        runs.insert(runs.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    DegradationTable table;
    table.runs = std::move(runs);
    const std::string text = degradation_csv(table);
    std::cout << text;
    if (out_path) {
        write_text_file(*out_path, text);
    }
    for (auto v : variants) {
        for (double level : levels) {
            std::vector<SceneEvalReport> reports;
            std::size_t failed = 0;
            for (const auto& r : table.runs) {
                if (r.variant == v && r.noise_std == level) {
                    r.failed ? void(++failed) : reports.push_back(r.report);
                }
            }
            if (!reports.empty()) {
                const auto pooled = pool_reports(reports);
                std::cerr << "fitngp: variant " << to_string(v) << " noise " << level << " pooled median_trans_mm="
                          << fixed3(pooled.median_translation_mm)
                          << " median_rot_deg=" << fixed3(pooled.median_rotation_deg) << " failed_runs=" << failed
                          << '\n';
            }
        }
    }
    return 0;
}

// ------------------------------------------------------ render-depth, grid-info

int cmd_render_depth(const fs::path& grid_path, const fs::path& camera_path, const fs::path& out,
                     const std::optional<fs::path>& pgm, std::optional<double> step)
{
    if (!fs::exists(grid_path)) {
        throw ConfigError("grid not found: " + grid_path.string());
    }
    const Camera camera = camera_from_json(read_json_file(camera_path));
    const DensityGrid grid = load_grid(grid_path);
    RenderOptions options;
    if (step) {
        options.step = *step;
    }
    const DepthMap depth = render_depth(grid, camera, options);
    if (out.has_parent_path()) {
        fs::create_directories(out.parent_path());
    }
    save_depth(depth, out);
    if (pgm) {
        save_depth_pgm16(depth, *pgm);
    }
    std::size_t hits = 0;
    for (float d : depth.depth) {
        hits += std::isfinite(d) ? 1 : 0;
    }
    std::cout << "pixels=" << depth.depth.size() << " surface_pixels=" << hits << '\n';
    return 0;
}

int cmd_grid_info(const fs::path& grid_path, bool as_json)
{
    if (!fs::exists(grid_path)) {
        throw ConfigError("grid not found: " + grid_path.string());
    }
    const DensityGrid grid = load_grid(grid_path);
    const auto sigma = grid.sigma();
    double lo = sigma.empty() ? 0.0 : sigma[0];
    double hi = lo;
    double sum = 0.0;
    for (float v : sigma) {
        lo = std::min(lo, double{v});
        hi = std::max(hi, double{v});
        sum += v;
    }
    const auto& d = grid.dims();
    const json info = {{"dims", {d.x, d.y, d.z}},
                       {"bbox_min", to_json(grid.bbox_min())},
                       {"bbox_max", to_json(grid.bbox_max())},
                       {"cell_size", to_json(grid.cell_size())},
                       {"sigma_min", lo},
                       {"sigma_max", hi},
                       {"sigma_mean", sum / static_cast<double>(sigma.size())}};
    if (as_json) {
        std::cout << info.dump(2) << '\n';
    } else {
        for (const auto& [key, value] : info.items()) {
            std::cout << key << '=' << value.dump() << '\n';
        }
    }
    return 0;
}

int exit_code_for(const std::exception& e)
{
    if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const FormatError*>(&e) ||
        dynamic_cast<const fs::filesystem_error*>(&e)) {
        return 3;
    }
    return 2;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Pose estimation of CAD models against frozen density fields"};
    app.require_subcommand(1);
    unsigned threads = 0;
    auto* threads_opt = app.add_option("--threads", threads, "Worker threads (0 = auto; default: FITNGP_THREADS)");

    std::vector<std::string> overrides;

    auto* gen = app.add_subcommand("gen-scene", "Voxelize a synthetic scene into a grid and ground-truth poses");
    fs::path gen_spec;
    fs::path gen_grid;
    fs::path gen_gt;
    std::optional<fs::path> gen_dir;
    std::optional<double> gen_noise;
    std::optional<std::uint64_t> gen_seed;
    gen->add_option("spec", gen_spec, "Scene spec JSON")->required();
    gen->add_option("grid", gen_grid, "Output grid file")->required();
    gen->add_option("gt", gen_gt, "Output ground-truth JSON")->required();
    gen->add_option("--scene-dir", gen_dir, "Also write camera, masks, meshes, symmetries and a fit config here");
    gen->add_option("--noise-std", gen_noise, "Override the noise level");
    gen->add_option("--seed", gen_seed, "Override the scene seed");

    auto* fit = app.add_subcommand("fit", "Fit every object of a scene");
    fs::path fit_config;
    std::optional<fs::path> fit_out;
    fit->add_option("config", fit_config, "Pipeline config JSON")->required();
    fit->add_option("--set", overrides, "Override a config key, e.g. fit.iterations=50");
    fit->add_option("--out", fit_out, "Output directory (overrides output_dir)");

    auto* eval = app.add_subcommand("eval", "Symmetry-aware relative pose errors");
    fs::path eval_results;
    fs::path eval_gt;
    std::optional<fs::path> eval_sym;
    std::optional<fs::path> eval_report;
    std::optional<fs::path> eval_json;
    eval->add_option("results", eval_results, "results.json written by fit")->required();
    eval->add_option("gt", eval_gt, "Ground-truth JSON")->required();
    eval->add_option("symmetries", eval_sym, "Symmetry registry JSON (default: from the ground truth)");
    eval->add_option("--report", eval_report, "CSV report path (default: report.csv next to results)");
    eval->add_option("--json", eval_json, "Also write the report as JSON");

    auto* ablate = app.add_subcommand("ablate", "Run the synthetic benchmark under one or more variants");
    fs::path ablate_config;
    std::vector<std::string> ablate_variants;
    std::optional<fs::path> ablate_out;
    ablate->add_option("config", ablate_config, "Benchmark config JSON")->required();
    ablate->add_option("--variant", ablate_variants, "full, no_normal_band, no_refine or all")->required();
    ablate->add_option("--set", overrides, "Override a config key");
    ablate->add_option("--out", ablate_out, "Also write the CSV table here");

    auto* render = app.add_subcommand("render-depth", "Ray-march a depth map from a grid");
    fs::path render_grid;
    fs::path render_camera;
    fs::path render_out;
    std::optional<fs::path> render_pgm;
    std::optional<double> render_step;
    render->add_option("grid", render_grid, "Grid file")->required();
    render->add_option("camera", render_camera, "Camera JSON")->required();
    render->add_option("out", render_out, "Output depth file")->required();
    render->add_option("--pgm", render_pgm, "Also write a 16-bit PGM in millimetres");
    render->add_option("--step", render_step, "Ray-march step in metres");

    auto* info = app.add_subcommand("grid-info", "Print grid dimensions and sigma statistics");
    fs::path info_grid;
    bool info_json = false;
    info->add_option("grid", info_grid, "Grid file")->required();
    info->add_flag("--json", info_json, "Print JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*threads_opt) {
            set_thread_count(threads);
        }
        if (*gen) {
            return cmd_gen_scene(gen_spec, gen_grid, gen_gt, gen_dir, gen_noise, gen_seed);
        }
        if (*fit) {
            return cmd_fit(fit_config, overrides, fit_out);
        }
        if (*eval) {
            return cmd_eval(eval_results, eval_gt, eval_sym, eval_report, eval_json);
        }
        if (*ablate) {
            return cmd_ablate(ablate_config, ablate_variants, overrides, ablate_out);
        }
        if (*render) {
            return cmd_render_depth(render_grid, render_camera, render_out, render_pgm, render_step);
        }
        if (*info) {
            return cmd_grid_info(info_grid, info_json);
        }
    } catch (const std::exception& e) {
        std::cerr << "fitngp: error: " << e.what() << '\n';
        return exit_code_for(e);
    }
    return 2;
}
