#include "fitngp/fitting.hpp"

#include "fitngp/errors.hpp"
#include "fitngp/parallel.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace fitngp {

void FitConfig::validate() const
{
    const auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!positive(beta) || !positive(lr_rot) || !positive(lr_trans) || !positive(adam_eps)) {
        throw InvalidArgument("fit config: beta, learning rates and adam_eps must be positive");
    }
    if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
        throw InvalidArgument("fit config: adam betas must lie in (0, 1)");
    }
    if (iterations < 1) {
        throw InvalidArgument("fit config: iterations must be >= 1");
    }
    if (n_hypotheses < 1) {
        throw InvalidArgument("fit config: n_hypotheses must be >= 1");
    }
}

nlohmann::json to_json(const FitConfig& cfg)
{
    return {{"beta", cfg.beta},
            {"iterations", cfg.iterations},
            {"lr_rot", cfg.lr_rot},
            {"lr_trans", cfg.lr_trans},
            {"adam_beta1", cfg.adam_beta1},
            {"adam_beta2", cfg.adam_beta2},
            {"adam_eps", cfg.adam_eps},
            {"n_hypotheses", cfg.n_hypotheses},
            {"use_normal_band", cfg.use_normal_band}};
}

FitConfig fit_config_from_json(const nlohmann::json& j, FitConfig base)
{
    try {
        base.beta = j.value("beta", base.beta);
        base.iterations = j.value("iterations", base.iterations);
        base.lr_rot = j.value("lr_rot", base.lr_rot);
        base.lr_trans = j.value("lr_trans", base.lr_trans);
        base.adam_beta1 = j.value("adam_beta1", base.adam_beta1);
        base.adam_beta2 = j.value("adam_beta2", base.adam_beta2);
        base.adam_eps = j.value("adam_eps", base.adam_eps);
        base.n_hypotheses = j.value("n_hypotheses", base.n_hypotheses);
        base.use_normal_band = j.value("use_normal_band", base.use_normal_band);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("fit config: ") + e.what());
    }
    try {
        base.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    return base;
}

nlohmann::json to_json(const FitResult& result)
{
    return {{"pose", to_json(result.pose)},
            {"fitness", result.fitness},
            {"trace", result.trace},
            {"hypothesis_index", result.hypothesis_index},
            {"diverged", result.diverged}};
}

FitResult fit_result_from_json(const nlohmann::json& j)
{
    FitResult r;
    try {
        r.pose = pose_from_json(j.at("pose"));
        r.fitness = j.at("fitness").get<double>();
        r.trace = j.value("trace", std::vector<double>{});
        r.hypothesis_index = j.value("hypothesis_index", std::size_t{0});
        r.diverged = j.value("diverged", false);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("fit result: ") + e.what());
    }
    return r;
}

namespace {

struct BandSums {
    double occupancy = 0.0;
    Vec3 d_v = Vec3::Zero();
    Vec3 d_omega = Vec3::Zero();
};

template <bool WithGradient>
BandSums accumulate(const std::vector<Vec3>& points, const Mat3& rot, const Vec3& p, const DensityGrid& grid,
                    double beta)
{
    BandSums sums;
    for (const Vec3& x : points) {
        const Vec3 rx = rot * x;
        const SigmaSample s = sample_sigma_gradient(grid, rx + p);
        const double a = std::exp(s.sigma) * beta;
        const double e = std::exp(-a);
        sums.occupancy += 1.0 - e;
        if constexpr (WithGradient) {
            const Vec3 g = (a * e) * s.gradient;
            sums.d_v += g;
            // d/d omega of s(Exp(omega) R x + p) at omega = 0 is (R x) x grad s.
            sums.d_omega += rx.cross(g);
        }
    }
    return sums;
}

void check_inputs(const BandPoints& band, double beta, bool use_normal_band)
{
    if (band.surface_band.empty() || (use_normal_band && band.normal_band.empty())) {
        throw InvalidArgument("fitness: band points must be non-empty");
    }
    if (!(beta > 0.0)) {
        throw InvalidArgument("fitness: beta must be positive");
    }
}

template <bool WithGradient>
FitnessGradient evaluate(const Pose& pose, const BandPoints& band, const DensityGrid& grid, double beta,
                         bool use_normal_band)
{
    const Mat3 rot = pose.rotation.matrix();
    const BandSums in = accumulate<WithGradient>(band.surface_band, rot, pose.translation, grid, beta);
    const double n_in = static_cast<double>(band.surface_band.size());
    FitnessGradient out;
    out.value = in.occupancy / n_in;
    out.gradient.v = in.d_v / n_in;
    out.gradient.omega = in.d_omega / n_in;
    if (use_normal_band) {
        const BandSums free = accumulate<WithGradient>(band.normal_band, rot, pose.translation, grid, beta);
        const double n_free = static_cast<double>(band.normal_band.size());
        out.value -= free.occupancy / n_free;
        out.gradient.v -= free.d_v / n_free;
        out.gradient.omega -= free.d_omega / n_free;
    }
    return out;
}

struct AdamState {
    Pose pose;
    Pose last_finite;
    std::array<double, 6> m{};
    std::array<double, 6> v{};
    std::vector<double> trace;
    bool diverged = false;
};

bool finite(const FitnessGradient& fg)
{
    return std::isfinite(fg.value) && fg.gradient.omega.allFinite() && fg.gradient.v.allFinite();
}

// One Adam step on the loss -f; returns false if the evaluation was not finite.
bool adam_step(AdamState& st, std::size_t t, const BandPoints& band, const DensityGrid& grid, const FitConfig& cfg)
{
    const FitnessGradient fg = evaluate<true>(st.pose, band, grid, cfg.beta, cfg.use_normal_band);
    if (!finite(fg)) {
        return false;
    }
    st.trace.push_back(fg.value);
    st.last_finite = st.pose;

    std::array<double, 6> g{};
    for (int a = 0; a < 3; ++a) {
        g[static_cast<std::size_t>(a)] = -fg.gradient.omega[a];
        g[static_cast<std::size_t>(a) + 3] = -fg.gradient.v[a];
    }
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(t));
    std::array<double, 6> step{};
    for (std::size_t k = 0; k < 6; ++k) {
        st.m[k] = cfg.adam_beta1 * st.m[k] + (1.0 - cfg.adam_beta1) * g[k];
        st.v[k] = cfg.adam_beta2 * st.v[k] + (1.0 - cfg.adam_beta2) * g[k] * g[k];
        const double m_hat = st.m[k] / bc1;
        const double v_hat = st.v[k] / bc2;
        const double lr = k < 3 ? cfg.lr_rot : cfg.lr_trans;
        step[k] = -lr * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
    }
    const Vec3 d_omega(step[0], step[1], step[2]);
    const Vec3 d_v(step[3], step[4], step[5]);
    if (!d_omega.allFinite() || !d_v.allFinite()) {
        return false;
    }
    // Moments stay in the moving tangent frame; no transport on re-centering.
    st.pose.rotation = rotation_exp(d_omega) * st.pose.rotation;
    st.pose.translation += d_v;
    return true;
}

FitResult finish(AdamState& st, std::size_t index, const BandPoints& band, const DensityGrid& grid,
                 const FitConfig& cfg, std::size_t trace_length)
{
    FitResult r;
    r.hypothesis_index = index;
    r.diverged = st.diverged;
    if (!st.diverged) {
        const double f = fitness(st.pose, band, grid, cfg.beta, cfg.use_normal_band);
        if (std::isfinite(f)) {
            st.trace.push_back(f);
            st.last_finite = st.pose;
        } else {
            r.diverged = true;
        }
    }
    r.pose = st.last_finite;
    if (r.diverged) {
        // Report the fitness of the returned pose and keep the trace length fixed.
        const double f = st.trace.empty() ? -1.0 : st.trace.back();
        st.trace.resize(trace_length, f);
    }
    r.fitness = st.trace.back();
    r.trace = std::move(st.trace);
    return r;
}

}  // namespace

double fitness(const Pose& pose, const BandPoints& band, const DensityGrid& grid, double beta, bool use_normal_band)
{
    check_inputs(band, beta, use_normal_band);
    return evaluate<false>(pose, band, grid, beta, use_normal_band).value;
}

FitnessGradient fitness_with_gradient(const Pose& pose, const BandPoints& band, const DensityGrid& grid, double beta,
                                      bool use_normal_band)
{
    check_inputs(band, beta, use_normal_band);
    return evaluate<true>(pose, band, grid, beta, use_normal_band);
}

TangentDelta fitness_gradient(const Pose& pose, const BandPoints& band, const DensityGrid& grid, double beta,
                              bool use_normal_band)
{
    return fitness_with_gradient(pose, band, grid, beta, use_normal_band).gradient;
}

std::vector<FitResult> refine_batch(const std::vector<Pose>& starts, const BandPoints& band, const DensityGrid& grid,
                                    const FitConfig& cfg, const ProgressCallback& progress)
{
    cfg.validate();
    check_inputs(band, cfg.beta, cfg.use_normal_band);
    std::vector<AdamState> states(starts.size());
    for (std::size_t h = 0; h < starts.size(); ++h) {
        states[h].pose = starts[h];
        states[h].last_finite = starts[h];
        states[h].trace.reserve(cfg.iterations + 1);
    }
    for (std::size_t it = 1; it <= cfg.iterations; ++it) {
        parallel_for(states.size(), [&](std::size_t h) {
            auto& st = states[h];
            if (!st.diverged && !adam_step(st, it, band, grid, cfg)) {
                st.diverged = true;
            }
        });
        if (progress && it % 50 == 0 && it < cfg.iterations) {
            double best = -std::numeric_limits<double>::infinity();
            for (const auto& st : states) {
                if (!st.trace.empty()) {
                    best = std::max(best, st.trace.back());
                }
            }
            progress(it, best);
        }
    }
    std::vector<FitResult> results(states.size());
    parallel_for(states.size(), [&](std::size_t h) {
        results[h] = finish(states[h], h, band, grid, cfg, cfg.iterations + 1);
    });
    if (progress) {
        progress(cfg.iterations, select_best(results).fitness);
    }
    return results;
}

FitResult refine_hypothesis(const Pose& start, const BandPoints& band, const DensityGrid& grid, const FitConfig& cfg,
                            std::size_t hypothesis_index)
{
    FitResult r = std::move(refine_batch({start}, band, grid, cfg).front());
    r.hypothesis_index = hypothesis_index;
    return r;
}

FitResult select_best(const std::vector<FitResult>& results)
{
    if (results.empty()) {
        throw InvalidArgument("no fit results to select from");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < results.size(); ++i) {
        const auto& a = results[i];
        const auto& b = results[best];
        const bool better = (a.diverged != b.diverged)
                                ? !a.diverged
                                : (a.fitness > b.fitness ||
                                   (a.fitness == b.fitness && a.hypothesis_index < b.hypothesis_index));
        if (better) {
            best = i;
        }
    }
    return results[best];
}

FitResult fit_object(const std::vector<Pose>& hypotheses, const BandPoints& band, const DensityGrid& grid,
                     const FitConfig& cfg, const ProgressCallback& progress)
{
    if (hypotheses.empty()) {
        throw InvalidArgument("fit_object: empty hypothesis list");
    }
    return select_best(refine_batch(hypotheses, band, grid, cfg, progress));
}

FitResult best_initial_hypothesis(const std::vector<Pose>& hypotheses, const BandPoints& band,
                                  const DensityGrid& grid, const FitConfig& cfg)
{
    if (hypotheses.empty()) {
        throw InvalidArgument("best_initial_hypothesis: empty hypothesis list");
    }
    check_inputs(band, cfg.beta, cfg.use_normal_band);
    std::vector<FitResult> results(hypotheses.size());
    parallel_for(hypotheses.size(), [&](std::size_t h) {
        const double f = fitness(hypotheses[h], band, grid, cfg.beta, cfg.use_normal_band);
        results[h] = FitResult{hypotheses[h], f, {f}, h, !std::isfinite(f)};
    });
    return select_best(results);
}

}  // namespace fitngp
