#pragma once

#include "fitngp/density_field.hpp"
#include "fitngp/geometry.hpp"
#include "fitngp/object_model.hpp"

#include <functional>
#include <vector>

namespace fitngp {

struct FitConfig {
    double beta = 0.01;
    std::size_t iterations = 200;
    double lr_rot = 2.5e-2;
    double lr_trans = 1.0e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::size_t n_hypotheses = 216;
    /// Ablation switch: drop the free-space (normal band) term from the fitness.
    bool use_normal_band = true;

    void validate() const;
};

nlohmann::json to_json(const FitConfig& cfg);
/// Overrides fields of `base` with the keys present in j.
FitConfig fit_config_from_json(const nlohmann::json& j, FitConfig base = {});

struct FitResult {
    Pose pose;
    double fitness = 0.0;
    std::vector<double> trace;  // fitness before the first step and after every step
    std::size_t hypothesis_index = 0;
    bool diverged = false;
};

nlohmann::json to_json(const FitResult& result);
FitResult fit_result_from_json(const nlohmann::json& j);

/// Mean occupancy of the posed surface band minus mean occupancy of the posed
/// normal band. Throws InvalidArgument on an empty band or beta <= 0.
double fitness(const Pose& pose, const BandPoints& band, const DensityGrid& grid, double beta,
               bool use_normal_band = true);

struct FitnessGradient {
    double value = 0.0;
    TangentDelta gradient;  // d f / d(omega, v) for R <- Exp(omega) R, p <- p + v
};

FitnessGradient fitness_with_gradient(const Pose& pose, const BandPoints& band, const DensityGrid& grid, double beta,
                                      bool use_normal_band = true);
TangentDelta fitness_gradient(const Pose& pose, const BandPoints& band, const DensityGrid& grid, double beta,
                              bool use_normal_band = true);

/// Called every 50 iterations (and after the last one) with the best fitness so far.
using ProgressCallback = std::function<void(std::size_t iteration, double best_fitness)>;

/// Adam ascent on the fitness from a single start pose.
FitResult refine_hypothesis(const Pose& start, const BandPoints& band, const DensityGrid& grid, const FitConfig& cfg,
                            std::size_t hypothesis_index = 0);

/// Refines every start pose in lock step (hypotheses fan out over the worker
/// pool each iteration) and returns all results in input order.
std::vector<FitResult> refine_batch(const std::vector<Pose>& starts, const BandPoints& band, const DensityGrid& grid,
                                    const FitConfig& cfg, const ProgressCallback& progress = {});

/// Highest final fitness; ties go to the lowest hypothesis index. Diverged
/// results lose to any finite one.
FitResult select_best(const std::vector<FitResult>& results);

/// refine_batch followed by select_best. Throws InvalidArgument when empty.
FitResult fit_object(const std::vector<Pose>& hypotheses, const BandPoints& band, const DensityGrid& grid,
                     const FitConfig& cfg, const ProgressCallback& progress = {});

/// Best-fitness hypothesis without any refinement (trace of length 1).
FitResult best_initial_hypothesis(const std::vector<Pose>& hypotheses, const BandPoints& band,
                                  const DensityGrid& grid, const FitConfig& cfg);

}  // namespace fitngp
