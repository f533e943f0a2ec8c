#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "beta3irt/rng.hpp"
#include "beta3irt/types.hpp"

namespace beta3irt {

enum class LrSchedule {
  kAdaptiveInvSqrt,  // lr_scale / sqrt(t), t = 1-based iteration
  kConstant,
};

struct MleConfig {
  Family family = Family::kBeta3;
  std::uint32_t iterations = 2500;
  std::uint32_t batch_size = 2000;
  LrSchedule lr_schedule = LrSchedule::kAdaptiveInvSqrt;
  double lr_scale = 0.5;
  double lr_constant = 0.01;
  double clip_epsilon = 1e-3;
  /// When set, discriminations are pinned to this value instead of fitted.
  std::optional<double> fixed_discrimination;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Correct/incorrect answer counts per respondent and per item, thresholded
/// at 0.5 for continuous responses. Zero counts are lifted to 1 so the
/// induced Beta priors stay proper.
struct CountInit {
  std::vector<std::uint32_t> correct_per_respondent;
  std::vector<std::uint32_t> incorrect_per_respondent;
  std::vector<std::uint32_t> correct_per_item;
  std::vector<std::uint32_t> incorrect_per_item;
};

CountInit count_statistics(const ResponseMatrix& data, double threshold = 0.5);

/// Draw starting parameters: Beta3 abilities from Beta(m+, m-), difficulties
/// from Beta(n+, n-); 2PL-ND abilities/difficulties from N(0, 1);
/// discriminations from N(1, 1) for both families.
ModelParams initialize_params(const CountInit& counts, const MleConfig& cfg,
                              Rng& rng);

/// Mean soft-label cross-entropy; the caller clips predictions away from the
/// boundary.
double log_loss(std::span<const double> predicted,
                std::span<const double> observed);

/// Unconstrained optimization state: log-odds coordinates for Beta3 bounded
/// parameters, raw values for 2PL-ND.
struct MleState {
  Family family = Family::kBeta3;
  std::vector<double> ability_raw;
  std::vector<double> difficulty_raw;
  std::vector<double> discrimination;

  static MleState from_params(const ModelParams& params);
  ModelParams to_params() const;
};

struct BatchGradient {
  double loss = 0.0;
  std::vector<double> d_ability;
  std::vector<double> d_difficulty;
  std::vector<double> d_discrimination;
};

/// Multiplicity-weighted mean log-loss of the batch, with predictions clipped
/// to [clip_epsilon, 1 - clip_epsilon].
double batch_loss(const MleState& state, std::span<const Observation> batch,
                  double clip_epsilon);

/// Loss and its exact gradient in the unconstrained coordinates. Observations
/// whose prediction is saturated past the clip boundary contribute zero
/// gradient, matching the clipped loss.
BatchGradient batch_loss_gradient(const MleState& state,
                                  std::span<const Observation> batch,
                                  double clip_epsilon);

struct MleFit {
  ModelParams params;
  std::vector<double> loss_trace;  // batch loss per iteration, pre-update
};

/// SGD over epoch-shuffled mini-batches with the configured learning-rate
/// schedule. Deterministic for a fixed (data, cfg) pair.
MleFit fit_mle(const ResponseMatrix& data, const MleConfig& cfg);

/// Expected responses for (respondent, item) pairs under either family.
std::vector<double> predict(
    const ModelParams& params,
    std::span<const std::pair<std::uint32_t, std::uint32_t>> pairs);

}  // namespace beta3irt
