#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "beta3irt/types.hpp"

namespace beta3irt {

struct BetaPrior {
  double alpha = 1.0;
  double beta = 1.0;
};

struct NormalPrior {
  double mean = 1.0;
  double stddev = 1.0;
};

struct GeneratorSpec {
  std::uint32_t num_respondents = 1;
  std::uint32_t num_items = 1;
  BetaPrior ability_prior;
  BetaPrior difficulty_prior;
  NormalPrior discrimination_prior;
  std::uint32_t responses_per_pair = 1;
  double observation_density = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticDataset {
  ResponseMatrix responses;
  ModelParams ground_truth;
};

/// Draw abilities/difficulties/discriminations from the configured priors,
/// keep each (respondent, item) pair with probability observation_density
/// (the retention mask is resampled until every respondent and item is
/// covered), then sample responses from the Beta response distribution.
SyntheticDataset sample_dataset(const GeneratorSpec& spec);

/// Class-probability vectors of M classifiers over N instances plus the true
/// labels. Rows sum to one.
struct ClassifierResponseSet {
  std::uint32_t num_classifiers = 0;
  std::uint32_t num_instances = 0;
  std::uint32_t num_classes = 2;
  std::vector<double> probs;           // [classifier][instance][class]
  std::vector<std::uint32_t> labels;   // one per instance

  double prob(std::uint32_t classifier, std::uint32_t instance,
              std::uint32_t cls) const {
    return probs[(static_cast<std::size_t>(classifier) * num_instances +
                  instance) *
                     num_classes +
                 cls];
  }

  void validate(double simplex_tolerance = 1e-9) const;
};

/// Responses are the probabilities assigned to the true class.
ResponseMatrix to_response_matrix(const ClassifierResponseSet& c);

struct NoiseInjection {
  std::vector<std::uint32_t> labels;
  std::vector<bool> flipped;

  std::uint32_t flip_count() const;
};

/// Flip exactly round(fraction * N) distinct labels, each to a uniformly
/// chosen different class.
NoiseInjection inject_label_noise(std::span<const std::uint32_t> labels,
                                  double fraction, std::uint32_t num_classes,
                                  std::uint64_t seed);

/// One simulated panel member. Skilled members perceive the latent instance
/// score through noise that shrinks with skill, and temper their confidence;
/// the degenerate kinds reproduce the constant / always-positive /
/// always-negative reference classifiers exactly.
struct PanelMember {
  enum class Kind { kSkilled, kConstant, kAlwaysPositive, kAlwaysNegative };
  Kind kind = Kind::kSkilled;
  double skill = 0.5;         // in (0, 1); ignored for degenerate kinds
  double temperature = 1.0;   // > 0; ignored for degenerate kinds
};

struct PanelSpec {
  std::vector<PanelMember> members;

  /// Twelve members: nine skilled with a spread of skills and calibration
  /// temperatures plus the three degenerate reference classifiers.
  static PanelSpec default_panel();

  void validate() const;
};

ClassifierResponseSet simulate_classifier_panel(std::uint32_t num_instances,
                                                std::uint32_t num_classes,
                                                const PanelSpec& panel,
                                                std::uint64_t seed);

}  // namespace beta3irt
