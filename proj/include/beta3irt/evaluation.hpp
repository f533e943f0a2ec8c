#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "beta3irt/mle.hpp"
#include "beta3irt/synth.hpp"
#include "beta3irt/types.hpp"
#include "beta3irt/vi.hpp"

namespace beta3irt {

struct HoldoutPlan {
  std::uint32_t repetitions = 30;
  double train_fraction = 0.9;
  std::uint64_t seed = 0;

  void validate() const;
};

struct HoldoutSplit {
  ResponseMatrix train;
  std::vector<Observation> test;
};

/// Repeated stratified splits: each respondent's observations are divided
/// train_fraction / rest, then observations of items absent from the train
/// side are pulled back in the same proportion so that training covers every
/// respondent and item. Respondents or items with a single observation stay
/// entirely in train.
std::vector<HoldoutSplit> stratified_holdout(const ResponseMatrix& data,
                                             const HoldoutPlan& plan);

struct WilcoxonResult {
  double w_plus = 0.0;
  double w_minus = 0.0;
  /// min(w_plus, w_minus), the tabulated test statistic.
  double statistic = 0.0;
  double p_value = 1.0;
  /// Pairs remaining after zero differences are discarded.
  std::uint32_t num_used = 0;
};

/// Paired two-sided Wilcoxon signed-rank test with the zero-discard,
/// average-rank convention; exact null distribution up to 25 used pairs,
/// tie-corrected normal approximation with continuity correction above.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a,
                                    std::span<const double> b);

struct ClassifierMetrics {
  double avg_response = 0.0;
  double ability = 0.0;
  double accuracy = 0.0;
  /// Binary-only scores; unset when num_classes > 2.
  std::optional<double> f1;
  std::optional<double> brier;
  double log_loss = 0.0;
  /// Unset when a class is absent (degenerate) or num_classes > 2.
  std::optional<double> auc;
};

/// Per-classifier metric table. Accuracy predicts the positive class on a
/// 0.5 tie; AUC uses midranks; log-loss clips at clip_epsilon.
std::vector<ClassifierMetrics> classifier_metrics(
    const ClassifierResponseSet& c, std::span<const double> abilities,
    double clip_epsilon = 1e-3);

/// Spearman rank correlation: Pearson correlation of midranks.
double spearman(std::span<const double> x, std::span<const double> y);

struct FlaggedItem {
  std::uint32_t item = 0;
  double posterior_mean_a = 0.0;
};

/// Items whose posterior-mean discrimination falls below the threshold,
/// ascending by mean — the negative-discrimination noise signal.
std::vector<FlaggedItem> flag_noisy_items(const PosteriorSet& posteriors,
                                          double threshold = 0.0);

struct NoiseScanRow {
  double fraction = 0.0;
  std::vector<double> abilities;    // one per classifier
  std::vector<double> accuracies;   // against the corrupted labels
};

/// For each noise fraction: flip labels, rebuild responses, refit, record
/// abilities and accuracies. Fraction 0 reproduces the clean fit exactly.
std::vector<NoiseScanRow> ability_noise_scan(
    const ClassifierResponseSet& clean_panel, std::span<const double> fractions,
    const ViConfig& cfg);

struct ModelComparison {
  double beta3_mean = 0.0;
  double beta3_std = 0.0;
  double twoplnd_mean = 0.0;
  double twoplnd_std = 0.0;
  WilcoxonResult wilcoxon;
  std::vector<double> beta3_losses;
  std::vector<double> twoplnd_losses;
};

/// Fit both families on shared holdout splits and compare test log-losses
/// with the paired Wilcoxon test. Each repetition re-draws its initialization
/// from a seed derived from the configs' seeds.
ModelComparison compare_models(const ResponseMatrix& data,
                               const HoldoutPlan& plan,
                               const MleConfig& beta3_cfg,
                               const MleConfig& twoplnd_cfg);

}  // namespace beta3irt
