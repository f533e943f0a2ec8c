#include "beta3irt/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "beta3irt/errors.hpp"
#include "beta3irt/math.hpp"

namespace beta3irt {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// 1-based average ranks with midrank tie handling.
std::vector<double> midranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t start = 0;
  while (start < n) {
    std::size_t stop = start + 1;
    while (stop < n && values[order[stop]] == values[order[start]]) ++stop;
    const double rank = 0.5 * static_cast<double>(start + 1 + stop);
    for (std::size_t k = start; k < stop; ++k) ranks[order[k]] = rank;
    start = stop;
  }
  return ranks;
}

double mean_of(std::span<const double> values) {
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

double sample_std(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double mean = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

std::uint32_t predicted_class(const ClassifierResponseSet& c, std::uint32_t i,
                              std::uint32_t j) {
  if (c.num_classes == 2) {
    // Tie at 0.5 predicts the positive class.
    return c.prob(i, j, 1) >= 0.5 ? 1u : 0u;
  }
  std::uint32_t best = 0;
  for (std::uint32_t k = 1; k < c.num_classes; ++k) {
    if (c.prob(i, j, k) > c.prob(i, j, best)) best = k;
  }
  return best;
}

double accuracy_of(const ClassifierResponseSet& c, std::uint32_t i,
                   std::span<const std::uint32_t> labels) {
  std::uint32_t hits = 0;
  for (std::uint32_t j = 0; j < c.num_instances; ++j) {
    if (predicted_class(c, i, j) == labels[j]) ++hits;
  }
  return static_cast<double>(hits) / c.num_instances;
}

double clipped(double p, double eps) { return std::clamp(p, eps, 1.0 - eps); }

/// Multiplicity-weighted test log-loss of clipped predictions.
double test_log_loss(const ModelParams& params,
                     std::span<const Observation> test, double clip_epsilon) {
  if (test.empty()) {
    throw InsufficientData("holdout produced an empty test set");
  }
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  pairs.reserve(test.size());
  for (const Observation& obs : test) pairs.emplace_back(obs.respondent, obs.item);
  const std::vector<double> preds = predict(params, pairs);
  double total = 0.0;
  double weight = 0.0;
  for (std::size_t k = 0; k < test.size(); ++k) {
    const double p_hat = clipped(preds[k], clip_epsilon);
    const double p = test[k].response;
    double loss = 0.0;
    if (p > 0.0) loss -= p * std::log(p_hat);
    if (p < 1.0) loss -= (1.0 - p) * std::log1p(-p_hat);
    total += test[k].count * loss;
    weight += test[k].count;
  }
  return total / weight;
}

}  // namespace

void HoldoutPlan::validate() const {
  if (repetitions < 1) throw InvalidParameter("repetitions must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidParameter("train_fraction must lie in (0, 1)");
  }
}

std::vector<HoldoutSplit> stratified_holdout(const ResponseMatrix& data,
                                             const HoldoutPlan& plan) {
  plan.validate();
  const std::vector<Observation>& all = data.observations();
  std::vector<std::vector<std::uint32_t>> by_respondent(data.num_respondents());
  for (std::size_t k = 0; k < all.size(); ++k) {
    by_respondent[all[k].respondent].push_back(static_cast<std::uint32_t>(k));
  }

  std::vector<HoldoutSplit> splits;
  splits.reserve(plan.repetitions);
  for (std::uint32_t rep = 0; rep < plan.repetitions; ++rep) {
    Rng rng(derive_seed(plan.seed, rep));
    std::vector<bool> in_train(all.size(), false);

    for (const std::vector<std::uint32_t>& group : by_respondent) {
      if (group.size() == 1) {
        in_train[group[0]] = true;
        continue;
      }
      std::vector<std::uint32_t> shuffled = group;
      rng.shuffle(shuffled);
      const auto n = static_cast<double>(shuffled.size());
      const auto n_train = std::clamp<std::size_t>(
          static_cast<std::size_t>(std::lround(plan.train_fraction * n)), 1,
          shuffled.size() - 1);
      for (std::size_t k = 0; k < n_train; ++k) in_train[shuffled[k]] = true;
    }

    // Pull items that ended up absent from training back in, keeping the
    // same train fraction of their observations.
    std::vector<bool> item_in_train(data.num_items(), false);
    for (std::size_t k = 0; k < all.size(); ++k) {
      if (in_train[k]) item_in_train[all[k].item] = true;
    }
    std::vector<std::vector<std::uint32_t>> missing(data.num_items());
    for (std::size_t k = 0; k < all.size(); ++k) {
      if (!item_in_train[all[k].item]) {
        missing[all[k].item].push_back(static_cast<std::uint32_t>(k));
      }
    }
    for (std::vector<std::uint32_t>& group : missing) {
      if (group.empty()) continue;
      if (group.size() == 1) {
        in_train[group[0]] = true;
        continue;
      }
      rng.shuffle(group);
      const auto n = static_cast<double>(group.size());
      const auto n_train = std::clamp<std::size_t>(
          static_cast<std::size_t>(std::lround(plan.train_fraction * n)), 1,
          group.size() - 1);
      for (std::size_t k = 0; k < n_train; ++k) in_train[group[k]] = true;
    }

    std::vector<Observation> train_obs;
    std::vector<Observation> test_obs;
    train_obs.reserve(all.size());
    for (std::size_t k = 0; k < all.size(); ++k) {
      (in_train[k] ? train_obs : test_obs).push_back(all[k]);
    }
    splits.push_back(HoldoutSplit{
        ResponseMatrix(data.num_respondents(), data.num_items(),
                       std::move(train_obs)),
        std::move(test_obs)});
  }
  return splits;
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a,
                                    std::span<const double> b) {
  if (a.size() != b.size()) {
    throw LengthMismatch("paired test requires equally long lists");
  }
  if (a.size() < 5) {
    throw TooFewPairs("need at least 5 pairs, got " + std::to_string(a.size()));
  }
  std::vector<double> diffs;
  diffs.reserve(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    if (d != 0.0) diffs.push_back(d);
  }
  WilcoxonResult result;
  result.num_used = static_cast<std::uint32_t>(diffs.size());
  if (diffs.empty()) return result;  // all ties: no effect, p = 1

  std::vector<double> abs_diffs(diffs.size());
  for (std::size_t k = 0; k < diffs.size(); ++k) abs_diffs[k] = std::abs(diffs[k]);
  const std::vector<double> ranks = midranks(abs_diffs);
  for (std::size_t k = 0; k < diffs.size(); ++k) {
    (diffs[k] > 0.0 ? result.w_plus : result.w_minus) += ranks[k];
  }
  result.statistic = std::min(result.w_plus, result.w_minus);

  const std::size_t m = diffs.size();
  if (m <= 25) {
    // Exact null distribution over doubled ranks (midranks are half-integers).
    std::vector<std::int64_t> ranks2(m);
    std::int64_t total = 0;
    for (std::size_t k = 0; k < m; ++k) {
      ranks2[k] = std::llround(2.0 * ranks[k]);
      total += ranks2[k];
    }
    std::vector<double> count(static_cast<std::size_t>(total) + 1, 0.0);
    count[0] = 1.0;
    for (const std::int64_t r : ranks2) {
      for (std::int64_t w = total; w >= r; --w) {
        count[w] += count[w - r];
      }
    }
    const auto w2 = std::llround(2.0 * result.statistic);
    double tail = 0.0;
    for (std::int64_t w = 0; w <= w2; ++w) tail += count[w];
    result.p_value = std::min(1.0, 2.0 * tail / std::exp2(static_cast<double>(m)));
  } else {
    const double n = static_cast<double>(m);
    const double mu = n * (n + 1.0) / 4.0;
    double tie_term = 0.0;
    std::vector<double> sorted = abs_diffs;
    std::sort(sorted.begin(), sorted.end());
    std::size_t start = 0;
    while (start < sorted.size()) {
      std::size_t stop = start + 1;
      while (stop < sorted.size() && sorted[stop] == sorted[start]) ++stop;
      const double t = static_cast<double>(stop - start);
      tie_term += t * t * t - t;
      start = stop;
    }
    const double variance =
        n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if (variance <= 0.0) {
      result.p_value = 1.0;
    } else {
      const double z = (result.statistic - mu + 0.5) / std::sqrt(variance);
      result.p_value = std::min(1.0, 2.0 * normal_cdf(z));
    }
  }
  return result;
}

std::vector<ClassifierMetrics> classifier_metrics(
    const ClassifierResponseSet& c, std::span<const double> abilities,
    double clip_epsilon) {
  c.validate();
  if (abilities.size() != c.num_classifiers) {
    throw LengthMismatch("need one ability per classifier");
  }
  const bool binary = c.num_classes == 2;
  std::uint32_t positives = 0;
  if (binary) {
    for (std::uint32_t label : c.labels) positives += label;
  }

  std::vector<ClassifierMetrics> report(c.num_classifiers);
  std::vector<double> p1(binary ? c.num_instances : 0);
  for (std::uint32_t i = 0; i < c.num_classifiers; ++i) {
    ClassifierMetrics& m = report[i];
    m.ability = abilities[i];
    m.accuracy = accuracy_of(c, i, c.labels);

    double response_sum = 0.0;
    double loss_sum = 0.0;
    for (std::uint32_t j = 0; j < c.num_instances; ++j) {
      const double p_true = c.prob(i, j, c.labels[j]);
      response_sum += p_true;
      if (binary) {
        const double p = clipped(c.prob(i, j, 1), clip_epsilon);
        loss_sum -= c.labels[j] == 1 ? std::log(p) : std::log1p(-p);
      } else {
        loss_sum -= std::log(clipped(p_true, clip_epsilon));
      }
    }
    m.avg_response = response_sum / c.num_instances;
    m.log_loss = loss_sum / c.num_instances;

    if (!binary) continue;
    std::uint32_t tp = 0;
    std::uint32_t fp = 0;
    std::uint32_t fn = 0;
    double brier_sum = 0.0;
    for (std::uint32_t j = 0; j < c.num_instances; ++j) {
      const double p = c.prob(i, j, 1);
      p1[j] = p;
      const bool predicted_positive = p >= 0.5;
      const bool actual_positive = c.labels[j] == 1;
      tp += predicted_positive && actual_positive;
      fp += predicted_positive && !actual_positive;
      fn += !predicted_positive && actual_positive;
      const double y = actual_positive ? 1.0 : 0.0;
      brier_sum += (p - y) * (p - y);
    }
    m.brier = brier_sum / c.num_instances;
    const double precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    const double recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    m.f1 = precision + recall > 0.0
               ? 2.0 * precision * recall / (precision + recall)
               : 0.0;

    if (positives == 0 || positives == c.num_instances) {
      m.auc = std::nullopt;  // a class is absent; AUC undefined
    } else {
      const std::vector<double> ranks = midranks(p1);
      double rank_sum = 0.0;
      for (std::uint32_t j = 0; j < c.num_instances; ++j) {
        if (c.labels[j] == 1) rank_sum += ranks[j];
      }
      const double n_pos = positives;
      const double n_neg = static_cast<double>(c.num_instances) - n_pos;
      m.auc = (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
    }
  }
  return report;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw LengthMismatch("rank correlation requires equally long lists");
  }
  if (x.size() < 2) throw TooFewPairs("need at least 2 pairs");
  const std::vector<double> rx = midranks(x);
  const std::vector<double> ry = midranks(y);
  const double mx = mean_of(rx);
  const double my = mean_of(ry);
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (std::size_t k = 0; k < rx.size(); ++k) {
    sxy += (rx[k] - mx) * (ry[k] - my);
    sxx += (rx[k] - mx) * (rx[k] - mx);
    syy += (ry[k] - my) * (ry[k] - my);
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw ZeroVariance("rank correlation undefined for a constant list");
  }
  return sxy / std::sqrt(sxx * syy);
}

std::vector<FlaggedItem> flag_noisy_items(const PosteriorSet& posteriors,
                                          double threshold) {
  std::vector<FlaggedItem> flagged;
  for (std::uint32_t j = 0; j < posteriors.num_items(); ++j) {
    const double mean = posteriors.discrimination_q[j].mu;
    if (mean < threshold) flagged.push_back({j, mean});
  }
  std::sort(flagged.begin(), flagged.end(),
            [](const FlaggedItem& a, const FlaggedItem& b) {
              return a.posterior_mean_a < b.posterior_mean_a ||
                     (a.posterior_mean_a == b.posterior_mean_a && a.item < b.item);
            });
  return flagged;
}

std::vector<NoiseScanRow> ability_noise_scan(
    const ClassifierResponseSet& clean_panel, std::span<const double> fractions,
    const ViConfig& cfg) {
  clean_panel.validate();
  std::vector<NoiseScanRow> rows;
  rows.reserve(fractions.size());
  for (std::size_t idx = 0; idx < fractions.size(); ++idx) {
    const double fraction = fractions[idx];
    if (!(fraction >= 0.0 && fraction < 1.0)) {
      throw InvalidParameter("scan fractions must lie in [0, 1)");
    }
    const NoiseInjection noise = inject_label_noise(
        clean_panel.labels, fraction, clean_panel.num_classes,
        derive_seed(cfg.seed, idx));
    ClassifierResponseSet corrupted = clean_panel;
    corrupted.labels = noise.labels;
    const ResponseMatrix responses = to_response_matrix(corrupted);
    const PosteriorSet posterior = fit_vi(responses, cfg);
    const ModelParams params = posterior_point_estimates(posterior);

    NoiseScanRow row;
    row.fraction = fraction;
    row.abilities = params.abilities;
    row.accuracies.reserve(corrupted.num_classifiers);
    for (std::uint32_t i = 0; i < corrupted.num_classifiers; ++i) {
      row.accuracies.push_back(accuracy_of(corrupted, i, corrupted.labels));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

ModelComparison compare_models(const ResponseMatrix& data,
                               const HoldoutPlan& plan,
                               const MleConfig& beta3_cfg,
                               const MleConfig& twoplnd_cfg) {
  if (beta3_cfg.family != Family::kBeta3 ||
      twoplnd_cfg.family != Family::kTwoPlNd) {
    throw UnsupportedCombination(
        "compare_models expects a Beta3 config and a 2PL-ND config");
  }
  const std::vector<HoldoutSplit> splits = stratified_holdout(data, plan);
  ModelComparison comparison;
  comparison.beta3_losses.reserve(splits.size());
  comparison.twoplnd_losses.reserve(splits.size());
  for (std::size_t rep = 0; rep < splits.size(); ++rep) {
    MleConfig cfg_a = beta3_cfg;
    cfg_a.seed = derive_seed(beta3_cfg.seed, rep);
    MleConfig cfg_b = twoplnd_cfg;
    cfg_b.seed = derive_seed(twoplnd_cfg.seed, rep);
    const MleFit fit_a = fit_mle(splits[rep].train, cfg_a);
    const MleFit fit_b = fit_mle(splits[rep].train, cfg_b);
    comparison.beta3_losses.push_back(
        test_log_loss(fit_a.params, splits[rep].test, cfg_a.clip_epsilon));
    comparison.twoplnd_losses.push_back(
        test_log_loss(fit_b.params, splits[rep].test, cfg_b.clip_epsilon));
  }
  comparison.beta3_mean = mean_of(comparison.beta3_losses);
  comparison.beta3_std = sample_std(comparison.beta3_losses);
  comparison.twoplnd_mean = mean_of(comparison.twoplnd_losses);
  comparison.twoplnd_std = sample_std(comparison.twoplnd_losses);
  comparison.wilcoxon =
      wilcoxon_signed_rank(comparison.beta3_losses, comparison.twoplnd_losses);
  return comparison;
}

}  // namespace beta3irt
