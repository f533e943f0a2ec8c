#include "beta3irt/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "beta3irt/errors.hpp"
#include "beta3irt/icc.hpp"
#include "beta3irt/math.hpp"
#include "beta3irt/rng.hpp"

namespace beta3irt {

namespace {

double clamp_unit(double v) {
  return std::clamp(v, kUnitIntervalMargin, 1.0 - kUnitIntervalMargin);
}

// Response draw p ~ Beta(alpha, beta) with shapes built in log space; extreme
// shapes degenerate to the boundary, which the closed response range allows.
double sample_response(double theta, double delta, double a, Rng& rng) {
  const double log_alpha = a * (std::log(theta) - std::log(delta));
  const double log_beta = a * (std::log1p(-theta) - std::log1p(-delta));
  const double alpha = std::exp(std::clamp(log_alpha, -700.0, 700.0));
  const double beta = std::exp(std::clamp(log_beta, -700.0, 700.0));
  return rng.beta(alpha, beta);
}

}  // namespace

void GeneratorSpec::validate() const {
  if (num_respondents < 1 || num_items < 1) {
    throw InvalidParameter("num_respondents and num_items must be >= 1");
  }
  if (!(ability_prior.alpha > 0.0 && ability_prior.beta > 0.0)) {
    throw InvalidParameter("ability_prior shapes must be positive");
  }
  if (!(difficulty_prior.alpha > 0.0 && difficulty_prior.beta > 0.0)) {
    throw InvalidParameter("difficulty_prior shapes must be positive");
  }
  if (!(discrimination_prior.stddev >= 0.0) ||
      !std::isfinite(discrimination_prior.mean)) {
    throw InvalidParameter("invalid discrimination_prior");
  }
  if (responses_per_pair < 1) {
    throw InvalidParameter("responses_per_pair must be >= 1");
  }
  if (!(observation_density > 0.0 && observation_density <= 1.0)) {
    throw InvalidParameter("observation_density must lie in (0, 1], got " +
                           std::to_string(observation_density));
  }
}

SyntheticDataset sample_dataset(const GeneratorSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const std::uint32_t M = spec.num_respondents;
  const std::uint32_t N = spec.num_items;

  ModelParams truth;
  truth.family = Family::kBeta3;
  truth.abilities.resize(M);
  truth.difficulties.resize(N);
  truth.discriminations.resize(N);
  for (std::uint32_t i = 0; i < M; ++i) {
    truth.abilities[i] =
        clamp_unit(rng.beta(spec.ability_prior.alpha, spec.ability_prior.beta));
  }
  for (std::uint32_t j = 0; j < N; ++j) {
    truth.difficulties[j] = clamp_unit(
        rng.beta(spec.difficulty_prior.alpha, spec.difficulty_prior.beta));
    truth.discriminations[j] = rng.normal(spec.discrimination_prior.mean,
                                          spec.discrimination_prior.stddev);
  }

  // Retention mask, resampled until every respondent and item is covered.
  std::vector<bool> mask(static_cast<std::size_t>(M) * N, true);
  if (spec.observation_density < 1.0) {
    constexpr int kMaxAttempts = 1000;
    bool covered = false;
    for (int attempt = 0; attempt < kMaxAttempts && !covered; ++attempt) {
      std::vector<bool> row_seen(M, false);
      std::vector<bool> col_seen(N, false);
      for (std::uint32_t i = 0; i < M; ++i) {
        for (std::uint32_t j = 0; j < N; ++j) {
          const bool keep = rng.uniform() < spec.observation_density;
          mask[static_cast<std::size_t>(i) * N + j] = keep;
          if (keep) {
            row_seen[i] = true;
            col_seen[j] = true;
          }
        }
      }
      covered = std::all_of(row_seen.begin(), row_seen.end(),
                            [](bool b) { return b; }) &&
                std::all_of(col_seen.begin(), col_seen.end(),
                            [](bool b) { return b; });
    }
    if (!covered) {
      throw NumericalError(
          "could not sample a covering retention mask; raise observation_density");
    }
  }

  std::vector<Observation> observations;
  observations.reserve(static_cast<std::size_t>(M) * N *
                       spec.responses_per_pair);
  for (std::uint32_t i = 0; i < M; ++i) {
    for (std::uint32_t j = 0; j < N; ++j) {
      if (!mask[static_cast<std::size_t>(i) * N + j]) continue;
      for (std::uint32_t r = 0; r < spec.responses_per_pair; ++r) {
        const double p =
            sample_response(truth.abilities[i], truth.difficulties[j],
                            truth.discriminations[j], rng);
        observations.push_back({i, j, p, 1});
      }
    }
  }
  return SyntheticDataset{ResponseMatrix(M, N, std::move(observations)),
                          std::move(truth)};
}

void ClassifierResponseSet::validate(double simplex_tolerance) const {
  if (num_classifiers == 0 || num_instances == 0 || num_classes < 2) {
    throw InvalidParameter("classifier response set needs M, N >= 1 and K >= 2");
  }
  if (probs.size() != static_cast<std::size_t>(num_classifiers) *
                          num_instances * num_classes) {
    throw LengthMismatch("probability array does not match the dimensions");
  }
  if (labels.size() != num_instances) {
    throw LengthMismatch("labels do not match num_instances");
  }
  for (std::uint32_t label : labels) {
    if (label >= num_classes) {
      throw InvalidParameter("label outside [0, num_classes)");
    }
  }
  for (std::uint32_t i = 0; i < num_classifiers; ++i) {
    for (std::uint32_t j = 0; j < num_instances; ++j) {
      double sum = 0.0;
      for (std::uint32_t k = 0; k < num_classes; ++k) {
        const double p = prob(i, j, k);
        if (!(p >= 0.0 && p <= 1.0)) {
          throw InvalidParameter("class probability outside [0, 1]");
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > simplex_tolerance) {
        throw InvalidParameter("class probabilities of classifier " +
                               std::to_string(i) + ", instance " +
                               std::to_string(j) + " sum to " +
                               std::to_string(sum));
      }
    }
  }
}

ResponseMatrix to_response_matrix(const ClassifierResponseSet& c) {
  c.validate();
  std::vector<Observation> observations;
  observations.reserve(static_cast<std::size_t>(c.num_classifiers) *
                       c.num_instances);
  for (std::uint32_t i = 0; i < c.num_classifiers; ++i) {
    for (std::uint32_t j = 0; j < c.num_instances; ++j) {
      observations.push_back({i, j, c.prob(i, j, c.labels[j]), 1});
    }
  }
  return ResponseMatrix(c.num_classifiers, c.num_instances,
                        std::move(observations));
}

std::uint32_t NoiseInjection::flip_count() const {
  return static_cast<std::uint32_t>(
      std::count(flipped.begin(), flipped.end(), true));
}

NoiseInjection inject_label_noise(std::span<const std::uint32_t> labels,
                                  double fraction, std::uint32_t num_classes,
                                  std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw InvalidParameter("noise fraction must lie in [0, 1]");
  }
  if (num_classes < 2) throw InvalidParameter("need at least two classes");
  NoiseInjection result;
  result.labels.assign(labels.begin(), labels.end());
  result.flipped.assign(labels.size(), false);
  const auto n = static_cast<std::uint32_t>(labels.size());
  const auto flips = static_cast<std::uint32_t>(
      std::lround(fraction * static_cast<double>(n)));
  if (flips == 0) return result;
  Rng rng(seed);
  for (std::uint32_t idx : rng.sample_without_replacement(n, flips)) {
    std::uint32_t replacement =
        static_cast<std::uint32_t>(rng.below(num_classes - 1));
    if (replacement >= result.labels[idx]) ++replacement;
    result.labels[idx] = replacement;
    result.flipped[idx] = true;
  }
  return result;
}

// The always-positive/always-negative reference members are available but
// not part of the default panel: a classifier whose responses are a pure
// function of the label has a label-mirror-symmetric likelihood, so its
// ability is unidentifiable and fits of panels containing one bifurcate.
PanelSpec PanelSpec::default_panel() {
  using Kind = PanelMember::Kind;
  PanelSpec spec;
  spec.members = {
      {Kind::kSkilled, 0.82, 1.6},  {Kind::kSkilled, 0.79, 2.0},
      {Kind::kSkilled, 0.76, 1.4},  {Kind::kSkilled, 0.74, 2.4},
      {Kind::kSkilled, 0.72, 1.8},  {Kind::kSkilled, 0.70, 2.8},
      {Kind::kSkilled, 0.68, 1.6},  {Kind::kSkilled, 0.65, 2.2},
      {Kind::kSkilled, 0.63, 3.0},  {Kind::kSkilled, 0.60, 1.9},
      {Kind::kSkilled, 0.57, 2.5},  {Kind::kConstant},
  };
  return spec;
}

void PanelSpec::validate() const {
  if (members.empty()) throw InvalidParameter("panel needs at least one member");
  for (const PanelMember& member : members) {
    if (member.kind != PanelMember::Kind::kSkilled) continue;
    if (!(member.skill > 0.0 && member.skill < 1.0)) {
      throw InvalidParameter("panel member skill must lie in (0, 1)");
    }
    if (!(member.temperature > 0.0)) {
      throw InvalidParameter("panel member temperature must be positive");
    }
  }
}

ClassifierResponseSet simulate_classifier_panel(std::uint32_t num_instances,
                                                std::uint32_t num_classes,
                                                const PanelSpec& panel,
                                                std::uint64_t seed) {
  panel.validate();
  if (num_instances < 1) throw InvalidParameter("need at least one instance");
  if (num_classes < 2) throw InvalidParameter("need at least two classes");
  Rng rng(seed);

  ClassifierResponseSet set;
  set.num_classifiers = static_cast<std::uint32_t>(panel.members.size());
  set.num_instances = num_instances;
  set.num_classes = num_classes;
  set.labels.resize(num_instances);
  set.probs.assign(static_cast<std::size_t>(set.num_classifiers) *
                       num_instances * num_classes,
                   0.0);

  // Latent signed score per instance; the sign carries the binary label and
  // the magnitude is the distance from the decision boundary. Classes are
  // exactly balanced: half the instances (shuffled) get each sign.
  std::vector<double> scores(num_instances);
  if (num_classes == 2) {
    std::vector<std::uint32_t> order(num_instances);
    for (std::uint32_t j = 0; j < num_instances; ++j) order[j] = j;
    rng.shuffle(order);
    for (std::uint32_t j = 0; j < num_instances; ++j) {
      const double sign = order[j] < num_instances / 2 ? -1.0 : 1.0;
      scores[j] = sign * rng.uniform_open();
      set.labels[j] = scores[j] > 0.0 ? 1u : 0u;
    }
  } else {
    for (std::uint32_t j = 0; j < num_instances; ++j) {
      scores[j] = 2.0 * rng.uniform() - 1.0;
      set.labels[j] = static_cast<std::uint32_t>(rng.below(num_classes));
    }
  }

  std::vector<double> logits(num_classes);
  for (std::uint32_t i = 0; i < set.num_classifiers; ++i) {
    const PanelMember& member = panel.members[i];
    for (std::uint32_t j = 0; j < num_instances; ++j) {
      double* row = &set.probs[(static_cast<std::size_t>(i) * num_instances +
                                j) *
                               num_classes];
      switch (member.kind) {
        case PanelMember::Kind::kConstant:
          for (std::uint32_t k = 0; k < num_classes; ++k) {
            row[k] = 1.0 / num_classes;
          }
          break;
        case PanelMember::Kind::kAlwaysPositive:
          row[1] = 1.0;
          break;
        case PanelMember::Kind::kAlwaysNegative:
          row[0] = 1.0;
          break;
        case PanelMember::Kind::kSkilled: {
          const double noise = (1.0 - member.skill) / member.skill;
          if (num_classes == 2) {
            const double perceived = scores[j] + noise * rng.normal();
            const double p1 = logistic(4.0 * perceived / member.temperature);
            row[0] = 1.0 - p1;
            row[1] = p1;
          } else {
            double max_logit = -1e300;
            for (std::uint32_t k = 0; k < num_classes; ++k) {
              const double signal =
                  k == set.labels[j] ? 4.0 * std::abs(scores[j]) : 0.0;
              logits[k] = (signal + noise * rng.normal()) / member.temperature;
              max_logit = std::max(max_logit, logits[k]);
            }
            double sum = 0.0;
            for (std::uint32_t k = 0; k < num_classes; ++k) {
              row[k] = std::exp(logits[k] - max_logit);
              sum += row[k];
            }
            for (std::uint32_t k = 0; k < num_classes; ++k) row[k] /= sum;
          }
          break;
        }
      }
    }
  }
  set.validate();
  return set;
}

}  // namespace beta3irt
