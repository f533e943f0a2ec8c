#include "beta3irt/mle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "beta3irt/errors.hpp"
#include "beta3irt/icc.hpp"
#include "beta3irt/math.hpp"

namespace beta3irt {

namespace {

// logit(1 - 1e-6) rounded inward; keeps logistic(raw) inside the admissible
// interval for Ability/Difficulty.
constexpr double kRawBound = 13.8155;

double clamp_unit(double v) {
  return std::clamp(v, kUnitIntervalMargin, 1.0 - kUnitIntervalMargin);
}

double pointwise_loss(double p_hat, double observed) {
  double loss = 0.0;
  if (observed > 0.0) loss -= observed * std::log(p_hat);
  if (observed < 1.0) loss -= (1.0 - observed) * std::log1p(-p_hat);
  return loss;
}

}  // namespace

void MleConfig::validate() const {
  if (iterations < 1) throw InvalidParameter("iterations must be >= 1");
  if (batch_size < 1) throw InvalidParameter("batch_size must be >= 1");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 0.1)) {
    throw InvalidParameter("clip_epsilon must lie in (0, 0.1)");
  }
  if (lr_schedule == LrSchedule::kAdaptiveInvSqrt && !(lr_scale > 0.0)) {
    throw InvalidParameter("lr_scale must be positive");
  }
  if (lr_schedule == LrSchedule::kConstant && !(lr_constant > 0.0)) {
    throw InvalidParameter("lr_constant must be positive");
  }
  if (fixed_discrimination && !std::isfinite(*fixed_discrimination)) {
    throw InvalidParameter("fixed_discrimination must be finite");
  }
}

CountInit count_statistics(const ResponseMatrix& data, double threshold) {
  CountInit counts;
  counts.correct_per_respondent.assign(data.num_respondents(), 0);
  counts.incorrect_per_respondent.assign(data.num_respondents(), 0);
  counts.correct_per_item.assign(data.num_items(), 0);
  counts.incorrect_per_item.assign(data.num_items(), 0);
  for (const Observation& obs : data.observations()) {
    if (obs.response >= threshold) {
      counts.correct_per_respondent[obs.respondent] += obs.count;
      counts.correct_per_item[obs.item] += obs.count;
    } else {
      counts.incorrect_per_respondent[obs.respondent] += obs.count;
      counts.incorrect_per_item[obs.item] += obs.count;
    }
  }
  auto lift = [](std::vector<std::uint32_t>& v) {
    for (std::uint32_t& c : v) c = std::max(c, 1u);
  };
  lift(counts.correct_per_respondent);
  lift(counts.incorrect_per_respondent);
  lift(counts.correct_per_item);
  lift(counts.incorrect_per_item);
  return counts;
}

ModelParams initialize_params(const CountInit& counts, const MleConfig& cfg,
                              Rng& rng) {
  const std::size_t num_respondents = counts.correct_per_respondent.size();
  const std::size_t num_items = counts.correct_per_item.size();
  ModelParams params;
  params.family = cfg.family;
  params.abilities.resize(num_respondents);
  params.difficulties.resize(num_items);
  params.discriminations.resize(num_items);
  if (cfg.family == Family::kBeta3) {
    for (std::size_t i = 0; i < num_respondents; ++i) {
      params.abilities[i] =
          clamp_unit(rng.beta(counts.correct_per_respondent[i],
                              counts.incorrect_per_respondent[i]));
    }
    for (std::size_t j = 0; j < num_items; ++j) {
      params.difficulties[j] = clamp_unit(
          rng.beta(counts.correct_per_item[j], counts.incorrect_per_item[j]));
    }
  } else {
    for (std::size_t i = 0; i < num_respondents; ++i) {
      params.abilities[i] = rng.normal();
    }
    for (std::size_t j = 0; j < num_items; ++j) {
      params.difficulties[j] = rng.normal();
    }
  }
  if (cfg.fixed_discrimination) {
    std::fill(params.discriminations.begin(), params.discriminations.end(),
              *cfg.fixed_discrimination);
  } else {
    for (std::size_t j = 0; j < num_items; ++j) {
      params.discriminations[j] = rng.normal(1.0, 1.0);
    }
  }
  return params;
}

double log_loss(std::span<const double> predicted,
                std::span<const double> observed) {
  if (predicted.size() != observed.size()) {
    throw LengthMismatch("log_loss requires equally long lists, got " +
                         std::to_string(predicted.size()) + " and " +
                         std::to_string(observed.size()));
  }
  if (predicted.empty()) throw InvalidParameter("log_loss of empty lists");
  double total = 0.0;
  for (std::size_t k = 0; k < predicted.size(); ++k) {
    total += pointwise_loss(predicted[k], observed[k]);
  }
  return total / static_cast<double>(predicted.size());
}

MleState MleState::from_params(const ModelParams& params) {
  MleState state;
  state.family = params.family;
  state.ability_raw = params.abilities;
  state.difficulty_raw = params.difficulties;
  state.discrimination = params.discriminations;
  if (params.family == Family::kBeta3) {
    for (double& v : state.ability_raw) v = logit(v);
    for (double& v : state.difficulty_raw) v = logit(v);
  }
  return state;
}

ModelParams MleState::to_params() const {
  ModelParams params;
  params.family = family;
  params.abilities = ability_raw;
  params.difficulties = difficulty_raw;
  params.discriminations = discrimination;
  if (family == Family::kBeta3) {
    for (double& v : params.abilities) v = clamp_unit(logistic(v));
    for (double& v : params.difficulties) v = clamp_unit(logistic(v));
  }
  return params;
}

double batch_loss(const MleState& state, std::span<const Observation> batch,
                  double clip_epsilon) {
  if (batch.empty()) throw InvalidParameter("empty batch");
  double total = 0.0;
  double weight = 0.0;
  // Both families predict logistic(a * (x_theta - x_delta)); for Beta3 the
  // raw coordinates are log-odds, which makes the two expressions coincide.
  for (const Observation& obs : batch) {
    const double z = state.discrimination[obs.item] *
                     (state.ability_raw[obs.respondent] -
                      state.difficulty_raw[obs.item]);
    const double p_hat =
        std::clamp(logistic(z), clip_epsilon, 1.0 - clip_epsilon);
    total += obs.count * pointwise_loss(p_hat, obs.response);
    weight += obs.count;
  }
  return total / weight;
}

BatchGradient batch_loss_gradient(const MleState& state,
                                  std::span<const Observation> batch,
                                  double clip_epsilon) {
  if (batch.empty()) throw InvalidParameter("empty batch");
  BatchGradient grad;
  grad.d_ability.assign(state.ability_raw.size(), 0.0);
  grad.d_difficulty.assign(state.difficulty_raw.size(), 0.0);
  grad.d_discrimination.assign(state.discrimination.size(), 0.0);
  double total = 0.0;
  double weight = 0.0;
  for (const Observation& obs : batch) {
    const double diff =
        state.ability_raw[obs.respondent] - state.difficulty_raw[obs.item];
    const double a = state.discrimination[obs.item];
    const double p_hat = logistic(a * diff);
    const double clipped =
        std::clamp(p_hat, clip_epsilon, 1.0 - clip_epsilon);
    total += obs.count * pointwise_loss(clipped, obs.response);
    weight += obs.count;
    if (p_hat < clip_epsilon || p_hat > 1.0 - clip_epsilon) continue;
    // d loss / d z for the sigmoid cross-entropy.
    const double dz = obs.count * (p_hat - obs.response);
    grad.d_ability[obs.respondent] += dz * a;
    grad.d_difficulty[obs.item] -= dz * a;
    grad.d_discrimination[obs.item] += dz * diff;
  }
  grad.loss = total / weight;
  const double inv_weight = 1.0 / weight;
  for (double& g : grad.d_ability) g *= inv_weight;
  for (double& g : grad.d_difficulty) g *= inv_weight;
  for (double& g : grad.d_discrimination) g *= inv_weight;
  return grad;
}

MleFit fit_mle(const ResponseMatrix& data, const MleConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const CountInit counts = count_statistics(data);
  MleState state = MleState::from_params(initialize_params(counts, cfg, rng));

  const std::vector<Observation>& all = data.observations();
  std::vector<std::uint32_t> order(all.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    order[k] = static_cast<std::uint32_t>(k);
  }
  rng.shuffle(order);
  std::size_t cursor = 0;

  std::vector<Observation> batch;
  batch.reserve(std::min<std::size_t>(cfg.batch_size, all.size()));
  std::vector<double> trace;
  trace.reserve(cfg.iterations);

  for (std::uint32_t t = 1; t <= cfg.iterations; ++t) {
    if (cursor >= order.size()) {
      rng.shuffle(order);
      cursor = 0;
    }
    const std::size_t take =
        std::min<std::size_t>(cfg.batch_size, order.size() - cursor);
    batch.clear();
    for (std::size_t k = 0; k < take; ++k) {
      batch.push_back(all[order[cursor + k]]);
    }
    cursor += take;

    const BatchGradient grad =
        batch_loss_gradient(state, batch, cfg.clip_epsilon);
    trace.push_back(grad.loss);

    const double lr = cfg.lr_schedule == LrSchedule::kAdaptiveInvSqrt
                          ? cfg.lr_scale / std::sqrt(static_cast<double>(t))
                          : cfg.lr_constant;
    for (std::size_t i = 0; i < state.ability_raw.size(); ++i) {
      state.ability_raw[i] -= lr * grad.d_ability[i];
    }
    for (std::size_t j = 0; j < state.difficulty_raw.size(); ++j) {
      state.difficulty_raw[j] -= lr * grad.d_difficulty[j];
    }
    if (!cfg.fixed_discrimination) {
      for (std::size_t j = 0; j < state.discrimination.size(); ++j) {
        state.discrimination[j] -= lr * grad.d_discrimination[j];
      }
    }
    if (cfg.family == Family::kBeta3) {
      for (double& v : state.ability_raw) {
        v = std::clamp(v, -kRawBound, kRawBound);
      }
      for (double& v : state.difficulty_raw) {
        v = std::clamp(v, -kRawBound, kRawBound);
      }
    }
  }

  MleFit fit{state.to_params(), std::move(trace)};
  fit.params.validate();
  return fit;
}

std::vector<double> predict(
    const ModelParams& params,
    std::span<const std::pair<std::uint32_t, std::uint32_t>> pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& [respondent, item] : pairs) {
    if (respondent >= params.num_respondents() || item >= params.num_items()) {
      throw IndexOutOfRange("prediction pair (" + std::to_string(respondent) +
                            ", " + std::to_string(item) +
                            ") outside the fitted dimensions");
    }
    const double theta = params.abilities[respondent];
    const double delta = params.difficulties[item];
    const double a = params.discriminations[item];
    out.push_back(params.family == Family::kBeta3
                      ? icc_beta3(theta, delta, a)
                      : icc_2plnd(theta, delta, Discrimination(a)));
  }
  return out;
}

}  // namespace beta3irt
