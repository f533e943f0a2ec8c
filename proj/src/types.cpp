#include "beta3irt/types.hpp"

#include <cmath>
#include <string>

#include "beta3irt/errors.hpp"

namespace beta3irt {

namespace {

double checked_unit_interval(double value, const char* name) {
  if (!(value >= kUnitIntervalMargin && value <= 1.0 - kUnitIntervalMargin)) {
    throw InvalidParameter(std::string(name) + " must lie in [" +
                           std::to_string(kUnitIntervalMargin) + ", 1 - " +
                           std::to_string(kUnitIntervalMargin) + "], got " +
                           std::to_string(value));
  }
  return value;
}

}  // namespace

Ability::Ability(double value) : value_(checked_unit_interval(value, "ability")) {}

Difficulty::Difficulty(double value)
    : value_(checked_unit_interval(value, "difficulty")) {}

Discrimination::Discrimination(double value) : value_(value) {
  if (!std::isfinite(value)) {
    throw InvalidParameter("discrimination must be finite");
  }
}

BetaShape::BetaShape(double alpha_in, double beta_in)
    : alpha(alpha_in), beta(beta_in) {
  if (!(alpha > 0.0) || !(beta > 0.0)) {
    throw InvalidParameter("Beta shape parameters must be positive");
  }
}

ResponseMatrix::ResponseMatrix(std::uint32_t num_respondents,
                               std::uint32_t num_items,
                               std::vector<Observation> observations)
    : num_respondents_(num_respondents),
      num_items_(num_items),
      observations_(std::move(observations)) {
  if (num_respondents_ == 0 || num_items_ == 0) {
    throw InvalidParameter("response matrix needs at least one respondent and one item");
  }
  std::vector<bool> respondent_seen(num_respondents_, false);
  std::vector<bool> item_seen(num_items_, false);
  for (std::size_t k = 0; k < observations_.size(); ++k) {
    const Observation& obs = observations_[k];
    if (obs.respondent >= num_respondents_ || obs.item >= num_items_) {
      throw IndexOutOfRange("observation " + std::to_string(k) +
                            " indexes outside the matrix");
    }
    if (!(obs.response >= 0.0 && obs.response <= 1.0)) {
      throw InvalidParameter("observation " + std::to_string(k) +
                             " has response outside [0, 1]");
    }
    if (obs.count == 0) {
      throw InvalidParameter("observation " + std::to_string(k) +
                             " has zero multiplicity");
    }
    respondent_seen[obs.respondent] = true;
    item_seen[obs.item] = true;
  }
  for (std::uint32_t i = 0; i < num_respondents_; ++i) {
    if (!respondent_seen[i]) {
      throw InvalidParameter("respondent " + std::to_string(i) +
                             " has no observations");
    }
  }
  for (std::uint32_t j = 0; j < num_items_; ++j) {
    if (!item_seen[j]) {
      throw InvalidParameter("item " + std::to_string(j) + " has no observations");
    }
  }
}

std::uint64_t ResponseMatrix::total_count() const {
  std::uint64_t total = 0;
  for (const Observation& obs : observations_) total += obs.count;
  return total;
}

void ModelParams::validate() const {
  if (difficulties.size() != discriminations.size()) {
    throw InvalidParameter("difficulties and discriminations must have equal length");
  }
  if (abilities.empty() || difficulties.empty()) {
    throw InvalidParameter("model parameters must be non-empty");
  }
  for (double a : discriminations) {
    if (!std::isfinite(a)) throw InvalidParameter("non-finite discrimination");
  }
  if (family == Family::kBeta3) {
    for (double v : abilities) checked_unit_interval(v, "ability");
    for (double v : difficulties) checked_unit_interval(v, "difficulty");
  } else {
    for (double v : abilities) {
      if (!std::isfinite(v)) throw InvalidParameter("non-finite ability");
    }
    for (double v : difficulties) {
      if (!std::isfinite(v)) throw InvalidParameter("non-finite difficulty");
    }
  }
}

}  // namespace beta3irt
