#pragma once

#include <cstdint>
#include <vector>

namespace beta3irt {

/// Tightest admissible distance of an ability/difficulty from {0, 1}.
/// Values outside [margin, 1 - margin] are rejected, not clipped.
inline constexpr double kUnitIntervalMargin = 1e-6;

/// Latent respondent skill on the open unit interval.
class Ability {
 public:
  explicit Ability(double value);
  double value() const { return value_; }

 private:
  double value_;
};

/// Latent item location on the open unit interval; the expected response is
/// 0.5 where ability equals difficulty.
class Difficulty {
 public:
  explicit Difficulty(double value);
  double value() const { return value_; }

 private:
  double value_;
};

/// Item discrimination: the power exponent of the ability/difficulty ratios.
/// Any finite sign; a = 0 yields a flat curve and only the ICC inversion
/// rejects it.
class Discrimination {
 public:
  explicit Discrimination(double value);
  double value() const { return value_; }

 private:
  double value_;
};

/// Shape pair of the response distribution for one (respondent, item) pair.
struct BetaShape {
  double alpha;
  double beta;

  BetaShape(double alpha, double beta);
};

/// One observed response; `count` is the multiplicity of identical triples.
struct Observation {
  std::uint32_t respondent;
  std::uint32_t item;
  double response;
  std::uint32_t count = 1;
};

/// Sparse response observations. Invariants: indices in bounds, responses in
/// [0, 1], every respondent and every item observed at least once.
class ResponseMatrix {
 public:
  ResponseMatrix(std::uint32_t num_respondents, std::uint32_t num_items,
                 std::vector<Observation> observations);

  std::uint32_t num_respondents() const { return num_respondents_; }
  std::uint32_t num_items() const { return num_items_; }
  const std::vector<Observation>& observations() const { return observations_; }

  /// Total multiplicity over all observations.
  std::uint64_t total_count() const;

 private:
  std::uint32_t num_respondents_;
  std::uint32_t num_items_;
  std::vector<Observation> observations_;
};

enum class Family { kBeta3, kTwoPlNd };

/// Point estimates for either model family. Beta3 abilities/difficulties obey
/// the open-interval margin; 2PL-ND ones are unbounded reals.
struct ModelParams {
  Family family = Family::kBeta3;
  std::vector<double> abilities;        // one per respondent
  std::vector<double> difficulties;     // one per item
  std::vector<double> discriminations;  // one per item

  std::uint32_t num_respondents() const {
    return static_cast<std::uint32_t>(abilities.size());
  }
  std::uint32_t num_items() const {
    return static_cast<std::uint32_t>(difficulties.size());
  }

  /// Throws InvalidParameter if lengths disagree or Beta3 values leave the
  /// admissible interval.
  void validate() const;
};

}  // namespace beta3irt
