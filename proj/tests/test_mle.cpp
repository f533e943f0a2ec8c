#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "beta3irt/errors.hpp"
#include "beta3irt/evaluation.hpp"
#include "beta3irt/icc.hpp"
#include "beta3irt/math.hpp"
#include "beta3irt/mle.hpp"
#include "beta3irt/rng.hpp"

using namespace beta3irt;

namespace {

ResponseMatrix tiny_matrix() {
  return ResponseMatrix(2, 3,
                        {{0, 0, 1.0},
                         {0, 1, 1.0},
                         {0, 2, 0.0},
                         {1, 0, 0.9},
                         {1, 1, 0.2},
                         {1, 2, 0.6}});
}

// Responses drawn from the Beta response model for fixed true parameters;
// the generation path is independent of the fitter.
ResponseMatrix generate_from(const std::vector<double>& abilities,
                             const std::vector<double>& difficulties,
                             const std::vector<double>& discriminations,
                             Rng& rng) {
  std::vector<Observation> observations;
  for (std::uint32_t i = 0; i < abilities.size(); ++i) {
    for (std::uint32_t j = 0; j < difficulties.size(); ++j) {
      const BetaShape shape =
          beta_shape(Ability(abilities[i]), Difficulty(difficulties[j]),
                     Discrimination(discriminations[j]));
      observations.push_back({i, j, rng.beta(shape.alpha, shape.beta), 1});
    }
  }
  return ResponseMatrix(static_cast<std::uint32_t>(abilities.size()),
                        static_cast<std::uint32_t>(difficulties.size()),
                        std::move(observations));
}

}  // namespace

TEST_CASE("count statistics with threshold and zero-lift") {
  const ResponseMatrix data(2, 2,
                            {{0, 0, 1.0},
                             {0, 1, 1.0},
                             {1, 0, 0.9},
                             {1, 1, 0.2},
                             {0, 0, 0.0}});
  const CountInit counts = count_statistics(data);
  // Respondent 0 answered {1, 1, 0}: two correct, one incorrect.
  CHECK(counts.correct_per_respondent[0] == 2);
  CHECK(counts.incorrect_per_respondent[0] == 1);
  // Item 0 answered {1, 0.9, 0}: two correct at threshold 0.5, one incorrect.
  CHECK(counts.correct_per_item[0] == 2);
  CHECK(counts.incorrect_per_item[0] == 1);
  // Respondent 1 answered {0.9, 0.2}.
  CHECK(counts.correct_per_respondent[1] == 1);
  CHECK(counts.incorrect_per_respondent[1] == 1);

  const ResponseMatrix all_correct(1, 2, {{0, 0, 1.0}, {0, 1, 1.0}});
  const CountInit lifted = count_statistics(all_correct);
  CHECK(lifted.correct_per_respondent[0] == 2);
  CHECK(lifted.incorrect_per_respondent[0] == 1);  // lifted from zero
}

TEST_CASE("initialization is deterministic and follows the count priors") {
  MleConfig cfg;
  cfg.seed = 42;
  CountInit counts;
  counts.correct_per_respondent = {100};
  counts.incorrect_per_respondent = {1};
  counts.correct_per_item = {3, 1};
  counts.incorrect_per_item = {1, 3};

  Rng rng_a(cfg.seed);
  Rng rng_b(cfg.seed);
  const ModelParams a = initialize_params(counts, cfg, rng_a);
  const ModelParams b = initialize_params(counts, cfg, rng_b);
  CHECK(a.abilities == b.abilities);
  CHECK(a.difficulties == b.difficulties);
  CHECK(a.discriminations == b.discriminations);

  // Beta(100, 1) mass above 0.9 is 1 - 0.9^100, about 0.99997.
  Rng rng(7);
  int high = 0;
  const int draws = 2000;
  for (int k = 0; k < draws; ++k) {
    const ModelParams p = initialize_params(counts, cfg, rng);
    if (p.abilities[0] > 0.9) ++high;
  }
  CHECK(static_cast<double>(high) / draws > 0.95);
}

TEST_CASE("2PL-ND initialization is centered") {
  MleConfig cfg;
  cfg.family = Family::kTwoPlNd;
  cfg.seed = 11;
  CountInit counts;
  counts.correct_per_respondent.assign(1000, 1);
  counts.incorrect_per_respondent.assign(1000, 1);
  counts.correct_per_item = {1};
  counts.incorrect_per_item = {1};
  Rng rng(cfg.seed);
  const ModelParams params = initialize_params(counts, cfg, rng);
  const double mean =
      std::accumulate(params.abilities.begin(), params.abilities.end(), 0.0) /
      static_cast<double>(params.abilities.size());
  CHECK(std::abs(mean) < 0.2);
}

TEST_CASE("log loss worked examples") {
  CHECK(log_loss(std::vector<double>{0.5}, std::vector<double>{0.5}) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-13));
  CHECK(log_loss(std::vector<double>{0.999}, std::vector<double>{1.0}) ==
        doctest::Approx(0.0010005003335835335).epsilon(1e-10));
  // Cross-entropy is minimized where the prediction matches the target.
  const std::vector<double> observed{0.3};
  const double at_target = log_loss(std::vector<double>{0.3}, observed);
  for (double q = 0.05; q < 1.0; q += 0.05) {
    if (std::abs(q - 0.3) < 1e-12) continue;
    CHECK(at_target < log_loss(std::vector<double>{q}, observed));
  }
  CHECK_THROWS_AS(log_loss(std::vector<double>{0.5, 0.5}, observed),
                  LengthMismatch);
}

TEST_CASE("analytic batch gradients match central differences") {
  Rng rng(2024);
  for (const Family family : {Family::kBeta3, Family::kTwoPlNd}) {
    for (int config = 0; config < 100; ++config) {
      const std::uint32_t num_respondents = 2 + config % 3;
      const std::uint32_t num_items = 2 + config % 4;
      MleState state;
      state.family = family;
      for (std::uint32_t i = 0; i < num_respondents; ++i) {
        state.ability_raw.push_back(-1.5 + 3.0 * rng.uniform());
      }
      for (std::uint32_t j = 0; j < num_items; ++j) {
        state.difficulty_raw.push_back(-1.5 + 3.0 * rng.uniform());
        const double magnitude = 0.3 + 1.7 * rng.uniform();
        state.discrimination.push_back(rng.uniform() < 0.5 ? magnitude
                                                           : -magnitude);
      }
      std::vector<Observation> batch;
      for (std::uint32_t i = 0; i < num_respondents; ++i) {
        for (std::uint32_t j = 0; j < num_items; ++j) {
          batch.push_back({i, j, 0.05 + 0.9 * rng.uniform(),
                           1 + static_cast<std::uint32_t>(rng.below(3))});
        }
      }
      const double eps = 1e-3;
      const BatchGradient grad = batch_loss_gradient(state, batch, eps);

      const double h = 1e-5;
      auto check_coordinate = [&](std::vector<double>& coords, std::size_t k,
                                  double analytic) {
        const double saved = coords[k];
        coords[k] = saved + h;
        const double up = batch_loss(state, batch, eps);
        coords[k] = saved - h;
        const double down = batch_loss(state, batch, eps);
        coords[k] = saved;
        const double fd = (up - down) / (2.0 * h);
        CHECK(std::abs(analytic - fd) <=
              1e-4 * std::max({std::abs(analytic), std::abs(fd), 1e-7}));
      };
      for (std::size_t k = 0; k < state.ability_raw.size(); ++k) {
        check_coordinate(state.ability_raw, k, grad.d_ability[k]);
      }
      for (std::size_t k = 0; k < state.difficulty_raw.size(); ++k) {
        check_coordinate(state.difficulty_raw, k, grad.d_difficulty[k]);
      }
      for (std::size_t k = 0; k < state.discrimination.size(); ++k) {
        check_coordinate(state.discrimination, k, grad.d_discrimination[k]);
      }
    }
  }
}

TEST_CASE("fit keeps Beta3 parameters strictly inside the unit interval") {
  MleConfig cfg;
  cfg.iterations = 400;
  cfg.batch_size = 4;
  cfg.seed = 5;
  const MleFit fit = fit_mle(tiny_matrix(), cfg);
  for (const double v : fit.params.abilities) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
  for (const double v : fit.params.difficulties) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("fit is bitwise deterministic under a fixed seed") {
  MleConfig cfg;
  cfg.iterations = 200;
  cfg.batch_size = 3;
  cfg.seed = 99;
  const MleFit a = fit_mle(tiny_matrix(), cfg);
  const MleFit b = fit_mle(tiny_matrix(), cfg);
  REQUIRE(a.loss_trace.size() == b.loss_trace.size());
  for (std::size_t k = 0; k < a.loss_trace.size(); ++k) {
    CHECK(a.loss_trace[k] == b.loss_trace[k]);
  }
  CHECK(a.params.abilities == b.params.abilities);
  CHECK(a.params.difficulties == b.params.difficulties);
  CHECK(a.params.discriminations == b.params.discriminations);
}

TEST_CASE("single observation at one half puts the curve through its midpoint") {
  const ResponseMatrix data(1, 1, {{0, 0, 0.5}});
  MleConfig cfg;
  cfg.iterations = 3000;
  cfg.batch_size = 1;
  cfg.seed = 3;
  cfg.fixed_discrimination = 1.0;
  const MleFit fit = fit_mle(data, cfg);
  CHECK(fit.params.discriminations[0] == 1.0);
  const double prediction =
      icc_beta3(fit.params.abilities[0], fit.params.difficulties[0], 1.0);
  CHECK(std::abs(prediction - 0.5) < 5e-3);
  CHECK(std::abs(fit.params.abilities[0] - fit.params.difficulties[0]) < 0.05);
}

TEST_CASE("full-batch loss is non-increasing in aggregate") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(derive_seed(888, seed));
    std::vector<double> abilities(5);
    std::vector<double> difficulties(8);
    std::vector<double> discriminations(8);
    for (double& v : abilities) v = 0.1 + 0.8 * rng.uniform();
    for (double& v : difficulties) v = 0.1 + 0.8 * rng.uniform();
    for (double& v : discriminations) v = rng.normal(1.0, 1.0);
    const ResponseMatrix data =
        generate_from(abilities, difficulties, discriminations, rng);
    MleConfig cfg;
    cfg.iterations = 300;
    cfg.batch_size = 1 << 20;  // full batch
    cfg.seed = seed;
    const MleFit fit = fit_mle(data, cfg);
    CHECK(fit.loss_trace.back() <= fit.loss_trace.front());
  }
}

TEST_CASE("predict follows the family and validates indices") {
  ModelParams params;
  params.family = Family::kBeta3;
  params.abilities = {0.4};
  params.difficulties = {0.4, 0.8};
  params.discriminations = {2.0, 1.0};
  const std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs{{0, 0}};
  CHECK(predict(params, pairs)[0] == doctest::Approx(0.5));
  CHECK(predict(params, {}).empty());
  CHECK_THROWS_AS(
      predict(params,
              std::vector<std::pair<std::uint32_t, std::uint32_t>>{{0, 2}}),
      IndexOutOfRange);

  ModelParams nd;
  nd.family = Family::kTwoPlNd;
  nd.abilities = {0.7};
  nd.difficulties = {0.7};
  nd.discriminations = {1.3};
  CHECK(predict(nd, pairs)[0] == doctest::Approx(0.5));
}

TEST_CASE("fitted abilities preserve well-separated true rankings") {
  const std::vector<double> true_abilities{0.1, 0.3, 0.5, 0.7, 0.9};
  int perfect = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(derive_seed(4040, seed));
    std::vector<double> difficulties(200);
    std::vector<double> discriminations(200);
    for (double& v : difficulties) v = 0.05 + 0.9 * rng.uniform();
    for (double& v : discriminations) v = rng.normal(1.0, 1.0);
    const ResponseMatrix data =
        generate_from(true_abilities, difficulties, discriminations, rng);
    MleConfig cfg;
    cfg.iterations = 1200;
    cfg.batch_size = 1 << 20;
    cfg.seed = seed;
    const MleFit fit = fit_mle(data, cfg);
    bool ordered = true;
    for (std::size_t i = 1; i < fit.params.abilities.size(); ++i) {
      ordered &= fit.params.abilities[i] > fit.params.abilities[i - 1];
    }
    perfect += ordered;
  }
  CHECK(perfect >= 9);
}

TEST_CASE("ability recovery at the studied scale") {
  Rng rng(515);
  std::vector<double> abilities(20);
  std::vector<double> difficulties(100);
  std::vector<double> discriminations(100);
  for (double& v : abilities) v = 0.02 + 0.96 * rng.uniform();
  for (double& v : difficulties) v = 0.02 + 0.96 * rng.uniform();
  for (double& v : discriminations) v = rng.normal(1.0, 1.0);
  const ResponseMatrix data =
      generate_from(abilities, difficulties, discriminations, rng);
  MleConfig cfg;
  cfg.seed = 1;
  const MleFit fit = fit_mle(data, cfg);
  CHECK(spearman(fit.params.abilities, abilities) >= 0.8);
}
