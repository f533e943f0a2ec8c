#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "beta3irt/errors.hpp"
#include "beta3irt/evaluation.hpp"
#include "beta3irt/icc.hpp"
#include "beta3irt/io.hpp"
#include "beta3irt/mle.hpp"
#include "beta3irt/synth.hpp"
#include "beta3irt/types.hpp"
#include "beta3irt/vi.hpp"

namespace py = pybind11;
using namespace beta3irt;

namespace {

ResponseMatrix make_matrix(std::uint32_t num_respondents,
                           std::uint32_t num_items,
                           const std::vector<std::uint32_t>& respondents,
                           const std::vector<std::uint32_t>& items,
                           const std::vector<double>& responses) {
  if (respondents.size() != items.size() ||
      respondents.size() != responses.size()) {
    throw LengthMismatch("respondents, items and responses must align");
  }
  std::vector<Observation> observations;
  observations.reserve(respondents.size());
  for (std::size_t k = 0; k < respondents.size(); ++k) {
    observations.push_back({respondents[k], items[k], responses[k], 1});
  }
  return ResponseMatrix(num_respondents, num_items, std::move(observations));
}

MleConfig make_mle_config(const std::string& family, std::uint32_t iterations,
                          std::uint32_t batch_size, double lr_scale,
                          double clip_epsilon,
                          std::optional<double> fixed_discrimination,
                          std::uint64_t seed) {
  MleConfig cfg;
  cfg.family = family_from_string(family);
  cfg.iterations = iterations;
  cfg.batch_size = batch_size;
  cfg.lr_scale = lr_scale;
  cfg.clip_epsilon = clip_epsilon;
  cfg.fixed_discrimination = fixed_discrimination;
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

ViConfig make_vi_config(std::uint32_t outer_iterations,
                        std::uint32_t inner_max_steps, double inner_tolerance,
                        std::uint32_t mc_samples, double adam_step,
                        double sigma0, double clip_epsilon,
                        bool single_step_global, std::uint32_t basin_passes,
                        std::uint64_t seed) {
  ViConfig cfg;
  cfg.outer_iterations = outer_iterations;
  cfg.inner_max_steps = inner_max_steps;
  cfg.inner_tolerance = inner_tolerance;
  cfg.mc_samples = mc_samples;
  cfg.adam.step_size = adam_step;
  cfg.sigma0 = sigma0;
  cfg.clip_epsilon = clip_epsilon;
  cfg.single_step_global = single_step_global;
  cfg.basin_passes = basin_passes;
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

template <class Q>
std::vector<double> collect_mu(const std::vector<Q>& qs) {
  std::vector<double> out;
  out.reserve(qs.size());
  for (const Q& q : qs) out.push_back(q.mu);
  return out;
}

template <class Q>
std::vector<double> collect_sigma(const std::vector<Q>& qs) {
  std::vector<double> out;
  out.reserve(qs.size());
  for (const Q& q : qs) out.push_back(q.sigma());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Beta item-response modeling: ICC math, MLE/VI fitting, "
            "synthetic data and evaluation";

  py::register_exception<Error>(m, "Beta3IrtError");

  py::class_<ResponseMatrix>(m, "ResponseMatrix")
      .def(py::init(&make_matrix), py::arg("num_respondents"),
           py::arg("num_items"), py::arg("respondents"), py::arg("items"),
           py::arg("responses"))
      .def_property_readonly("num_respondents", &ResponseMatrix::num_respondents)
      .def_property_readonly("num_items", &ResponseMatrix::num_items)
      .def("observations", [](const ResponseMatrix& rm) {
        std::vector<std::tuple<std::uint32_t, std::uint32_t, double,
                               std::uint32_t>> out;
        out.reserve(rm.observations().size());
        for (const Observation& obs : rm.observations()) {
          out.emplace_back(obs.respondent, obs.item, obs.response, obs.count);
        }
        return out;
      });

  py::class_<ModelParams>(m, "ModelParams")
      .def_property_readonly(
          "family", [](const ModelParams& p) { return to_string(p.family); })
      .def_readonly("abilities", &ModelParams::abilities)
      .def_readonly("difficulties", &ModelParams::difficulties)
      .def_readonly("discriminations", &ModelParams::discriminations);

  py::class_<PosteriorSet>(m, "PosteriorSet")
      .def_property_readonly("ability_mu",
                             [](const PosteriorSet& q) {
                               return collect_mu(q.ability_q);
                             })
      .def_property_readonly("ability_sigma",
                             [](const PosteriorSet& q) {
                               return collect_sigma(q.ability_q);
                             })
      .def_property_readonly("difficulty_mu",
                             [](const PosteriorSet& q) {
                               return collect_mu(q.difficulty_q);
                             })
      .def_property_readonly("difficulty_sigma",
                             [](const PosteriorSet& q) {
                               return collect_sigma(q.difficulty_q);
                             })
      .def_property_readonly("discrimination_mu",
                             [](const PosteriorSet& q) {
                               return collect_mu(q.discrimination_q);
                             })
      .def_property_readonly("discrimination_sigma",
                             [](const PosteriorSet& q) {
                               return collect_sigma(q.discrimination_q);
                             })
      .def_readonly("elbo_trace", &PosteriorSet::elbo_trace);

  py::class_<ClassifierResponseSet>(m, "ClassifierResponseSet")
      .def_readonly("num_classifiers", &ClassifierResponseSet::num_classifiers)
      .def_readonly("num_instances", &ClassifierResponseSet::num_instances)
      .def_readonly("num_classes", &ClassifierResponseSet::num_classes)
      .def_readonly("probs", &ClassifierResponseSet::probs)
      .def_readonly("labels", &ClassifierResponseSet::labels);

  // Curve math.
  m.def(
      "beta_shape",
      [](double theta, double delta, double a) {
        const BetaShape shape =
            beta_shape(Ability(theta), Difficulty(delta), Discrimination(a));
        return std::make_pair(shape.alpha, shape.beta);
      },
      py::arg("theta"), py::arg("delta"), py::arg("a"));
  m.def(
      "icc_beta3",
      [](double theta, double delta, double a) {
        return icc_beta3(Ability(theta), Difficulty(delta), Discrimination(a));
      },
      py::arg("theta"), py::arg("delta"), py::arg("a"));
  m.def(
      "icc_2plnd",
      [](double theta, double delta, double a) {
        return icc_2plnd(theta, delta, Discrimination(a));
      },
      py::arg("theta"), py::arg("delta"), py::arg("a"));
  m.def(
      "icc_slope_at_difficulty",
      [](double delta, double a) {
        return icc_slope_at_difficulty(Difficulty(delta), Discrimination(a));
      },
      py::arg("delta"), py::arg("a"));
  m.def(
      "icc_regime",
      [](double a) { return std::string(to_string(icc_regime(Discrimination(a)))); },
      py::arg("a"));
  m.def(
      "ability_from_expected_response",
      [](double p_bar, double delta, double a) {
        return ability_from_expected_response(p_bar, Difficulty(delta),
                                              Discrimination(a))
            .value();
      },
      py::arg("p_bar"), py::arg("delta"), py::arg("a"));
  m.def(
      "beta_log_density",
      [](double p, double alpha, double beta) {
        return beta_log_density(p, BetaShape(alpha, beta));
      },
      py::arg("p"), py::arg("alpha"), py::arg("beta"));

  // Fitting.
  m.def(
      "fit_mle",
      [](const ResponseMatrix& data, const std::string& family,
         std::uint32_t iterations, std::uint32_t batch_size, double lr_scale,
         double clip_epsilon, std::optional<double> fixed_discrimination,
         std::uint64_t seed) {
        const MleFit fit = fit_mle(
            data, make_mle_config(family, iterations, batch_size, lr_scale,
                                  clip_epsilon, fixed_discrimination, seed));
        return std::make_pair(fit.params, fit.loss_trace);
      },
      py::arg("data"), py::arg("family") = "beta3",
      py::arg("iterations") = 2500, py::arg("batch_size") = 2000,
      py::arg("lr_scale") = 0.5, py::arg("clip_epsilon") = 1e-3,
      py::arg("fixed_discrimination") = std::nullopt, py::arg("seed") = 0);
  m.def(
      "fit_vi",
      [](const ResponseMatrix& data, std::uint32_t outer_iterations,
         std::uint32_t inner_max_steps, double inner_tolerance,
         std::uint32_t mc_samples, double adam_step, double sigma0,
         double clip_epsilon, bool single_step_global,
         std::uint32_t basin_passes, std::uint64_t seed) {
        return fit_vi(data, make_vi_config(outer_iterations, inner_max_steps,
                                           inner_tolerance, mc_samples,
                                           adam_step, sigma0, clip_epsilon,
                                           single_step_global, basin_passes,
                                           seed));
      },
      py::arg("data"), py::arg("outer_iterations") = 10,
      py::arg("inner_max_steps") = 500, py::arg("inner_tolerance") = 1e-4,
      py::arg("mc_samples") = 5, py::arg("adam_step") = 0.05,
      py::arg("sigma0") = 1.0, py::arg("clip_epsilon") = 1e-3,
      py::arg("single_step_global") = false, py::arg("basin_passes") = 1,
      py::arg("seed") = 0);
  m.def("posterior_point_estimates", &posterior_point_estimates, py::arg("q"));
  m.def(
      "predict",
      [](const ModelParams& params,
         const std::vector<std::pair<std::uint32_t, std::uint32_t>>& pairs) {
        return predict(params, pairs);
      },
      py::arg("params"), py::arg("pairs"));

  // Synthetic data.
  m.def(
      "sample_dataset",
      [](std::uint32_t num_respondents, std::uint32_t num_items,
         std::pair<double, double> ability_prior,
         std::pair<double, double> difficulty_prior,
         std::pair<double, double> discrimination_prior,
         std::uint32_t responses_per_pair, double observation_density,
         std::uint64_t seed) {
        GeneratorSpec spec;
        spec.num_respondents = num_respondents;
        spec.num_items = num_items;
        spec.ability_prior = {ability_prior.first, ability_prior.second};
        spec.difficulty_prior = {difficulty_prior.first,
                                 difficulty_prior.second};
        spec.discrimination_prior = {discrimination_prior.first,
                                     discrimination_prior.second};
        spec.responses_per_pair = responses_per_pair;
        spec.observation_density = observation_density;
        spec.seed = seed;
        SyntheticDataset dataset = sample_dataset(spec);
        return std::make_pair(std::move(dataset.responses),
                              std::move(dataset.ground_truth));
      },
      py::arg("num_respondents"), py::arg("num_items"),
      py::arg("ability_prior") = std::make_pair(1.0, 1.0),
      py::arg("difficulty_prior") = std::make_pair(1.0, 1.0),
      py::arg("discrimination_prior") = std::make_pair(1.0, 1.0),
      py::arg("responses_per_pair") = 1, py::arg("observation_density") = 1.0,
      py::arg("seed") = 0);
  m.def(
      "simulate_classifier_panel",
      [](std::uint32_t num_instances, std::uint32_t num_classes,
         std::optional<std::vector<std::tuple<std::string, double, double>>>
             members,
         std::uint64_t seed) {
        PanelSpec spec;
        if (!members) {
          spec = PanelSpec::default_panel();
        } else {
          for (const auto& [kind, skill, temperature] : *members) {
            PanelMember member;
            if (kind == "skilled") {
              member.kind = PanelMember::Kind::kSkilled;
              member.skill = skill;
              member.temperature = temperature;
            } else if (kind == "constant") {
              member.kind = PanelMember::Kind::kConstant;
            } else if (kind == "always_positive") {
              member.kind = PanelMember::Kind::kAlwaysPositive;
            } else if (kind == "always_negative") {
              member.kind = PanelMember::Kind::kAlwaysNegative;
            } else {
              throw InvalidParameter("unknown panel member kind '" + kind + "'");
            }
            spec.members.push_back(member);
          }
        }
        return simulate_classifier_panel(num_instances, num_classes, spec,
                                         seed);
      },
      py::arg("num_instances"), py::arg("num_classes") = 2,
      py::arg("members") = std::nullopt, py::arg("seed") = 0);
  m.def("to_response_matrix", &to_response_matrix, py::arg("panel"));
  m.def(
      "inject_label_noise",
      [](const std::vector<std::uint32_t>& labels, double fraction,
         std::uint32_t num_classes, std::uint64_t seed) {
        NoiseInjection result =
            inject_label_noise(labels, fraction, num_classes, seed);
        return std::make_pair(std::move(result.labels), std::move(result.flipped));
      },
      py::arg("labels"), py::arg("fraction"), py::arg("num_classes") = 2,
      py::arg("seed") = 0);

  // Evaluation.
  m.def(
      "wilcoxon_signed_rank",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        const WilcoxonResult result = wilcoxon_signed_rank(a, b);
        return std::make_pair(result.statistic, result.p_value);
      },
      py::arg("a"), py::arg("b"));
  m.def(
      "spearman",
      [](const std::vector<double>& x, const std::vector<double>& y) {
        return spearman(x, y);
      },
      py::arg("x"), py::arg("y"));
  m.def(
      "classifier_metrics",
      [](const ClassifierResponseSet& c, const std::vector<double>& abilities,
         double clip_epsilon) {
        py::list rows;
        for (const ClassifierMetrics& metric :
             classifier_metrics(c, abilities, clip_epsilon)) {
          py::dict row;
          row["avg_response"] = metric.avg_response;
          row["ability"] = metric.ability;
          row["accuracy"] = metric.accuracy;
          row["f1"] = metric.f1 ? py::cast(*metric.f1) : py::none();
          row["brier"] = metric.brier ? py::cast(*metric.brier) : py::none();
          row["log_loss"] = metric.log_loss;
          row["auc"] = metric.auc ? py::cast(*metric.auc) : py::none();
          rows.append(row);
        }
        return rows;
      },
      py::arg("panel"), py::arg("abilities"), py::arg("clip_epsilon") = 1e-3);
  m.def(
      "flag_noisy_items",
      [](const PosteriorSet& q, double threshold) {
        std::vector<std::pair<std::uint32_t, double>> out;
        for (const FlaggedItem& item : flag_noisy_items(q, threshold)) {
          out.emplace_back(item.item, item.posterior_mean_a);
        }
        return out;
      },
      py::arg("posteriors"), py::arg("threshold") = 0.0);

  m.attr("__version__") = kToolVersion;
}
