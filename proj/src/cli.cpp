#include "beta3irt/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "beta3irt/errors.hpp"
#include "beta3irt/evaluation.hpp"
#include "beta3irt/icc.hpp"
#include "beta3irt/io.hpp"
#include "beta3irt/mle.hpp"
#include "beta3irt/synth.hpp"
#include "beta3irt/types.hpp"
#include "beta3irt/vi.hpp"

namespace beta3irt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Manifest plumbing
// ---------------------------------------------------------------------------

struct CommandContext {
  fs::path out_dir;
  json inputs = json::object();   // path (as given) -> sha256
  json outputs = json::array();   // file names inside out_dir
};

void register_input(CommandContext& ctx, const std::string& path) {
  ctx.inputs[path] = sha256_file(path);
}

fs::path output_path(CommandContext& ctx, const std::string& name) {
  ctx.outputs.push_back(name);
  return ctx.out_dir / name;
}

void write_manifest(const CommandContext& ctx, const std::string& command,
                    const json& config, std::uint64_t seed) {
  json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["tool_version"] = kToolVersion;
  manifest["command"] = command;
  manifest["config"] = config;
  manifest["seed"] = seed;
  manifest["inputs"] = ctx.inputs;
  manifest["outputs"] = ctx.outputs;
  write_text_file(ctx.out_dir / "manifest.json", manifest.dump(2) + "\n");
}

void ensure_out_dir(const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) {
          return key == k;
        }) == allowed.end()) {
      throw ParseError(where + ": unknown field '" + key + "'");
    }
  }
}

// ---------------------------------------------------------------------------
// Config parsing helpers
// ---------------------------------------------------------------------------

GeneratorSpec generator_spec_from_json(const json& j, const std::string& where) {
  check_keys(j,
             {"kind", "num_respondents", "num_items", "ability_prior",
              "difficulty_prior", "discrimination_prior", "responses_per_pair",
              "observation_density", "seed"},
             where);
  GeneratorSpec spec;
  spec.num_respondents = j.at("num_respondents").get<std::uint32_t>();
  spec.num_items = j.at("num_items").get<std::uint32_t>();
  if (j.contains("ability_prior")) {
    check_keys(j["ability_prior"], {"alpha", "beta"}, where + ".ability_prior");
    spec.ability_prior = {j["ability_prior"].value("alpha", 1.0),
                          j["ability_prior"].value("beta", 1.0)};
  }
  if (j.contains("difficulty_prior")) {
    check_keys(j["difficulty_prior"], {"alpha", "beta"},
               where + ".difficulty_prior");
    spec.difficulty_prior = {j["difficulty_prior"].value("alpha", 1.0),
                             j["difficulty_prior"].value("beta", 1.0)};
  }
  if (j.contains("discrimination_prior")) {
    check_keys(j["discrimination_prior"], {"mean", "stddev"},
               where + ".discrimination_prior");
    spec.discrimination_prior = {j["discrimination_prior"].value("mean", 1.0),
                                 j["discrimination_prior"].value("stddev", 1.0)};
  }
  spec.responses_per_pair = j.value("responses_per_pair", 1u);
  spec.observation_density = j.value("observation_density", 1.0);
  spec.seed = j.value("seed", 0ull);
  try {
    spec.validate();
  } catch (const InvalidParameter& e) {
    throw ParseError(where + ": " + e.what());
  }
  return spec;
}

PanelSpec panel_members_from_json(const json& j, const std::string& where) {
  if (j.is_string() && j.get<std::string>() == "default") {
    return PanelSpec::default_panel();
  }
  if (!j.is_array()) {
    throw ParseError(where + ": members must be \"default\" or an array");
  }
  PanelSpec spec;
  for (const auto& member_json : j) {
    check_keys(member_json, {"kind", "skill", "temperature"}, where);
    PanelMember member;
    const std::string kind = member_json.at("kind").get<std::string>();
    if (kind == "skilled") {
      member.kind = PanelMember::Kind::kSkilled;
      member.skill = member_json.at("skill").get<double>();
      member.temperature = member_json.value("temperature", 1.0);
    } else if (kind == "constant") {
      member.kind = PanelMember::Kind::kConstant;
    } else if (kind == "always_positive") {
      member.kind = PanelMember::Kind::kAlwaysPositive;
    } else if (kind == "always_negative") {
      member.kind = PanelMember::Kind::kAlwaysNegative;
    } else {
      throw ParseError(where + ": unknown member kind '" + kind + "'");
    }
    spec.members.push_back(member);
  }
  try {
    spec.validate();
  } catch (const InvalidParameter& e) {
    throw ParseError(where + ": " + e.what());
  }
  return spec;
}

MleConfig mle_config_from_json(const json& j) {
  MleConfig cfg;
  cfg.family = family_from_string(j.value("family", "beta3"));
  cfg.iterations = j.value("iterations", 2500u);
  cfg.batch_size = j.value("batch_size", 2000u);
  cfg.lr_schedule = j.value("lr_constant", 0.0) > 0.0 ? LrSchedule::kConstant
                                                      : LrSchedule::kAdaptiveInvSqrt;
  cfg.lr_scale = j.value("lr_scale", 0.5);
  cfg.lr_constant = j.value("lr_constant", 0.0);
  cfg.clip_epsilon = j.value("clip_epsilon", 1e-3);
  cfg.seed = j.value("seed", 0ull);
  if (j.contains("fixed_discrimination") && !j["fixed_discrimination"].is_null()) {
    cfg.fixed_discrimination = j["fixed_discrimination"].get<double>();
  }
  cfg.validate();
  return cfg;
}

ViConfig vi_config_from_json(const json& j) {
  ViConfig cfg;
  cfg.outer_iterations = j.value("outer_iterations", 10u);
  cfg.inner_max_steps = j.value("inner_max_steps", 500u);
  cfg.inner_tolerance = j.value("inner_tolerance", 1e-4);
  cfg.mc_samples = j.value("mc_samples", 5u);
  cfg.adam.step_size = j.value("adam_step", 0.05);
  cfg.sigma0 = j.value("sigma0", 1.0);
  cfg.clip_epsilon = j.value("clip_epsilon", 1e-3);
  cfg.single_step_global = j.value("single_step_global", false);
  cfg.basin_passes = j.value("basin_passes", 1u);
  cfg.seed = j.value("seed", 0ull);
  cfg.validate();
  return cfg;
}

std::vector<std::string> generated_ids(const char* prefix, std::uint32_t n) {
  std::vector<std::string> ids;
  ids.reserve(n);
  for (std::uint32_t k = 0; k < n; ++k) {
    ids.push_back(prefix + std::to_string(k));
  }
  return ids;
}

std::map<std::string, std::uint32_t> index_of(
    const std::vector<std::string>& ids) {
  std::map<std::string, std::uint32_t> index;
  for (std::uint32_t k = 0; k < ids.size(); ++k) index[ids[k]] = k;
  return index;
}

// ---------------------------------------------------------------------------
// Commands. Each takes its effective config (also stored in the manifest) so
// that `replay` can re-run it byte-for-byte.
// ---------------------------------------------------------------------------

void do_simulate(const json& config, CommandContext& ctx, std::ostream& log) {
  const std::string spec_path = config.at("spec_file").get<std::string>();
  register_input(ctx, spec_path);
  json spec_json = json::parse(read_text_file(spec_path), nullptr, false);
  if (spec_json.is_discarded()) {
    throw ParseError(spec_path + ": not valid JSON");
  }
  const std::string kind = spec_json.value("kind", "irt");
  std::uint64_t seed = 0;
  if (kind == "irt") {
    const GeneratorSpec spec = generator_spec_from_json(spec_json, spec_path);
    seed = spec.seed;
    const SyntheticDataset dataset = sample_dataset(spec);
    Dataset named{dataset.responses,
                  generated_ids("r", spec.num_respondents),
                  generated_ids("q", spec.num_items)};
    write_responses_csv(output_path(ctx, "responses.csv"), named);
    write_params_json(output_path(ctx, "ground_truth.json"),
                      NamedParams{dataset.ground_truth, named.respondent_ids,
                                  named.item_ids});
    log << "simulated " << dataset.responses.observations().size()
        << " observations (" << spec.num_respondents << " x " << spec.num_items
        << ")\n";
  } else if (kind == "panel") {
    check_keys(spec_json, {"kind", "num_instances", "num_classes", "members", "seed"},
               spec_path);
    const auto num_instances = spec_json.at("num_instances").get<std::uint32_t>();
    const auto num_classes = spec_json.value("num_classes", 2u);
    const PanelSpec panel_spec = spec_json.contains("members")
        ? panel_members_from_json(spec_json["members"], spec_path)
        : PanelSpec::default_panel();
    seed = spec_json.value("seed", 0ull);
    const ClassifierResponseSet panel =
        simulate_classifier_panel(num_instances, num_classes, panel_spec, seed);
    PanelFile file{panel, generated_ids("c", panel.num_classifiers),
                   generated_ids("x", panel.num_instances)};
    write_panel_csv(output_path(ctx, "panel.csv"), file);
    Dataset named{to_response_matrix(panel), file.classifier_ids,
                  file.instance_ids};
    write_responses_csv(output_path(ctx, "responses.csv"), named);
    log << "simulated panel of " << panel.num_classifiers << " classifiers on "
        << num_instances << " instances\n";
  } else {
    throw ParseError(spec_path + ": unknown kind '" + kind + "'");
  }
  write_manifest(ctx, "simulate", config, seed);
}

void do_fit(const json& config, CommandContext& ctx, std::ostream& log) {
  const std::string responses_path = config.at("responses").get<std::string>();
  const std::string method = config.at("method").get<std::string>();
  register_input(ctx, responses_path);
  const Dataset dataset = read_responses_csv(responses_path);

  if (method == "mle") {
    const MleConfig cfg = mle_config_from_json(config);
    const MleFit fit = fit_mle(dataset.matrix, cfg);
    write_params_json(output_path(ctx, "params.json"),
                      NamedParams{fit.params, dataset.respondent_ids,
                                  dataset.item_ids});
    std::string trace = "iteration,loss\n";
    for (std::size_t t = 0; t < fit.loss_trace.size(); ++t) {
      trace += std::to_string(t + 1);
      trace += ',';
      trace += format_double(fit.loss_trace[t]);
      trace += '\n';
    }
    write_text_file(output_path(ctx, "trace.csv"), trace);
    log << "mle fit: final batch loss " << fit.loss_trace.back() << "\n";
    write_manifest(ctx, "fit", config, cfg.seed);
  } else if (method == "vi") {
    if (family_from_string(config.value("family", "beta3")) != Family::kBeta3) {
      throw UnsupportedCombination(
          "variational inference is defined for the beta3 family only");
    }
    const ViConfig cfg = vi_config_from_json(config);
    const PosteriorSet posterior = fit_vi(dataset.matrix, cfg);
    write_params_json(output_path(ctx, "params.json"),
                      NamedParams{posterior_point_estimates(posterior),
                                  dataset.respondent_ids, dataset.item_ids});
    write_posteriors_json(output_path(ctx, "posteriors.json"),
                          NamedPosteriors{posterior, dataset.respondent_ids,
                                          dataset.item_ids});
    std::string trace = "outer_iteration,elbo_local,elbo_global\n";
    for (std::size_t t = 0; t < posterior.elbo_trace.size(); ++t) {
      trace += std::to_string(t + 1);
      trace += ',';
      trace += format_double(posterior.elbo_trace[t].first);
      trace += ',';
      trace += format_double(posterior.elbo_trace[t].second);
      trace += '\n';
    }
    write_text_file(output_path(ctx, "trace.csv"), trace);
    log << "vi fit: final elbo (" << posterior.elbo_trace.back().first << ", "
        << posterior.elbo_trace.back().second << ")\n";
    write_manifest(ctx, "fit", config, cfg.seed);
  } else {
    throw UnsupportedCombination("unknown fit method '" + method + "'");
  }
}

void do_predict(const json& config, CommandContext& ctx, std::ostream& log) {
  const std::string params_path = config.at("params").get<std::string>();
  const std::string pairs_path = config.at("pairs").get<std::string>();
  register_input(ctx, params_path);
  register_input(ctx, pairs_path);
  const NamedParams named = read_params_json(params_path);
  if (config.contains("family") && !config["family"].is_null()) {
    const Family expected =
        family_from_string(config["family"].get<std::string>());
    if (expected != named.params.family) {
      throw FamilyMismatch("params file holds a " +
                           to_string(named.params.family) +
                           " model, expected " + to_string(expected));
    }
  }
  const auto pairs = read_pairs_csv(pairs_path);
  const auto respondent_index = index_of(named.respondent_ids);
  const auto item_index = index_of(named.item_ids);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> dense;
  dense.reserve(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto r = respondent_index.find(pairs[k].first);
    if (r == respondent_index.end()) {
      throw IndexOutOfRange(pairs_path + ":" + std::to_string(k + 2) +
                            ": unknown respondent id '" + pairs[k].first + "'");
    }
    const auto i = item_index.find(pairs[k].second);
    if (i == item_index.end()) {
      throw IndexOutOfRange(pairs_path + ":" + std::to_string(k + 2) +
                            ": unknown item id '" + pairs[k].second + "'");
    }
    dense.emplace_back(r->second, i->second);
  }
  const std::vector<double> predictions = predict(named.params, dense);
  std::string out = "respondent_id,item_id,prediction\n";
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    out += pairs[k].first;
    out += ',';
    out += pairs[k].second;
    out += ',';
    out += format_double17(predictions[k]);
    out += '\n';
  }
  write_text_file(output_path(ctx, "predictions.csv"), out);
  log << "predicted " << predictions.size() << " pairs\n";
  write_manifest(ctx, "predict", config, 0);
}

void do_icc(const json& config, CommandContext& ctx, std::ostream& log) {
  const std::string params_path = config.at("params").get<std::string>();
  register_input(ctx, params_path);
  const NamedParams named = read_params_json(params_path);
  if (named.params.family != Family::kBeta3) {
    throw UnsupportedCombination(
        "icc curves on the unit ability grid require a beta3 model");
  }
  const std::string item_id = config.at("item").get<std::string>();
  const auto item_index = index_of(named.item_ids);
  const auto found = item_index.find(item_id);
  if (found == item_index.end()) {
    throw IndexOutOfRange("unknown item id '" + item_id + "'");
  }
  const std::uint32_t grid = config.at("grid").get<std::uint32_t>();
  if (grid < 2) throw InvalidParameter("grid must have at least 2 points");

  const double delta = named.params.difficulties[found->second];
  const double a = named.params.discriminations[found->second];
  const std::string regime(to_string(icc_regime(Discrimination(a))));
  constexpr double eps = kUnitIntervalMargin;
  std::string out = "theta,expected_response,regime\n";
  for (std::uint32_t k = 0; k < grid; ++k) {
    const double theta =
        eps + (1.0 - 2.0 * eps) * static_cast<double>(k) / (grid - 1);
    out += format_double(theta);
    out += ',';
    out += format_double(icc_beta3(theta, delta, a));
    out += ',';
    out += regime;
    out += '\n';
  }
  write_text_file(output_path(ctx, "icc.csv"), out);
  log << "icc for item " << item_id << " (" << regime << ")\n";
  write_manifest(ctx, "icc", config, 0);
}

void do_evaluate_compare(const json& config, CommandContext& ctx,
                         std::ostream& log) {
  HoldoutPlan plan;
  plan.repetitions = config.value("repetitions", 30u);
  plan.train_fraction = config.value("train_fraction", 0.9);
  plan.seed = config.value("seed", 0ull);
  const double alpha = config.value("alpha", 0.05);

  json beta3_json = config;
  beta3_json["family"] = "beta3";
  MleConfig beta3_cfg = mle_config_from_json(beta3_json);
  json twoplnd_json = config;
  twoplnd_json["family"] = "2plnd";
  MleConfig twoplnd_cfg = mle_config_from_json(twoplnd_json);

  std::string out =
      "dataset,beta3_mean,beta3_std,twoplnd_mean,twoplnd_std,"
      "wilcoxon_statistic,p_value,best_model\n";
  for (const auto& entry : config.at("responses")) {
    const std::string path = entry.get<std::string>();
    register_input(ctx, path);
    const Dataset dataset = read_responses_csv(path);
    const ModelComparison comparison =
        compare_models(dataset.matrix, plan, beta3_cfg, twoplnd_cfg);
    const bool significant = comparison.wilcoxon.p_value < alpha;
    const char* best = !significant ? "none"
                       : comparison.beta3_mean < comparison.twoplnd_mean
                           ? "beta3"
                           : "2plnd";
    out += path;
    out += ',';
    out += format_double(comparison.beta3_mean);
    out += ',';
    out += format_double(comparison.beta3_std);
    out += ',';
    out += format_double(comparison.twoplnd_mean);
    out += ',';
    out += format_double(comparison.twoplnd_std);
    out += ',';
    out += format_double(comparison.wilcoxon.statistic);
    out += ',';
    out += format_double(comparison.wilcoxon.p_value);
    out += ',';
    out += best;
    out += '\n';
    log << path << ": beta3 " << comparison.beta3_mean << " vs 2plnd "
        << comparison.twoplnd_mean << " (p = " << comparison.wilcoxon.p_value
        << ")\n";
  }
  write_text_file(output_path(ctx, "compare.csv"), out);
  write_manifest(ctx, "evaluate-compare", config, plan.seed);
}

void do_evaluate_metrics(const json& config, CommandContext& ctx,
                         std::ostream& log) {
  const std::string panel_path = config.at("panel").get<std::string>();
  const std::string params_path = config.at("params").get<std::string>();
  register_input(ctx, panel_path);
  register_input(ctx, params_path);
  const PanelFile panel = read_panel_csv(panel_path);
  const NamedParams named = read_params_json(params_path);
  const auto respondent_index = index_of(named.respondent_ids);
  std::vector<double> abilities;
  abilities.reserve(panel.classifier_ids.size());
  for (const std::string& id : panel.classifier_ids) {
    const auto found = respondent_index.find(id);
    if (found == respondent_index.end()) {
      throw IndexOutOfRange("classifier '" + id +
                            "' missing from the params file");
    }
    abilities.push_back(named.params.abilities[found->second]);
  }
  const std::vector<ClassifierMetrics> report = classifier_metrics(
      panel.set, abilities, config.value("clip_epsilon", 1e-3));

  std::string out =
      "classifier_id,avg_response,ability,accuracy,f1,brier,log_loss,auc\n";
  for (std::size_t i = 0; i < report.size(); ++i) {
    const ClassifierMetrics& m = report[i];
    out += panel.classifier_ids[i];
    out += ',';
    out += format_double(m.avg_response);
    out += ',';
    out += format_double(m.ability);
    out += ',';
    out += format_double(m.accuracy);
    out += ',';
    out += m.f1 ? format_double(*m.f1) : std::string();
    out += ',';
    out += m.brier ? format_double(*m.brier) : std::string();
    out += ',';
    out += format_double(m.log_loss);
    out += ',';
    out += m.auc ? format_double(*m.auc) : std::string();
    out += '\n';
  }
  write_text_file(output_path(ctx, "metrics.csv"), out);
  log << "metrics for " << report.size() << " classifiers\n";
  write_manifest(ctx, "evaluate-metrics", config, 0);
}

void do_evaluate_noise_scan(const json& config, CommandContext& ctx,
                            std::ostream& log) {
  const std::string panel_path = config.at("panel").get<std::string>();
  register_input(ctx, panel_path);
  const PanelFile panel = read_panel_csv(panel_path);
  const ViConfig cfg = vi_config_from_json(config);
  std::vector<double> fractions;
  for (const auto& f : config.at("fractions")) {
    fractions.push_back(f.get<double>());
  }
  const std::vector<NoiseScanRow> rows =
      ability_noise_scan(panel.set, fractions, cfg);

  std::string out = "fraction,classifier_id,ability,accuracy\n";
  for (const NoiseScanRow& row : rows) {
    for (std::size_t i = 0; i < panel.classifier_ids.size(); ++i) {
      out += format_double(row.fraction);
      out += ',';
      out += panel.classifier_ids[i];
      out += ',';
      out += format_double(row.abilities[i]);
      out += ',';
      out += format_double(row.accuracies[i]);
      out += '\n';
    }
  }
  write_text_file(output_path(ctx, "scan.csv"), out);
  log << "noise scan over " << rows.size() << " fractions\n";
  write_manifest(ctx, "evaluate-noise-scan", config, cfg.seed);
}

void do_evaluate_flag_noise(const json& config, CommandContext& ctx,
                            std::ostream& log) {
  const std::string posteriors_path = config.at("posteriors").get<std::string>();
  register_input(ctx, posteriors_path);
  const NamedPosteriors named = read_posteriors_json(posteriors_path);
  const double threshold = config.value("threshold", 0.0);
  const std::vector<FlaggedItem> flagged =
      flag_noisy_items(named.posteriors, threshold);

  std::string out = "item_id,posterior_mean_a\n";
  for (const FlaggedItem& item : flagged) {
    out += named.item_ids[item.item];
    out += ',';
    out += format_double(item.posterior_mean_a);
    out += '\n';
  }
  write_text_file(output_path(ctx, "flagged.csv"), out);
  log << flagged.size() << " items below threshold " << threshold << "\n";
  write_manifest(ctx, "evaluate-flag-noise", config, 0);
}

void dispatch(const std::string& command, const json& config,
              const fs::path& out_dir, std::ostream& log) {
  ensure_out_dir(out_dir);
  CommandContext ctx;
  ctx.out_dir = out_dir;
  if (command == "simulate") {
    do_simulate(config, ctx, log);
  } else if (command == "fit") {
    do_fit(config, ctx, log);
  } else if (command == "predict") {
    do_predict(config, ctx, log);
  } else if (command == "icc") {
    do_icc(config, ctx, log);
  } else if (command == "evaluate-compare") {
    do_evaluate_compare(config, ctx, log);
  } else if (command == "evaluate-metrics") {
    do_evaluate_metrics(config, ctx, log);
  } else if (command == "evaluate-noise-scan") {
    do_evaluate_noise_scan(config, ctx, log);
  } else if (command == "evaluate-flag-noise") {
    do_evaluate_flag_noise(config, ctx, log);
  } else {
    throw FormatError("unknown command '" + command + "'");
  }
}

void do_replay(const fs::path& manifest_path, const fs::path& out_dir,
               std::ostream& log) {
  const json manifest = json::parse(read_text_file(manifest_path), nullptr, false);
  if (manifest.is_discarded()) {
    throw ParseError(manifest_path.string() + ": not valid JSON");
  }
  if (manifest.value("format_version", -1) != kFormatVersion) {
    throw FormatError(manifest_path.string() +
                      ": missing or unsupported format_version");
  }
  for (const auto& [path, digest] : manifest.at("inputs").items()) {
    const std::string current = sha256_file(path);
    if (current != digest.get<std::string>()) {
      throw FormatError("input " + path +
                        " changed since the manifest was written");
    }
  }
  dispatch(manifest.at("command").get<std::string>(), manifest.at("config"),
           out_dir, log);
}

// ---------------------------------------------------------------------------
// Argument parsing
// ---------------------------------------------------------------------------

struct FitFlags {
  std::string responses;
  std::string method = "mle";
  std::string family = "beta3";
  std::uint32_t iterations = 2500;
  std::uint32_t batch_size = 2000;
  double lr_scale = 0.5;
  double lr_constant = 0.0;
  double clip_epsilon = 1e-3;
  double sigma0 = 1.0;
  std::uint32_t outer_iterations = 10;
  std::uint32_t inner_max_steps = 500;
  double inner_tolerance = 1e-4;
  std::uint32_t mc_samples = 5;
  double adam_step = 0.05;
  bool single_step_global = false;
  std::uint32_t basin_passes = 1;
  double fixed_discrimination = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 0;
};

json fit_config_json(const FitFlags& flags) {
  json config;
  config["responses"] = flags.responses;
  config["method"] = flags.method;
  config["family"] = flags.family;
  config["seed"] = flags.seed;
  config["clip_epsilon"] = flags.clip_epsilon;
  if (flags.method == "mle") {
    config["iterations"] = flags.iterations;
    config["batch_size"] = flags.batch_size;
    config["lr_scale"] = flags.lr_scale;
    if (flags.lr_constant > 0.0) config["lr_constant"] = flags.lr_constant;
    if (!std::isnan(flags.fixed_discrimination)) {
      config["fixed_discrimination"] = flags.fixed_discrimination;
    }
  } else {
    config["sigma0"] = flags.sigma0;
    config["outer_iterations"] = flags.outer_iterations;
    config["inner_max_steps"] = flags.inner_max_steps;
    config["inner_tolerance"] = flags.inner_tolerance;
    config["mc_samples"] = flags.mc_samples;
    config["adam_step"] = flags.adam_step;
    config["single_step_global"] = flags.single_step_global;
    config["basin_passes"] = flags.basin_passes;
  }
  return config;
}

int exit_code_for(const Error& e) {
  if (dynamic_cast<const UnsupportedCombination*>(&e) != nullptr) return 2;
  if (dynamic_cast<const NumericalError*>(&e) != nullptr) return 4;
  return 3;  // DataError and friends
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"beta3 item-response modeling tool"};
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand(
      "simulate", "Sample a synthetic dataset or classifier panel");
  std::string spec_file;
  std::string out_dir;
  simulate->add_option("--spec", spec_file, "generator spec JSON")->required();
  simulate->add_option("--out", out_dir, "output directory")->required();

  // fit
  auto* fit = app.add_subcommand("fit", "Fit a model to observed responses");
  FitFlags fit_flags;
  std::string fit_out;
  fit->add_option("--responses", fit_flags.responses, "responses CSV")->required();
  fit->add_option("--method", fit_flags.method, "mle or vi")
      ->check(CLI::IsMember({"mle", "vi"}));
  fit->add_option("--family", fit_flags.family, "beta3 or 2plnd")
      ->check(CLI::IsMember({"beta3", "2plnd"}));
  fit->add_option("--iterations", fit_flags.iterations, "SGD iterations (mle)");
  fit->add_option("--batch-size", fit_flags.batch_size, "SGD batch size (mle)");
  fit->add_option("--lr-scale", fit_flags.lr_scale,
                  "c of the adaptive rate c/sqrt(t) (mle)");
  fit->add_option("--lr-constant", fit_flags.lr_constant,
                  "constant learning rate; overrides the adaptive schedule");
  fit->add_option("--clip-eps", fit_flags.clip_epsilon, "prediction clip");
  fit->add_option("--sigma0", fit_flags.sigma0,
                  "discrimination prior stddev (vi)");
  fit->add_option("--outer-iters", fit_flags.outer_iterations,
                  "coordinate-ascent outer iterations (vi)");
  fit->add_option("--inner-steps", fit_flags.inner_max_steps,
                  "max Adam steps per block (vi)");
  fit->add_option("--inner-tol", fit_flags.inner_tolerance,
                  "relative moving-average tolerance (vi)");
  fit->add_option("--mc-samples", fit_flags.mc_samples,
                  "Monte-Carlo samples per gradient (vi)");
  fit->add_option("--adam-step", fit_flags.adam_step, "Adam step size (vi)");
  fit->add_flag("--single-step-global", fit_flags.single_step_global,
                "one discrimination gradient step per outer iteration (vi)");
  fit->add_option("--basin-passes", fit_flags.basin_passes,
                  "discrimination sign-init passes (vi)");
  fit->add_option("--fix-discrimination", fit_flags.fixed_discrimination,
                  "pin all discriminations to this value (mle)");
  fit->add_option("--seed", fit_flags.seed, "random seed");
  fit->add_option("--out", fit_out, "output directory")->required();

  // predict
  auto* predict_cmd =
      app.add_subcommand("predict", "Expected responses for id pairs");
  std::string predict_params;
  std::string predict_pairs;
  std::string predict_family;
  std::string predict_out;
  predict_cmd->add_option("--params", predict_params, "params JSON")->required();
  predict_cmd->add_option("--pairs", predict_pairs, "pairs CSV")->required();
  predict_cmd->add_option("--family", predict_family,
                          "assert the model family of the params file")
      ->check(CLI::IsMember({"beta3", "2plnd"}));
  predict_cmd->add_option("--out", predict_out, "output directory")->required();

  // icc
  auto* icc_cmd = app.add_subcommand("icc", "Tabulate one item's Beta ICC");
  std::string icc_params;
  std::string icc_item;
  std::uint32_t icc_grid = 101;
  std::string icc_out;
  icc_cmd->add_option("--params", icc_params, "params JSON")->required();
  icc_cmd->add_option("--item", icc_item, "item id")->required();
  icc_cmd->add_option("--grid", icc_grid, "number of ability grid points");
  icc_cmd->add_option("--out", icc_out, "output directory")->required();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Evaluation pipelines");
  evaluate->require_subcommand(1);

  auto* compare = evaluate->add_subcommand(
      "compare", "Model comparison over stratified holdouts");
  std::vector<std::string> compare_responses;
  FitFlags compare_flags;
  std::uint32_t compare_reps = 30;
  double compare_train_fraction = 0.9;
  double compare_alpha = 0.05;
  std::string compare_out;
  compare->add_option("--responses", compare_responses, "responses CSVs")
      ->required()
      ->expected(-1);
  compare->add_option("--reps", compare_reps, "holdout repetitions");
  compare->add_option("--train-fraction", compare_train_fraction,
                      "train share per respondent");
  compare->add_option("--alpha", compare_alpha, "significance level");
  compare->add_option("--iterations", compare_flags.iterations, "SGD iterations");
  compare->add_option("--batch-size", compare_flags.batch_size, "SGD batch size");
  compare->add_option("--lr-scale", compare_flags.lr_scale, "adaptive rate scale");
  compare->add_option("--clip-eps", compare_flags.clip_epsilon, "prediction clip");
  compare->add_option("--seed", compare_flags.seed, "random seed");
  compare->add_option("--out", compare_out, "output directory")->required();

  auto* metrics = evaluate->add_subcommand(
      "metrics", "Classifier metric table with fitted abilities");
  std::string metrics_panel;
  std::string metrics_params;
  double metrics_clip = 1e-3;
  std::string metrics_out;
  metrics->add_option("--panel", metrics_panel, "panel CSV")->required();
  metrics->add_option("--params", metrics_params, "params JSON")->required();
  metrics->add_option("--clip-eps", metrics_clip, "log-loss clip");
  metrics->add_option("--out", metrics_out, "output directory")->required();

  auto* noise_scan = evaluate->add_subcommand(
      "noise-scan", "Ability robustness under label noise");
  std::string scan_panel;
  std::vector<double> scan_fractions;
  FitFlags scan_flags;
  std::string scan_out;
  noise_scan->add_option("--panel", scan_panel, "clean panel CSV")->required();
  noise_scan->add_option("--fractions", scan_fractions, "noise fractions")
      ->required()
      ->delimiter(',');
  noise_scan->add_option("--sigma0", scan_flags.sigma0, "prior stddev");
  noise_scan->add_option("--outer-iters", scan_flags.outer_iterations,
                         "outer iterations");
  noise_scan->add_option("--inner-steps", scan_flags.inner_max_steps,
                         "max Adam steps per block");
  noise_scan->add_option("--inner-tol", scan_flags.inner_tolerance,
                         "convergence tolerance");
  noise_scan->add_option("--mc-samples", scan_flags.mc_samples, "MC samples");
  noise_scan->add_option("--adam-step", scan_flags.adam_step, "Adam step size");
  noise_scan->add_option("--basin-passes", scan_flags.basin_passes,
                         "discrimination sign-init passes");
  noise_scan->add_option("--clip-eps", scan_flags.clip_epsilon, "response clip");
  noise_scan->add_option("--seed", scan_flags.seed, "random seed");
  noise_scan->add_option("--out", scan_out, "output directory")->required();

  auto* flag_noise = evaluate->add_subcommand(
      "flag-noise", "Items with negative posterior-mean discrimination");
  std::string flag_posteriors;
  double flag_threshold = 0.0;
  std::string flag_out;
  flag_noise->add_option("--posteriors", flag_posteriors, "posteriors JSON")
      ->required();
  flag_noise->add_option("--threshold", flag_threshold, "flagging threshold");
  flag_noise->add_option("--out", flag_out, "output directory")->required();

  // replay
  auto* replay = app.add_subcommand("replay", "Re-run a recorded manifest");
  std::string replay_manifest;
  std::string replay_out;
  replay->add_option("--manifest", replay_manifest, "manifest JSON")->required();
  replay->add_option("--out", replay_out, "output directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);  // --help and friends
      return 0;
    }
    err << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (simulate->parsed()) {
      json config;
      config["spec_file"] = spec_file;
      dispatch("simulate", config, out_dir, out);
    } else if (fit->parsed()) {
      dispatch("fit", fit_config_json(fit_flags), fit_out, out);
    } else if (predict_cmd->parsed()) {
      json config;
      config["params"] = predict_params;
      config["pairs"] = predict_pairs;
      if (!predict_family.empty()) config["family"] = predict_family;
      dispatch("predict", config, predict_out, out);
    } else if (icc_cmd->parsed()) {
      json config;
      config["params"] = icc_params;
      config["item"] = icc_item;
      config["grid"] = icc_grid;
      dispatch("icc", config, icc_out, out);
    } else if (compare->parsed()) {
      json config;
      config["responses"] = compare_responses;
      config["repetitions"] = compare_reps;
      config["train_fraction"] = compare_train_fraction;
      config["alpha"] = compare_alpha;
      config["iterations"] = compare_flags.iterations;
      config["batch_size"] = compare_flags.batch_size;
      config["lr_scale"] = compare_flags.lr_scale;
      config["clip_epsilon"] = compare_flags.clip_epsilon;
      config["seed"] = compare_flags.seed;
      dispatch("evaluate-compare", config, compare_out, out);
    } else if (metrics->parsed()) {
      json config;
      config["panel"] = metrics_panel;
      config["params"] = metrics_params;
      config["clip_epsilon"] = metrics_clip;
      dispatch("evaluate-metrics", config, metrics_out, out);
    } else if (noise_scan->parsed()) {
      json config;
      config["panel"] = scan_panel;
      config["fractions"] = scan_fractions;
      config["sigma0"] = scan_flags.sigma0;
      config["outer_iterations"] = scan_flags.outer_iterations;
      config["inner_max_steps"] = scan_flags.inner_max_steps;
      config["inner_tolerance"] = scan_flags.inner_tolerance;
      config["mc_samples"] = scan_flags.mc_samples;
      config["adam_step"] = scan_flags.adam_step;
      config["basin_passes"] = scan_flags.basin_passes;
      config["clip_epsilon"] = scan_flags.clip_epsilon;
      config["seed"] = scan_flags.seed;
      dispatch("evaluate-noise-scan", config, scan_out, out);
    } else if (flag_noise->parsed()) {
      json config;
      config["posteriors"] = flag_posteriors;
      config["threshold"] = flag_threshold;
      dispatch("evaluate-flag-noise", config, flag_out, out);
    } else if (replay->parsed()) {
      do_replay(replay_manifest, replay_out, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

}  // namespace beta3irt
