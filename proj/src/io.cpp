#include "beta3irt/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <openssl/evp.h>

#include <json.hpp>

#include "beta3irt/errors.hpp"

namespace beta3irt {

using nlohmann::json;

namespace {

std::string location(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double parse_double_field(const std::string& field,
                          const std::filesystem::path& path, std::size_t line,
                          const char* what) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw ParseError(location(path, line) + ": bad " + std::string(what) +
                     " value '" + field + "'");
  }
  return value;
}

std::uint32_t parse_count_field(const std::string& field,
                                const std::filesystem::path& path,
                                std::size_t line, const char* what) {
  std::uint32_t value = 0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw ParseError(location(path, line) + ": bad " + std::string(what) +
                     " value '" + field + "'");
  }
  return value;
}

void check_id(const std::string& id) {
  if (id.empty() || id.find_first_of(",\r\n") != std::string::npos) {
    throw FormatError("identifier '" + id + "' is empty or contains a delimiter");
  }
}

/// Lines of the file with the trailing '\r' of CRLF endings stripped.
std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::uint32_t intern(const std::string& id, std::vector<std::string>& ids,
                     std::map<std::string, std::uint32_t>& index) {
  const auto [it, inserted] =
      index.emplace(id, static_cast<std::uint32_t>(ids.size()));
  if (inserted) ids.push_back(id);
  return it->second;
}

json family_json(Family family) { return json(to_string(family)); }

std::vector<double> doubles_from(const json& j, const char* key,
                                 std::size_t expected) {
  const auto& array = j.at(key);
  if (!array.is_array() || array.size() != expected) {
    throw FormatError(std::string("field '") + key + "' must be an array of " +
                      std::to_string(expected) + " numbers");
  }
  std::vector<double> out;
  out.reserve(expected);
  for (const auto& v : array) out.push_back(v.get<double>());
  return out;
}

std::vector<std::string> strings_from(const json& j, const char* key) {
  const auto& array = j.at(key);
  std::vector<std::string> out;
  out.reserve(array.size());
  for (const auto& v : array) out.push_back(v.get<std::string>());
  return out;
}

json parse_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) {
    throw ParseError(path.string() + ": not valid JSON");
  }
  return j;
}

void check_format_version(const json& j, const std::filesystem::path& path) {
  if (!j.contains("format_version") ||
      j.at("format_version").get<int>() != kFormatVersion) {
    throw FormatError(path.string() + ": missing or unsupported format_version");
  }
}

}  // namespace

std::string format_double(double value) {
  char buffer[40];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

std::string format_double17(double value) {
  char buffer[48];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value,
                                       std::chars_format::general, 17);
  return std::string(buffer, ptr);
}

std::string to_string(Family family) {
  return family == Family::kBeta3 ? "beta3" : "2plnd";
}

Family family_from_string(const std::string& name) {
  if (name == "beta3") return Family::kBeta3;
  if (name == "2plnd") return Family::kTwoPlNd;
  throw FormatError("unknown model family '" + name + "'");
}

Dataset read_responses_csv(const std::filesystem::path& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw ParseError(path.string() + ": empty file");
  const std::string& header = lines[0];
  bool with_count = false;
  if (header == "respondent_id,item_id,response,count") {
    with_count = true;
  } else if (header != "respondent_id,item_id,response") {
    throw ParseError(location(path, 1) + ": unexpected header '" + header + "'");
  }

  std::vector<std::string> respondent_ids;
  std::vector<std::string> item_ids;
  std::map<std::string, std::uint32_t> respondent_index;
  std::map<std::string, std::uint32_t> item_index;
  std::vector<Observation> observations;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    if (lines[k].empty() && k + 1 == lines.size()) break;
    const std::vector<std::string> fields = split_csv_line(lines[k]);
    const std::size_t expected = with_count ? 4 : 3;
    if (fields.size() != expected) {
      throw ParseError(location(path, k + 1) + ": expected " +
                       std::to_string(expected) + " fields, got " +
                       std::to_string(fields.size()));
    }
    Observation obs;
    obs.respondent = intern(fields[0], respondent_ids, respondent_index);
    obs.item = intern(fields[1], item_ids, item_index);
    obs.response = parse_double_field(fields[2], path, k + 1, "response");
    if (!(obs.response >= 0.0 && obs.response <= 1.0)) {
      throw ParseError(location(path, k + 1) + ": response " + fields[2] +
                       " outside [0, 1]");
    }
    obs.count = with_count
                    ? parse_count_field(fields[3], path, k + 1, "count")
                    : 1;
    if (obs.count == 0) {
      throw ParseError(location(path, k + 1) + ": count must be positive");
    }
    observations.push_back(obs);
  }
  if (observations.empty()) {
    throw ParseError(path.string() + ": no observations");
  }
  return Dataset{
      ResponseMatrix(static_cast<std::uint32_t>(respondent_ids.size()),
                     static_cast<std::uint32_t>(item_ids.size()),
                     std::move(observations)),
      std::move(respondent_ids), std::move(item_ids)};
}

void write_responses_csv(const std::filesystem::path& path,
                         const Dataset& data) {
  for (const std::string& id : data.respondent_ids) check_id(id);
  for (const std::string& id : data.item_ids) check_id(id);
  std::string out = "respondent_id,item_id,response,count\n";
  for (const Observation& obs : data.matrix.observations()) {
    out += data.respondent_ids[obs.respondent];
    out += ',';
    out += data.item_ids[obs.item];
    out += ',';
    out += format_double(obs.response);
    out += ',';
    out += std::to_string(obs.count);
    out += '\n';
  }
  write_text_file(path, out);
}

NamedParams read_params_json(const std::filesystem::path& path) {
  const json j = parse_json_file(path);
  try {
    check_format_version(j, path);
    NamedParams named;
    named.respondent_ids = strings_from(j, "respondent_ids");
    named.item_ids = strings_from(j, "item_ids");
    named.params.family = family_from_string(j.at("family").get<std::string>());
    named.params.abilities =
        doubles_from(j, "abilities", named.respondent_ids.size());
    named.params.difficulties =
        doubles_from(j, "difficulties", named.item_ids.size());
    named.params.discriminations =
        doubles_from(j, "discriminations", named.item_ids.size());
    named.params.validate();
    return named;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_params_json(const std::filesystem::path& path,
                       const NamedParams& named) {
  named.params.validate();
  if (named.respondent_ids.size() != named.params.abilities.size() ||
      named.item_ids.size() != named.params.difficulties.size()) {
    throw LengthMismatch("identifier lists do not match the parameter arrays");
  }
  json j;
  j["format_version"] = kFormatVersion;
  j["family"] = family_json(named.params.family);
  j["respondent_ids"] = named.respondent_ids;
  j["item_ids"] = named.item_ids;
  j["abilities"] = named.params.abilities;
  j["difficulties"] = named.params.difficulties;
  j["discriminations"] = named.params.discriminations;
  write_text_file(path, j.dump(2) + "\n");
}

NamedPosteriors read_posteriors_json(const std::filesystem::path& path) {
  const json j = parse_json_file(path);
  try {
    check_format_version(j, path);
    NamedPosteriors named;
    named.respondent_ids = strings_from(j, "respondent_ids");
    named.item_ids = strings_from(j, "item_ids");
    const std::size_t num_respondents = named.respondent_ids.size();
    const std::size_t num_items = named.item_ids.size();
    const auto ability_mu = doubles_from(j, "ability_mu", num_respondents);
    const auto ability_sigma = doubles_from(j, "ability_sigma", num_respondents);
    const auto difficulty_mu = doubles_from(j, "difficulty_mu", num_items);
    const auto difficulty_sigma = doubles_from(j, "difficulty_sigma", num_items);
    const auto a_mu = doubles_from(j, "discrimination_mu", num_items);
    const auto a_sigma = doubles_from(j, "discrimination_sigma", num_items);
    for (std::size_t i = 0; i < num_respondents; ++i) {
      named.posteriors.ability_q.push_back(
          {ability_mu[i], std::log(ability_sigma[i])});
    }
    for (std::size_t jdx = 0; jdx < num_items; ++jdx) {
      named.posteriors.difficulty_q.push_back(
          {difficulty_mu[jdx], std::log(difficulty_sigma[jdx])});
      named.posteriors.discrimination_q.push_back(
          {a_mu[jdx], std::log(a_sigma[jdx])});
    }
    for (const auto& entry : j.at("elbo_trace")) {
      named.posteriors.elbo_trace.emplace_back(entry.at(0).get<double>(),
                                               entry.at(1).get<double>());
    }
    return named;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_posteriors_json(const std::filesystem::path& path,
                           const NamedPosteriors& named) {
  const PosteriorSet& q = named.posteriors;
  if (named.respondent_ids.size() != q.ability_q.size() ||
      named.item_ids.size() != q.difficulty_q.size()) {
    throw LengthMismatch("identifier lists do not match the posterior arrays");
  }
  json j;
  j["format_version"] = kFormatVersion;
  j["respondent_ids"] = named.respondent_ids;
  j["item_ids"] = named.item_ids;
  auto mus = [](const auto& qs) {
    std::vector<double> out;
    out.reserve(qs.size());
    for (const auto& q_one : qs) out.push_back(q_one.mu);
    return out;
  };
  auto sigmas = [](const auto& qs) {
    std::vector<double> out;
    out.reserve(qs.size());
    for (const auto& q_one : qs) out.push_back(q_one.sigma());
    return out;
  };
  j["ability_mu"] = mus(q.ability_q);
  j["ability_sigma"] = sigmas(q.ability_q);
  j["difficulty_mu"] = mus(q.difficulty_q);
  j["difficulty_sigma"] = sigmas(q.difficulty_q);
  j["discrimination_mu"] = mus(q.discrimination_q);
  j["discrimination_sigma"] = sigmas(q.discrimination_q);
  json trace = json::array();
  for (const auto& [local, global] : q.elbo_trace) {
    trace.push_back(json::array({local, global}));
  }
  j["elbo_trace"] = trace;
  write_text_file(path, j.dump(2) + "\n");
}

PanelFile read_panel_csv(const std::filesystem::path& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw ParseError(path.string() + ": empty file");
  const std::vector<std::string> header = split_csv_line(lines[0]);
  if (header.size() < 5 || header[0] != "classifier_id" ||
      header[1] != "instance_id" || header[2] != "label") {
    throw ParseError(location(path, 1) + ": unexpected header");
  }
  const auto num_classes = static_cast<std::uint32_t>(header.size() - 3);
  for (std::uint32_t k = 0; k < num_classes; ++k) {
    if (header[3 + k] != "p_class" + std::to_string(k)) {
      throw ParseError(location(path, 1) + ": unexpected header column '" +
                       header[3 + k] + "'");
    }
  }

  std::vector<std::string> classifier_ids;
  std::vector<std::string> instance_ids;
  std::map<std::string, std::uint32_t> classifier_index;
  std::map<std::string, std::uint32_t> instance_index;
  struct Row {
    std::uint32_t classifier;
    std::uint32_t instance;
    std::uint32_t label;
    std::vector<double> probs;
  };
  std::vector<Row> rows;
  std::vector<std::optional<std::uint32_t>> instance_label;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    if (lines[k].empty() && k + 1 == lines.size()) break;
    const std::vector<std::string> fields = split_csv_line(lines[k]);
    if (fields.size() != header.size()) {
      throw ParseError(location(path, k + 1) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    }
    Row row;
    row.classifier = intern(fields[0], classifier_ids, classifier_index);
    row.instance = intern(fields[1], instance_ids, instance_index);
    row.label = parse_count_field(fields[2], path, k + 1, "label");
    if (row.label >= num_classes) {
      throw ParseError(location(path, k + 1) + ": label " + fields[2] +
                       " outside [0, " + std::to_string(num_classes) + ")");
    }
    if (instance_label.size() < instance_ids.size()) {
      instance_label.resize(instance_ids.size());
    }
    if (instance_label[row.instance] &&
        *instance_label[row.instance] != row.label) {
      throw ParseError(location(path, k + 1) + ": instance '" + fields[1] +
                       "' has conflicting labels");
    }
    instance_label[row.instance] = row.label;
    double sum = 0.0;
    row.probs.resize(num_classes);
    for (std::uint32_t c = 0; c < num_classes; ++c) {
      row.probs[c] = parse_double_field(fields[3 + c], path, k + 1, "probability");
      if (!(row.probs[c] >= 0.0 && row.probs[c] <= 1.0)) {
        throw ParseError(location(path, k + 1) + ": probability outside [0, 1]");
      }
      sum += row.probs[c];
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw ParseError(location(path, k + 1) +
                       ": class probabilities sum to " + format_double(sum));
    }
    for (double& p : row.probs) p /= sum;  // renormalize within tolerance
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path.string() + ": no rows");

  PanelFile panel;
  panel.classifier_ids = classifier_ids;
  panel.instance_ids = instance_ids;
  panel.set.num_classifiers = static_cast<std::uint32_t>(classifier_ids.size());
  panel.set.num_instances = static_cast<std::uint32_t>(instance_ids.size());
  panel.set.num_classes = num_classes;
  panel.set.labels.resize(instance_ids.size());
  for (std::size_t idx = 0; idx < instance_ids.size(); ++idx) {
    panel.set.labels[idx] = *instance_label[idx];
  }
  panel.set.probs.assign(static_cast<std::size_t>(panel.set.num_classifiers) *
                             panel.set.num_instances * num_classes,
                         -1.0);
  for (const Row& row : rows) {
    for (std::uint32_t c = 0; c < num_classes; ++c) {
      panel.set.probs[(static_cast<std::size_t>(row.classifier) *
                           panel.set.num_instances +
                       row.instance) *
                          num_classes +
                      c] = row.probs[c];
    }
  }
  for (double p : panel.set.probs) {
    if (p < 0.0) {
      throw ParseError(path.string() +
                       ": missing (classifier, instance) combinations");
    }
  }
  panel.set.validate(1e-9);
  return panel;
}

void write_panel_csv(const std::filesystem::path& path, const PanelFile& panel) {
  panel.set.validate(1e-9);
  for (const std::string& id : panel.classifier_ids) check_id(id);
  for (const std::string& id : panel.instance_ids) check_id(id);
  std::string out = "classifier_id,instance_id,label";
  for (std::uint32_t k = 0; k < panel.set.num_classes; ++k) {
    out += ",p_class" + std::to_string(k);
  }
  out += '\n';
  for (std::uint32_t i = 0; i < panel.set.num_classifiers; ++i) {
    for (std::uint32_t j = 0; j < panel.set.num_instances; ++j) {
      out += panel.classifier_ids[i];
      out += ',';
      out += panel.instance_ids[j];
      out += ',';
      out += std::to_string(panel.set.labels[j]);
      for (std::uint32_t k = 0; k < panel.set.num_classes; ++k) {
        out += ',';
        out += format_double(panel.set.prob(i, j, k));
      }
      out += '\n';
    }
  }
  write_text_file(path, out);
}

std::vector<std::pair<std::string, std::string>> read_pairs_csv(
    const std::filesystem::path& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw ParseError(path.string() + ": empty file");
  if (lines[0] != "respondent_id,item_id") {
    throw ParseError(location(path, 1) + ": unexpected header '" + lines[0] + "'");
  }
  std::vector<std::pair<std::string, std::string>> pairs;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    if (lines[k].empty() && k + 1 == lines.size()) break;
    const std::vector<std::string> fields = split_csv_line(lines[k]);
    if (fields.size() != 2) {
      throw ParseError(location(path, k + 1) + ": expected 2 fields, got " +
                       std::to_string(fields.size()));
    }
    pairs.emplace_back(fields[0], fields[1]);
  }
  return pairs;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr) throw IoError("cannot allocate digest context");
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buffer[1 << 16];
  while (in) {
    in.read(buffer, sizeof(buffer));
    const std::streamsize got = in.gcount();
    if (got > 0) {
      EVP_DigestUpdate(ctx, buffer, static_cast<std::size_t>(got));
    }
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx, digest, &length);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int k = 0; k < length; ++k) {
    out.push_back(hex[digest[k] >> 4]);
    out.push_back(hex[digest[k] & 0xf]);
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace beta3irt
