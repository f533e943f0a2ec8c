#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "beta3irt/synth.hpp"
#include "beta3irt/types.hpp"
#include "beta3irt/vi.hpp"

namespace beta3irt {

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// 17-significant-digit decimal text (prediction files).
std::string format_double17(double value);

/// Response matrix plus the external string identifiers, in dense order of
/// first appearance.
struct Dataset {
  ResponseMatrix matrix;
  std::vector<std::string> respondent_ids;
  std::vector<std::string> item_ids;
};

/// CSV with header respondent_id,item_id,response and an optional count
/// column. Malformed rows are reported with their 1-based line number.
Dataset read_responses_csv(const std::filesystem::path& path);
void write_responses_csv(const std::filesystem::path& path, const Dataset& data);

struct NamedParams {
  ModelParams params;
  std::vector<std::string> respondent_ids;
  std::vector<std::string> item_ids;
};

NamedParams read_params_json(const std::filesystem::path& path);
void write_params_json(const std::filesystem::path& path,
                       const NamedParams& params);

struct NamedPosteriors {
  PosteriorSet posteriors;
  std::vector<std::string> respondent_ids;
  std::vector<std::string> item_ids;
};

NamedPosteriors read_posteriors_json(const std::filesystem::path& path);
void write_posteriors_json(const std::filesystem::path& path,
                           const NamedPosteriors& posteriors);

struct PanelFile {
  ClassifierResponseSet set;
  std::vector<std::string> classifier_ids;
  std::vector<std::string> instance_ids;
};

/// CSV with header classifier_id,instance_id,label,p_class0,p_class1[,...].
/// Probability rows are validated against the simplex at 1e-6 and
/// renormalized.
PanelFile read_panel_csv(const std::filesystem::path& path);
void write_panel_csv(const std::filesystem::path& path, const PanelFile& panel);

/// CSV with header respondent_id,item_id.
std::vector<std::pair<std::string, std::string>> read_pairs_csv(
    const std::filesystem::path& path);

/// Hex SHA-256 digest of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path,
                     const std::string& content);

std::string to_string(Family family);
Family family_from_string(const std::string& name);

}  // namespace beta3irt
