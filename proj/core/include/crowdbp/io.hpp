#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crowdbp/classifier.hpp"
#include "crowdbp/dataset.hpp"

namespace crowdbp::io {

namespace fs = std::filesystem;

/// Shortest round-trip decimal is not required; every real is written with
/// 17 significant digits ("%.17g").
std::string format_real(double value);

/// Writes to `path.tmp` and renames over `path`.
void write_file_atomic(const fs::path& path, std::string_view content);
std::string read_file(const fs::path& path);

struct DatasetShape
{
    Index num_classes = 2;
    /// Inferred from the largest id seen (and from the feature/truth rows) when absent.
    std::optional<Index> num_tasks;
    std::optional<Index> num_workers;
};

/*
 * File formats (0-based ids, comma separated, one header line):
 *   labels    task_id,worker_id,label
 *   features  task_id,f0,...,f{d-1}     one row per task
 *   truth     task_id,label             one row per task
 *   posterior task_id,q0,...,q{K-1}
 */
CrowdDataset load_dataset(const fs::path& labels, const std::optional<fs::path>& features,
                          const std::optional<fs::path>& truth, const DatasetShape& shape);

std::string labels_csv(const Observations& data);
std::string features_csv(const Matrix& features);
std::string truth_csv(const std::vector<Label>& truth);
std::string posterior_csv(const LabelPosterior& q);

/// Writes labels.csv plus features.csv / truth.csv when present.
void save_dataset(const CrowdDataset& dataset, const fs::path& directory);

Matrix load_features(const fs::path& path, std::optional<Index> expected_rows = std::nullopt);
std::vector<Label> load_truth(const fs::path& path, Index num_classes, std::optional<Index> expected_rows = std::nullopt);
LabelPosterior load_posterior(const fs::path& path);

std::string model_json(const ClassifierModel& model);
ClassifierModel load_model(const fs::path& path);

/// Flat `key = value` file; '#' starts a comment. Later keys override earlier ones.
using KeyValues = std::map<std::string, std::string, std::less<>>;
KeyValues parse_config(std::string_view text, const std::string& origin = "config");
KeyValues load_config(const fs::path& path);

} // namespace crowdbp::io
