#include "crowdbp/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace crowdbp::io {

namespace {

struct CsvRow
{
    std::size_t line = 0;
    std::vector<std::string_view> fields;
};

class CsvReader
{
public:
    CsvReader(const fs::path& path) : origin_ {path.string()}, text_ {read_file(path)} {}

    // Reads the header and checks its leading columns.
    std::vector<std::string> header(std::initializer_list<std::string_view> required)
    {
        CsvRow row;
        if (!next(row)) fail(1, "file is empty, expected a header");
        std::vector<std::string> names(row.fields.begin(), row.fields.end());
        std::size_t i = 0;
        for (auto name : required) {
            if (i >= names.size() || names[i] != name) {
                fail(row.line, "header must start with " + join(required));
            }
            ++i;
        }
        return names;
    }

    bool next(CsvRow& row)
    {
        while (pos_ < text_.size()) {
            const auto end = text_.find('\n', pos_);
            std::string_view line {text_.data() + pos_, (end == std::string::npos ? text_.size() : end) - pos_};
            pos_ = end == std::string::npos ? text_.size() : end + 1;
            ++line_;
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            if (line.empty()) continue;
            row.line = line_;
            row.fields.clear();
            std::size_t start = 0;
            for (;;) {
                const auto comma = line.find(',', start);
                row.fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
                if (comma == std::string_view::npos) break;
                start = comma + 1;
            }
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(std::size_t line, const std::string& message) const
    {
        throw DataError {origin_ + ":" + std::to_string(line) + ": " + message};
    }

    Index to_index(const CsvRow& row, std::size_t column, const char* what) const
    {
        const auto field = row.fields[column];
        Index value = 0;
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
        if (ec != std::errc {} || ptr != field.data() + field.size()) {
            fail(row.line, std::string {"cannot parse "} + what + " '" + std::string {field} + "'");
        }
        return value;
    }

    double to_real(const CsvRow& row, std::size_t column) const
    {
        const auto field = row.fields[column];
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
        if (ec != std::errc {} || ptr != field.data() + field.size()) {
            fail(row.line, "cannot parse number '" + std::string {field} + "'");
        }
        return value;
    }

    const std::string& origin() const noexcept { return origin_; }

private:
    static std::string join(std::initializer_list<std::string_view> names)
    {
        std::string out;
        for (auto n : names) {
            if (!out.empty()) out += ',';
            out += n;
        }
        return out;
    }

    std::string origin_;
    std::string text_;
    std::size_t pos_ = 0;
    std::size_t line_ = 0;
};

// Reads "task_id,<values...>" tables with exactly one row per task.
Matrix read_task_table(const fs::path& path, std::string_view first_value, std::optional<Index> expected_rows)
{
    CsvReader reader {path};
    const auto names = reader.header({"task_id", first_value});
    const std::size_t width = names.size() - 1;
    std::vector<std::pair<Index, std::vector<double>>> rows;
    CsvRow row;
    while (reader.next(row)) {
        if (row.fields.size() != names.size()) {
            reader.fail(row.line, "expected " + std::to_string(names.size()) + " columns, found " +
                                      std::to_string(row.fields.size()));
        }
        std::vector<double> values(width);
        for (std::size_t c = 0; c < width; ++c) values[c] = reader.to_real(row, c + 1);
        rows.emplace_back(reader.to_index(row, 0, "task_id"), std::move(values));
    }
    const Index n = expected_rows.value_or(rows.size());
    if (rows.size() != n) {
        throw DataError {reader.origin() + ": expected " + std::to_string(n) + " rows, found " + std::to_string(rows.size())};
    }
    Matrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(width));
    std::vector<std::size_t> seen(n, 0);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const Index task = rows[r].first;
        if (task >= n) throw DataError {reader.origin() + ": task_id " + std::to_string(task) + " out of range"};
        if (seen[task]++) throw DataError {reader.origin() + ": task_id " + std::to_string(task) + " appears twice"};
        for (std::size_t c = 0; c < width; ++c) out(static_cast<Eigen::Index>(task), static_cast<Eigen::Index>(c)) = rows[r].second[c];
    }
    return out;
}

} // namespace

std::string format_real(double value)
{
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.17g", value);
    return buffer;
}

void write_file_atomic(const fs::path& path, std::string_view content)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out {tmp, std::ios::binary | std::ios::trunc};
        if (!out) throw DataError {"cannot open " + tmp.string() + " for writing"};
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw DataError {"failed writing " + tmp.string()};
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path)
{
    std::ifstream in {path, std::ios::binary};
    if (!in) throw DataError {"cannot open " + path.string()};
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

CrowdDataset load_dataset(const fs::path& labels, const std::optional<fs::path>& features,
                          const std::optional<fs::path>& truth, const DatasetShape& shape)
{
    CsvReader reader {labels};
    reader.header({"task_id", "worker_id", "label"});
    std::vector<Answer> answers;
    std::vector<std::size_t> lines;
    Index max_task = 0, max_worker = 0;
    CsvRow row;
    while (reader.next(row)) {
        if (row.fields.size() != 3) reader.fail(row.line, "expected 3 columns");
        Answer a {reader.to_index(row, 0, "task_id"), reader.to_index(row, 1, "worker_id"),
                  static_cast<Label>(reader.to_index(row, 2, "label"))};
        if (a.label >= shape.num_classes) {
            reader.fail(row.line, "label " + std::to_string(a.label) + " is out of range for K=" +
                                      std::to_string(shape.num_classes));
        }
        if (shape.num_tasks && a.task >= *shape.num_tasks) reader.fail(row.line, "task_id out of range");
        if (shape.num_workers && a.worker >= *shape.num_workers) reader.fail(row.line, "worker_id out of range");
        max_task = std::max(max_task, a.task + 1);
        max_worker = std::max(max_worker, a.worker + 1);
        answers.push_back(a);
        lines.push_back(row.line);
    }

    std::optional<Matrix> feature_matrix;
    if (features) feature_matrix = load_features(*features, shape.num_tasks);
    std::optional<std::vector<Label>> truth_labels;
    if (truth) truth_labels = load_truth(*truth, shape.num_classes, shape.num_tasks);

    Index n = shape.num_tasks.value_or(max_task);
    if (!shape.num_tasks) {
        if (feature_matrix) n = std::max(n, static_cast<Index>(feature_matrix->rows()));
        if (truth_labels) n = std::max(n, truth_labels->size());
    }
    if (feature_matrix && static_cast<Index>(feature_matrix->rows()) != n) {
        throw DataError {features->string() + ": has " + std::to_string(feature_matrix->rows()) + " rows for " +
                         std::to_string(n) + " tasks"};
    }
    if (truth_labels && truth_labels->size() != n) {
        throw DataError {truth->string() + ": has " + std::to_string(truth_labels->size()) + " rows for " +
                         std::to_string(n) + " tasks"};
    }

    // Name both offending rows of a duplicate pair.
    std::map<std::pair<Index, Index>, std::size_t> seen;
    for (std::size_t e = 0; e < answers.size(); ++e) {
        auto [it, inserted] = seen.emplace(std::pair {answers[e].task, answers[e].worker}, lines[e]);
        if (!inserted) {
            throw DataError {labels.string() + ":" + std::to_string(lines[e]) + ": duplicate (task " +
                             std::to_string(answers[e].task) + ", worker " + std::to_string(answers[e].worker) +
                             ") pair, first seen on line " + std::to_string(it->second)};
        }
    }
    return {Observations {n, shape.num_workers.value_or(max_worker), shape.num_classes, std::move(answers),
                          std::move(feature_matrix)},
            std::move(truth_labels)};
}

std::string labels_csv(const Observations& data)
{
    std::string out = "task_id,worker_id,label\n";
    for (const auto& a : data.answers()) {
        out += std::to_string(a.task) + ',' + std::to_string(a.worker) + ',' + std::to_string(a.label) + '\n';
    }
    return out;
}

std::string features_csv(const Matrix& features)
{
    std::string out = "task_id";
    for (Eigen::Index c = 0; c < features.cols(); ++c) out += ",f" + std::to_string(c);
    out += '\n';
    for (Eigen::Index r = 0; r < features.rows(); ++r) {
        out += std::to_string(r);
        for (Eigen::Index c = 0; c < features.cols(); ++c) out += ',' + format_real(features(r, c));
        out += '\n';
    }
    return out;
}

std::string truth_csv(const std::vector<Label>& truth)
{
    std::string out = "task_id,label\n";
    for (std::size_t i = 0; i < truth.size(); ++i) out += std::to_string(i) + ',' + std::to_string(truth[i]) + '\n';
    return out;
}

std::string posterior_csv(const LabelPosterior& q)
{
    std::string out = "task_id";
    for (Index k = 0; k < q.num_classes(); ++k) out += ",q" + std::to_string(k);
    out += '\n';
    for (Index i = 0; i < q.num_tasks(); ++i) {
        out += std::to_string(i);
        for (Index k = 0; k < q.num_classes(); ++k) out += ',' + format_real(q(i, k));
        out += '\n';
    }
    return out;
}

void save_dataset(const CrowdDataset& dataset, const fs::path& directory)
{
    const auto& obs = dataset.observations;
    write_file_atomic(directory / "labels.csv", labels_csv(obs));
    if (obs.has_features()) write_file_atomic(directory / "features.csv", features_csv(obs.features()));
    if (dataset.truth) write_file_atomic(directory / "truth.csv", truth_csv(*dataset.truth));
}

Matrix load_features(const fs::path& path, std::optional<Index> expected_rows)
{
    return read_task_table(path, "f0", expected_rows);
}

std::vector<Label> load_truth(const fs::path& path, Index num_classes, std::optional<Index> expected_rows)
{
    const Matrix table = read_task_table(path, "label", expected_rows);
    if (table.cols() != 1) throw DataError {path.string() + ": expected columns task_id,label"};
    std::vector<Label> truth(static_cast<Index>(table.rows()));
    for (Eigen::Index i = 0; i < table.rows(); ++i) {
        const double v = table(i, 0);
        if (v < 0.0 || v >= static_cast<double>(num_classes) || v != std::floor(v)) {
            throw DataError {path.string() + ": task " + std::to_string(i) + " has invalid label"};
        }
        truth[static_cast<Index>(i)] = static_cast<Label>(v);
    }
    return truth;
}

LabelPosterior load_posterior(const fs::path& path)
{
    return LabelPosterior {read_task_table(path, "q0", std::nullopt)};
}

std::string model_json(const ClassifierModel& model)
{
    nlohmann::ordered_json j;
    j["kind"] = to_string(model.kind());
    j["input_dim"] = model.input_dim();
    j["num_classes"] = model.num_classes();
    j["hidden_units"] = model.hidden_units();
    j["l2_lambda"] = model.l2_lambda();
    auto& params = j["parameters"] = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < model.parameters().size(); ++i) params.push_back(model.parameters()(i));
    return j.dump(2) + '\n';
}

ClassifierModel load_model(const fs::path& path)
{
    try {
        const auto j = nlohmann::json::parse(read_file(path));
        ClassifierModel model {parse_classifier_kind(j.at("kind").get<std::string>()), j.at("input_dim").get<Index>(),
                               j.at("num_classes").get<Index>(), j.at("hidden_units").get<Index>(),
                               j.at("l2_lambda").get<double>(), 0.0, 0};
        const auto values = j.at("parameters").get<std::vector<double>>();
        model.set_parameters(Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size())));
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw DataError {path.string() + ": " + e.what()};
    }
}

KeyValues parse_config(std::string_view text, const std::string& origin)
{
    KeyValues out;
    std::size_t line_no = 0, pos = 0;
    const auto trim = [](std::string_view s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string_view::npos) return std::string_view {};
        return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
    };
    while (pos <= text.size()) {
        const auto end = text.find('\n', pos);
        std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
        pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw DataError {origin + ":" + std::to_string(line_no) + ": expected 'key = value'"};
        }
        const auto key = trim(line.substr(0, eq));
        if (key.empty()) throw DataError {origin + ":" + std::to_string(line_no) + ": empty key"};
        out[std::string {key}] = std::string {trim(line.substr(eq + 1))};
    }
    return out;
}

KeyValues load_config(const fs::path& path)
{
    return parse_config(read_file(path), path.string());
}

} // namespace crowdbp::io
