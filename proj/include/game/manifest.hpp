#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "json.hpp"

#include "game/dataset.hpp"
#include "game/format.hpp"

namespace game {

namespace detail {

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + offset, '\n'));
}

inline std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  return lines;
}

}  // namespace detail

/// Reads a feature CSV (`t,f0,...,f{D-1}`). `record_id` only decorates diagnostics.
inline FeatureSequence read_feature_csv(const std::filesystem::path& path, ModalityId modality,
                                        const std::string& record_id) {
  const std::string text = detail::read_text(path);
  const auto lines = detail::lines_of(text);
  const std::string where = "record '" + record_id + "', " + std::string(name(modality)) + " (" +
                            path.string() + ")";
  if (lines.empty()) throw SchemaError(where + ": empty feature file");
  const auto header = split_csv_line(lines[0]);
  if (header.size() < 2 || trim(header[0]) != "t")
    throw SchemaError(where + ": header must be t,f0,...");
  for (std::size_t c = 1; c < header.size(); ++c)
    if (trim(header[c]) != "f" + std::to_string(c - 1))
      throw SchemaError(where + ": header column " + std::to_string(c) + " must be f" +
                        std::to_string(c - 1));
  const std::size_t dim = header.size() - 1;
  if (lines.size() < 2) throw SchemaError(where + ": no data rows");
  Matrix values(lines.size() - 1, dim);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = split_csv_line(lines[r]);
    if (cells.size() != header.size())
      throw ParseError(where + ": expected " + std::to_string(header.size()) + " cells", r + 1);
    for (std::size_t c = 1; c < cells.size(); ++c) {
      auto v = parse_double(cells[c]);
      if (!v) throw ParseError(where + ": cannot parse '" + std::string(cells[c]) + "'", r + 1);
      if (!std::isfinite(*v))
        throw DataError(where + ": non-finite value at row " + std::to_string(r - 1) +
                        ", column f" + std::to_string(c - 1));
      values(r - 1, c - 1) = *v;
    }
  }
  return FeatureSequence{modality, std::move(values)};
}

inline void write_feature_csv(const std::filesystem::path& path, const Matrix& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << 't';
  for (std::size_t c = 0; c < values.cols(); ++c) out << ",f" << c;
  out << '\n';
  for (std::size_t r = 0; r < values.rows(); ++r) {
    out << r;
    for (double v : values.row(r)) out << ',' << format_double(v);
    out << '\n';
  }
}

struct LabelTable {
  std::vector<std::string> ids;
  std::vector<Labels> rows;
};

inline LabelTable read_label_csv(const std::filesystem::path& path) {
  const std::string text = detail::read_text(path);
  const auto lines = detail::lines_of(text);
  if (lines.empty()) throw SchemaError("label file " + path.string() + " is empty");
  const auto header = split_csv_line(lines[0]);
  if (header.empty() || trim(header[0]) != "id")
    throw SchemaError("label file " + path.string() + ": first column must be 'id'");
  std::array<std::optional<std::size_t>, kTaskCount> column{};
  for (std::size_t c = 1; c < header.size(); ++c) {
    auto t = parse_task(trim(header[c]));
    if (!t) throw SchemaError("label file " + path.string() + ": unknown task column '" +
                              trim(header[c]) + "'");
    column[index(*t)] = c;
  }
  std::string absent;
  for (std::size_t t = 0; t < kTaskCount; ++t)
    if (!column[t]) absent += (absent.empty() ? "" : ", ") + std::string(kTaskNames[t]);
  if (!absent.empty())
    throw SchemaError("label file " + path.string() + " is missing task column(s): " + absent);

  LabelTable table;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = split_csv_line(lines[r]);
    if (cells.size() != header.size())
      throw ParseError("label file " + path.string() + ": expected " +
                           std::to_string(header.size()) + " cells",
                       r + 1);
    Labels labels{};
    for (std::size_t t = 0; t < kTaskCount; ++t) {
      const auto cell = trim(cells[*column[t]]);
      if (cell != "0" && cell != "1")
        throw ParseError("label file " + path.string() + ": label must be 0 or 1, got '" +
                             cell + "'",
                         r + 1);
      labels[t] = cell == "1" ? 1 : 0;
    }
    table.ids.push_back(trim(cells[0]));
    table.rows.push_back(labels);
  }
  return table;
}

/// Loads a dataset from a JSON manifest:
/// `{"label_file": ..., "records": [{"id", "labels_csv_row", "features": {modality: path}}]}`.
/// Paths are relative to the manifest's directory. A modality that is not
/// listed, is null, or whose file does not exist is marked unavailable.
inline Dataset load_manifest(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  const std::string text = detail::read_text(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("malformed manifest " + path.string() + ": " + e.what(),
                     detail::line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1));
  }
  const fs::path base = path.parent_path();
  if (!j.is_object() || !j.contains("records") || !j["records"].is_array() ||
      !j.contains("label_file") || !j["label_file"].is_string())
    throw SchemaError("manifest " + path.string() + " needs 'records' (array) and 'label_file'");
  const LabelTable labels = read_label_csv(base / j["label_file"].get<std::string>());
  std::map<std::string, std::size_t> row_of_id;
  for (std::size_t i = 0; i < labels.ids.size(); ++i) row_of_id.emplace(labels.ids[i], i);

  std::vector<ParticipantRecord> records;
  for (const auto& entry : j["records"]) {
    if (!entry.is_object() || !entry.contains("id") || !entry["id"].is_string())
      throw SchemaError("manifest record without a string 'id'");
    ParticipantRecord rec;
    rec.id = entry["id"].get<std::string>();
    std::size_t row = 0;
    if (entry.contains("labels_csv_row")) {
      if (!entry["labels_csv_row"].is_number_unsigned())
        throw SchemaError("record '" + rec.id + "': labels_csv_row must be a row index");
      row = entry["labels_csv_row"].get<std::size_t>();
      if (row >= labels.rows.size())
        throw SchemaError("record '" + rec.id + "': labels_csv_row " + std::to_string(row) +
                          " is out of range");
      if (labels.ids[row] != rec.id)
        throw SchemaError("record '" + rec.id + "': label row " + std::to_string(row) +
                          " belongs to '" + labels.ids[row] + "'");
    } else {
      auto it = row_of_id.find(rec.id);
      if (it == row_of_id.end()) throw SchemaError("record '" + rec.id + "' has no label row");
      row = it->second;
    }
    rec.labels = labels.rows[row];
    if (entry.contains("features")) {
      const auto& feats = entry["features"];
      if (!feats.is_object()) throw SchemaError("record '" + rec.id + "': features must be an object");
      for (const auto& [key, value] : feats.items()) {
        auto m = parse_modality(key);
        if (!m || !is_single_modal(*m))
          throw SchemaError("record '" + rec.id + "': unknown single-modal feature '" + key + "'");
        if (value.is_null()) continue;
        if (!value.is_string())
          throw SchemaError("record '" + rec.id + "': feature path for " + key + " must be a string");
        const fs::path file = base / value.get<std::string>();
        if (!fs::exists(file)) continue;
        rec.features[index(*m)] = read_feature_csv(file, *m, rec.id);
      }
    }
    records.push_back(std::move(rec));
  }
  return Dataset(std::move(records), IngestedSource{path.string()});
}

/// Writes `manifest.json`, `labels.csv` and one feature CSV per available
/// (record, modality) under `dir`. Returns the manifest path.
inline std::filesystem::path write_manifest(const Dataset& ds, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "features");
  {
    std::ofstream out(dir / "labels.csv", std::ios::binary);
    if (!out) throw Error("cannot write " + (dir / "labels.csv").string());
    out << "id";
    for (auto t : kTaskNames) out << ',' << t;
    out << '\n';
    for (const auto& r : ds.records()) {
      out << r.id;
      for (auto l : r.labels) out << ',' << static_cast<int>(l);
      out << '\n';
    }
  }
  nlohmann::json records = nlohmann::json::array();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& r = ds[i];
    nlohmann::json feats = nlohmann::json::object();
    for (std::size_t m = 0; m < kSingleModalCount; ++m) {
      if (!r.features[m]) continue;
      const std::string rel = "features/" + r.id + "_" + std::string(kModalityNames[m]) + ".csv";
      write_feature_csv(dir / rel, r.features[m]->values);
      feats[std::string(kModalityNames[m])] = rel;
    }
    records.push_back({{"id", r.id}, {"labels_csv_row", i}, {"features", feats}});
  }
  nlohmann::json manifest = {{"label_file", "labels.csv"}, {"records", records}};
  const fs::path path = dir / "manifest.json";
  std::ofstream out(path, std::ios::binary);
  out << manifest.dump(1) << '\n';
  return path;
}

}  // namespace game
