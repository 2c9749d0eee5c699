#pragma once

// Tabular ingestion and the invertible encoding used by the network:
// categorical columns become one-hot spans, continuous columns are min-max
// scaled into [0, 1] with statistics taken from the training rows only.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "vcnet/error.hpp"
#include "vcnet/nn.hpp"
#include "vcnet/rng.hpp"

namespace vcnet::data {

using nn::IndexSpan;
using json = nlohmann::json;

enum class ColumnKind { Continuous, Categorical };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::Continuous;
  std::vector<std::string> categories;  // categorical only, in encoding order
  double min = 0.0;                     // continuous only, fitted
  double max = 0.0;

  bool operator==(const ColumnSpec&) const = default;
};

struct FeatureSchema {
  std::vector<ColumnSpec> columns;
  std::string label_name;
  std::vector<std::string> classes;  // class index = position in this list
  bool fitted = false;

  std::size_t encoded_width() const {
    std::size_t p = 0;
    for (const auto& c : columns) p += c.kind == ColumnKind::Continuous ? 1 : c.categories.size();
    return p;
  }

  std::size_t class_count() const { return classes.size(); }

  std::vector<IndexSpan> one_hot_spans() const {
    std::vector<IndexSpan> spans;
    std::size_t pos = 0;
    for (const auto& c : columns) {
      if (c.kind == ColumnKind::Categorical) {
        spans.push_back({pos, c.categories.size()});
        pos += c.categories.size();
      } else {
        ++pos;
      }
    }
    return spans;
  }

  std::optional<std::size_t> class_index(const std::string& name) const {
    auto it = std::find(classes.begin(), classes.end(), name);
    if (it == classes.end()) return std::nullopt;
    return static_cast<std::size_t>(it - classes.begin());
  }

  void check() const {
    if (columns.empty()) throw DataError("schema declares no feature columns");
    if (classes.size() < 2) throw DataError("schema must declare at least two classes");
    std::vector<std::string> names;
    for (const auto& c : columns) {
      names.push_back(c.name);
      if (c.kind == ColumnKind::Categorical) {
        if (c.categories.empty()) throw DataError("column '" + c.name + "' has no categories");
        auto cats = c.categories;
        std::sort(cats.begin(), cats.end());
        if (std::adjacent_find(cats.begin(), cats.end()) != cats.end()) {
          throw DataError("column '" + c.name + "' has duplicate categories");
        }
      } else if (fitted && !(c.max >= c.min)) {
        throw DataError("column '" + c.name + "' has max < min");
      }
    }
    names.push_back(label_name);
    std::sort(names.begin(), names.end());
    if (std::adjacent_find(names.begin(), names.end()) != names.end()) {
      throw DataError("duplicate column name in schema");
    }
    auto cls = classes;
    std::sort(cls.begin(), cls.end());
    if (std::adjacent_find(cls.begin(), cls.end()) != cls.end()) {
      throw DataError("duplicate class name in schema");
    }
  }

  bool operator==(const FeatureSchema&) const = default;
};

// Schema declaration document:
//   {"label": {"name": "...", "classes": [...]},
//    "columns": [{"name": "...", "kind": "continuous"},
//                {"name": "...", "kind": "categorical", "categories": [...]}]}
// Fitted schemas additionally carry "min"/"max" on continuous columns.
inline FeatureSchema schema_from_json(const json& j) {
  FeatureSchema s;
  try {
    s.label_name = j.at("label").at("name").get<std::string>();
    for (const auto& c : j.at("label").at("classes")) {
      s.classes.push_back(c.is_string() ? c.get<std::string>() : c.dump());
    }
    for (const auto& cj : j.at("columns")) {
      ColumnSpec c;
      c.name = cj.at("name").get<std::string>();
      const auto kind = cj.at("kind").get<std::string>();
      if (kind == "continuous") {
        c.kind = ColumnKind::Continuous;
        if (cj.contains("min")) {
          c.min = cj.at("min").get<double>();
          c.max = cj.at("max").get<double>();
        }
      } else if (kind == "categorical") {
        c.kind = ColumnKind::Categorical;
        for (const auto& cat : cj.at("categories")) c.categories.push_back(cat.get<std::string>());
      } else {
        throw DataError("column '" + c.name + "': unknown kind '" + kind + "'");
      }
      s.columns.push_back(std::move(c));
    }
    s.fitted = j.value("fitted", false);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed schema: ") + e.what());
  }
  s.check();
  return s;
}

inline json schema_to_json(const FeatureSchema& s) {
  json cols = json::array();
  for (const auto& c : s.columns) {
    json cj = {{"name", c.name}};
    if (c.kind == ColumnKind::Continuous) {
      cj["kind"] = "continuous";
      if (s.fitted) {
        cj["min"] = c.min;
        cj["max"] = c.max;
      }
    } else {
      cj["kind"] = "categorical";
      cj["categories"] = c.categories;
    }
    cols.push_back(std::move(cj));
  }
  return {{"label", {{"name", s.label_name}, {"classes", s.classes}}},
          {"columns", std::move(cols)},
          {"fitted", s.fitted}};
}

inline FeatureSchema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open schema file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("schema file '" + path + "': " + e.what());
  }
  return schema_from_json(j);
}

// FNV-1a over the canonical JSON text of the schema.
inline std::string schema_hash(const FeatureSchema& s) {
  const std::string text = schema_to_json(s).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

// ---------------------------------------------------------------------------
// CSV

using RawCell = std::variant<double, std::string>;
using RawRow = std::vector<RawCell>;  // one cell per schema column, schema order

struct RawTable {
  std::vector<RawRow> rows;
  std::vector<std::string> labels;  // empty when the file has no label column

  std::size_t size() const { return rows.size(); }
  bool has_labels() const { return !rows.empty() && labels.size() == rows.size(); }
};

inline std::string trim(std::string s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

// Splits one CSV record; double-quoted fields may contain commas and "".
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline std::optional<double> parse_real(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t used = 0;
  try {
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

// Reads a headered CSV. Every declared feature column must be present; the
// label column is required unless `label_optional` is set. Rows are numbered
// from 1 after the header in diagnostics.
inline RawTable load_csv(std::istream& in, const FeatureSchema& schema, const std::string& origin,
                         bool label_optional = false) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(origin + ": missing header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_csv_line(line);

  std::map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!position.emplace(header[i], i).second) {
      throw DataError(origin + ": duplicate header column '" + header[i] + "'");
    }
  }
  std::vector<std::size_t> feature_pos;
  for (const auto& c : schema.columns) {
    auto it = position.find(c.name);
    if (it == position.end()) throw DataError(origin + ": header is missing column '" + c.name + "'");
    feature_pos.push_back(it->second);
  }
  std::optional<std::size_t> label_pos;
  if (auto it = position.find(schema.label_name); it != position.end()) label_pos = it->second;
  if (!label_pos && !label_optional) {
    throw DataError(origin + ": header is missing label column '" + schema.label_name + "'");
  }
  const std::size_t expected = schema.columns.size() + (label_pos ? 1 : 0);
  if (header.size() != expected) {
    throw DataError(origin + ": header has " + std::to_string(header.size()) +
                    " columns, declaration expects " + std::to_string(expected));
  }

  RawTable table;
  std::size_t row_no = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row_no;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DataError(origin + ": row " + std::to_string(row_no) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()));
    }
    RawRow row;
    for (std::size_t k = 0; k < schema.columns.size(); ++k) {
      const auto& col = schema.columns[k];
      const auto& cell = cells[feature_pos[k]];
      if (cell.empty()) {
        throw DataError(origin + ": row " + std::to_string(row_no) + ", column '" + col.name +
                        "': missing value");
      }
      if (col.kind == ColumnKind::Continuous) {
        auto v = parse_real(cell);
        if (!v) {
          throw DataError(origin + ": row " + std::to_string(row_no) + ", column '" + col.name +
                          "': cannot parse '" + cell + "' as a number");
        }
        row.emplace_back(*v);
      } else {
        row.emplace_back(cell);
      }
    }
    table.rows.push_back(std::move(row));
    if (label_pos) table.labels.push_back(cells[*label_pos]);
  }
  return table;
}

inline RawTable load_csv(const std::string& path, const FeatureSchema& schema,
                         bool label_optional = false) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file '" + path + "'");
  return load_csv(in, schema, path, label_optional);
}

// ---------------------------------------------------------------------------
// Encoding

using Matrix = std::vector<std::vector<double>>;

struct PreprocessedDataset {
  Matrix examples;                  // n x p, entries in [0, 1]
  std::vector<std::size_t> labels;  // n
  FeatureSchema schema;
  std::vector<IndexSpan> one_hot_spans;
  std::size_t clamped_values = 0;  // out-of-range scaled values forced into [0, 1]
  std::vector<std::string> warnings;

  std::size_t size() const { return examples.size(); }
  std::size_t width() const { return schema.encoded_width(); }

  PreprocessedDataset subset(const std::vector<std::size_t>& idx) const {
    PreprocessedDataset d;
    d.schema = schema;
    d.one_hot_spans = one_hot_spans;
    for (auto i : idx) {
      d.examples.push_back(examples.at(i));
      d.labels.push_back(labels.at(i));
    }
    return d;
  }
};

// Fits min/max on the given rows (all rows when `rows` is empty).
inline FeatureSchema fit_schema(const RawTable& table, FeatureSchema declaration,
                                const std::vector<std::size_t>& rows,
                                std::vector<std::string>* warnings = nullptr) {
  declaration.check();
  std::vector<std::size_t> use = rows;
  if (use.empty()) {
    use.resize(table.size());
    std::iota(use.begin(), use.end(), 0);
  }
  if (use.empty()) throw DataError("cannot fit preprocessing on an empty table");
  for (std::size_t k = 0; k < declaration.columns.size(); ++k) {
    auto& col = declaration.columns[k];
    if (col.kind != ColumnKind::Continuous) continue;
    double lo = std::get<double>(table.rows[use.front()][k]);
    double hi = lo;
    for (auto r : use) {
      const double v = std::get<double>(table.rows[r][k]);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    col.min = lo;
    col.max = hi;
    if (hi == lo && warnings) {
      warnings->push_back("column '" + col.name + "' is constant; encoded as 0.5");
    }
  }
  declaration.fitted = true;
  return declaration;
}

// Encodes one raw row; counts values clamped into [0, 1].
inline std::vector<double> transform_row(const FeatureSchema& schema, const RawRow& row,
                                         std::size_t* clamped = nullptr) {
  require(schema.fitted, "transform with an unfitted schema");
  require(row.size() == schema.columns.size(), "raw row width does not match schema");
  std::vector<double> out;
  out.reserve(schema.encoded_width());
  for (std::size_t k = 0; k < schema.columns.size(); ++k) {
    const auto& col = schema.columns[k];
    if (col.kind == ColumnKind::Continuous) {
      const double v = std::get<double>(row[k]);
      double s = col.max == col.min ? 0.5 : (v - col.min) / (col.max - col.min);
      if (s < 0.0 || s > 1.0) {
        s = std::clamp(s, 0.0, 1.0);
        if (clamped) ++*clamped;
      }
      out.push_back(s);
    } else {
      const auto& value = std::get<std::string>(row[k]);
      auto it = std::find(col.categories.begin(), col.categories.end(), value);
      if (it == col.categories.end()) {
        throw DataError("column '" + col.name + "': unknown category '" + value + "'");
      }
      const auto hot = static_cast<std::size_t>(it - col.categories.begin());
      for (std::size_t c = 0; c < col.categories.size(); ++c) out.push_back(c == hot ? 1.0 : 0.0);
    }
  }
  return out;
}

// Encodes the selected rows (all rows when `rows` is empty) with a fitted schema.
inline PreprocessedDataset transform(const RawTable& table, const FeatureSchema& fitted,
                                     const std::vector<std::size_t>& rows = {}) {
  PreprocessedDataset d;
  d.schema = fitted;
  d.one_hot_spans = fitted.one_hot_spans();
  std::vector<std::size_t> use = rows;
  if (use.empty()) {
    use.resize(table.size());
    std::iota(use.begin(), use.end(), 0);
  }
  for (auto r : use) {
    d.examples.push_back(transform_row(fitted, table.rows.at(r), &d.clamped_values));
    if (table.has_labels()) {
      auto cls = fitted.class_index(table.labels[r]);
      if (!cls) {
        throw DataError("row " + std::to_string(r + 1) + ": unknown class label '" +
                        table.labels[r] + "'");
      }
      d.labels.push_back(*cls);
    }
  }
  if (d.clamped_values > 0) {
    d.warnings.push_back(std::to_string(d.clamped_values) +
                         " scaled value(s) fell outside [0,1] and were clamped");
  }
  return d;
}

inline PreprocessedDataset fit_transform(const RawTable& table, const FeatureSchema& declaration) {
  if (table.size() == 0) throw DataError("fit_transform: table has no rows");
  if (!table.has_labels()) throw DataError("fit_transform: label column is required");
  std::vector<std::string> warnings;
  auto fitted = fit_schema(table, declaration, {}, &warnings);
  auto d = transform(table, fitted);
  d.warnings.insert(d.warnings.begin(), warnings.begin(), warnings.end());
  return d;
}

inline RawRow inverse_transform(std::span<const double> encoded, const FeatureSchema& schema) {
  require(schema.fitted, "inverse_transform with an unfitted schema");
  require(encoded.size() == schema.encoded_width(), "inverse_transform: row width != p");
  RawRow out;
  std::size_t pos = 0;
  for (const auto& col : schema.columns) {
    if (col.kind == ColumnKind::Continuous) {
      out.emplace_back(col.min + encoded[pos] * (col.max - col.min));
      ++pos;
    } else {
      std::optional<std::size_t> hot;
      for (std::size_t c = 0; c < col.categories.size(); ++c) {
        const double v = encoded[pos + c];
        if (v == 1.0) {
          require(!hot, "inverse_transform: span '" + col.name + "' has more than one 1");
          hot = c;
        } else {
          require(v == 0.0, "inverse_transform: span '" + col.name + "' is not one-hot");
        }
      }
      require(hot.has_value(), "inverse_transform: span '" + col.name + "' has no 1");
      out.emplace_back(col.categories[*hot]);
      pos += col.categories.size();
    }
  }
  return out;
}

inline std::string format_cell(const RawCell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) return csv_escape(*s);
  std::ostringstream os;
  os << std::setprecision(17) << std::get<double>(c);
  return os.str();
}

// Encoded-row invariants: continuous entries in [0,1], every span exactly one-hot.
inline bool is_valid_encoded_row(std::span<const double> row, std::span<const IndexSpan> spans,
                                 std::string* why = nullptr) {
  auto fail = [&](const std::string& m) {
    if (why) *why = m;
    return false;
  };
  std::vector<bool> in_span(row.size(), false);
  for (const auto& s : spans) {
    if (s.end() > row.size()) return fail("span out of range");
    std::size_t ones = 0;
    for (std::size_t i = s.start; i < s.end(); ++i) {
      in_span[i] = true;
      if (row[i] == 1.0) {
        ++ones;
      } else if (row[i] != 0.0) {
        return fail("span entry " + std::to_string(i) + " is neither 0 nor 1");
      }
    }
    if (ones != 1) return fail("span at " + std::to_string(s.start) + " is not one-hot");
  }
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (!in_span[i] && !(row[i] >= 0.0 && row[i] <= 1.0)) {
      return fail("continuous entry " + std::to_string(i) + " outside [0,1]");
    }
  }
  return true;
}

inline bool is_valid_dataset(const PreprocessedDataset& d, std::string* why = nullptr) {
  for (std::size_t r = 0; r < d.size(); ++r) {
    if (d.examples[r].size() != d.width()) {
      if (why) *why = "row " + std::to_string(r) + " has wrong width";
      return false;
    }
    if (!is_valid_encoded_row(d.examples[r], d.one_hot_spans, why)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Splitting

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::vector<std::string> warnings;
};

// Seeded shuffle then partition; both parts are returned in ascending order.
inline SplitIndices split_indices(std::size_t n, double test_fraction, std::uint64_t seed) {
  require(test_fraction > 0.0 && test_fraction < 1.0, "split: test_fraction must be in (0,1)");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
  if (n >= 2) n_test = std::clamp<std::size_t>(n_test, 1, n - 1);
  if (n < 2) n_test = 0;
  SplitIndices s;
  s.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(s.test.begin(), s.test.end());
  std::sort(s.train.begin(), s.train.end());
  if (s.test.empty()) s.warnings.push_back("split of " + std::to_string(n) + " row(s) leaves an empty test set");
  return s;
}

inline std::pair<PreprocessedDataset, PreprocessedDataset> split(const PreprocessedDataset& d,
                                                                 double test_fraction,
                                                                 std::uint64_t seed) {
  auto idx = split_indices(d.size(), test_fraction, seed);
  auto train = d.subset(idx.train);
  auto test = d.subset(idx.test);
  train.warnings = idx.warnings;
  return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// Synthetic three-class Gaussian data in R^8

inline constexpr std::size_t kSyntheticDim = 8;

// Unit isotropic covariance around these means: classes 0 and 1 are close,
// class 2 is far from both.
inline std::array<std::array<double, kSyntheticDim>, 3> synthetic_class_means() {
  return {{{0, 0, 0, 0, 0, 0, 0, 0}, {2, 0, 0, 0, 0, 0, 0, 0}, {5, 5, 0, 0, 0, 0, 0, 0}}};
}

// Example i belongs to class i % 3. Features are min-max scaled over the
// generated sample; the schema records the scaling.
inline PreprocessedDataset synthetic_gaussian_3class(std::size_t n = 10000, std::uint64_t seed = 0) {
  require(n >= 3, "synthetic_gaussian_3class: n must be >= 3");
  const auto means = synthetic_class_means();
  Rng rng(seed);
  Matrix raw(n, std::vector<double>(kSyntheticDim));
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = i % 3;
    for (std::size_t j = 0; j < kSyntheticDim; ++j) raw[i][j] = means[labels[i]][j] + rng.normal();
  }
  FeatureSchema schema;
  schema.label_name = "class";
  schema.classes = {"0", "1", "2"};
  for (std::size_t j = 0; j < kSyntheticDim; ++j) {
    ColumnSpec c;
    c.name = "x" + std::to_string(j);
    c.min = raw[0][j];
    c.max = raw[0][j];
    for (const auto& r : raw) {
      c.min = std::min(c.min, r[j]);
      c.max = std::max(c.max, r[j]);
    }
    schema.columns.push_back(c);
  }
  schema.fitted = true;

  PreprocessedDataset d;
  d.schema = schema;
  d.labels = std::move(labels);
  d.examples.resize(n, std::vector<double>(kSyntheticDim));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < kSyntheticDim; ++j) {
      const auto& c = schema.columns[j];
      d.examples[i][j] = (raw[i][j] - c.min) / (c.max - c.min);
    }
  }
  return d;
}

}  // namespace vcnet::data
