#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "divcf/error.hpp"
#include "divcf/schema.hpp"

namespace divcf {

struct Dataset {
  DatasetSchema schema;
  std::vector<Row> rows;
  std::vector<int> labels;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }

  std::size_t count_label(int label) const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
  }

  void validate() const {
    schema.validate();
    if (rows.size() != labels.size())
      throw ValidationError("rows and labels differ in length");
    for (std::size_t r = 0; r < rows.size(); ++r) {
      try {
        schema.validate_row(rows[r]);
      } catch (const ValidationError& e) {
        throw ValidationError("row " + std::to_string(r + 1) + ": " + e.what(), e.field());
      }
      if (labels[r] != 0 && labels[r] != 1)
        throw ValidationError("row " + std::to_string(r + 1) + ": label must be 0 or 1");
    }
  }
};

namespace csv {

// Splits one CSV record. Quoted fields may contain commas and doubled quotes;
// embedded newlines are not supported.
inline std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

inline std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace csv

inline bool parse_double(const std::string& text, double& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && first != last;
}

inline int parse_label(const std::string& cell, const DatasetSchema& schema) {
  if (schema.positive_label) return cell == *schema.positive_label ? 1 : 0;
  std::string lower = cell;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "1" || lower == "true" || lower == "yes") return 1;
  if (lower == "0" || lower == "false" || lower == "no") return 0;
  double v;
  if (parse_double(lower, v) && (v == 0.0 || v == 1.0)) return static_cast<int>(v);
  throw ValidationError("label '" + cell + "' is not one of 0/1/true/false");
}

// Parses CSV text against the schema. Column order in the header is free, but
// the header must name exactly the schema features plus the label column.
inline Dataset parse_csv(std::istream& in, const DatasetSchema& schema,
                         const std::string& label_column) {
  schema.validate();
  Dataset data;
  data.schema = schema;
  data.schema.label_column = label_column;

  std::string line;
  if (!std::getline(in, line)) throw ValidationError("CSV is empty (missing header row)");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  auto header = csv::split_record(line);
  for (auto& h : header) h = csv::trim(h);

  std::vector<std::ptrdiff_t> column_to_feature(header.size(), -1);
  std::ptrdiff_t label_col = -1;
  std::vector<bool> seen(schema.size(), false);
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == label_column) {
      if (label_col >= 0) throw ValidationError("header repeats label column", label_column);
      label_col = static_cast<std::ptrdiff_t>(c);
      continue;
    }
    auto idx = schema.index_of(header[c]);
    if (!idx) throw ValidationError("header column '" + header[c] + "' not in schema", header[c]);
    if (seen[*idx]) throw ValidationError("header repeats column '" + header[c] + "'", header[c]);
    seen[*idx] = true;
    column_to_feature[c] = static_cast<std::ptrdiff_t>(*idx);
  }
  if (label_col < 0)
    throw ValidationError("header lacks label column '" + label_column + "'", label_column);
  for (std::size_t f = 0; f < schema.size(); ++f)
    if (!seen[f])
      throw ValidationError("header lacks feature '" + schema.features[f].name + "'",
                            schema.features[f].name);

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (csv::trim(line).empty()) continue;
    auto cells = csv::split_record(line);
    const std::string where = "line " + std::to_string(line_no);
    if (cells.size() != header.size())
      throw ValidationError(where + ": expected " + std::to_string(header.size()) +
                            " cells, found " + std::to_string(cells.size()));
    Row row(schema.size(), 0.0);
    int label = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string cell = csv::trim(cells[c]);
      if (static_cast<std::ptrdiff_t>(c) == label_col) {
        try {
          label = parse_label(cell, schema);
        } catch (const ValidationError& e) {
          throw ValidationError(where + ", column '" + label_column + "': " + e.what(),
                                label_column);
        }
        continue;
      }
      const auto f = static_cast<std::size_t>(column_to_feature[c]);
      const auto& feat = schema.features[f];
      const std::string at = where + ", column '" + feat.name + "': ";
      if (feat.is_categorical()) {
        auto lvl = feat.level_index(cell);
        if (!lvl) throw ValidationError(at + "unknown level '" + cell + "'", feat.name);
        row[f] = static_cast<double>(*lvl);
      } else {
        double v;
        if (!parse_double(cell, v))
          throw ValidationError(at + "cannot parse '" + cell + "' as a number", feat.name);
        if (v < feat.min || v > feat.max)
          throw ValidationError(at + "value " + cell + " outside declared range", feat.name);
        row[f] = v;
      }
    }
    data.rows.push_back(std::move(row));
    data.labels.push_back(label);
  }
  return data;
}

inline Dataset load_csv(const std::string& path, const DatasetSchema& schema,
                        const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'", "path");
  return parse_csv(in, schema, label_column);
}

inline Dataset load_csv(const std::string& path, const DatasetSchema& schema) {
  return load_csv(path, schema, schema.label_column);
}

inline void write_csv(std::ostream& out, const Dataset& data) {
  const auto& s = data.schema;
  for (std::size_t f = 0; f < s.size(); ++f) out << csv::quote(s.features[f].name) << ',';
  out << csv::quote(s.label_column) << '\n';
  for (std::size_t r = 0; r < data.size(); ++r) {
    for (std::size_t f = 0; f < s.size(); ++f)
      out << csv::quote(s.format_value(f, data.rows[r][f])) << ',';
    out << data.labels[r] << '\n';
  }
}

// Deterministic split: rows are shuffled by the seed, the first
// round(test_fraction * n) become the test set.
template <class RngT>
std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double test_fraction,
                                             RngT& rng) {
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * data.size()));
  Dataset train{data.schema, {}, {}}, test{data.schema, {}, {}};
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& dst = i < n_test ? test : train;
    dst.rows.push_back(data.rows[order[i]]);
    dst.labels.push_back(data.labels[order[i]]);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace divcf
