#include "imed/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace imed {

std::vector<std::string> VariableSchema::all_names() const {
  std::vector<std::string> names;
  names.reserve(2 + mediator_names.size() + covariate_names.size());
  names.push_back(outcome_name);
  names.push_back(exposure_name);
  names.insert(names.end(), mediator_names.begin(), mediator_names.end());
  names.insert(names.end(), covariate_names.begin(), covariate_names.end());
  return names;
}

void VariableSchema::validate() const {
  if (outcome_name.empty() || exposure_name.empty()) {
    throw DataError("schema: outcome and exposure names are required");
  }
  if (mediator_names.empty()) {
    throw DataError("schema: at least one mediator is required");
  }
  if (mediator_kinds.size() != mediator_names.size()) {
    throw DataError("schema: every mediator needs a declared kind");
  }
  std::set<std::string> seen;
  for (const auto& name : all_names()) {
    if (name.empty()) throw DataError("schema: empty variable name");
    if (!seen.insert(name).second) {
      throw DataError("schema: duplicate variable name '" + name + "'");
    }
  }
  for (const auto& m : moderator_names) {
    if (std::find(covariate_names.begin(), covariate_names.end(), m) ==
        covariate_names.end()) {
      throw DataError("schema: moderator '" + m + "' is not a covariate");
    }
  }
}

namespace {

bool is_binary01(const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] != 0.0 && v[i] != 1.0) return false;
  }
  return true;
}

}  // namespace

ObservedDataset::ObservedDataset(VariableSchema schema,
                                 std::vector<Eigen::VectorXd> columns)
    : schema_(std::move(schema)), columns_(std::move(columns)) {
  schema_.validate();
  const auto names = schema_.all_names();
  if (columns_.size() != names.size()) {
    throw DataError("dataset: expected " + std::to_string(names.size()) +
                    " columns, got " + std::to_string(columns_.size()));
  }
  n_ = columns_.empty() ? 0 : columns_[0].size();
  if (n_ < 1) throw DataError("dataset: no rows");
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    if (columns_[c].size() != n_) {
      throw DataError("dataset: column '" + names[c] + "' has ragged length");
    }
    if (!columns_[c].allFinite()) {
      throw DataError("dataset: column '" + names[c] +
                      "' contains a non-finite value");
    }
    index_.emplace(names[c], static_cast<int>(c));
  }
  if (!is_binary01(exposure())) {
    throw DataError("dataset: exposure not binary");
  }
  if (schema_.outcome_kind == VariableKind::binary && !is_binary01(outcome())) {
    throw DataError("dataset: binary outcome column '" + schema_.outcome_name +
                    "' has values outside {0,1}");
  }
  for (int s = 0; s < schema_.t(); ++s) {
    if (schema_.mediator_kinds[s] == VariableKind::binary &&
        !is_binary01(mediator(s))) {
      throw DataError("dataset: binary mediator column '" +
                      schema_.mediator_names[s] + "' has values outside {0,1}");
    }
  }
}

const Eigen::VectorXd& ObservedDataset::column(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw DataError("dataset: unknown column '" + name + "'");
  }
  return columns_[it->second];
}

std::vector<Eigen::Index> ObservedDataset::group_rows(int level) const {
  std::vector<Eigen::Index> out;
  const Eigen::VectorXd& a = exposure();
  for (Eigen::Index i = 0; i < n_; ++i) {
    if (a[i] == static_cast<double>(level)) out.push_back(i);
  }
  return out;
}

ObservedDataset load_csv(const std::string& path,
                         const VariableSchema& schema) {
  schema.validate();
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file '" + path + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }

  const auto names = schema.all_names();
  std::vector<int> file_col(names.size(), -1);
  for (std::size_t c = 0; c < names.size(); ++c) {
    for (std::size_t h = 0; h < header.size(); ++h) {
      if (header[h] == names[c]) {
        file_col[c] = static_cast<int>(h);
        break;
      }
    }
    if (file_col[c] < 0) {
      throw DataError("missing column '" + names[c] + "' in '" + path + "'");
    }
  }

  std::vector<std::vector<double>> raw(names.size());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    {
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      if (!line.empty() && line.back() == ',') cells.push_back("");
    }
    for (std::size_t c = 0; c < names.size(); ++c) {
      if (static_cast<std::size_t>(file_col[c]) >= cells.size()) {
        throw DataError("row " + std::to_string(row) + ": missing value for '" +
                        names[c] + "'");
      }
      const std::string& cell = cells[file_col[c]];
      double value = 0.0;
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      while (first != last && (*first == ' ' || *first == '\t')) ++first;
      auto [ptr, ec] = std::from_chars(first, last, value);
      if (ec != std::errc() || ptr != last) {
        throw DataError("row " + std::to_string(row) + ": non-numeric cell '" +
                        cell + "' in column '" + names[c] + "'");
      }
      raw[c].push_back(value);
    }
  }
  if (raw[0].empty()) throw DataError("empty file '" + path + "' (no data rows)");

  std::vector<Eigen::VectorXd> columns;
  columns.reserve(names.size());
  for (auto& v : raw) {
    columns.push_back(Eigen::Map<Eigen::VectorXd>(v.data(), v.size()));
  }
  return ObservedDataset(schema, std::move(columns));
}

void write_csv(const ObservedDataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file '" + path + "'");
  const auto names = data.schema().all_names();
  for (std::size_t c = 0; c < names.size(); ++c) {
    out << (c ? "," : "") << names[c];
  }
  out << "\n";
  char buf[40];
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (std::size_t c = 0; c < names.size(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", data.column(names[c])[i]);
      out << (c ? "," : "") << buf;
    }
    out << "\n";
  }
}

ObservedDataset standardize_column(const ObservedDataset& data,
                                   const std::string& name) {
  const Eigen::VectorXd& col = data.column(name);  // throws on unknown name
  const VariableSchema& schema = data.schema();
  bool continuous = true;
  if (name == schema.exposure_name) continuous = false;
  if (name == schema.outcome_name &&
      schema.outcome_kind == VariableKind::binary) {
    continuous = false;
  }
  for (int s = 0; s < schema.t(); ++s) {
    if (name == schema.mediator_names[s] &&
        schema.mediator_kinds[s] == VariableKind::binary) {
      continuous = false;
    }
  }
  if (!continuous) {
    throw DataError("standardize: column '" + name + "' is not continuous");
  }

  const Eigen::Index n = col.size();
  const double mean = col.mean();
  const double ss = (col.array() - mean).square().sum();
  if (n < 2 || ss <= 0.0) {
    throw DataError("standardize: zero variance in column '" + name + "'");
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  const auto names = data.schema().all_names();
  std::vector<Eigen::VectorXd> columns;
  columns.reserve(names.size());
  for (const auto& cname : names) {
    if (cname == name) {
      columns.push_back(((col.array() - mean) / sd).matrix());
    } else {
      columns.push_back(data.column(cname));
    }
  }
  return ObservedDataset(data.schema(), std::move(columns));
}

ObservedDataset select_rows(const ObservedDataset& data,
                            const std::vector<Eigen::Index>& rows) {
  const auto names = data.schema().all_names();
  std::vector<Eigen::VectorXd> columns;
  columns.reserve(names.size());
  for (const auto& name : names) {
    const Eigen::VectorXd& src = data.column(name);
    Eigen::VectorXd dst(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) dst[i] = src[rows[i]];
    columns.push_back(std::move(dst));
  }
  return ObservedDataset(data.schema(), std::move(columns));
}

ObservedDataset resample_with_replacement(const ObservedDataset& data,
                                          rng::Stream& stream) {
  const Eigen::Index n = data.rows();
  std::vector<Eigen::Index> rows(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    rows[i] = static_cast<Eigen::Index>(stream.next_index(n));
  }
  return select_rows(data, rows);
}

}  // namespace imed
