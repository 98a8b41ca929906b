#include "gbcontrib/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "gbcontrib/error.hpp"
#include "gbcontrib/random.hpp"

namespace gbcontrib {

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw DataError("feature matrix: expected " + std::to_string(rows_ * cols_) +
                    " values, got " + std::to_string(values_.size()));
  }
}

std::vector<double> FeatureMatrix::column(std::size_t col) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = at(r, col);
  return out;
}

Dataset::Dataset(FeatureMatrix features, std::vector<double> target,
                 std::vector<std::string> feature_names)
    : features_(std::move(features)),
      target_(std::move(target)),
      feature_names_(std::move(feature_names)) {
  if (features_.rows() == 0) throw DataError("dataset has no rows");
  if (target_.size() != features_.rows()) {
    throw DataError("target length " + std::to_string(target_.size()) + " != row count " +
                    std::to_string(features_.rows()));
  }
  if (feature_names_.size() != features_.cols()) {
    throw DataError("expected " + std::to_string(features_.cols()) + " feature names, got " +
                    std::to_string(feature_names_.size()));
  }
  std::set<std::string_view> seen;
  for (const auto& name : feature_names_) {
    if (name.empty()) throw DataError("empty feature name");
    if (!seen.insert(name).second) throw DataError("duplicate feature name '" + name + "'");
  }
  for (double v : features_.values()) {
    if (!std::isfinite(v)) throw DataError("non-finite feature value");
  }
  for (double v : target_) {
    if (!std::isfinite(v)) throw DataError("non-finite target value");
  }
}

std::optional<std::size_t> Dataset::feature_index(std::string_view name) const {
  const auto it = std::find(feature_names_.begin(), feature_names_.end(), name);
  if (it == feature_names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - feature_names_.begin());
}

std::size_t Dataset::require_feature(std::string_view name) const {
  if (auto idx = feature_index(name)) return *idx;
  throw DataError("unknown feature '" + std::string(name) + "'");
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
  std::vector<double> values;
  values.reserve(rows.size() * cols());
  std::vector<double> target;
  target.reserve(rows.size());
  for (std::size_t r : rows) {
    if (r >= this->rows()) throw DataError("row index out of range");
    const auto row = features_.row(r);
    values.insert(values.end(), row.begin(), row.end());
    target.push_back(target_[r]);
  }
  return Dataset(FeatureMatrix(rows.size(), cols(), std::move(values)), std::move(target),
                 feature_names_);
}

Dataset Dataset::drop_feature(std::string_view name) const {
  const std::size_t drop = require_feature(name);
  std::vector<double> values;
  values.reserve(rows() * (cols() - 1));
  for (std::size_t r = 0; r < rows(); ++r) {
    for (std::size_t c = 0; c < cols(); ++c) {
      if (c != drop) values.push_back(features_.at(r, c));
    }
  }
  std::vector<std::string> names = feature_names_;
  names.erase(names.begin() + static_cast<std::ptrdiff_t>(drop));
  return Dataset(FeatureMatrix(rows(), cols() - 1, std::move(values)), target_,
                 std::move(names));
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

std::string header_name(std::string_view field) {
  if (field.size() >= 2 && field.front() == '"' && field.back() == '"') {
    field = field.substr(1, field.size() - 2);
  }
  return std::string(field);
}

std::optional<double> parse_real(std::string_view field) {
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    return std::nullopt;
  }
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");

  std::string line;
  std::size_t line_no = 0;
  CsvTable table;
  bool have_header = false;
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (!have_header) {
      for (auto f : fields) table.header.push_back(header_name(f));
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw DataError(path.string() + ": line " + std::to_string(line_no) + " has " +
                      std::to_string(fields.size()) + " fields, header has " +
                      std::to_string(table.header.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const auto v = parse_real(fields[c]);
      if (!v) {
        throw DataError(path.string() + ": line " + std::to_string(line_no) + ", column " +
                        std::to_string(c + 1) + " ('" + table.header[c] +
                        "'): cannot parse '" + std::string(fields[c]) + "' as a finite real");
      }
      values.push_back(*v);
    }
    ++rows;
  }
  if (!have_header) throw DataError(path.string() + ": empty file");
  if (rows == 0) throw DataError(path.string() + ": empty data body");
  table.cells = FeatureMatrix(rows, table.header.size(), std::move(values));
  return table;
}

Dataset load_csv(const std::filesystem::path& path, std::string_view target_column) {
  CsvTable table = read_csv(path);
  const auto it = std::find(table.header.begin(), table.header.end(), target_column);
  if (it == table.header.end()) {
    throw DataError("target column not found: '" + std::string(target_column) + "'");
  }
  const auto target_col = static_cast<std::size_t>(it - table.header.begin());
  const std::size_t cols = table.header.size() - 1;
  std::vector<double> values;
  values.reserve(table.cells.rows() * cols);
  std::vector<double> target;
  target.reserve(table.cells.rows());
  for (std::size_t r = 0; r < table.cells.rows(); ++r) {
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      if (c == target_col) {
        target.push_back(table.cells.at(r, c));
      } else {
        values.push_back(table.cells.at(r, c));
      }
    }
  }
  std::vector<std::string> names = std::move(table.header);
  names.erase(names.begin() + static_cast<std::ptrdiff_t>(target_col));
  return Dataset(FeatureMatrix(table.cells.rows(), cols, std::move(values)), std::move(target),
                 std::move(names));
}

TrainTestSplit train_test_split(const Dataset& ds, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw InvalidArgument("test fraction must lie in (0, 1)");
  }
  const std::size_t n = ds.rows();
  if (n < 2) throw DataError("dataset too small to split (need at least 2 rows)");
  std::size_t n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * test_fraction));
  n_test = std::clamp<std::size_t>(n_test, 1, n - 1);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(order[i], order[rng.index(i + 1)]);
  }
  std::vector<std::size_t> test(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {ds.select_rows(train), ds.select_rows(test)};
}

Dataset add_correlated_feature(const Dataset& ds, std::string_view base_feature, double factor,
                               double offset, std::string new_name) {
  const std::size_t base = ds.require_feature(base_feature);
  if (ds.feature_index(new_name)) {
    throw DataError("duplicate feature name '" + new_name + "'");
  }
  if (factor == 0.0) throw InvalidArgument("correlation factor must be nonzero");
  const std::size_t cols = ds.cols() + 1;
  std::vector<double> values;
  values.reserve(ds.rows() * cols);
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    const auto row = ds.features().row(r);
    values.insert(values.end(), row.begin(), row.end());
    values.push_back(factor * row[base] + offset);
  }
  std::vector<std::string> names = ds.feature_names();
  names.push_back(std::move(new_name));
  return Dataset(FeatureMatrix(ds.rows(), cols, std::move(values)), ds.target(),
                 std::move(names));
}

Dataset add_gaussian_noise(const Dataset& ds, std::string_view feature, double variance_pct,
                           std::uint64_t seed) {
  const std::size_t col = ds.require_feature(feature);
  if (!(variance_pct >= 0.0) || !std::isfinite(variance_pct)) {
    throw InvalidArgument("noise variance percentage must be a nonnegative real");
  }
  const std::vector<double> column = ds.features().column(col);
  const double noise_sd = std::sqrt(variance_pct / 100.0 * population_variance(column));
  if (noise_sd == 0.0) return ds;

  Rng rng(seed);
  std::vector<double> values = ds.features().values();
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    values[r * ds.cols() + col] += noise_sd * rng.normal();
  }
  return Dataset(FeatureMatrix(ds.rows(), ds.cols(), std::move(values)), ds.target(),
                 ds.feature_names());
}

OutlierSample make_outlier(const Dataset& ds, std::string_view feature) {
  const std::size_t chosen = ds.require_feature(feature);
  OutlierSample sample;
  sample.x_fake.resize(ds.cols());
  for (std::size_t c = 0; c < ds.cols(); ++c) {
    const auto column = ds.features().column(c);
    if (c == chosen) {
      sample.x_fake[c] = *std::max_element(column.begin(), column.end()) + population_std(column);
    } else {
      sample.x_fake[c] = mean(column);
    }
  }
  const auto& y = ds.target();
  sample.y_fake = *std::max_element(y.begin(), y.end()) + population_std(y);
  return sample;
}

Dataset make_synthetic_regression(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  if (rows == 0 || cols == 0) throw InvalidArgument("synthetic dataset needs rows and columns");
  Rng rng(seed);
  std::vector<double> values(rows * cols);
  std::vector<double> target(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double y = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = rng.normal();
      values[r * cols + c] = v;
      y += 3.0 / static_cast<double>(c + 1) * v;
    }
    const double* x = &values[r * cols];
    y += 0.5 * std::sin(2.0 * x[0]);
    if (cols >= 3) y += 0.3 * x[1] * x[2];
    y += 0.1 * rng.normal();
    target[r] = y;
  }
  std::vector<std::string> names(cols);
  for (std::size_t c = 0; c < cols; ++c) names[c] = "x" + std::to_string(c);
  return Dataset(FeatureMatrix(rows, cols, std::move(values)), std::move(target),
                 std::move(names));
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double population_variance(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double m = mean(values);
  double acc = 0.0;
  for (double v : values) acc += (v - m) * (v - m);
  return acc / static_cast<double>(values.size());
}

double population_std(std::span<const double> values) {
  return std::sqrt(population_variance(values));
}

std::string fingerprint(const Dataset& ds) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix = [&h](const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  const std::uint64_t shape[2] = {ds.rows(), ds.cols()};
  mix(shape, sizeof shape);
  for (const auto& name : ds.feature_names()) mix(name.data(), name.size() + 1);
  mix(ds.features().values().data(), ds.features().values().size() * sizeof(double));
  mix(ds.target().data(), ds.target().size() * sizeof(double));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace gbcontrib
