#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gbcontrib {

/// Dense row-major matrix of finite reals. May have zero rows.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double at(std::size_t row, std::size_t col) const { return values_[row * cols_ + col]; }
  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * cols_, cols_};
  }
  std::vector<double> column(std::size_t col) const;
  const std::vector<double>& values() const { return values_; }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// Feature matrix, target vector and column names.
///
/// Invariants (checked on construction, DataError otherwise): at least one
/// row, every value finite, target length equal to the row count, names
/// unique, non-empty and one per column. Immutable once built.
class Dataset {
 public:
  Dataset(FeatureMatrix features, std::vector<double> target,
          std::vector<std::string> feature_names);

  const FeatureMatrix& features() const { return features_; }
  const std::vector<double>& target() const { return target_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  std::size_t rows() const { return features_.rows(); }
  std::size_t cols() const { return features_.cols(); }

  std::optional<std::size_t> feature_index(std::string_view name) const;
  /// Like feature_index but throws DataError("unknown feature ...").
  std::size_t require_feature(std::string_view name) const;

  Dataset select_rows(std::span<const std::size_t> rows) const;
  Dataset drop_feature(std::string_view name) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  FeatureMatrix features_;
  std::vector<double> target_;
  std::vector<std::string> feature_names_;
};

struct OutlierSample {
  std::vector<double> x_fake;
  double y_fake = 0.0;
};

struct TrainTestSplit {
  Dataset train;
  Dataset test;
};

/// Header plus numeric body of a CSV file.
struct CsvTable {
  std::vector<std::string> header;
  FeatureMatrix cells;
};

/// Reads a comma-separated file whose first row is a header and whose cells
/// all parse as finite reals. Errors name the offending row and column.
CsvTable read_csv(const std::filesystem::path& path);

/// Loads a dataset, moving `target_column` out of the features.
Dataset load_csv(const std::filesystem::path& path, std::string_view target_column);

/// Shuffles row indices with `seed` and moves floor(n * test_fraction) rows
/// (at least one) into the test part. Both parts keep the original row order.
TrainTestSplit train_test_split(const Dataset& ds, double test_fraction, std::uint64_t seed);

/// Appends the column factor * base + offset as `new_name`.
Dataset add_correlated_feature(const Dataset& ds, std::string_view base_feature, double factor,
                               double offset, std::string new_name);

/// Adds N(0, variance_pct / 100 * var(column)) noise to one column.
Dataset add_gaussian_noise(const Dataset& ds, std::string_view feature, double variance_pct,
                           std::uint64_t seed);

/// A register sitting at the column means except for `feature`, which is
/// pushed to max + std; the target is max(target) + std(target).
OutlierSample make_outlier(const Dataset& ds, std::string_view feature);

/// Synthetic regression problem with standard-normal features and a target
/// dominated by the leading columns:
///   y = sum_j w_j x_j + 0.5 sin(2 x_0) + 0.3 x_1 x_2 + 0.1 e,  w_j = 3 / (j + 1).
/// Columns are named x0, x1, ...
Dataset make_synthetic_regression(std::size_t rows, std::size_t cols, std::uint64_t seed);

// Population statistics (divide by n).
double mean(std::span<const double> values);
double population_variance(std::span<const double> values);
double population_std(std::span<const double> values);

/// FNV-1a hash over names, shape and value bits; 16 hex digits.
std::string fingerprint(const Dataset& ds);

}  // namespace gbcontrib
