#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gbcontrib/contrib.hpp"
#include "gbcontrib/dataset.hpp"
#include "gbcontrib/error.hpp"
#include "gbcontrib/experiments.hpp"
#include "gbcontrib/gbdt.hpp"
#include "gbcontrib/report.hpp"

namespace py = pybind11;
using namespace gbcontrib;
namespace ex = gbcontrib::experiments;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

FeatureMatrix to_matrix(const Array& x) {
  if (x.ndim() != 2) throw DimensionError("expected a 2-d array");
  const auto rows = static_cast<std::size_t>(x.shape(0));
  const auto cols = static_cast<std::size_t>(x.shape(1));
  return FeatureMatrix(rows, cols, std::vector<double>(x.data(), x.data() + x.size()));
}

std::vector<double> to_vector(const Array& v) {
  if (v.ndim() != 1) throw DimensionError("expected a 1-d array");
  return std::vector<double>(v.data(), v.data() + v.size());
}

Array matrix_to_numpy(const FeatureMatrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.values().begin(), m.values().end(), out.mutable_data());
  return out;
}

Array vector_to_numpy(const std::vector<double>& v) {
  Array out(v.size());
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

std::vector<std::string> default_names(std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back("x" + std::to_string(i));
  return names;
}

FeatureMatrix checked_matrix(const Ensemble& ens, const Array& x) {
  FeatureMatrix m = to_matrix(x);
  if (m.cols() != ens.n_features()) {
    throw DimensionError("array has " + std::to_string(m.cols()) + " columns, model expects " +
                         std::to_string(ens.n_features()));
  }
  return m;
}

std::span<const double> checked_row(const Ensemble& ens, const Array& x) {
  if (x.ndim() != 1 || static_cast<std::size_t>(x.size()) != ens.n_features()) {
    throw DimensionError("expected a 1-d array of length " + std::to_string(ens.n_features()));
  }
  return {x.data(), static_cast<std::size_t>(x.size())};
}

template <typename Fn>
std::string to_text(Fn&& fn) {
  std::ostringstream out;
  fn(out);
  return out.str();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Gradient-boosted regression trees with exact per-feature contributions";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  auto data_error = py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", data_error.ptr());
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<ModelFormatError>(m, "ModelFormatError", base.ptr());

  py::class_<Dataset>(m, "Dataset")
      .def(py::init([](const Array& x, const Array& y, std::optional<std::vector<std::string>> names) {
             FeatureMatrix fm = to_matrix(x);
             auto n = names ? std::move(*names) : default_names(fm.cols());
             return Dataset(std::move(fm), to_vector(y), std::move(n));
           }),
           py::arg("x"), py::arg("y"), py::arg("feature_names") = py::none())
      .def_property_readonly("x", [](const Dataset& d) { return matrix_to_numpy(d.features()); })
      .def_property_readonly("y", [](const Dataset& d) { return vector_to_numpy(d.target()); })
      .def_property_readonly("feature_names", &Dataset::feature_names)
      .def_property_readonly("rows", &Dataset::rows)
      .def_property_readonly("cols", &Dataset::cols)
      .def("fingerprint", [](const Dataset& d) { return fingerprint(d); })
      .def("__len__", &Dataset::rows)
      .def("__eq__", [](const Dataset& a, const Dataset& b) { return a == b; })
      .def("__repr__", [](const Dataset& d) {
        return "<Dataset rows=" + std::to_string(d.rows()) + " cols=" + std::to_string(d.cols()) + ">";
      });

  m.def("load_csv", &load_csv, py::arg("path"), py::arg("target"));
  m.def(
      "train_test_split",
      [](const Dataset& ds, double fraction, std::uint64_t seed) {
        TrainTestSplit s = train_test_split(ds, fraction, seed);
        return py::make_tuple(std::move(s.train), std::move(s.test));
      },
      py::arg("dataset"), py::arg("test_fraction") = 0.1, py::arg("seed") = 0);
  m.def("make_synthetic_regression", &make_synthetic_regression, py::arg("rows"), py::arg("cols"),
        py::arg("seed") = 0);
  m.def("add_correlated_feature", &add_correlated_feature, py::arg("dataset"), py::arg("base_feature"),
        py::arg("factor"), py::arg("offset"), py::arg("new_name"));
  m.def("add_gaussian_noise", &add_gaussian_noise, py::arg("dataset"), py::arg("feature"),
        py::arg("variance_pct"), py::arg("seed"));

  py::class_<GbdtParams>(m, "GbdtParams")
      .def(py::init([](std::size_t n_estimators, double learning_rate, int max_depth,
                       std::size_t min_samples_leaf, std::size_t min_samples_split, double min_gain,
                       std::uint64_t seed) {
             GbdtParams p;
             p.n_estimators = n_estimators;
             p.learning_rate = learning_rate;
             p.cart.max_depth = max_depth;
             p.cart.min_samples_leaf = min_samples_leaf;
             p.cart.min_samples_split = min_samples_split;
             p.cart.min_gain = min_gain;
             p.seed = seed;
             p.validate();
             return p;
           }),
           py::arg("n_estimators") = 100, py::arg("learning_rate") = 0.1, py::arg("max_depth") = 3,
           py::arg("min_samples_leaf") = 1, py::arg("min_samples_split") = 2, py::arg("min_gain") = 0.0,
           py::arg("seed") = 0)
      .def_readonly("n_estimators", &GbdtParams::n_estimators)
      .def_readonly("learning_rate", &GbdtParams::learning_rate)
      .def_readonly("seed", &GbdtParams::seed)
      .def_property_readonly("max_depth", [](const GbdtParams& p) { return p.cart.max_depth; })
      .def_property_readonly("min_samples_leaf", [](const GbdtParams& p) { return p.cart.min_samples_leaf; })
      .def_property_readonly("min_samples_split", [](const GbdtParams& p) { return p.cart.min_samples_split; })
      .def_property_readonly("min_gain", [](const GbdtParams& p) { return p.cart.min_gain; });

  py::class_<DecisionRecord>(m, "DecisionRecord")
      .def_readonly("tree_index", &DecisionRecord::tree_index)
      .def_readonly("step", &DecisionRecord::step)
      .def_readonly("feature", &DecisionRecord::feature)
      .def_readonly("threshold", &DecisionRecord::threshold)
      .def_property_readonly("direction",
                             [](const DecisionRecord& r) { return r.direction == Direction::kLeft ? "left" : "right"; })
      .def_readonly("residue", &DecisionRecord::residue)
      .def_readonly("scaled_residue", &DecisionRecord::scaled_residue);

  py::class_<Explanation>(m, "Explanation")
      .def_readonly("bias", &Explanation::bias)
      .def_property_readonly("contributions", [](const Explanation& e) { return vector_to_numpy(e.contributions); })
      .def_readonly("prediction", &Explanation::prediction)
      .def_readonly("records", &Explanation::records)
      .def("contribution_sum", &Explanation::contribution_sum)
      .def("satisfies_local_accuracy", &satisfies_local_accuracy, py::arg("tolerance") = 1e-9);

  py::class_<Ensemble>(m, "Ensemble")
      .def_property_readonly("f0", &Ensemble::f0)
      .def_property_readonly("learning_rate", &Ensemble::learning_rate)
      .def_property_readonly("feature_names", &Ensemble::feature_names)
      .def_property_readonly("n_features", &Ensemble::n_features)
      .def_property_readonly("n_trees", [](const Ensemble& e) { return e.trees().size(); })
      .def_property_readonly("params", &Ensemble::params)
      .def("predict",
           [](const Ensemble& e, const Array& x) { return vector_to_numpy(gbdt_predict(e, checked_matrix(e, x))); },
           py::arg("x"))
      .def("explain",
           [](const Ensemble& e, const Array& x) { return feature_contributions(e, checked_row(e, x)); },
           py::arg("x"))
      .def(
          "explain_batch",
          [](const Ensemble& e, const Array& x) {
            const auto explanations = batch_explain(e, checked_matrix(e, x));
            const std::size_t n = explanations.size();
            Array bias(n), pred(n), contrib({n, e.n_features()});
            auto c = contrib.mutable_unchecked<2>();
            for (std::size_t i = 0; i < n; ++i) {
              bias.mutable_data()[i] = explanations[i].bias;
              pred.mutable_data()[i] = explanations[i].prediction;
              for (std::size_t f = 0; f < e.n_features(); ++f) c(i, f) = explanations[i].contributions[f];
            }
            return py::make_tuple(bias, contrib, pred);
          },
          py::arg("x"), "Returns (bias, contributions, prediction) arrays.")
      .def(
          "decision_space",
          [](const Ensemble& e, const Array& x) {
            const DecisionSpace s = decision_space(e, checked_row(e, x));
            std::vector<std::pair<double, double>> out;
            for (const Interval& iv : s.intervals) out.emplace_back(iv.lower, iv.upper);
            return out;
          },
          py::arg("x"), "Per-feature (lower, upper] bounds.")
      .def("feature_importance", [](const Ensemble& e) { return vector_to_numpy(feature_importance(e)); })
      .def("staged_mse", [](const Ensemble& e, const Dataset& d) { return vector_to_numpy(staged_mse(e, d)); })
      .def("to_json", &to_json)
      .def_static("from_json", [](const std::string& text) { return from_json(text); })
      .def("save", &save_model, py::arg("path"))
      .def_static("load", &load_model, py::arg("path"))
      .def("__eq__", [](const Ensemble& a, const Ensemble& b) { return a == b; });

  m.def("fit", &fit_gbdt, py::arg("dataset"), py::arg("params") = GbdtParams{});

  m.def(
      "correlation_experiment",
      [](const Dataset& ds, const std::string& base_feature, std::vector<std::uint64_t> seeds,
         std::optional<double> factor, std::optional<double> offset) {
        ex::CorrelationOptions o;
        o.base_feature = base_feature;
        o.seeds = std::move(seeds);
        o.factor = factor;
        o.offset = offset;
        return to_text([&](std::ostream& out) { ex::write_report_csv(out, ex::run_correlation_experiment(ds, o).report); });
      },
      py::arg("dataset"), py::arg("base_feature") = ex::kAutoFeature, py::arg("seeds") = ex::kDefaultSeeds,
      py::arg("factor") = py::none(), py::arg("offset") = py::none(), "Returns the report as CSV text.");
  m.def(
      "noise_experiment",
      [](const Dataset& ds, const std::string& feature, std::vector<double> levels, std::uint64_t seed) {
        ex::NoiseOptions o;
        o.feature = feature;
        o.levels = std::move(levels);
        o.seed = seed;
        return to_text([&](std::ostream& out) { ex::write_report_csv(out, ex::run_noise_experiment(ds, o).report); });
      },
      py::arg("dataset"), py::arg("feature") = ex::kAutoFeature,
      py::arg("levels") = std::vector<double>{0, 100, 200, 300, 400}, py::arg("seed") = 0);
  m.def(
      "outlier_experiment",
      [](const Dataset& ds, const std::string& feature, std::vector<std::uint64_t> seeds) {
        ex::OutlierOptions o;
        o.feature = feature;
        o.seeds = std::move(seeds);
        return to_text([&](std::ostream& out) {
          ex::write_outlier_csv(out, ex::run_outlier_experiment(ds, o), ds.feature_names());
        });
      },
      py::arg("dataset"), py::arg("feature") = "", py::arg("seeds") = ex::kDefaultSeeds);

  m.attr("MODEL_FORMAT_VERSION") = kModelFormatVersion;
}
