#include "gbcontrib/report.hpp"

#include <charconv>
#include <cmath>

#include "gbcontrib/error.hpp"

namespace gbcontrib {

std::string format_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

namespace {

const char* direction_name(Direction d) { return d == Direction::kLeft ? "left" : "right"; }

}  // namespace

void write_explanations_csv(std::ostream& out, const Ensemble& ens,
                            std::span<const Explanation> explanations) {
  out << "sample_index,bias";
  for (const auto& name : ens.feature_names()) out << ',' << name;
  out << ",prediction\n";
  for (std::size_t i = 0; i < explanations.size(); ++i) {
    const Explanation& e = explanations[i];
    out << i << ',' << format_real(e.bias);
    for (double c : e.contributions) out << ',' << format_real(c);
    out << ',' << format_real(e.prediction) << '\n';
  }
}

void write_records_csv(std::ostream& out, const Ensemble& ens,
                       std::span<const Explanation> explanations) {
  out << "sample_index,tree_index,step,feature,threshold,direction,residue,scaled_residue\n";
  for (std::size_t i = 0; i < explanations.size(); ++i) {
    for (const DecisionRecord& r : explanations[i].records) {
      out << i << ',' << r.tree_index << ',' << r.step << ',' << ens.feature_names()[r.feature]
          << ',' << format_real(r.threshold) << ',' << direction_name(r.direction) << ','
          << format_real(r.residue) << ',' << format_real(r.scaled_residue) << '\n';
    }
  }
}

void write_decision_space_csv(std::ostream& out, const Ensemble& ens,
                              std::span<const DecisionSpace> spaces) {
  out << "sample_index,feature,lower,upper\n";
  for (std::size_t i = 0; i < spaces.size(); ++i) {
    for (std::size_t f = 0; f < spaces[i].intervals.size(); ++f) {
      const Interval& iv = spaces[i].intervals[f];
      out << i << ',' << ens.feature_names()[f] << ',' << format_real(iv.lower) << ','
          << format_real(iv.upper) << '\n';
    }
  }
}

void write_predictions_csv(std::ostream& out, std::span<const double> predictions) {
  out << "sample_index,prediction\n";
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    out << i << ',' << format_real(predictions[i]) << '\n';
  }
}

void write_importance_csv(std::ostream& out, const Ensemble& ens,
                          std::span<const double> importance) {
  out << "feature,importance\n";
  for (std::size_t f = 0; f < importance.size(); ++f) {
    out << ens.feature_names()[f] << ',' << format_real(importance[f]) << '\n';
  }
}

}  // namespace gbcontrib
