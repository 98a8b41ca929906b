#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "gbcontrib/contrib.hpp"
#include "gbcontrib/gbdt.hpp"

namespace gbcontrib {

/// Shortest text that parses back to the same double ("%.17g" style);
/// infinities print as "inf" / "-inf".
std::string format_real(double v);

// sample_index,bias,<feature...>,prediction
void write_explanations_csv(std::ostream& out, const Ensemble& ens,
                            std::span<const Explanation> explanations);

// sample_index,tree_index,step,feature,threshold,direction,residue,scaled_residue
void write_records_csv(std::ostream& out, const Ensemble& ens,
                       std::span<const Explanation> explanations);

// sample_index,feature,lower,upper
void write_decision_space_csv(std::ostream& out, const Ensemble& ens,
                              std::span<const DecisionSpace> spaces);

// sample_index,prediction
void write_predictions_csv(std::ostream& out, std::span<const double> predictions);

// feature,importance
void write_importance_csv(std::ostream& out, const Ensemble& ens,
                          std::span<const double> importance);

}  // namespace gbcontrib
