#pragma once

#include <map>
#include <string>
#include <vector>

#include "cforge/panel.hpp"

namespace cforge::stats {

struct FePanelData {
  std::vector<std::string> country;
  std::vector<int> year;
  std::vector<double> y;
  std::vector<std::vector<double>> x_columns;  // one vector per regressor, aligned with y
  std::vector<std::string> x_names;
};

struct FixedEffectsResult {
  std::map<std::string, double> beta;
  std::map<std::string, double> std_errors;  // conventional homoskedastic
  std::map<std::string, double> alpha;       // country effects (absorb the grand mean)
  std::map<int, double> lambda;              // year effects, mean zero
  double r_squared_within = 0.0;
  std::size_t n_obs = 0;
};

// Two-way within estimator: iterative alternating country/year demeaning of y
// and every regressor to 1e-10 convergence, then OLS on the demeaned data.
// include_interaction appends x0 * x1 as an extra regressor. Collinearity
// after demeaning raises a rank error naming the offending regressor.
FixedEffectsResult fixed_effects_regression(const FePanelData& data, bool include_interaction);

// Convenience wrapper: regresses the equal-weight development index of the
// min-max normalized indicators on the three normalized indicators.
FixedEffectsResult fixed_effects_regression(const panel::Panel& panel, bool include_interaction);

}  // namespace cforge::stats
