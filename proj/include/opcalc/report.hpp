#pragma once

#include <map>
#include <optional>
#include <string>

#include <Eigen/Dense>

namespace opcalc {

// Result matrix plus diagnostics. `anchor` is a scenario tag carried through
// to machine-readable reports.
struct CalculusReport {
  Eigen::MatrixXcd result;
  double err_estimate = 0.0;
  double tail_bound = 0.0;
  double delta = 0.0;
  double truncation_radius = 0.0;
  int panels = 0;
  std::optional<double> oracle_residual;
  std::string method;
  std::string anchor;
  std::map<std::string, double> extra;
};

}  // namespace opcalc
