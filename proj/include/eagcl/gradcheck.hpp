#pragma once

// Finite-difference verification of reverse-mode gradients. The callable is
// evaluated around the current parameter values; analytic gradients are
// requested once, numeric ones via central differences per coordinate.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "eagcl/tensor.hpp"

namespace eagcl {

struct GradCheckFailure {
  std::size_t param;
  std::string name;  // empty when the caller gave no names
  std::size_t coord;
  double analytic;
  double numeric;
  double rel_err;
};

struct GradCheckReport {
  bool pass = true;
  double max_rel_err = 0.0;
  std::size_t coords_checked = 0;
  std::vector<GradCheckFailure> failures;

  void print(std::ostream& os) const {
    os << "gradcheck: " << (pass ? "PASS" : "FAIL") << "  coords=" << coords_checked
       << "  max_rel_err=" << max_rel_err << '\n';
    for (const auto& f : failures) {
      os << "  param " << f.param;
      if (!f.name.empty()) os << " (" << f.name << ")";
      os << " coord " << f.coord << ": analytic=" << f.analytic << " numeric=" << f.numeric
         << " rel_err=" << f.rel_err << '\n';
    }
  }
};

// f(grads): returns the scalar objective at the current parameter values;
// when grads != nullptr it must also fill one gradient tensor per parameter,
// in the same order as `params`. The parameters are mutated during probing
// and restored before returning.
using GradCheckFn = std::function<double(std::vector<Tensor>* grads)>;

inline GradCheckReport grad_check(const GradCheckFn& f, const std::vector<Tensor*>& params,
                                  double h, double tol,
                                  const std::vector<std::string>& names = {}) {
  if (!names.empty() && names.size() != params.size())
    throw ContractError("grad_check: got " + std::to_string(names.size()) + " names for " +
                        std::to_string(params.size()) + " parameters");
  GradCheckReport report;
  std::vector<Tensor> analytic;
  f(&analytic);
  if (analytic.size() != params.size())
    throw ContractError("grad_check: callable returned " + std::to_string(analytic.size()) +
                        " gradients for " + std::to_string(params.size()) + " parameters");

  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& t = *params[p];
    check_same_shape(t, analytic[p], "grad_check");
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double saved = t[i];
      t[i] = saved + h;
      const double up = f(nullptr);
      t[i] = saved - h;
      const double dn = f(nullptr);
      t[i] = saved;
      const double numeric = (up - dn) / (2.0 * h);
      const double a = analytic[p][i];
      const double rel = std::abs(a - numeric) / std::max(1.0, std::abs(numeric));
      ++report.coords_checked;
      if (rel > report.max_rel_err) report.max_rel_err = rel;
      if (rel > tol)
        report.failures.push_back({p, names.empty() ? "" : names[p], i, a, numeric, rel});
    }
  }
  report.pass = report.failures.empty();
  return report;
}

}  // namespace eagcl
