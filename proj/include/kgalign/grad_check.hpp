#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "kgalign/error.hpp"
#include "kgalign/matrix.hpp"
#include "kgalign/tape.hpp"

namespace kgalign {

/// Builds a scalar on the given tape from the registered inputs.
using TapeFunction = std::function<Var(Tape<double>&, std::span<const Var>)>;

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
  bool passed = false;
};

/// Compares tape gradients against central differences.
///
/// The relative error of one coordinate is |a − n| / max(|a|, |n|, floor);
/// the floor keeps coordinates whose true gradient is ~0 from dividing by
/// noise.
inline GradCheckReport grad_check(const TapeFunction& f, const std::vector<DenseMatrix<double>>& inputs,
                                  double eps = 1e-6, double tol = 1e-4, double floor = 1e-3) {
  auto evaluate = [&](const std::vector<DenseMatrix<double>>& xs, bool with_grad,
                      std::vector<DenseMatrix<double>>* grads) {
    Tape<double> tape;
    std::vector<Var> vars;
    vars.reserve(xs.size());
    for (const auto& x : xs) vars.push_back(with_grad ? tape.variable(x) : tape.constant(x));
    const Var out = f(tape, vars);
    tape.check_finite();
    if (tape.value(out).rows() != 1 || tape.value(out).cols() != 1)
      throw ShapeError("grad_check: function must be scalar-valued");
    if (with_grad) {
      tape.backward(out);
      for (const auto& v : vars) grads->push_back(tape.grad(v));
    }
    return tape.value(out)(0, 0);
  };

  std::vector<DenseMatrix<double>> analytic;
  evaluate(inputs, true, &analytic);

  GradCheckReport report;
  std::vector<DenseMatrix<double>> probe = inputs;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double original = inputs[k].data()[i];
      probe[k].data()[i] = original + eps;
      const double up = evaluate(probe, false, nullptr);
      probe[k].data()[i] = original - eps;
      const double down = evaluate(probe, false, nullptr);
      probe[k].data()[i] = original;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[k].data()[i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      ++report.checked;
      if (report.checked == 1 || rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_input = k;
        report.worst_index = i;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  report.passed = report.max_rel_error < tol;
  return report;
}

}  // namespace kgalign
