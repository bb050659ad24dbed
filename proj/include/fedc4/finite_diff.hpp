#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace fedc4 {

struct FiniteDiffReport {
  double max_rel_err = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;  // entries compared (both-tiny entries are skipped)
};

using ScalarFn = std::function<double(const std::vector<double>&)>;
using GradFn = std::function<std::vector<double>(const std::vector<double>&)>;

// Central differences vs the supplied analytic gradient. Entries where both
// |analytic| and |numeric| < 1e-8 are skipped.
FiniteDiffReport finite_diff_check(const ScalarFn& f, const std::vector<double>& x0,
                                   const std::vector<double>& analytic, double step = 1e-5);

// Same, but recomputes the analytic gradient itself; if the check misses
// rel_tol (e.g. a ReLU kink sits within `step` of x0), the probe point is
// jittered once and retried.
FiniteDiffReport finite_diff_check(const ScalarFn& f, const GradFn& grad,
                                   const std::vector<double>& x0, double step, double rel_tol,
                                   std::uint64_t jitter_seed = 7);

}  // namespace fedc4
