#include "sslab/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "sslab/error.hpp"

namespace sslab {

namespace {

double eval_at(const ScalarFn& fn, const Tensor& point) {
  Tape tape;
  Var x = tape.leaf(point);
  Var root = fn(tape, x);
  require(root.valid() && root.tape == &tape,
          "grad_check: builder returned a var from another tape");
  const Tensor& v = tape.value(root);
  require(v.is_scalar(), "grad_check: builder must produce a scalar");
  return v[0];
}

}  // namespace

double grad_check(const ScalarFn& fn, const Tensor& point, double h) {
  require(h > 0.0, "grad_check: step must be positive");
  require(point.all_finite(), "grad_check: point contains a non-finite entry");

  Tape tape;
  Var x = tape.leaf(point);
  Var root = fn(tape, x);
  require(root.valid() && root.tape == &tape,
          "grad_check: builder returned a var from another tape");
  require(tape.value(root).is_scalar(),
          "grad_check: builder must produce a scalar");
  Tensor analytic = tape.backward(root)[static_cast<std::size_t>(x.id)];

  double worst = 0.0;
  Tensor probe = point;
  for (std::size_t i = 0; i < point.numel(); ++i) {
    probe[i] = point[i] + h;
    double up = eval_at(fn, probe);
    probe[i] = point[i] - h;
    double down = eval_at(fn, probe);
    probe[i] = point[i];
    double numeric = (up - down) / (2.0 * h);
    require(std::isfinite(numeric),
            "grad_check: non-finite finite-difference value");
    double rel = std::abs(analytic[i] - numeric) /
                 std::max(1e-8, std::abs(numeric));
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace sslab
