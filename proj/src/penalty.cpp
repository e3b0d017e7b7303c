#include "mbi/penalty.hpp"

#include "mbi/error.hpp"

#include <cmath>

namespace mbi {

void PenaltySpec::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::InvalidArgument, "penalty lambda must be finite and nonnegative");
  }
  if (!(a > 2.0)) throw Error(ErrorCode::InvalidArgument, "SCAD shape a must exceed 2");
}

double scad(double b, const PenaltySpec& spec) {
  const double l = spec.lambda;
  const double a = spec.a;
  if (b <= l) return l * b;
  if (b <= a * l) return (2.0 * a * l * b - b * b - l * l) / (2.0 * (a - 1.0));
  return (a + 1.0) * l * l / 2.0;
}

double scad_prime(double b, const PenaltySpec& spec) {
  const double l = spec.lambda;
  const double a = spec.a;
  if (b <= l) return l;
  if (b <= a * l) return (a * l - b) / (a - 1.0);
  return 0.0;
}

double scad_sum(const VectorXd& beta, const PenaltySpec& spec) {
  if (spec.lambda == 0.0) return 0.0;
  double total = 0.0;
  for (Index j = 0; j < beta.size(); ++j) total += scad(std::abs(beta(j)), spec);
  return total;
}

}  // namespace mbi
