#pragma once

#include "mbi/types.hpp"

namespace mbi {

struct PenaltySpec {
  double lambda = 0.0;
  double a = 3.7;

  void validate() const;  // throws InvalidArgument unless lambda >= 0 and a > 2
};

// SCAD penalty of b >= 0 (callers pass |beta_j|).
double scad(double b, const PenaltySpec& spec);
double scad_prime(double b, const PenaltySpec& spec);

double scad_sum(const VectorXd& beta, const PenaltySpec& spec);

}  // namespace mbi
