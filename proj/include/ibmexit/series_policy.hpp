#pragma once

#include "errors.hpp"

namespace ibmexit {

struct SeriesPolicy {
  double abs_tol = 1e-12;
  int max_terms = 200;
  double switchover_u = 0.2;

  void validate() const {
    IBMEXIT_REQUIRE(abs_tol > 0 && max_terms >= 1 && switchover_u > 0, DomainError,
                    "SeriesPolicy: tolerances and term cap must be positive");
  }
};

}  // namespace ibmexit
