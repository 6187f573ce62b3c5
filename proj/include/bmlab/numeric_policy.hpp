#pragma once

namespace bm {

// Every tolerance the small dense linear algebra relies on lives here.
struct NumericPolicy {
  double hermitian_tol = 1e-10;      // ‖A − A*‖_F ≤ tol·‖A‖_F
  double eigen_floor = 1e-14;        // λ_min ≤ floor·λ_max rejects a nominally PD matrix
  double jacobi_tol = 1e-30;         // off-diagonal mass / total mass at convergence
  int jacobi_max_sweeps = 64;
  double ellipticity_slack = 1e-10;  // relative slack on the ellipticity sandwich
};

inline constexpr NumericPolicy kNumericPolicy{};

}  // namespace bm
