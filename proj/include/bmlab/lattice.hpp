#pragma once

#include <cstddef>
#include <vector>

#include "bmlab/dyadic.hpp"
#include "bmlab/integrals.hpp"

namespace bm {

struct LatticeLayer {
  int j = 0;
  std::vector<DyadicIndex> cubes;  // lexicographic, as cubes_in_window returns them
  std::vector<double> values;      // cubes.size() × components, row-major
  bool converged = true;

  // Position of a cube in this layer, or -1.
  std::ptrdiff_t find(const LatticeVec& k) const;
};

// Integrals of one integrand over every cube of a window.
struct LatticeIntegrals {
  LatticeWindow window;
  std::size_t components = 1;
  std::vector<LatticeLayer> layers;  // j_min first
  bool converged = true;

  const LatticeLayer& layer(int j) const { return layers.at(static_cast<std::size_t>(j - window.j_min)); }
};

// Finest layer by direct cubature; every coarser cube is the sum of its 2^n
// children, so the table is additive across scales by construction. Children that
// lie outside the window are integrated directly.
LatticeIntegrals integrate_lattice(const LatticeWindow& w, const CubeIntegrand& ig, const QuadratureSpec& q);

}  // namespace bm
