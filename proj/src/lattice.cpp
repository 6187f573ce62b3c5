#include "bmlab/lattice.hpp"

#include <algorithm>

#include "bmlab/error.hpp"
#include "bmlab/parallel.hpp"

namespace bm {

std::ptrdiff_t LatticeLayer::find(const LatticeVec& k) const {
  const auto it = std::lower_bound(cubes.begin(), cubes.end(), k,
                                   [](const DyadicIndex& c, const LatticeVec& key) { return lex_less(c.k, key); });
  if (it == cubes.end() || !(it->k == k)) return -1;
  return it - cubes.begin();
}

LatticeIntegrals integrate_lattice(const LatticeWindow& w, const CubeIntegrand& ig, const QuadratureSpec& q) {
  w.validate();
  q.validate();
  const std::size_t m = ig.components;
  LatticeIntegrals out;
  out.window = w;
  out.components = m;
  out.layers.resize(static_cast<std::size_t>(w.j_max - w.j_min + 1));

  for (int j = w.j_max; j >= w.j_min; --j) {
    LatticeLayer& layer = out.layers[static_cast<std::size_t>(j - w.j_min)];
    layer.j = j;
    layer.cubes = cubes_in_window(w, j);
    layer.values.assign(layer.cubes.size() * m, 0.0);
    std::vector<char> ok(layer.cubes.size(), 1);
    const LatticeLayer* finer = j < w.j_max ? &out.layers[static_cast<std::size_t>(j + 1 - w.j_min)] : nullptr;

    parallel_for(layer.cubes.size(), [&](std::size_t i) {
      double* dst = layer.values.data() + i * m;
      const Box box = to_box(layer.cubes[i]);
      if (ig.support && !ig.support->intersects(box)) return;
      if (!finer) {
        const MultiIntegralResult r = integrate(ig, box, q);
        std::copy(r.values.begin(), r.values.end(), dst);
        ok[i] = r.converged;
        return;
      }
      std::vector<CompensatedSum> acc(m);
      for (const DyadicIndex& child : dyadic_children(layer.cubes[i])) {
        const std::ptrdiff_t pos = finer->find(child.k);
        if (pos >= 0) {
          for (std::size_t c = 0; c < m; ++c) acc[c].add(finer->values[static_cast<std::size_t>(pos) * m + c]);
        } else {
          const MultiIntegralResult r = integrate(ig, to_box(child), q);
          if (!r.converged) ok[i] = 0;
          for (std::size_t c = 0; c < m; ++c) acc[c].add(r.values[c]);
        }
      }
      for (std::size_t c = 0; c < m; ++c) dst[c] = acc[c].value();
    });
    layer.converged = std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
    if (finer && !finer->converged) layer.converged = false;
    if (!layer.converged) out.converged = false;
  }
  return out;
}

}  // namespace bm
