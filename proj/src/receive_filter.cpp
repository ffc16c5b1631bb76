#include "risnoma/receive_filter.hpp"

#include <stdexcept>

namespace risnoma {

CVector optimal_filter(const CMatrix& G_l, const CMatrix& W) {
  CVector dir = vec(G_l * W);  // (I ⊗ G_l) vec(W)
  double n = dir.norm();
  if (!(n > 1e-300)) throw std::runtime_error("optimal_filter: target is not illuminated");
  return dir / n;
}

}  // namespace risnoma
