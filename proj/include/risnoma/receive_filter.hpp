#pragma once

#include "risnoma/numerics.hpp"

namespace risnoma {

/// Unit-norm receive filter maximizing the radar SNR lower bound for one
/// target: the normalized direction (I ⊗ G_l) vec(W). The bound is scale and
/// phase invariant in the filter, so the unit normalization keeps the
/// filter-norm constraint exact without changing the attained SNR.
/// Throws std::runtime_error when the direction is numerically zero
/// (unilluminated target).
CVector optimal_filter(const CMatrix& G_l, const CMatrix& W);

}  // namespace risnoma
