#pragma once

#include "qlab/oscsum.hpp"

#include <vector>

namespace qlab::detail {

cplx lattice_exp_sum_inner(const QuadraticPair& pair, long N, const Vec5& x);

void cube_values(const QuadraticPair& pair, long side, const Vec5& x, double h, std::vector<cplx>& out, std::vector<cplx>& scratch);

} // namespace qlab::detail
