#pragma once

#include <vector>

namespace freeprob {

struct QuadNode {
    long double x;
    long double w;
};

// Gauss-Legendre nodes and weights on (-1, 1), Newton iteration on the
// Legendre recurrence; accurate to long double precision.
std::vector<QuadNode> gauss_legendre(int n);

} // namespace freeprob
