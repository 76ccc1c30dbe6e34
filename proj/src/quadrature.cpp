#include "freeprob/quadrature.hpp"

#include "freeprob/errors.hpp"

#include <cmath>

namespace freeprob {

std::vector<QuadNode> gauss_legendre(int n) {
    if (n < 1) throw Error("gauss_legendre: need at least one node");
    std::vector<QuadNode> out(static_cast<size_t>(n));
    const long double pi = 3.14159265358979323846264338327950288L;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        // Chebyshev-angle starting guess for the i-th positive-side root.
        long double x = std::cos(pi * (static_cast<long double>(i) + 0.75L) /
                                 (static_cast<long double>(n) + 0.5L));
        long double dp = 0;
        for (int iter = 0; iter < 100; ++iter) {
            long double p0 = 1, p1 = x;
            for (int k = 2; k <= n; ++k) {
                long double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1);
            long double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-19L * (1 + std::abs(x))) break;
        }
        long double w = 2.0L / ((1 - x * x) * dp * dp);
        out[static_cast<size_t>(i)] = {-x, w};
        out[static_cast<size_t>(n - 1 - i)] = {x, w};
    }
    return out;
}

} // namespace freeprob
