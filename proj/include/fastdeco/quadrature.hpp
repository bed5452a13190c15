#pragma once

#include <vector>

namespace fastdeco {

struct Rule1D {
  std::vector<double> x;
  std::vector<double> w;
};

// Gauss-Legendre rule on [-1, 1]. Cached per order; safe to call concurrently.
const Rule1D& gauss_legendre(int n);

// Gauss-Legendre rule mapped to [a, b].
Rule1D gauss_legendre(int n, double a, double b);

// Probabilists' Gauss-Hermite rule: weights sum to 1 and integrate against the
// standard normal density. Computed by Golub-Welsch; cached per order.
const Rule1D& gauss_hermite(int n);

}  // namespace fastdeco
