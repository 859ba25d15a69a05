#pragma once

#include <array>

#include "bpv/persistence.hpp"

namespace bpv {

inline constexpr int kPsDim = 11;
inline constexpr int kHepcDim = 15;

// Replaces infinite deaths with cap; points whose capped death equals their
// birth are dropped. cap below the birth of an infinite point, or below the
// largest finite death, is rejected.
PersistenceDiagram finitize(const PersistenceDiagram& pd, double cap);

struct PsOptions {
  // The published midlife-entropy formula mixes midlives and lifespans
  // inside the logarithm; the symmetric form (midlife in both places) is the
  // default and the printed form is available behind this switch.
  bool epy_m_literal = false;
  double gpc_sigma = 1.0;
};

struct PsResult {
  std::array<double, kPsDim> values{};
  bool degenerate = false;
};

// Persistence statistics of a finite diagram, in fixed order:
//   mean/std/skew/kurt/epy of the midlife multiset {(d+b)/2},
//   mean/std/skew/kurt/epy of the lifespan multiset {d-b},
//   L1 norm of the Gaussian persistence curve.
// Moments are population moments; skewness and kurtosis are defined as 0
// when the variance vanishes. The empty diagram yields the zero vector with
// the degenerate flag set.
PsResult persistence_stats(const PersistenceDiagram& pd,
                           const PsOptions& opts = {});

// Lifespan entropy curve le(x) = sum over points of
// -(d-b)/L * log((d-b)/L) * 1[b <= x < d], with L the total lifespan.
double entropy_curve(const PersistenceDiagram& pd, double x);

struct HepcResult {
  std::array<double, kHepcDim> values{};
  bool degenerate = false;
};

// Hermite-function expansion coefficients alpha_0..alpha_14 of the lifespan
// entropy curve, computed by closed-form recursion. The empty diagram yields
// the zero vector with the degenerate flag set.
HepcResult hepc(const PersistenceDiagram& pd);

// Hermite functions h_0..h_nmax evaluated at x (orthonormal L2 basis):
// h_0 = pi^{-1/4} exp(-x^2/2), h_1 = sqrt(2) x h_0,
// h_{n+1} = x sqrt(2/(n+1)) h_n - sqrt(n/(n+1)) h_{n-1}.
void hermite_functions(double x, int nmax, double* out);

double normal_pdf(double x);
double normal_cdf(double x);

}  // namespace bpv
