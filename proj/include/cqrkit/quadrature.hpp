#pragma once

#include <cmath>
#include <cstdlib>

namespace cqrkit {

namespace detail {

// Gauss-Kronrod 7-15 nodes and weights on [-1, 1].
inline constexpr double kGk15Nodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

inline constexpr double kGk15KronrodW[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

inline constexpr double kGk15GaussW[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

template <class F>
void gk15(const F& f, double a, double b, double& kronrod, double& gauss) {
  const double c = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(c);
  kronrod = kGk15KronrodW[7] * fc;
  gauss = kGk15GaussW[3] * fc;
  for (int j = 0; j < 7; ++j) {
    const double offset = half * kGk15Nodes[j];
    const double sum = f(c - offset) + f(c + offset);
    kronrod += kGk15KronrodW[j] * sum;
    if (j % 2 == 1) gauss += kGk15GaussW[j / 2] * sum;
  }
  kronrod *= half;
  gauss *= half;
}

template <class F>
double integrate_recursive(const F& f, double a, double b, double tol, int depth,
                           int forced_splits) {
  if (forced_splits > 0) {
    const double mid = 0.5 * (a + b);
    return integrate_recursive(f, a, mid, 0.5 * tol, depth - 1, forced_splits - 1) +
           integrate_recursive(f, mid, b, 0.5 * tol, depth - 1, forced_splits - 1);
  }
  double k, g;
  gk15(f, a, b, k, g);
  if (std::abs(k - g) <= tol || depth <= 0) return k;
  const double mid = 0.5 * (a + b);
  return integrate_recursive(f, a, mid, 0.5 * tol, depth - 1, 0) +
         integrate_recursive(f, mid, b, 0.5 * tol, depth - 1, 0);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod integration of f over [a, b] to absolute accuracy
/// abs_tol. The first few bisections are unconditional so narrow features
/// cannot slip between the nodes of one wide panel.
template <class F>
double integrate_adaptive(const F& f, double a, double b, double abs_tol) {
  if (a == b) return 0.0;
  return detail::integrate_recursive(f, a, b, abs_tol, 48, 4);
}

}  // namespace cqrkit
