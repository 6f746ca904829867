#pragma once

#include <cmath>
#include <complex>
#include <limits>

namespace skewtensor {

namespace detail {

template <class T, class F>
T gl_step(const F& f, double a, double b, T fa, T fb, double thr, int depth) {
  const double h = (b - a) / 2.0, m = (a + b) / 2.0;
  const double alpha = std::sqrt(2.0 / 3.0), beta = 1.0 / std::sqrt(5.0);
  const double mll = m - alpha * h, ml = m - beta * h;
  const double mr = m + beta * h, mrr = m + alpha * h;
  const T fmll = f(mll), fml = f(ml), fm = f(m), fmr = f(mr), fmrr = f(mrr);
  const T i2 = (h / 6.0) * (fa + fb + 5.0 * (fml + fmr));
  const T i1 = (h / 1470.0) * (77.0 * (fa + fb) + 432.0 * (fmll + fmrr) +
                               625.0 * (fml + fmr) + 672.0 * fm);
  if (depth <= 0 || std::abs(i1 - i2) <= thr || mll <= a || b <= mrr) return i1;
  return gl_step(f, a, mll, fa, fmll, thr, depth - 1) +
         gl_step(f, mll, ml, fmll, fml, thr, depth - 1) +
         gl_step(f, ml, m, fml, fm, thr, depth - 1) +
         gl_step(f, m, mr, fm, fmr, thr, depth - 1) +
         gl_step(f, mr, mrr, fmr, fmrr, thr, depth - 1) +
         gl_step(f, mrr, b, fmrr, fb, thr, depth - 1);
}

}  // namespace detail

// Adaptive Gauss-Lobatto quadrature (Gander-Gautschi kernel) on [a, b].
// T may be double or std::complex<double>. tol is relative to a 13-point
// whole-interval estimate, with an internal safety factor.
template <class T = double, class F>
T integrate(const F& f, double a, double b, double tol = 1e-10) {
  const double h = (b - a) / 2.0, m = (a + b) / 2.0;
  const double x1 = 0.942882415695480, x2 = 0.641853342345781,
               x3 = 0.236383199662150;
  const double alpha = std::sqrt(2.0 / 3.0), beta = 1.0 / std::sqrt(5.0);
  const T y1 = f(a), y13 = f(b);
  const T y2 = f(m - x1 * h), y3 = f(m - alpha * h), y4 = f(m - x2 * h),
          y5 = f(m - beta * h), y6 = f(m - x3 * h), y7 = f(m),
          y8 = f(m + x3 * h), y9 = f(m + beta * h), y10 = f(m + x2 * h),
          y11 = f(m + alpha * h), y12 = f(m + x1 * h);
  const T i13 = h * (0.0158271919734802 * (y1 + y13) +
                     0.0942738402188500 * (y2 + y12) +
                     0.155071987336585 * (y3 + y11) +
                     0.188821573960182 * (y4 + y10) +
                     0.199773405226859 * (y5 + y9) +
                     0.224926465333340 * (y6 + y8) + 0.242611071901408 * y7);
  double scale = std::abs(i13);
  if (scale == 0.0) scale = b - a;
  const double thr = scale * tol * 0.1;
  return detail::gl_step(f, a, b, y1, y13, thr, 48);
}

// Integral over (0, inf) through the substitution y = exp(u); the integrand
// must underflow to zero outside exp([lo, hi]).
template <class T = double, class F>
T integrate_pos_log(const F& f, double tol = 1e-10, double lo = -60.0,
                    double hi = 60.0) {
  auto g = [&f](double u) {
    const double y = std::exp(u);
    return f(y) * y;
  };
  return integrate<T>(g, lo, hi, tol);
}

}  // namespace skewtensor
