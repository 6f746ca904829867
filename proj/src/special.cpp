#include "skewtensor/special.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace skewtensor {

namespace {

constexpr double kPi = std::numbers::pi;

// Coefficients of 1/Gamma(1+z) = sum a_k z^k, for the small-order limit of
// the Temme gamma combinations.
constexpr double kInvGamma1 = +0.57721566490153286061;
constexpr double kInvGamma3 = -0.04200263503409523553;
constexpr double kInvGamma5 = -0.04219773455554433675;
constexpr double kInvGamma7 = +0.00721894324666309954;

// gam1 = (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu), gam2 the even average,
// gampl = 1/Gamma(1+mu), gammi = 1/Gamma(1-mu). |mu| <= 1/2.
template <class Real>
void temme_gammas(Real mu, Real& gam1, Real& gam2, Real& gampl, Real& gammi) {
  gampl = Real(1) / std::tgamma(Real(1) + mu);
  gammi = Real(1) / std::tgamma(Real(1) - mu);
  if (std::abs(mu) >= Real(1.0 / 128.0)) {
    gam1 = (gammi - gampl) / (Real(2) * mu);
  } else {
    const Real m2 = mu * mu;
    gam1 = -(Real(kInvGamma1) +
             m2 * (Real(kInvGamma3) + m2 * (Real(kInvGamma5) + m2 * Real(kInvGamma7))));
  }
  gam2 = (gammi + gampl) / Real(2);
}

template <class Real>
struct BasePair {
  Real log_kmu;   // log K_mu(x)
  Real log_kmu1;  // log K_{mu+1}(x)
};

// Series evaluation for x <= 2, |mu| <= 1/2. Sums stay representable down to
// x = 1e-300 (magnitudes at most exp(|mu| log(2/x)) <= ~3e149); the 2/x
// factor of the order-(mu+1) value is folded in log space.
template <class Real>
BasePair<Real> bessel_k_pair_series(Real mu, Real x) {
  const Real eps = std::numeric_limits<Real>::epsilon();
  const Real x2 = x / Real(2);
  const Real pimu = Real(kPi) * mu;
  const Real fact = std::abs(pimu) < Real(1e-30) ? Real(1) : pimu / std::sin(pimu);
  const Real d = -std::log(x2);
  const Real e = mu * d;
  const Real fact2 = std::abs(e) < Real(1e-30) ? Real(1) : std::sinh(e) / e;
  Real gam1, gam2, gampl, gammi;
  temme_gammas(mu, gam1, gam2, gampl, gammi);
  Real ff = fact * (gam1 * std::cosh(e) + gam2 * fact2 * d);
  Real sum = ff;
  const Real ee = std::exp(e);
  Real p = Real(0.5) * ee / gampl;
  Real q = Real(0.5) / (ee * gammi);
  Real c = Real(1);
  const Real d2 = x2 * x2;
  Real sum1 = p;
  for (int i = 1; i <= 1000; ++i) {
    ff = (Real(i) * ff + p + q) / (Real(i) * Real(i) - mu * mu);
    c *= d2 / Real(i);
    p /= Real(i) - mu;
    q /= Real(i) + mu;
    const Real del = c * ff;
    sum += del;
    const Real del1 = c * (p - Real(i) * ff);
    sum1 += del1;
    if (std::abs(del) < std::abs(sum) * eps) break;
  }
  if (!(sum > Real(0)) || !(sum1 > Real(0)))
    throw numeric_error("bessel series lost positivity");
  return {std::log(sum), std::log(sum1) + std::log(Real(2)) - std::log(x)};
}

// Steed/Thompson-Barnett continued fraction for x > 2, |mu| <= 1/2, carrying
// the exp(x) scaling in log space so x up to 1e6 is fine.
template <class Real>
BasePair<Real> bessel_k_pair_cf(Real mu, Real x) {
  const Real eps = std::numeric_limits<Real>::epsilon();
  Real b = Real(2) * (Real(1) + x);
  Real d = Real(1) / b;
  Real h = d, delh = d;
  Real q1 = Real(0), q2 = Real(1);
  const Real a1 = Real(0.25) - mu * mu;
  Real q = a1, c = a1, a = -a1;
  Real s = Real(1) + q * delh;
  for (int i = 2; i <= 20000; ++i) {
    a -= Real(2 * (i - 1));
    c = -a * c / Real(i);
    const Real qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += Real(2);
    d = Real(1) / (b + a * d);
    delh = (b * d - Real(1)) * delh;
    h += delh;
    const Real dels = q * delh;
    s += dels;
    if (std::abs(dels / s) <= eps) break;
  }
  h = a1 * h;
  const Real log_kmu =
      Real(0.5) * std::log(Real(kPi) / (Real(2) * x)) - x - std::log(s);
  const Real ratio = (mu + x + Real(0.5) - h) / x;  // K_{mu+1} / K_mu
  return {log_kmu, log_kmu + std::log(ratio)};
}

template <class Real>
Real log_bessel_k_impl(Real order, Real x) {
  const Real nu = std::abs(order);
  const long long k = std::llround(nu);
  const Real mu = nu - Real(k);  // in [-1/2, 1/2]
  const BasePair<Real> base = x <= Real(2) ? bessel_k_pair_series(mu, x)
                                           : bessel_k_pair_cf(mu, x);
  if (k == 0) return base.log_kmu;
  if (k == 1) return base.log_kmu1;
  // Upward recurrence K_{s+1} = K_{s-1} + (2 s / x) K_s, renormalized every
  // step so the running pair never overflows; all terms are positive, so the
  // recurrence is stable in this direction.
  Real scale = base.log_kmu1;
  Real p0 = std::exp(base.log_kmu - base.log_kmu1);
  Real p1 = Real(1);
  for (long long j = 1; j < k; ++j) {
    const Real s = mu + Real(j);
    const Real p2 = p0 + (Real(2) * s / x) * p1;
    scale += std::log(p2);
    p0 = p1 / p2;
    p1 = Real(1);
  }
  return scale;
}

void check_bessel_domain(double order, double x) {
  if (!(x >= 1e-300) || !(x <= 1e6) || !std::isfinite(order) ||
      std::abs(order) > 5000.0)
    throw value_error("log_bessel_k domain: x in [1e-300, 1e6], |order| <= 5000");
}

}  // namespace

double log_bessel_k(double order, double x) {
  check_bessel_domain(order, x);
  return log_bessel_k_impl<double>(order, x);
}

double dlog_bessel_k_dorder(double order, double x) {
  check_bessel_domain(order, x);
  if (order == 0.0) return 0.0;  // K is even in the order
  const double h = std::max(1e-6, 1e-6 * std::abs(order));
  const double fp = log_bessel_k_impl<double>(order + h, x);
  const double fm = log_bessel_k_impl<double>(order - h, x);
  const double deriv = (fp - fm) / (2.0 * h);
  // Differencing two O(|log K|) values loses |log K| eps / (2h) absolute;
  // when more than six significant digits of the quotient are gone, redo in
  // extended precision.
  const double loss = (std::abs(fp) + std::abs(fm)) *
                      std::numeric_limits<double>::epsilon() / (2.0 * h);
  if (loss > 1e-6 * std::max(std::abs(deriv), 1e-30)) {
    const long double hl = h;
    const long double fpl = log_bessel_k_impl<long double>(
        static_cast<long double>(order) + hl, static_cast<long double>(x));
    const long double fml = log_bessel_k_impl<long double>(
        static_cast<long double>(order) - hl, static_cast<long double>(x));
    return static_cast<double>((fpl - fml) / (2.0L * hl));
  }
  return deriv;
}

double digamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw value_error("digamma needs x > 0");
  double r = 0.0;
  while (x < 6.0) {
    r -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x, inv2 = inv * inv;
  // Asymptotic series, Bernoulli coefficients through x^{-12}.
  const double tail =
      inv2 * (1.0 / 12.0 +
              inv2 * (-1.0 / 120.0 +
                      inv2 * (1.0 / 252.0 +
                              inv2 * (-1.0 / 240.0 +
                                      inv2 * (1.0 / 132.0 -
                                              inv2 * 691.0 / 32760.0)))));
  return r + std::log(x) - 0.5 * inv - tail;
}

GigParams::GigParams(double a_, double b_, double lambda_)
    : a(a_), b(b_), lambda(lambda_) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b) ||
      !std::isfinite(lambda))
    throw value_error("GigParams needs a > 0, b > 0, finite lambda");
}

double GigParams::omega() const { return std::sqrt(a * b); }
double GigParams::eta() const { return std::sqrt(a / b); }

double gig_log_pdf(double y, const GigParams& p) {
  if (!(y > 0.0)) throw value_error("gig_log_pdf needs y > 0");
  return 0.5 * p.lambda * (std::log(p.a) - std::log(p.b)) - std::log(2.0) -
         log_bessel_k(p.lambda, p.omega()) + (p.lambda - 1.0) * std::log(y) -
         0.5 * (p.a * y + p.b / y);
}

GigMoments gig_moments(const GigParams& p) {
  const double w = p.omega();
  const double lk = log_bessel_k(p.lambda, w);
  const double half_log_ba = 0.5 * (std::log(p.b) - std::log(p.a));
  GigMoments m;
  m.e_y = std::exp(half_log_ba + log_bessel_k(p.lambda + 1.0, w) - lk);
  // E[1/Y] = sqrt(a/b) K_{lam+1}/K_lam - 2 lam / b, rewritten through
  // K_{lam+1} = K_{lam-1} + (2 lam / omega) K_lam: the subtraction cancels
  // exactly and what is left is sqrt(a/b) K_{lam-1}/K_lam.
  m.e_inv_y = std::exp(-half_log_ba + log_bessel_k(p.lambda - 1.0, w) - lk);
  m.e_log_y = half_log_ba + dlog_bessel_k_dorder(p.lambda, w);
  return m;
}

GigMoments gig_moments_boundary(double a, double b, double lambda) {
  if (a > 0.0 && b > 0.0) return gig_moments(GigParams(a, b, lambda));
  GigMoments m;
  if (a == 0.0 && b > 0.0) {
    // Inverse-gamma with shape -lambda, scale b/2.
    const double shape = -lambda, scale = 0.5 * b;
    if (!(shape > 0.0)) throw value_error("inverse-gamma boundary needs lambda < 0");
    if (!(shape > 1.0))
      throw numeric_error("inverse-gamma boundary mean needs shape > 1");
    m.e_y = scale / (shape - 1.0);
    m.e_inv_y = shape / scale;
    m.e_log_y = std::log(scale) - digamma(shape);
    return m;
  }
  if (b == 0.0 && a > 0.0) {
    // Gamma with shape lambda, rate a/2.
    const double shape = lambda, rate = 0.5 * a;
    if (!(shape > 0.0)) throw value_error("gamma boundary needs lambda > 0");
    if (!(shape > 1.0)) throw numeric_error("gamma boundary inverse mean needs shape > 1");
    m.e_y = shape / rate;
    m.e_inv_y = rate / (shape - 1.0);
    m.e_log_y = digamma(shape) - std::log(rate);
    return m;
  }
  throw value_error("gig boundary needs exactly one of a, b zero");
}

namespace {

// log of the unnormalized two-parameter GIG kernel
// z^{lambda-1} exp{-omega (z + 1/z) / 2}.
double gig_kernel_log(double z, double lambda, double omega) {
  return (lambda - 1.0) * std::log(z) - 0.5 * omega * (z + 1.0 / z);
}

double gig_kernel_dlog(double z, double lambda, double omega) {
  return (lambda - 1.0) / z - 0.5 * omega * (1.0 - 1.0 / (z * z));
}

double gig_mode(double lambda, double omega) {
  return ((lambda - 1.0) + std::hypot(lambda - 1.0, omega)) / omega;
}

// Root of phi on [lo, hi] given phi(lo), phi(hi) with opposite signs.
template <class F>
double bisect(const F& phi, double lo, double hi, double flo) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = phi(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(mid))) break;
  }
  return 0.5 * (lo + hi);
}

// Standard two-parameter GIG(omega, lambda) draw, lambda >= 0, by
// ratio-of-uniforms relative to the kernel scaled to 1 at the mode.
double sample_gig_standard(Rng& rng, double lambda, double omega) {
  const double m = gig_mode(lambda, omega);
  const double lhm = gig_kernel_log(m, lambda, omega);
  if (lambda <= 1.0 && omega <= 1.0) {
    // No shift: u_max = 1 after scaling, v_max at the mode of z^2 h(z).
    const double m2 = ((lambda + 1.0) + std::hypot(lambda + 1.0, omega)) / omega;
    const double vmax =
        m2 * std::exp(0.5 * (gig_kernel_log(m2, lambda, omega) - lhm));
    for (int it = 0; it < 1000000; ++it) {
      const double u = rng.uniform();
      const double v = rng.uniform() * vmax;
      const double z = v / u;
      if (2.0 * std::log(u) <= gig_kernel_log(z, lambda, omega) - lhm) return z;
    }
    throw numeric_error("gig sampler failed to accept");
  }
  // Mode-shifted region: v bounds at the roots of 2 + (z - m) dlog h(z).
  auto phi = [&](double z) { return 2.0 + (z - m) * gig_kernel_dlog(z, lambda, omega); };
  double lo = m;
  while (phi(0.5 * lo) >= 0.0) lo *= 0.5;
  lo *= 0.5;
  const double zlo = bisect(phi, lo, m, phi(lo));
  double hi = 2.0 * m;
  while (phi(hi) >= 0.0) hi *= 2.0;
  const double zhi = bisect(phi, m, hi, phi(m));
  const double vlo = (zlo - m) * std::exp(0.5 * (gig_kernel_log(zlo, lambda, omega) - lhm));
  const double vhi = (zhi - m) * std::exp(0.5 * (gig_kernel_log(zhi, lambda, omega) - lhm));
  for (int it = 0; it < 1000000; ++it) {
    const double u = rng.uniform();
    const double v = vlo + rng.uniform() * (vhi - vlo);
    const double z = v / u + m;
    if (z <= 0.0) continue;
    if (2.0 * std::log(u) <= gig_kernel_log(z, lambda, omega) - lhm) return z;
  }
  throw numeric_error("gig sampler failed to accept");
}

}  // namespace

double sample_gig(Rng& rng, const GigParams& p) {
  const double omega = p.omega();
  const double s = std::sqrt(p.b / p.a);
  if (p.lambda >= 0.0) return s * sample_gig_standard(rng, p.lambda, omega);
  return s / sample_gig_standard(rng, -p.lambda, omega);
}

double solve_monotone(const std::function<double(double)>& f, double lo,
                      double hi, double tol) {
  if (!(lo < hi)) throw value_error("solve_monotone needs lo < hi");
  double flo = f(lo), fhi = f(hi);
  for (int step = 0; step < 60 && (flo < 0.0) == (fhi < 0.0); ++step) {
    lo *= 0.5;
    hi *= 2.0;
    flo = f(lo);
    fhi = f(hi);
  }
  if ((flo < 0.0) == (fhi < 0.0))
    throw numeric_error("solve_monotone: no sign change after expansion");
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  // Illinois-damped false position: halving the stored value at a retained
  // endpoint keeps one-sided sequences from stalling the bracket.
  int last = 0;
  for (int it = 0; it < 300; ++it) {
    double mid = lo - flo * (hi - lo) / (fhi - flo);
    if (!(mid > lo) || !(mid < hi)) mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
      if (last == -1) fhi *= 0.5;
      last = -1;
    } else {
      hi = mid;
      fhi = fm;
      if (last == 1) flo *= 0.5;
      last = 1;
    }
    if (hi - lo <= tol * std::max(1.0, std::abs(mid))) return 0.5 * (lo + hi);
  }
  return 0.5 * (lo + hi);
}

}  // namespace skewtensor
