#pragma once

#include <functional>

#include "skewtensor/error.hpp"
#include "skewtensor/rng.hpp"

namespace skewtensor {

// log K_order(x), the modified Bessel function of the second kind, in log
// space. Finite and accurate for x in [1e-300, 1e6] and |order| <= 5000;
// even in the order. Throws value_error outside the domain.
double log_bessel_k(double order, double x);

// d/d(order) of log K_order(x). Central difference with step
// max(1e-6, 1e-6 |order|); falls back to extended precision when the
// cancellation-loss estimate of the double-precision difference exceeds
// 1e-6 relative. Exactly zero at order 0 by symmetry.
double dlog_bessel_k_dorder(double order, double x);

// Digamma for x > 0 (recurrence into the asymptotic region).
double digamma(double x);

// Generalized inverse Gaussian parameters: density proportional to
// y^{lambda - 1} exp{-(a y + b / y} / 2)} on y > 0 with a > 0, b > 0.
struct GigParams {
  double a, b, lambda;
  GigParams(double a_, double b_, double lambda_);
  double omega() const;  // sqrt(a b)
  double eta() const;    // sqrt(a / b)
};

struct GigMoments {
  double e_y;      // E[Y]
  double e_inv_y;  // E[1/Y]
  double e_log_y;  // E[log Y]
};

double gig_log_pdf(double y, const GigParams& p);
GigMoments gig_moments(const GigParams& p);

// Moments of the GIG-with-boundaries family that appears as the conditional
// law of the mixing weight: a == 0 with lambda < 0 is inverse-gamma
// (shape -lambda, scale b/2); b == 0 with lambda > 0 is gamma
// (shape lambda, rate a/2). Interior points go through gig_moments.
GigMoments gig_moments_boundary(double a, double b, double lambda);

// Draw from the GIG law: ratio-of-uniforms (mode-shifted for lambda > 1 or
// omega > 1), reciprocal symmetry for negative lambda.
double sample_gig(Rng& rng, const GigParams& p);

// Root of a continuous function with a sign change on [lo, hi]: expands the
// bracket geometrically (up to 60 doublings) if needed, then bisection with
// secant acceleration. Throws numeric_error when no sign change is found.
double solve_monotone(const std::function<double(double)>& f, double lo,
                      double hi, double tol);

}  // namespace skewtensor
