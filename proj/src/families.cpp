#include "skewtensor/families.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "skewtensor/integrate.hpp"

namespace skewtensor {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

std::string family_name(Family f) {
  switch (f) {
    case Family::Normal: return "normal";
    case Family::SkewT: return "st";
    case Family::GenHyperbolic: return "gh";
    case Family::VarianceGamma: return "vg";
    case Family::Sal: return "sal";
    case Family::Nig: return "nig";
  }
  throw value_error("unknown family");
}

Family family_from_name(const std::string& name) {
  if (name == "normal") return Family::Normal;
  if (name == "st") return Family::SkewT;
  if (name == "gh") return Family::GenHyperbolic;
  if (name == "vg") return Family::VarianceGamma;
  if (name == "sal") return Family::Sal;
  if (name == "nig") return Family::Nig;
  throw value_error("unknown family name: " + name);
}

int family_extra_scalars(Family f) {
  switch (f) {
    case Family::Normal: return 0;
    case Family::SkewT: return 1;
    case Family::GenHyperbolic: return 2;
    case Family::VarianceGamma: return 1;
    case Family::Sal: return 0;
    case Family::Nig: return 1;
  }
  throw value_error("unknown family");
}

void FamilyParams::canonicalize() {
  if (family == Family::Normal) skewness = Tensor(location.dims(), 0.0);
  if (family == Family::Sal) vg_shape = 1.0;
}

void FamilyParams::validate() const {
  if (location.order() < 1) throw value_error("params need a location tensor");
  if (!location.same_dims(skewness))
    throw value_error("location and skewness dims differ");
  if (scales.size() != static_cast<size_t>(location.order()))
    throw value_error("scale count does not match tensor order");
  for (int d = 0; d < location.order(); ++d)
    if (scales[static_cast<size_t>(d)].n() != location.dim(d))
      throw value_error("scale size does not match tensor dim");
  switch (family) {
    case Family::Normal:
      if (skewness.data().cwiseAbs().maxCoeff() != 0.0)
        throw value_error("normal family requires zero skewness");
      break;
    case Family::SkewT:
      if (!(dof > 0.0)) throw value_error("skew-t needs dof > 0");
      break;
    case Family::GenHyperbolic:
      if (!(gh_concentration > 0.0) || !std::isfinite(gh_index))
        throw value_error("gh needs concentration > 0 and finite index");
      break;
    case Family::VarianceGamma:
      if (!(vg_shape > 0.0)) throw value_error("vg needs shape > 0");
      break;
    case Family::Sal:
      if (vg_shape != 1.0) throw value_error("sal pins the shape to 1");
      break;
    case Family::Nig:
      if (!(nig_concentration > 0.0)) throw value_error("nig needs concentration > 0");
      break;
  }
}

LatentMoments latent_moments(const FamilyParams& p) {
  switch (p.family) {
    case Family::Normal:
      return {1.0, 1.0};
    case Family::SkewT: {
      if (!(p.dof > 2.0)) throw numeric_error("skew-t mixing mean needs dof > 2");
      const double e_w = p.dof / (p.dof - 2.0);
      const double e_w2 =
          p.dof > 4.0 ? p.dof * p.dof / ((p.dof - 2.0) * (p.dof - 4.0)) : kInf;
      return {e_w, e_w2};
    }
    case Family::GenHyperbolic: {
      const double w = p.gh_concentration;
      const double lk = log_bessel_k(p.gh_index, w);
      return {std::exp(log_bessel_k(p.gh_index + 1.0, w) - lk),
              std::exp(log_bessel_k(p.gh_index + 2.0, w) - lk)};
    }
    case Family::VarianceGamma:
      return {1.0, (p.vg_shape + 1.0) / p.vg_shape};
    case Family::Sal:
      return {1.0, 2.0};
    case Family::Nig: {
      const double k = p.nig_concentration;
      return {1.0 / k, 1.0 / (k * k) + 1.0 / (k * k * k)};
    }
  }
  throw value_error("unknown family");
}

Tensor mean_tensor(const FamilyParams& p) {
  const LatentMoments lm = latent_moments(p);
  Tensor out = p.skewness;
  out *= lm.e_w;
  out += p.location;
  return out;
}

double sample_latent(const FamilyParams& p, Rng& rng) {
  switch (p.family) {
    case Family::Normal:
      return 1.0;
    case Family::SkewT:
      return rng.inv_gamma(0.5 * p.dof, 0.5 * p.dof);
    case Family::GenHyperbolic:
      return sample_gig(rng, GigParams(p.gh_concentration, p.gh_concentration,
                                       p.gh_index));
    case Family::VarianceGamma:
      return rng.gamma(p.vg_shape, p.vg_shape);
    case Family::Sal:
      return rng.gamma(1.0, 1.0);
    case Family::Nig:
      return rng.inv_gaussian(1.0 / p.nig_concentration, 1.0);
  }
  throw value_error("unknown family");
}

std::vector<Tensor> sample(const FamilyParams& p, int n, Rng& rng) {
  p.validate();
  if (n < 1) throw value_error("sample needs n >= 1");
  std::vector<Tensor> out;
  out.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double w = sample_latent(p, rng);
    Tensor z(p.dims());
    for (long long k = 0; k < z.size(); ++k) z[k] = rng.normal();
    Tensor v = color(z, p.scales);
    v *= std::sqrt(w);
    Tensor x = p.location;
    Tensor wa = p.skewness;
    wa *= w;
    x += wa;
    x += v;
    out.push_back(std::move(x));
  }
  return out;
}

FamilyEvaluator::FamilyEvaluator(FamilyParams p) : params_(std::move(p)) {
  params_.validate();
  white_skew_ = whiten(params_.skewness, params_.scales);
  rho_ = white_skew_.data().squaredNorm();
  const double ns = static_cast<double>(params_.n_star());
  const double hwld = half_weighted_log_det(params_.scales);
  const double base = -0.5 * ns * kLog2Pi - hwld;
  switch (params_.family) {
    case Family::Normal:
      log_norm_ = base;
      break;
    case Family::SkewT: {
      const double nu = params_.dof;
      log_norm_ = base + std::log(2.0) + 0.5 * nu * std::log(0.5 * nu) -
                  std::lgamma(0.5 * nu);
      log_norm_t0_ = std::lgamma(0.5 * (nu + ns)) - std::lgamma(0.5 * nu) -
                     0.5 * ns * std::log(nu * std::numbers::pi) - hwld;
      break;
    }
    case Family::GenHyperbolic:
      log_norm_ = base - log_bessel_k(params_.gh_index, params_.gh_concentration);
      break;
    case Family::VarianceGamma:
    case Family::Sal: {
      const double g = params_.family == Family::Sal ? 1.0 : params_.vg_shape;
      log_norm_ = base + std::log(2.0) + g * std::log(g) - std::lgamma(g);
      break;
    }
    case Family::Nig:
      log_norm_ = base + std::log(2.0) + params_.nig_concentration -
                  0.5 * kLog2Pi;
      break;
  }
}

FamilyEvaluator::Quad FamilyEvaluator::quad(const Tensor& x) const {
  if (!x.same_dims(params_.location)) throw value_error("observation dims mismatch");
  Tensor wr = whiten(x - params_.location, params_.scales);
  return {wr.data().squaredNorm(), wr.data().dot(white_skew_.data())};
}

CondLatent FamilyEvaluator::conditional(const Quad& q) const {
  const double ns = static_cast<double>(params_.n_star());
  switch (params_.family) {
    case Family::SkewT:
      return {rho_, q.delta + params_.dof, -0.5 * (params_.dof + ns)};
    case Family::GenHyperbolic:
      return {rho_ + params_.gh_concentration, q.delta + params_.gh_concentration,
              params_.gh_index - 0.5 * ns};
    case Family::VarianceGamma:
    case Family::Sal: {
      const double g = params_.family == Family::Sal ? 1.0 : params_.vg_shape;
      return {rho_ + 2.0 * g, q.delta, g - 0.5 * ns};
    }
    case Family::Nig: {
      const double k = params_.nig_concentration;
      return {rho_ + k * k, q.delta + 1.0, -0.5 * (1.0 + ns)};
    }
    case Family::Normal:
      break;
  }
  throw value_error("the normal family has no conditional mixing law");
}

double FamilyEvaluator::log_density(const Quad& q) const {
  if (params_.family == Family::Normal) return log_norm_ - 0.5 * q.delta;
  if (params_.family == Family::SkewT && rho_ == 0.0) {
    const double nu = params_.dof;
    const double ns = static_cast<double>(params_.n_star());
    return log_norm_t0_ - 0.5 * (nu + ns) * std::log1p(q.delta / nu);
  }
  const CondLatent t = conditional(q);
  if (t.b == 0.0) {
    // VarianceGamma at a zero residual: the kernel limit is finite for
    // lambda > 0 and a (+inf) pole for lambda < 0.
    if (t.lambda > 0.0)
      return log_norm_ + q.cross + std::lgamma(t.lambda) +
             (t.lambda - 1.0) * std::log(2.0) - t.lambda * std::log(t.a);
    return kInf;
  }
  return log_norm_ + q.cross +
         0.5 * t.lambda * (std::log(t.b) - std::log(t.a)) +
         log_bessel_k(t.lambda, std::sqrt(t.a * t.b));
}

double log_density(const Tensor& x, const FamilyParams& p) {
  FamilyEvaluator ev(p);
  return ev.log_density(ev.quad(x));
}

CondLatent conditional_w(const Tensor& x, const FamilyParams& p) {
  FamilyEvaluator ev(p);
  return ev.conditional(ev.quad(x));
}

namespace {

// Row permutation taking the mode-0 unfolding's row order (remaining modes,
// last fastest) to first-remaining-mode-fastest order.
std::vector<long long> mirror_rows(const std::vector<int>& dims) {
  std::vector<int> rest(dims.begin() + 1, dims.end());
  const long long n = num_elements(rest.empty() ? std::vector<int>{1} : rest);
  std::vector<long long> perm(static_cast<size_t>(n));
  std::vector<int> idx(rest.size(), 0);
  for (long long r = 0; r < n; ++r) {
    long long rev = 0;
    for (size_t k = 0; k < rest.size(); ++k)
      rev = rev * rest[rest.size() - 1 - k] + idx[rest.size() - 1 - k];
    // r walks last-fastest; rev is the same multi-index read first-fastest.
    long long mine = 0;
    for (size_t k = 0; k < rest.size(); ++k) mine = mine * rest[k] + idx[k];
    perm[static_cast<size_t>(mine)] = rev;
    for (int k = static_cast<int>(rest.size()) - 1; k >= 0; --k) {
      if (++idx[static_cast<size_t>(k)] < rest[static_cast<size_t>(k)]) break;
      idx[static_cast<size_t>(k)] = 0;
    }
  }
  return perm;
}

}  // namespace

SecondMoments second_moments(const FamilyParams& p) {
  p.validate();
  const LatentMoments lm = latent_moments(p);
  if (!std::isfinite(lm.e_w2))
    throw numeric_error("second moments need a finite E[W^2]");
  const Vector vm = vec_first_fastest(p.location);
  const Vector va = vec_first_fastest(p.skewness);
  std::vector<Matrix> rev;
  for (auto it = p.scales.rbegin(); it != p.scales.rend(); ++it)
    rev.push_back(it->matrix());
  const Matrix kron_rev = kron_chain(rev);
  SecondMoments out;
  // Uncentered second moment of the vectorization, then the mean outer
  // product comes off.
  Matrix uncentered = vm * vm.transpose() +
                      lm.e_w * (vm * va.transpose() + va * vm.transpose()) +
                      lm.e_w2 * (va * va.transpose()) + lm.e_w * kron_rev;
  const Vector mean = vm + lm.e_w * va;
  out.cov_vec = uncentered - mean * mean.transpose();

  const Matrix u = matricize(p.location, 0);  // rest x n0
  const Matrix v = matricize(p.skewness, 0);
  double tr_rest = 1.0;
  for (size_t d = 1; d < p.scales.size(); ++d) tr_rest *= p.scales[d].trace();
  out.gram_rows = u.transpose() * u +
                  lm.e_w * (u.transpose() * v + v.transpose() * u) +
                  lm.e_w2 * (v.transpose() * v) +
                  lm.e_w * tr_rest * p.scales[0].matrix();

  const auto perm = mirror_rows(p.dims());
  Matrix uk(u.rows(), u.cols()), vk(v.rows(), v.cols());
  for (long long r = 0; r < u.rows(); ++r) {
    uk.row(perm[static_cast<size_t>(r)]) = u.row(r);
    vk.row(perm[static_cast<size_t>(r)]) = v.row(r);
  }
  std::vector<Matrix> rev_rest(rev.begin(), rev.end() - 1);  // drop mode 0
  Matrix kron_rest = rev_rest.empty() ? Matrix::Identity(1, 1)
                                      : kron_chain(rev_rest);
  out.gram_cols = uk * uk.transpose() +
                  lm.e_w * (uk * vk.transpose() + vk * uk.transpose()) +
                  lm.e_w2 * (vk * vk.transpose()) +
                  lm.e_w * p.scales[0].trace() * kron_rest;
  return out;
}

namespace {

using Cplx = std::complex<double>;

// log K_order(z) for complex z with Re(z) > 0, by quadrature of the cosh
// integral representation, carried in log scale around the integrand peak.
// Used only by the characteristic functions; accuracy ~1e-11 relative at the
// moderate orders they need.
Cplx log_bessel_k_complex(double order, Cplx z) {
  const double nu = std::abs(order);
  const double rez = z.real();
  if (!(rez > 0.0)) throw value_error("complex bessel needs Re(z) > 0");
  auto log_cosh = [](double y) {
    y = std::abs(y);
    return y + std::log1p(std::exp(-2.0 * y)) - std::log(2.0);
  };
  auto re_g = [&](double t) { return -rez * std::cosh(t) + log_cosh(nu * t); };
  // Peak of the real part: golden-section on a bracket around the saddle.
  double t_peak = 0.0;
  if (nu * nu > rez) {
    double hi = std::asinh(nu / rez) + 1.0;
    double lo = 0.0;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    for (int it = 0; it < 200 && hi - lo > 1e-12 * (1.0 + hi); ++it) {
      if (re_g(c) > re_g(d)) {
        hi = d;
      } else {
        lo = c;
      }
      c = hi - gr * (hi - lo);
      d = lo + gr * (hi - lo);
    }
    t_peak = 0.5 * (lo + hi);
    if (re_g(0.0) > re_g(t_peak)) t_peak = 0.0;
  }
  const double g_peak = re_g(t_peak);
  double t_end = t_peak + 1.0;
  while (t_end < 700.0 && re_g(t_end) > g_peak - 60.0) t_end *= 1.5;
  t_end = std::min(t_end, 700.0);
  const Cplx gc_peak = -z * std::cosh(t_peak) + log_cosh(nu * t_peak);
  auto f = [&](double t) -> Cplx {
    const Cplx g = -z * std::cosh(t) + log_cosh(nu * t);
    return std::exp(g - gc_peak);
  };
  const Cplx integral = integrate<Cplx>(f, 0.0, t_end, 1e-12);
  return gc_peak + std::log(integral);
}

}  // namespace

std::complex<double> char_fn(const Tensor& t, const FamilyParams& p) {
  p.validate();
  if (!t.same_dims(p.location)) throw value_error("argument dims mismatch");
  // b = vec(T)^T kron(scales) vec(T), via coloring mode products.
  Tensor ct = t;
  for (int d = 0; d < t.order(); ++d)
    ct = mode_product(ct, p.scales[static_cast<size_t>(d)].chol_lower().transpose(), d);
  const double b = ct.data().squaredNorm();
  const double a = vec(t).dot(vec(p.skewness));
  const double phase = vec(t).dot(vec(p.location));
  const Cplx i(0.0, 1.0);
  if (b == 0.0 && a == 0.0) return 1.0;
  // E[exp(i phase) exp(-s W)] with s = b/2 - i a, by the Laplace transform
  // of the mixing law.
  const Cplx s = 0.5 * b - i * a;
  switch (p.family) {
    case Family::Normal:
      return std::exp(i * phase - 0.5 * b);
    case Family::SkewT: {
      const double half_nu = 0.5 * p.dof;
      const Cplx arg = 2.0 * std::sqrt(half_nu * s);
      const Cplx lk = log_bessel_k_complex(half_nu, arg);
      const Cplx log_c = std::log(2.0) - std::lgamma(half_nu) +
                         0.5 * half_nu * std::log(half_nu * s) + lk;
      return std::exp(i * phase + log_c);
    }
    case Family::GenHyperbolic: {
      const double w = p.gh_concentration, lam = p.gh_index;
      const Cplx a2 = w + 2.0 * s;
      const Cplx lk = log_bessel_k_complex(lam, std::sqrt(w * a2));
      const Cplx log_c = 0.5 * lam * (std::log(Cplx(w)) - std::log(a2)) + lk -
                         log_bessel_k(lam, w);
      return std::exp(i * phase + log_c);
    }
    case Family::VarianceGamma:
    case Family::Sal: {
      const double g = p.family == Family::Sal ? 1.0 : p.vg_shape;
      return std::exp(i * phase - g * std::log(1.0 + s / g));
    }
    case Family::Nig: {
      const double k = p.nig_concentration;
      return std::exp(i * phase + k - std::sqrt(k * k + 2.0 * s));
    }
  }
  throw value_error("unknown family");
}

}  // namespace skewtensor
