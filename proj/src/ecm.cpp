#include "skewtensor/ecm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "skewtensor/parallel.hpp"
#include "skewtensor/special.hpp"

namespace skewtensor {

std::string scale_update_name(ScaleUpdate u) {
  return u == ScaleUpdate::FlipFlop ? "flipflop" : "mode1";
}

ScaleUpdate scale_update_from_name(const std::string& name) {
  if (name == "flipflop") return ScaleUpdate::FlipFlop;
  if (name == "mode1") return ScaleUpdate::Mode1;
  throw value_error("unknown scale update: " + name);
}

namespace {

void check_dataset(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw value_error("dataset is empty");
  for (const Tensor& x : xs)
    if (!x.same_dims(xs[0])) throw value_error("observations have mixed dims");
}

}  // namespace

EStepStats e_step(const std::vector<Tensor>& xs, const FamilyParams& p) {
  check_dataset(xs);
  const FamilyEvaluator ev(p);
  const size_t n = xs.size();
  EStepStats st;
  st.e_w.resize(n);
  st.e_inv_w.resize(n);
  st.e_log_w.resize(n);
  std::vector<double> ll(n);
  for (size_t i = 0; i < n; ++i) {
    const FamilyEvaluator::Quad q = ev.quad(xs[i]);
    ll[i] = ev.log_density(q);
    if (p.family == Family::Normal) {
      st.e_w[i] = 1.0;
      st.e_inv_w[i] = 1.0;
      st.e_log_w[i] = 0.0;
    } else {
      const CondLatent c = ev.conditional(q);
      // The residual part of b is a quadratic form, so it can underflow to
      // zero when the scales blow up along a degenerate ridge. The moments
      // are taken at a floored value to stay finite and the collapse is
      // flagged so the fit stops instead of updating from junk statistics.
      if (c.b < 1e-50) st.scale_collapsed = true;
      const GigMoments g =
          gig_moments_boundary(c.a, std::max(c.b, 1e-100), c.lambda);
      st.e_w[i] = g.e_y;
      st.e_inv_w[i] = g.e_inv_y;
      st.e_log_w[i] = g.e_log_y;
    }
  }
  st.loglik = pairwise_sum(ll.data(), ll.size());
  st.mean_w = pairwise_mean(st.e_w);
  st.mean_inv_w = pairwise_mean(st.e_inv_w);
  st.mean_log_w = pairwise_mean(st.e_log_w);
  return st;
}

double observed_loglik(const std::vector<Tensor>& xs, const FamilyParams& p) {
  check_dataset(xs);
  const FamilyEvaluator ev(p);
  std::vector<double> ll(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) ll[i] = ev.log_density(ev.quad(xs[i]));
  return pairwise_sum(ll.data(), ll.size());
}

LinearUpdate update_linear(const std::vector<Tensor>& xs, const EStepStats& s) {
  check_dataset(xs);
  const size_t n = xs.size();
  if (s.e_w.size() != n || s.e_inv_w.size() != n)
    throw value_error("stats size does not match data");
  const double nn = static_cast<double>(n);
  const double denom = nn * (s.mean_w * s.mean_inv_w - 1.0);
  LinearUpdate out;
  if (std::abs(denom) < 1e-12) {
    Tensor mean(xs[0].dims(), 0.0);
    for (const Tensor& x : xs) mean += x;
    mean *= 1.0 / nn;
    out.location = std::move(mean);
    out.skewness = Tensor(xs[0].dims(), 0.0);
    out.degenerate = true;
    return out;
  }
  Tensor loc(xs[0].dims(), 0.0);
  Tensor skew(xs[0].dims(), 0.0);
  for (size_t i = 0; i < n; ++i) {
    loc.data() += (s.mean_w * s.e_inv_w[i] - 1.0) / denom * xs[i].data();
    skew.data() += (s.mean_inv_w - s.e_inv_w[i]) / denom * xs[i].data();
  }
  out.location = std::move(loc);
  out.skewness = std::move(skew);
  return out;
}

void update_family_scalars(FamilyParams& p, const EStepStats& s,
                           std::vector<std::string>& warnings, int iteration) {
  const std::string tag = "iteration " + std::to_string(iteration) + ": ";
  switch (p.family) {
    case Family::Normal:
    case Family::Sal:
      return;
    case Family::SkewT: {
      // The gradient g is decreasing in nu, so when it has no root inside the
      // bracket the objective is maximized at whichever edge the sign points
      // to; taking the edge keeps the update a maximizer over the bracket
      // rather than freezing at a stale interior value.
      const double target = s.mean_inv_w + s.mean_log_w;
      auto g = [&](double nu) {
        return std::log(0.5 * nu) + 1.0 - digamma(0.5 * nu) - target;
      };
      const double glo = g(0.1), ghi = g(200.0);
      if (!std::isfinite(glo) || !std::isfinite(ghi))
        warnings.push_back(tag + "dof update not finite, kept " +
                           std::to_string(p.dof));
      else if (glo * ghi <= 0.0)
        p.dof = solve_monotone(g, 0.1, 200.0, 1e-10);
      else
        p.dof = ghi > 0.0 ? 200.0 : 0.1;
      return;
    }
    case Family::VarianceGamma: {
      const double target = s.mean_log_w - s.mean_w;
      auto g = [&](double gamma) {
        return std::log(gamma) + 1.0 - digamma(gamma) + target;
      };
      const double glo = g(0.1), ghi = g(200.0);
      if (!std::isfinite(glo) || !std::isfinite(ghi))
        warnings.push_back(tag + "shape update not finite, kept " +
                           std::to_string(p.vg_shape));
      else if (glo * ghi <= 0.0)
        p.vg_shape = solve_monotone(g, 0.1, 200.0, 1e-10);
      else
        p.vg_shape = ghi > 0.0 ? 200.0 : 0.1;
      return;
    }
    case Family::Nig: {
      if (!(s.mean_w > 0.0) || !std::isfinite(s.mean_w))
        throw numeric_error("nig concentration update needs a positive mean weight");
      p.nig_concentration = std::clamp(1.0 / s.mean_w, 0.1, 200.0);
      return;
    }
    case Family::GenHyperbolic: {
      const double abar = s.mean_w, bbar = s.mean_inv_w, cbar = s.mean_log_w;
      auto q = [&](double lam, double om) {
        return -log_bessel_k(lam, om) + lam * cbar - 0.5 * om * (abar + bbar);
      };
      double lam = p.gh_index;
      double om = p.gh_concentration;
      const double deriv = dlog_bessel_k_dorder(lam, om);
      if (std::abs(deriv) >= 1e-12 && std::isfinite(deriv)) {
        const double cand = std::clamp(cbar * lam / deriv, -200.0, 200.0);
        if (q(cand, om) >= q(lam, om))
          lam = cand;
        else
          warnings.push_back(tag + "index update rejected, kept " +
                             std::to_string(lam));
      } else {
        warnings.push_back(tag + "index update derivative vanished, kept " +
                           std::to_string(lam));
      }
      auto ratio = [&](double ord, double x) {
        return std::exp(log_bessel_k(ord + 1.0, x) - log_bessel_k(ord, x));
      };
      const double rp = ratio(lam, om);
      const double rm = ratio(-lam, om);
      const double qp = 0.5 * (rp + rm - (abar + bbar));
      const double qpp =
          0.5 * (rp * rp - (1.0 + 2.0 * lam) / om * rp - 1.0 + rm * rm -
                 (1.0 - 2.0 * lam) / om * rm - 1.0);
      bool accepted = false;
      if (std::isfinite(qp) && std::isfinite(qpp) && qpp != 0.0) {
        double step = -qp / qpp;
        const double q0 = q(lam, om);
        for (int h = 0; h < 30 && std::isfinite(step); ++h) {
          const double cand = std::min(om + step, 200.0);
          if (cand > 0.0 && q(lam, cand) >= q0) {
            om = cand;
            accepted = true;
            break;
          }
          step *= 0.5;
        }
      }
      if (!accepted && om < 200.0)
        warnings.push_back(tag + "concentration update rejected, kept " +
                           std::to_string(om));
      p.gh_index = lam;
      p.gh_concentration = om;
      return;
    }
  }
  throw value_error("unknown family");
}

Matrix scale_stat_flipflop(const std::vector<Tensor>& xs, const Tensor& location,
                           const Tensor& skewness, const ScaleSet& scales,
                           const EStepStats& s, int mode) {
  check_dataset(xs);
  if (mode < 0 || mode >= xs[0].order()) throw value_error("mode out of range");
  const Matrix at = matricize(whiten_except(skewness, scales, mode), mode);
  const int nj = xs[0].dim(mode);
  Matrix acc = Matrix::Zero(nj, nj);
  Matrix t_sum = Matrix::Zero(at.rows(), at.cols());
  for (size_t i = 0; i < xs.size(); ++i) {
    const Matrix rt = matricize(whiten_except(xs[i] - location, scales, mode), mode);
    acc.noalias() += s.e_inv_w[i] * (rt.transpose() * rt);
    t_sum += rt;
  }
  acc.noalias() -= at.transpose() * t_sum;
  acc.noalias() -= t_sum.transpose() * at;
  const double sum_a = s.mean_w * static_cast<double>(xs.size());
  acc.noalias() += sum_a * (at.transpose() * at);
  return acc;
}

namespace {

using SlabMap =
    Eigen::Map<const Matrix, 0, Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>>;

// Shared engine for the first two modes: the tail modes are whitened away and
// the remaining n0 x n1 slabs are contracted against the untouched mode's
// explicit inverse.
Matrix mode1_core(const std::vector<Tensor>& xs, const Tensor& location,
                  const Tensor& skewness, const ScaleSet& scales,
                  const std::vector<double>& bw, double sum_a, int target) {
  const int order = location.order();
  const int n0 = location.dim(0);
  const int n1 = location.dim(1);
  const long long rest =
      location.size() / (static_cast<long long>(n0) * n1);
  auto whiten_tail = [&](Tensor t) {
    for (int d = 2; d < order; ++d)
      t = mode_product(t, scales[static_cast<size_t>(d)].inv_factor(), d);
    return t;
  };
  const Tensor ta = whiten_tail(skewness);
  const Matrix inv =
      target == 0 ? scales[1].inverse() : scales[0].inverse();
  const int nt = target == 0 ? n0 : n1;
  Matrix acc = Matrix::Zero(nt, nt);
  Tensor r_sum(location.dims(), 0.0);
  const Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic> stride(
      rest, static_cast<long long>(n1) * rest);
  for (size_t i = 0; i < xs.size(); ++i) {
    const Tensor r = whiten_tail(xs[i] - location);
    r_sum += r;
    for (long long k = 0; k < rest; ++k) {
      const SlabMap sk(r.data().data() + k, n0, n1, stride);
      if (target == 0) {
        const Matrix p = sk * inv;
        acc.noalias() += bw[i] * (p * sk.transpose());
      } else {
        const Matrix p = inv * sk;
        acc.noalias() += bw[i] * (sk.transpose() * p);
      }
    }
  }
  for (long long k = 0; k < rest; ++k) {
    const SlabMap tk(ta.data().data() + k, n0, n1, stride);
    const SlabMap rk(r_sum.data().data() + k, n0, n1, stride);
    if (target == 0) {
      const Matrix tw = tk * inv;
      const Matrix cross = tw * rk.transpose();
      acc.noalias() -= cross + cross.transpose();
      acc.noalias() += sum_a * (tw * tk.transpose());
    } else {
      const Matrix wt = inv * tk;
      const Matrix cross = wt.transpose() * rk;
      acc.noalias() -= cross + cross.transpose();
      acc.noalias() += sum_a * (wt.transpose() * tk);
    }
  }
  return acc;
}

}  // namespace

Matrix scale_stat_mode1(const std::vector<Tensor>& xs, const Tensor& location,
                        const Tensor& skewness, const ScaleSet& scales,
                        const EStepStats& s, int mode) {
  check_dataset(xs);
  const int order = xs[0].order();
  if (order < 2) throw value_error("slab scale update needs order >= 2");
  if (mode < 0 || mode >= order) throw value_error("mode out of range");
  const double sum_a = s.mean_w * static_cast<double>(xs.size());
  if (mode <= 1)
    return mode1_core(xs, location, skewness, scales, s.e_inv_w, sum_a, mode);
  std::vector<Tensor> swapped;
  swapped.reserve(xs.size());
  for (const Tensor& x : xs) swapped.push_back(permute_l2(x, mode));
  ScaleSet sc = scales;
  std::swap(sc[1], sc[static_cast<size_t>(mode)]);
  return mode1_core(swapped, permute_l2(location, mode), permute_l2(skewness, mode),
                    sc, s.e_inv_w, sum_a, 1);
}

double weighted_scale_form_direct(const std::vector<Tensor>& xs,
                                  const Tensor& location, const Tensor& skewness,
                                  const ScaleSet& scales, const EStepStats& s) {
  check_dataset(xs);
  double out = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    out += s.e_inv_w[i] * quad_residual(xs[i], location, scales);
    out -= 2.0 * cross_form(xs[i], location, skewness, scales);
  }
  out += s.mean_w * static_cast<double>(xs.size()) * quad_skew(skewness, scales);
  return out;
}

double weighted_scale_form_traced(const std::vector<Tensor>& xs,
                                  const Tensor& location, const Tensor& skewness,
                                  const ScaleSet& scales, const EStepStats& s,
                                  int mode, ScaleUpdate algo) {
  const Matrix stat =
      algo == ScaleUpdate::FlipFlop
          ? scale_stat_flipflop(xs, location, skewness, scales, s, mode)
          : scale_stat_mode1(xs, location, skewness, scales, s, mode);
  return (scales[static_cast<size_t>(mode)].inverse() * stat).trace();
}

void normalize_scales(ScaleSet& scales) {
  if (scales.empty()) throw value_error("scale set is empty");
  double prod = 1.0;
  for (size_t d = 0; d + 1 < scales.size(); ++d) {
    const double tr = scales[d].trace();
    if (!(tr > 0.0)) throw numeric_error("scale has a non-positive trace");
    const double c = static_cast<double>(scales[d].n()) / tr;
    scales[d] = SpdMatrix(c * scales[d].matrix());
    prod *= c;
  }
  scales.back() = SpdMatrix(scales.back().matrix() / prod);
}

Matrix regularize_spd(const Matrix& s, double epsilon, bool* regularized) {
  if (s.rows() != s.cols()) throw value_error("regularize needs a square matrix");
  if (!(epsilon > 0.0)) throw value_error("regularization epsilon must be positive");
  Matrix sym = 0.5 * (s + s.transpose());
  const double meps = std::numeric_limits<double>::epsilon();
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  bool fired = false;
  if (!(lo > 0.0 && lo / hi > meps)) {
    sym += epsilon * Matrix::Identity(sym.rows(), sym.cols());
    fired = true;
    Eigen::SelfAdjointEigenSolver<Matrix> es2(sym, Eigen::EigenvaluesOnly);
    const double lo2 = es2.eigenvalues().minCoeff();
    const double hi2 = es2.eigenvalues().maxCoeff();
    if (!(lo2 > 0.0 && lo2 / hi2 > meps))
      throw numeric_error("matrix is not positive definite after regularization");
  }
  if (regularized) *regularized = fired;
  return sym;
}

bool aitken_converged(const std::vector<double>& loglik_trace, double tol) {
  const size_t n = loglik_trace.size();
  if (n < 3) return false;
  const double l1 = loglik_trace[n - 3];
  const double l2 = loglik_trace[n - 2];
  const double l3 = loglik_trace[n - 1];
  if (std::abs(l3 - l2) < 1e-12) return true;
  if (std::abs(l2 - l1) < 1e-300) return false;
  // The gap is compared on the scale of the log-likelihood itself so the
  // stopping behavior is invariant to dataset size.
  const double thresh = tol * std::max(1.0, std::abs(l3));
  const double accel = (l3 - l2) / (l2 - l1);
  // When the increments are not contracting the extrapolated limit is
  // undefined; the rule falls back to the plain increment test, which stops
  // runs whose per-iteration progress is already below tolerance even though
  // they are drifting toward some far-away optimum.
  if (accel >= 1.0) return std::abs(l3 - l2) < thresh;
  const double gap = (l3 - l2) / (1.0 - accel);
  return gap >= 0.0 && gap < thresh;
}

long long count_free_params(const FamilyParams& p) {
  const long long ns = p.n_star();
  long long k = ns;
  if (family_is_skewed(p.family)) k += ns;
  long long scale_terms = 0;
  for (const SpdMatrix& s : p.scales)
    scale_terms += static_cast<long long>(s.n()) * (s.n() + 1) / 2;
  k += scale_terms - static_cast<long long>(p.scales.size()) + 1;
  k += family_extra_scalars(p.family);
  return k;
}

double bic(double loglik, long long n_free_params, long long n_obs) {
  if (n_obs < 1) throw value_error("bic needs n_obs >= 1");
  return -2.0 * loglik +
         static_cast<double>(n_free_params) * std::log(static_cast<double>(n_obs));
}

FamilyParams moment_init(const std::vector<Tensor>& xs, Family family,
                         double reg_epsilon) {
  check_dataset(xs);
  if (xs.size() < 2) throw value_error("moment init needs at least 2 observations");
  const std::vector<int>& dims = xs[0].dims();
  const int order = xs[0].order();
  const long long ns = xs[0].size();
  const double nn = static_cast<double>(xs.size());

  Tensor mean(dims, 0.0);
  for (const Tensor& x : xs) mean += x;
  mean *= 1.0 / nn;

  std::vector<Tensor> centered;
  centered.reserve(xs.size());
  for (const Tensor& x : xs) centered.push_back(x - mean);

  // Mode-d scatters of the given residuals, trace-normalized so every factor
  // but the last has trace n_d and the overall variance sits in the last.
  const auto scatter_scales = [&](const std::vector<Tensor>& resid) {
    double tot_var = 0.0;
    for (const Tensor& r : resid) tot_var += r.data().squaredNorm();
    tot_var /= nn;
    if (!(tot_var > 0.0)) tot_var = 1.0;
    ScaleSet out;
    double leading = 1.0;
    for (int d = 0; d < order; ++d) {
      const int nd = dims[static_cast<size_t>(d)];
      Matrix sd = Matrix::Zero(nd, nd);
      for (const Tensor& r : resid) {
        const Matrix m = matricize(r, d);
        sd.noalias() += m.transpose() * m;
      }
      sd /= nn * static_cast<double>(ns) / nd;
      const double tr = sd.trace();
      if (d + 1 < order) {
        sd = tr > 0.0 ? Matrix(nd / tr * sd) : Matrix::Identity(nd, nd);
        leading *= nd;
      } else {
        sd = tr > 0.0 ? Matrix(tot_var / (tr * leading) * sd)
                      : Matrix(tot_var / (static_cast<double>(nd) * leading) *
                               Matrix::Identity(nd, nd));
      }
      out.emplace_back(regularize_spd(sd, reg_epsilon));
    }
    return out;
  };

  FamilyParams p;
  p.family = family;
  p.location = mean;
  p.skewness = Tensor(dims, 0.0);
  p.scales = scatter_scales(centered);
  p.dof = 50.0;
  p.gh_index = -0.5;
  p.gh_concentration = 1.0;
  p.vg_shape = family == Family::Sal ? 1.0 : 2.0;
  p.nig_concentration = 1.0;

  if (family != Family::Normal) {
    std::vector<double> column(xs.size());
    Tensor median(dims, 0.0);
    for (long long e = 0; e < ns; ++e) {
      for (size_t i = 0; i < xs.size(); ++i) column[i] = xs[i][e];
      const size_t mid = xs.size() / 2;
      std::nth_element(column.begin(), column.begin() + mid, column.end());
      double med = column[mid];
      if (xs.size() % 2 == 0) {
        std::nth_element(column.begin(), column.begin() + mid - 1,
                         column.begin() + mid);
        med = 0.5 * (med + column[mid - 1]);
      }
      median[e] = med;
    }
    p.skewness = 0.01 * (mean - median);

    // The Mahalanobis ratios under the scatter behave like the mixing draws
    // up to a common factor, so they serve as a latent proxy: their spread
    // calibrates the tail scalars, the regression of the data on them gives
    // the skewness scale, and the regression residuals give scale factors
    // free of the mixing-variance term that otherwise swamps the scatter.
    std::vector<double> wt(xs.size());
    double m1 = 0.0, m2 = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
      wt[i] = quad_residual(xs[i], mean, p.scales) / static_cast<double>(ns);
      m1 += wt[i];
      m2 += wt[i] * wt[i];
    }
    m1 /= nn;
    m2 /= nn;
    const double spread =
        m1 > 0.0 ? std::max((m2 - m1 * m1) / (m1 * m1), 1e-6) : 1e-6;

    double init_e_w = 1.0;
    if (spread > 0.05) {
      double sww = 0.0;
      for (size_t i = 0; i < xs.size(); ++i) {
        const double c = wt[i] - m1;
        sww += c * c;
      }
      Tensor slope(dims, 0.0);
      for (size_t i = 0; i < xs.size(); ++i)
        slope += (wt[i] - m1) * centered[i];
      slope *= 1.0 / sww;
      std::vector<Tensor> resid;
      resid.reserve(xs.size());
      for (size_t i = 0; i < xs.size(); ++i)
        resid.push_back(centered[i] - (wt[i] - m1) * slope);
      p.skewness = slope;
      p.scales = scatter_scales(resid);

      switch (family) {
        case Family::SkewT:
          p.dof = std::clamp(4.0 + 2.0 / spread, 4.2, 50.0);
          init_e_w = p.dof / (p.dof - 2.0);
          break;
        case Family::GenHyperbolic:
          p.gh_concentration = std::clamp(1.0 / spread, 0.25, 1.0);
          break;
        case Family::VarianceGamma:
          p.vg_shape = std::clamp(1.0 / spread, 0.25, 2.0);
          break;
        case Family::Nig:
          p.nig_concentration = std::clamp(1.0 / spread, 0.25, 1.0);
          init_e_w = 1.0 / p.nig_concentration;
          break;
        default:
          break;
      }
    } else {
      // The proxy shows no mixing heterogeneity, so the mixing law starts at
      // its light-tail edge. Starting it mid-range instead would make the
      // first E-step read the sampling noise of the radii as latent spread,
      // and with more cells than observations the skewness has enough freedom
      // to chase that noise; from the light edge the scalars only move toward
      // heavier mixing when later statistics genuinely demand it.
      switch (family) {
        case Family::SkewT:
          p.dof = 200.0;
          init_e_w = p.dof / (p.dof - 2.0);
          break;
        case Family::GenHyperbolic:
          p.gh_concentration = 200.0;
          break;
        case Family::VarianceGamma:
          p.vg_shape = 200.0;
          break;
        case Family::Nig:
          p.nig_concentration = 200.0;
          init_e_w = 1.0 / p.nig_concentration;
          break;
        default:
          break;
      }
    }
    // The scatter estimates E[W] times the Kronecker scale, so the gauge is
    // divided by the E[W] the initial scalars imply.
    if (init_e_w != 1.0)
      p.scales.back() = SpdMatrix(Matrix(p.scales.back().matrix() / init_e_w));
  }
  p.canonicalize();
  p.validate();
  return p;
}

namespace {

// Persistent degeneracy of the location/skewness system is a contract error
// of the fit, not a transient numeric event, so it carries its own type to
// pass through the divergence recovery below.
struct degenerate_weights_error : numeric_error {
  using numeric_error::numeric_error;
};

// Golden-section ascent of the observed log-likelihood along a parameter
// curve with curve(p, 0) == p; replaces p by the best point found only when
// that point strictly improves on p.
template <typename Curve>
void ascend_curve(const std::vector<Tensor>& xs, FamilyParams& params,
                  double lo, double hi, Curve curve) {
  const double ll_here = observed_loglik(xs, params);
  const double gr = 0.6180339887498949;
  auto val = [&](double t) { return observed_loglik(xs, curve(params, t)); };
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = val(x1), f2 = val(x2);
  for (int k = 0; k < 12; ++k) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = val(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = val(x1);
    }
  }
  const double bx = f1 > f2 ? x1 : x2;
  if (std::max(f1, f2) > ll_here) {
    FamilyParams q = curve(params, bx);
    if (observed_loglik(xs, q) > ll_here) params = std::move(q);
  }
}

}  // namespace

FitResult fit(const std::vector<Tensor>& xs, Family family, const FitConfig& cfg) {
  check_dataset(xs);
  if (xs.size() < 2) throw value_error("fit needs at least 2 observations");
  if (cfg.max_iter < 1) throw value_error("max_iter must be at least 1");
  if (!(cfg.aitken_tol > 0.0)) throw value_error("aitken_tol must be positive");
  const int order = xs[0].order();
  const long long ns = xs[0].size();
  ScaleUpdate algo = cfg.scale_update;
  if (order == 1) algo = ScaleUpdate::FlipFlop;

  FamilyParams params;
  if (cfg.init == InitScheme::Provided) {
    if (!cfg.init_params) throw value_error("provided init needs init_params");
    params = *cfg.init_params;
    if (params.family != family) throw value_error("init_params family mismatch");
    params.canonicalize();
    params.validate();
    if (!params.location.same_dims(xs[0]))
      throw value_error("init_params dims do not match the data");
  } else {
    params = moment_init(xs, family, cfg.reg_epsilon);
  }

  FitResult res;
  int degenerate_streak = 0;
  const bool skewed = family_is_skewed(family);
  // The skewed likelihoods are unbounded along degenerate boundaries (a scale
  // direction blowing up against a vanishing residual), and a fit that enters
  // such a ridge shows accelerating increments followed by numeric collapse.
  // The ride is caught two ways: increments sustained far above the most
  // stagnant level seen so far (a healthy trace contracts toward the stopping
  // threshold, it does not re-accelerate), and outright numeric failure. On
  // either signal the fit rewinds to the most stagnant iterate recorded and
  // reports non-convergence instead of returning a state deep inside the
  // ridge.
  FamilyParams rewind_params = params;
  size_t rewind_len = 0;
  double min_delta = std::numeric_limits<double>::infinity();
  int runaway_streak = 0;
  std::string divergence;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    res.iterations = it;
    try {
    const EStepStats st = e_step(xs, params);
    if (st.scale_collapsed) {
      divergence = "residual quadratic form collapsed";
      if (res.loglik_trace.empty()) res.loglik_trace.push_back(st.loglik);
      break;
    }

    const LinearUpdate lin = update_linear(xs, st);
    params.location = lin.location;
    params.skewness = lin.skewness;
    if (skewed) {
      if (lin.degenerate) {
        ++degenerate_streak;
        res.warnings.push_back("iteration " + std::to_string(it) +
                               ": singular location/skewness system, used mean "
                               "and zero skewness");
        if (degenerate_streak >= 3)
          throw degenerate_weights_error(
              "location/skewness update degenerate on three consecutive "
              "iterations");
      } else {
        degenerate_streak = 0;
      }
    }
    update_family_scalars(params, st, res.warnings, it);

    bool fired_any = false;
    // The scale updates are conditional maximizers given the other factors,
    // so they are swept repeatedly until stable; with the weights held fixed
    // this drives the scale block to its joint conditional maximum instead
    // of leaving a partial step behind each cycle.
    for (int sweep = 0; sweep < 8; ++sweep) {
      double worst = 0.0;
      for (int j = 0; j < order; ++j) {
        const Matrix stat =
            algo == ScaleUpdate::FlipFlop
                ? scale_stat_flipflop(xs, params.location, params.skewness,
                                      params.scales, st, j)
                : scale_stat_mode1(xs, params.location, params.skewness,
                                   params.scales, st, j);
        const double pre =
            static_cast<double>(xs[0].dim(j)) /
            (static_cast<double>(xs.size()) * static_cast<double>(ns));
        bool fired = false;
        const Matrix scaled = regularize_spd(pre * stat, cfg.reg_epsilon, &fired);
        fired_any = fired_any || fired;
        const Matrix& prev = params.scales[static_cast<size_t>(j)].matrix();
        worst = std::max(worst,
                         (scaled - prev).norm() / std::max(1.0, prev.norm()));
        params.scales[static_cast<size_t>(j)] = SpdMatrix(scaled);
      }
      if (worst < 1e-4) break;
    }
    normalize_scales(params.scales);
    if (fired_any) res.regularized_iterations.push_back(it);

    if (skewed) {
      // Extra conditional-maximization step along the joint rescaling
      // (skewness, Kronecker scale) -> (c A, c Kron): the expected
      // complete-data objective in c has the stationary point of
      // r sa c^2 + N n* c - sb = 0. This keeps the latent scale balanced
      // against the mixing law instead of letting it drift one nudge per
      // cycle; being an exact maximizer of the expected complete-data
      // objective, it preserves the ascent property.
      {
        double sb = 0.0;
        for (size_t i = 0; i < xs.size(); ++i)
          sb +=
              st.e_inv_w[i] * quad_residual(xs[i], params.location, params.scales);
        const double sa = st.mean_w * static_cast<double>(xs.size());
        const double r = quad_skew(params.skewness, params.scales);
        const double total =
            static_cast<double>(xs.size()) * static_cast<double>(ns);
        double c = 1.0;
        if (r * sa > 0.0 && sb > 0.0)
          c = (-total + std::sqrt(total * total + 4.0 * r * sa * sb)) /
              (2.0 * r * sa);
        else if (sb > 0.0)
          c = sb / total;
        if (std::isfinite(c) && c > 0.0 && std::abs(c - 1.0) > 1e-14) {
          params.skewness *= c;
          params.scales.back() =
              SpdMatrix(Matrix(c * params.scales.back().matrix()));
        }
      }
      // Two directions of the observed likelihood are nearly flat yet are
      // traversed by the conditional updates in small steps, delaying the
      // stopping rule long after the fit has stabilized: the split of the
      // fixed first moment between location and skewness, and the mixing
      // scalar. Maximize the observed log-likelihood along each directly;
      // a step is only accepted when it improves, so ascent is untouched.
      const double mean_w = st.mean_w;
      ascend_curve(xs, params, -1.0, 1.0,
                   [mean_w](const FamilyParams& p, double s) {
                     FamilyParams q = p;
                     Tensor shift = p.skewness;
                     shift *= s * mean_w;
                     q.location += shift;
                     q.skewness *= 1.0 - s;
                     return q;
                   });
      if (family != Family::Sal) {
        // The searched scalar stays inside the same bracket the
        // conditional update uses.
        ascend_curve(xs, params, -0.7, 0.7,
                     [](const FamilyParams& p, double t) {
                       FamilyParams q = p;
                       const double c = std::exp(t);
                       auto bounded = [&](double v) {
                         return std::clamp(c * v, 0.1, 200.0);
                       };
                       switch (p.family) {
                         case Family::SkewT: q.dof = bounded(p.dof); break;
                         case Family::GenHyperbolic:
                           q.gh_concentration = bounded(p.gh_concentration);
                           break;
                         case Family::VarianceGamma:
                           q.vg_shape = bounded(p.vg_shape);
                           break;
                         case Family::Nig:
                           q.nig_concentration = bounded(p.nig_concentration);
                           break;
                         default: break;
                       }
                       return q;
                     });
      }
    }

    const double ll_now = observed_loglik(xs, params);
    if (!std::isfinite(ll_now)) {
      divergence = "log-likelihood no longer finite";
      if (res.loglik_trace.empty()) res.loglik_trace.push_back(st.loglik);
      break;
    }
    res.loglik_trace.push_back(ll_now);
    const size_t n = res.loglik_trace.size();
    const double delta =
        n >= 2 ? res.loglik_trace[n - 1] - res.loglik_trace[n - 2]
               : std::numeric_limits<double>::infinity();
    if (std::abs(delta) <= min_delta) {
      min_delta = std::abs(delta);
      rewind_params = params;
      rewind_len = n;
    }
    if (aitken_converged(res.loglik_trace, cfg.aitken_tol)) {
      res.converged = true;
      break;
    }
    // Increments far above the most stagnant level, sustained over several
    // iterations, mean the trace has left the contracting regime for good;
    // the stagnation floor keeps single noisy iterations from counting.
    const double stagnation =
        std::max(min_delta, cfg.aitken_tol * std::max(1.0, std::abs(ll_now)));
    if (std::abs(delta) > 25.0 * stagnation) {
      if (++runaway_streak >= 3) {
        divergence = "runaway log-likelihood increments";
        break;
      }
    } else {
      runaway_streak = 0;
    }
    } catch (const degenerate_weights_error&) {
      throw;
    } catch (const numeric_error& e) {
      if (it == 1) throw;
      divergence = e.what();
      break;
    } catch (const value_error& e) {
      if (it == 1) throw;
      divergence = e.what();
      break;
    }
  }

  if (!divergence.empty()) {
    res.warnings.push_back(
        "iteration " + std::to_string(res.iterations) + ": " + divergence +
        "; rewound to the iterate with the smallest increment");
    params = rewind_params;
    res.loglik_trace.resize(std::max<size_t>(rewind_len, 1));
    res.iterations = static_cast<int>(res.loglik_trace.size());
  }

  res.params = params;
  res.loglik = res.loglik_trace.back();
  res.n_free_params = count_free_params(params);
  res.bic = bic(res.loglik, res.n_free_params, static_cast<long long>(xs.size()));
  return res;
}

}  // namespace skewtensor
