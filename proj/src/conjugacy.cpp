#include "ghlin/conjugacy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <unordered_map>

#include "ghlin/errors.hpp"
#include "ghlin/parallel.hpp"

namespace ghlin {

namespace {

constexpr double kUnit = std::numeric_limits<double>::epsilon();

// Per-application rounding factor: ||fl(T z) - T z|| <= factor * ||T|| * ||z||.
double rounding_factor(const GHOperator& op) {
  if (op.is_shift()) return 2.0 * kUnit;
  const double n = static_cast<double>(op.dimension());
  return 2.0 * (n + 1.0) * std::sqrt(n) * kUnit;
}

bool all_finite(const StateVector& v) {
  if (v.is_dense()) return v.coords().allFinite();
  for (const auto& e : v.entries()) {
    if (!std::isfinite(e.value)) return false;
  }
  return true;
}

// min(2A, lip * e), reading an infinite discrepancy as "unknown point".
double term_discrepancy(double two_a, double lip, double e) {
  if (!std::isfinite(e)) return two_a;
  if (lip == 0.0 || e == 0.0) return 0.0;
  return std::min(two_a, lip * e);
}

// Running sums stay in M (resp. N) in exact arithmetic. For dense operators
// rounding leaks into the other subspace, where T (resp. T^-1) amplifies it,
// so the sums are projected back after every step.
StateVector reproject_M(const GHOperator& op, StateVector v) {
  return op.is_shift() ? v : op.project_M(v);
}

StateVector reproject_N(const GHOperator& op, StateVector v) {
  return op.is_shift() ? v : op.project_N(v);
}

}  // namespace

void SeriesPolicy::validate() const {
  if (!(tol > 0.0) || !std::isfinite(tol)) throw PreconditionError("series tolerance must be positive");
  if (k_cap < 1) throw PreconditionError("series term cap must be >= 1");
}

OrbitMap linear_orbit(const GHOperator& op) {
  const double f = rounding_factor(op);
  OrbitMap r;
  r.forward = [op, f](const StateVector& z) {
    return OrbitStep{op.apply(z), f * op.norms().T * op.norm(z)};
  };
  r.inverse = [op, f](const StateVector& z) {
    return OrbitStep{op.apply_inverse(z), f * op.norms().Tinv * op.norm(z)};
  };
  r.forward_lip = op.norms().T;
  r.inverse_lip = op.norms().Tinv;
  return r;
}

OrbitMap perturbed_orbit(const GHOperator& op, const Perturbation& beta) {
  const double lip = beta.lip_bound();
  const double tinv = op.norms().Tinv;
  if (!(lip * tinv < 1.0)) {
    std::ostringstream msg;
    msg << "contraction condition Lip(beta) * ||T^-1|| < 1 violated: " << lip << " * " << tinv << " = "
        << lip * tinv;
    throw PreconditionError(msg.str());
  }
  const double f = rounding_factor(op);
  OrbitMap r;
  r.forward = [op, beta, f](const StateVector& z) {
    StateVector tz = op.apply(z);
    StateVector bz = beta(z);
    const double err = f * op.norms().T * op.norm(z) + 2.0 * kUnit * (op.norm(tz) + op.norm(bz));
    return OrbitStep{tz + bz, err};
  };
  r.inverse = [op, beta, f](const StateVector& z) {
    const double scale = std::max(1.0, op.norm(z));
    SInverseResult s = solve_S_inverse(op, beta, z, 1e-13 * scale);
    const double err = s.error_bound + f * op.norms().Tinv * scale * 4.0;
    return OrbitStep{std::move(s.x), err};
  };
  r.forward_lip = op.norms().T + lip;
  r.inverse_lip = tinv / (1.0 - tinv * lip);
  return r;
}

double psi_inverse_norm_bound(const Constants& k) { return k.c * k.d * (1.0 + k.t) / (1.0 - k.t); }

double series_tail_bound(const Constants& k, double sup_bound, int K) {
  return psi_inverse_norm_bound(k) * std::pow(k.t, K + 1) * sup_bound;
}

int series_cutoff(const Constants& k, double sup_bound, double tol, int k_cap) {
  if (sup_bound == 0.0) return 0;
  const double ratio = tol / (psi_inverse_norm_bound(k) * sup_bound);
  int K = 0;
  if (ratio < 1.0) K = std::max(0, static_cast<int>(std::ceil(std::log(ratio) / std::log(k.t))) - 1);
  while (K > 0 && series_tail_bound(k, sup_bound, K - 1) <= tol) --K;
  while (series_tail_bound(k, sup_bound, K) > tol) {
    ++K;
    if (K > k_cap) break;
  }
  if (K > k_cap) {
    std::ostringstream msg;
    msg << "series cutoff K = " << K << " exceeds the cap " << k_cap << " for tol " << tol;
    throw CapExceededError(msg.str());
  }
  return K;
}

PsiEvaluation psi_inverse_eval(const GHOperator& op, const OrbitMap& r, const BoundedMap& alpha,
                               const StateVector& x, const SeriesPolicy& policy, std::optional<int> K_override) {
  policy.validate();
  op.check_vector(x);
  const Constants& k = op.constants();
  const double A = alpha.sup_bound;
  PsiEvaluation out;
  out.value = op.zero_vector();
  if (A == 0.0) return out;

  const int K = K_override ? *K_override : series_cutoff(k, A, policy.tol, policy.k_cap);
  if (K < 0) throw PreconditionError("series cutoff K must be >= 0");
  out.K = K;
  out.truncation_bound = series_tail_bound(k, A, K);

  const auto gm = op.stable_power_norms(K);
  const auto gn = op.unstable_power_norms(K + 1);
  const double two_a = 2.0 * A;
  const double lip = alpha.lip_bound;
  double term_bound_sum = 0.0;

  auto alpha_at = [&](const StateVector& z, bool& ok) {
    ok = all_finite(z);
    return ok ? alpha.eval(z) : op.zero_vector();
  };

  if (!op.M_trivial()) {
    // Backward orbit b_i = R^-i x, i = 1..K+1.
    std::vector<StateVector> pts;
    std::vector<double> errs;
    pts.reserve(static_cast<std::size_t>(K) + 1);
    StateVector z = x;
    double e = 0.0;
    for (int i = 1; i <= K + 1; ++i) {
      if (all_finite(z)) {
        OrbitStep s = r.inverse(z);
        e = r.inverse_lip * e + s.error;
        z = std::move(s.point);
      } else {
        e = std::numeric_limits<double>::infinity();
      }
      pts.push_back(z);
      errs.push_back(e);
    }
    // Horner: sum_{k=0}^{K} T^k a_k with a_k = P_M alpha(b_{k+1}).
    StateVector acc = op.zero_vector();
    for (int kk = K; kk >= 0; --kk) {
      bool ok = true;
      StateVector a = op.project_M(alpha_at(pts[static_cast<std::size_t>(kk)], ok));
      acc = kk == K ? std::move(a) : reproject_M(op, a + op.apply(acc));
      const double g = gm[static_cast<std::size_t>(kk)];
      out.orbit_bound += g * (ok ? term_discrepancy(two_a, lip, errs[static_cast<std::size_t>(kk)]) : A);
      term_bound_sum += g * A;
    }
    out.value = std::move(acc);
  }

  if (!op.N_trivial()) {
    // Forward orbit f_i = R^i x, i = 0..K.
    std::vector<StateVector> pts;
    std::vector<double> errs;
    pts.reserve(static_cast<std::size_t>(K) + 1);
    StateVector z = x;
    double e = 0.0;
    pts.push_back(z);
    errs.push_back(0.0);
    for (int i = 1; i <= K; ++i) {
      if (all_finite(z)) {
        OrbitStep s = r.forward(z);
        e = r.forward_lip * e + s.error;
        z = std::move(s.point);
      } else {
        e = std::numeric_limits<double>::infinity();
      }
      pts.push_back(z);
      errs.push_back(e);
    }
    // Horner: sum_{k=1}^{K+1} T^-k b_k with b_k = P_N alpha(f_{k-1}).
    StateVector acc = op.zero_vector();
    for (int kk = K + 1; kk >= 1; --kk) {
      bool ok = true;
      StateVector b = op.project_N(alpha_at(pts[static_cast<std::size_t>(kk - 1)], ok));
      acc = kk == K + 1 ? std::move(b) : b + acc;
      acc = reproject_N(op, op.apply_inverse(acc));
      const double g = gn[static_cast<std::size_t>(kk)];
      out.orbit_bound += g * (ok ? term_discrepancy(two_a, lip, errs[static_cast<std::size_t>(kk - 1)]) : A);
      term_bound_sum += g * A;
    }
    out.value = out.value - acc;
  }

  const double f = rounding_factor(op);
  out.rounding_bound =
      4.0 * f * (1.0 + op.norms().T + op.norms().Tinv) * (static_cast<double>(K) + 2.0) * term_bound_sum;
  return out;
}

double y_membership_residual(const GHOperator& op, const StateVector& v) {
  return op.norm(op.project_M(op.apply(op.project_N(v))));
}

// ---------------------------------------------------------------------------
// ConjugacyMap

struct ConjugacyMap::Impl {
  Direction direction = Direction::Forward;
  GHOperator op;
  Perturbation beta;
  SeriesPolicy policy;
  OrbitMap orbit;
  double A = 0.0;
  double lip = 0.0;
  double psi_norm = 0.0;
  int K = 0;
  double tail = 0.0;
  int depth = 0;
  double q = 0.0;
  double picard_error = 0.0;
  std::vector<double> gm, gn;
  std::vector<double> pow_fwd, pow_inv;

  mutable std::shared_mutex memo_mutex;
  mutable std::unordered_map<StateVector, MapEvaluation, StateVectorHash, StateVectorIdentical> memo;

  Impl(GHOperator o, Perturbation b) : op(std::move(o)), beta(std::move(b)) {}

  MapEvaluation evaluate(const StateVector& x, PicardTrace* trace) const;
  MapEvaluation evaluate_forward(const StateVector& x, PicardTrace* trace) const;
  double forward_continuity(double delta) const;
  double backward_continuity(double delta) const;
  double level_rounding() const;
};

double ConjugacyMap::Impl::level_rounding() const {
  const double f = rounding_factor(op);
  return 8.0 * f * (1.0 + op.norms().T + op.norms().Tinv) * psi_norm * (psi_norm + 1.0) * A;
}

MapEvaluation ConjugacyMap::Impl::evaluate(const StateVector& x, PicardTrace* trace) const {
  op.check_vector(x);
  if (!trace) {
    std::shared_lock lock(memo_mutex);
    if (auto it = memo.find(x); it != memo.end()) return it->second;
  }
  MapEvaluation result;
  if (direction == Direction::Forward) {
    result = evaluate_forward(x, trace);
  } else if (A == 0.0) {
    result = {op.zero_vector(), 0.0};
  } else {
    BoundedMap minus_beta{[b = beta](const StateVector& z) { return -b(z); }, A, lip};
    PsiEvaluation e = psi_inverse_eval(op, orbit, minus_beta, x, policy, K);
    result = {std::move(e.value), e.error_bound()};
  }
  std::unique_lock lock(memo_mutex);
  memo.try_emplace(x, result);
  return result;
}

// Depth-bounded Picard unrolling of h = Psi_1^-1(beta o (I + h)). Every
// level only needs values on the T-orbit of x, so level m is computed on the
// orbit indices [-(D-m)(K+1), (D-m)K] with running sums
//   A(j+1) = a_j + T A(j),       a_i = P_M beta(T^i x + phi_{m-1}(T^i x)),
//   B(j)   = T^-1 (b_j + B(j+1)), b_i = P_N beta(...),
// and phi_m(T^j x) = A(j) - B(j). Each sum carries at least K+1 terms.
MapEvaluation ConjugacyMap::Impl::evaluate_forward(const StateVector& x, PicardTrace* trace) const {
  const int D = depth;
  if (D == 0) return {op.zero_vector(), 0.0};
  const int lo0 = -D * (K + 1);
  const int hi0 = D * K;
  const auto n0 = static_cast<std::size_t>(hi0 - lo0 + 1);

  std::vector<StateVector> orbit_pts(n0);
  std::vector<double> orbit_err(n0, 0.0);
  auto at = [lo0](int j) { return static_cast<std::size_t>(j - lo0); };
  orbit_pts[at(0)] = x;
  for (int j = 1; j <= hi0; ++j) {
    const StateVector& prev = orbit_pts[at(j - 1)];
    if (!all_finite(prev)) {
      orbit_pts[at(j)] = prev;
      orbit_err[at(j)] = std::numeric_limits<double>::infinity();
      continue;
    }
    OrbitStep s = orbit.forward(prev);
    orbit_pts[at(j)] = std::move(s.point);
    orbit_err[at(j)] = orbit.forward_lip * orbit_err[at(j - 1)] + s.error;
  }
  for (int j = -1; j >= lo0; --j) {
    const StateVector& prev = orbit_pts[at(j + 1)];
    if (!all_finite(prev)) {
      orbit_pts[at(j)] = prev;
      orbit_err[at(j)] = std::numeric_limits<double>::infinity();
      continue;
    }
    OrbitStep s = orbit.inverse(prev);
    orbit_pts[at(j)] = std::move(s.point);
    orbit_err[at(j)] = orbit.inverse_lip * orbit_err[at(j + 1)] + s.error;
  }

  const double two_a = 2.0 * A;
  const double per_level = 3.0 * tail + level_rounding();
  // Values and error bounds of the previous level over [lo_p, hi_p].
  std::vector<StateVector> prev_vals;
  std::vector<double> prev_err;
  int lo_p = lo0;
  int hi_p = hi0;

  for (int m = 1; m <= D; ++m) {
    const int lo_m = -(D - m) * (K + 1);
    const int hi_m = (D - m) * K;
    const auto np = static_cast<std::size_t>(hi_p - lo_p + 1);
    const auto nm = static_cast<std::size_t>(hi_m - lo_m + 1);

    std::vector<StateVector> a(np), b(np);
    std::vector<double> tau(np, 0.0);
    for (std::size_t i = 0; i < np; ++i) {
      const int j = lo_p + static_cast<int>(i);
      StateVector pt = m == 1 ? orbit_pts[at(j)] : orbit_pts[at(j)] + prev_vals[i];
      const double e_prev = m == 1 ? 0.0 : prev_err[i];
      StateVector u;
      if (all_finite(pt)) {
        u = beta(pt);
        tau[i] = term_discrepancy(two_a, lip, orbit_err[at(j)] + e_prev);
      } else {
        u = op.zero_vector();
        tau[i] = two_a;
      }
      if (!op.M_trivial()) a[i] = op.project_M(u);
      if (!op.N_trivial()) b[i] = op.project_N(u);
    }

    std::vector<StateVector> vals(nm, op.zero_vector());
    if (!op.M_trivial()) {
      StateVector acc = op.zero_vector();
      for (int i = lo_p; i < hi_m; ++i) {
        acc = reproject_M(op, a[static_cast<std::size_t>(i - lo_p)] + op.apply(acc));
        if (i + 1 >= lo_m) vals[static_cast<std::size_t>(i + 1 - lo_m)] = acc;
      }
    }
    if (!op.N_trivial()) {
      StateVector acc = op.zero_vector();
      for (int i = hi_p; i >= lo_m; --i) {
        acc = reproject_N(op, op.apply_inverse(b[static_cast<std::size_t>(i - lo_p)] + acc));
        if (i <= hi_m) {
          auto& v = vals[static_cast<std::size_t>(i - lo_m)];
          v = v - acc;
        }
      }
    }

    std::vector<double> err(nm, 0.0);
    for (std::size_t jj = 0; jj < nm; ++jj) {
      const int j = lo_m + static_cast<int>(jj);
      double s = per_level;
      if (!op.M_trivial()) {
        for (int kk = 0; kk <= K; ++kk) s += gm[static_cast<std::size_t>(kk)] * tau[static_cast<std::size_t>(j - kk - 1 - lo_p)];
      }
      if (!op.N_trivial()) {
        for (int kk = 1; kk <= K + 1; ++kk) s += gn[static_cast<std::size_t>(kk)] * tau[static_cast<std::size_t>(j + kk - 1 - lo_p)];
      }
      err[jj] = s;
    }

    if (trace) {
      double inc = 0.0;
      for (std::size_t jj = 0; jj < nm; ++jj) {
        const int j = lo_m + static_cast<int>(jj);
        const StateVector& v = vals[jj];
        inc = std::max(inc, m == 1 ? op.norm(v) : op.norm(v - prev_vals[static_cast<std::size_t>(j - lo_p)]));
      }
      trace->increments.push_back(inc);
    }

    prev_vals = std::move(vals);
    prev_err = std::move(err);
    lo_p = lo_m;
    hi_p = hi_m;
  }
  return {std::move(prev_vals[0]), prev_err[0] + picard_error};
}

double ConjugacyMap::Impl::forward_continuity(double delta) const {
  if (depth == 0 || A == 0.0) return 0.0;
  const double cap = 2.0 * psi_norm * A;
  if (lip == 0.0) return std::min(cap, 2.0 * tail);
  const int D = depth;
  const double two_a = 2.0 * A;
  auto base = [&](int j) {
    return delta * (j >= 0 ? pow_fwd[static_cast<std::size_t>(j)] : pow_inv[static_cast<std::size_t>(-j)]);
  };
  int lo_p = -D * (K + 1);
  int hi_p = D * K;
  std::vector<double> prev(static_cast<std::size_t>(hi_p - lo_p + 1), cap);
  for (int m = 1; m <= D; ++m) {
    const int lo_m = -(D - m) * (K + 1);
    const int hi_m = (D - m) * K;
    std::vector<double> tau(prev.size());
    for (std::size_t i = 0; i < prev.size(); ++i) {
      tau[i] = term_discrepancy(two_a, lip, base(lo_p + static_cast<int>(i)) + prev[i]);
    }
    std::vector<double> cur(static_cast<std::size_t>(hi_m - lo_m + 1), 0.0);
    for (std::size_t jj = 0; jj < cur.size(); ++jj) {
      const int j = lo_m + static_cast<int>(jj);
      double s = 2.0 * tail;
      if (!op.M_trivial()) {
        for (int kk = 0; kk <= K; ++kk) s += gm[static_cast<std::size_t>(kk)] * tau[static_cast<std::size_t>(j - kk - 1 - lo_p)];
      }
      if (!op.N_trivial()) {
        for (int kk = 1; kk <= K + 1; ++kk) s += gn[static_cast<std::size_t>(kk)] * tau[static_cast<std::size_t>(j + kk - 1 - lo_p)];
      }
      cur[jj] = std::min(cap, s);
    }
    prev = std::move(cur);
    lo_p = lo_m;
    hi_p = hi_m;
  }
  return prev[0];
}

double ConjugacyMap::Impl::backward_continuity(double delta) const {
  if (A == 0.0) return 0.0;
  const double two_a = 2.0 * A;
  double s = 2.0 * tail;
  if (!op.M_trivial()) {
    double grow = orbit.inverse_lip * delta;
    for (int kk = 0; kk <= K; ++kk) {
      s += gm[static_cast<std::size_t>(kk)] * term_discrepancy(two_a, lip, grow);
      grow *= orbit.inverse_lip;
    }
  }
  if (!op.N_trivial()) {
    double grow = delta;
    for (int kk = 1; kk <= K + 1; ++kk) {
      s += gn[static_cast<std::size_t>(kk)] * term_discrepancy(two_a, lip, grow);
      grow *= orbit.forward_lip;
    }
  }
  return std::min(s, 2.0 * psi_norm * A);
}

Direction ConjugacyMap::direction() const { return impl_->direction; }
const GHOperator& ConjugacyMap::op() const { return impl_->op; }
const Perturbation& ConjugacyMap::beta() const { return impl_->beta; }
const SeriesPolicy& ConjugacyMap::policy() const { return impl_->policy; }
MapEvaluation ConjugacyMap::h(const StateVector& x) const { return impl_->evaluate(x, nullptr); }

MapEvaluation ConjugacyMap::H(const StateVector& x) const {
  MapEvaluation e = h(x);
  e.value = x + e.value;
  return e;
}

double ConjugacyMap::continuity_bound(double delta) const {
  if (!(delta >= 0.0)) throw PreconditionError("continuity_bound needs delta >= 0");
  return impl_->direction == Direction::Forward ? impl_->forward_continuity(delta)
                                                : impl_->backward_continuity(delta);
}

double ConjugacyMap::sup_bound() const { return impl_->psi_norm * impl_->A; }
int ConjugacyMap::series_terms() const { return impl_->K; }
int ConjugacyMap::picard_depth() const { return impl_->depth; }
double ConjugacyMap::contraction_factor() const { return impl_->q; }
double ConjugacyMap::picard_error() const { return impl_->picard_error; }

PicardTrace ConjugacyMap::picard_trace(const StateVector& x) const {
  if (impl_->direction != Direction::Forward) throw PreconditionError("picard_trace needs a Forward map");
  PicardTrace t;
  impl_->evaluate(x, &t);
  return t;
}

namespace {

void fill_common(ConjugacyMap::Impl& impl, const SeriesPolicy& policy) {
  impl.policy = policy;
  impl.A = impl.beta.sup_bound();
  impl.lip = impl.beta.lip_bound();
  impl.psi_norm = psi_inverse_norm_bound(impl.op.constants());
}

}  // namespace

ConjugacyMap solve_h(const GHOperator& op, const Perturbation& beta, double gamma, const SeriesPolicy& policy,
                     double picard_tol) {
  policy.validate();
  if (!(picard_tol > 0.0)) throw PreconditionError("picard_tol must be positive");
  const double eps = admissible_eps(op, gamma);
  const Constants& k = op.constants();
  if (beta.lip_bound() > eps || beta.sup_bound() > eps) {
    std::ostringstream msg;
    msg << "perturbation too large: need ||beta||_inf <= eps and Lip(beta) <= eps with "
        << "eps = gamma (1 - t) / (c d (1 + t)) = " << gamma << " * (1 - " << k.t << ") / (" << k.c << " * "
        << k.d << " * (1 + " << k.t << ")) = " << eps << ", got ||beta||_inf <= " << beta.sup_bound()
        << ", Lip(beta) <= " << beta.lip_bound();
    throw PreconditionError(msg.str());
  }
  if (!(beta.lip_bound() * op.norms().Tinv < 1.0)) {
    std::ostringstream msg;
    msg << "contraction condition Lip(beta) * ||T^-1|| < 1 violated: " << beta.lip_bound() * op.norms().Tinv;
    throw PreconditionError(msg.str());
  }

  auto impl = std::make_shared<ConjugacyMap::Impl>(op, beta);
  impl->direction = Direction::Forward;
  fill_common(*impl, policy);
  impl->orbit = linear_orbit(op);
  impl->q = impl->psi_norm * impl->lip;

  if (impl->A > 0.0) {
    // Three tails per level: the truncated tail plus the extra terms kept
    // by the running sums.
    impl->K = series_cutoff(k, impl->A, policy.tol / 3.0, policy.k_cap);
    impl->tail = series_tail_bound(k, impl->A, impl->K);
    const double h_sup = impl->psi_norm * impl->A;
    if (impl->q == 0.0 || h_sup <= picard_tol) {
      impl->depth = 1;
    } else {
      impl->depth = std::max(1, static_cast<int>(std::ceil(std::log(picard_tol / h_sup) / std::log(impl->q))));
    }
    impl->picard_error = std::pow(impl->q, impl->depth) * h_sup;
    const int span = impl->depth * (impl->K + 1);
    impl->gm = op.stable_power_norms(impl->K);
    impl->gn = op.unstable_power_norms(impl->K + 1);
    impl->pow_fwd = op.power_norms(span);
    impl->pow_inv = op.inverse_power_norms(span);
  }
  return ConjugacyMap(std::move(impl));
}

ConjugacyMap solve_h_prime(const GHOperator& op, const Perturbation& beta, const SeriesPolicy& policy) {
  policy.validate();
  auto impl = std::make_shared<ConjugacyMap::Impl>(op, beta);
  impl->direction = Direction::Backward;
  fill_common(*impl, policy);
  impl->orbit = perturbed_orbit(op, beta);
  impl->q = impl->psi_norm * impl->lip;
  if (impl->A > 0.0) {
    impl->K = series_cutoff(op.constants(), impl->A, policy.tol, policy.k_cap);
    impl->tail = series_tail_bound(op.constants(), impl->A, impl->K);
    impl->gm = op.stable_power_norms(impl->K);
    impl->gn = op.unstable_power_norms(impl->K + 1);
  }
  return ConjugacyMap(std::move(impl));
}

MapEvaluation eval_H(const ConjugacyMap& forward, const StateVector& x) {
  if (forward.direction() != Direction::Forward) throw PreconditionError("eval_H needs a Forward map");
  return forward.H(x);
}

MapEvaluation eval_H_prime(const ConjugacyMap& backward, const StateVector& x) {
  if (backward.direction() != Direction::Backward) throw PreconditionError("eval_H_prime needs a Backward map");
  return backward.H(x);
}

// ---------------------------------------------------------------------------
// Verification

namespace {

double rounding_allowance(const GHOperator& op, std::initializer_list<double> magnitudes) {
  double s = 0.0;
  for (double m : magnitudes) s += m;
  return 4.0 * rounding_factor(op) * s;
}

void finalize(VerificationReport& r) {
  for (const auto& p : r.per_point) {
    r.max_residual = std::max(r.max_residual, p.residual);
    r.max_certified_bound = std::max(r.max_certified_bound, p.certified_bound);
    r.max_y_membership = std::max(r.max_y_membership, p.y_membership);
    if (!(p.residual <= p.certified_bound)) r.within_bounds = false;
  }
}

}  // namespace

VerificationReport verify_conjugacy(const ConjugacyMap& map, std::span<const StateVector> samples) {
  const GHOperator& op = map.op();
  const Perturbation& beta = map.beta();
  const double t_norm = op.norms().T;
  const double f = rounding_factor(op);
  VerificationReport report;
  report.per_point.resize(samples.size());

  parallel_for(samples.size(), [&](std::size_t i) {
    const StateVector& x = samples[i];
    PointResidual& out = report.per_point[i];
    if (map.direction() == Direction::Forward) {
      const MapEvaluation hx = map.h(x);
      const StateVector Hx = x + hx.value;
      const StateVector tx = op.apply(x);
      const MapEvaluation htx = map.h(tx);
      const StateVector lhs = tx + htx.value;
      const StateVector t_hx = op.apply(Hx);
      const StateVector b_hx = beta(Hx);
      out.residual = op.norm(lhs - t_hx - b_hx);
      // tx itself carries rounding; H moves by at most delta + omega_h(delta).
      const double delta = f * t_norm * op.norm(x);
      out.certified_bound = htx.error_bound + (t_norm + beta.lip_bound()) * hx.error_bound + delta +
                            map.continuity_bound(delta) +
                            rounding_allowance(op, {op.norm(lhs), op.norm(t_hx), op.norm(b_hx), t_norm * op.norm(Hx)});
      out.y_membership = y_membership_residual(op, hx.value);
    } else {
      const MapEvaluation hx = map.h(x);
      const StateVector tx = op.apply(x);
      const StateVector bx = beta(x);
      const StateVector sx = tx + bx;
      const MapEvaluation hsx = map.h(sx);
      const StateVector lhs = sx + hsx.value;
      const StateVector rhs = op.apply(x + hx.value);
      out.residual = op.norm(lhs - rhs);
      const double delta = f * t_norm * op.norm(x) + 2.0 * kUnit * (op.norm(tx) + op.norm(bx));
      out.certified_bound = hsx.error_bound + t_norm * hx.error_bound + delta + map.continuity_bound(delta) +
                            rounding_allowance(op, {op.norm(lhs), op.norm(rhs), t_norm * op.norm(x + hx.value)});
      out.y_membership = y_membership_residual(op, hx.value);
    }
  });
  finalize(report);
  return report;
}

InverseReport verify_inverse(const ConjugacyMap& forward, const ConjugacyMap& backward,
                             std::span<const StateVector> samples) {
  if (forward.direction() != Direction::Forward || backward.direction() != Direction::Backward) {
    throw PreconditionError("verify_inverse needs a Forward and a Backward map");
  }
  const GHOperator& op = forward.op();
  InverseReport report;
  report.hprime_after_h.per_point.resize(samples.size());
  report.h_after_hprime.per_point.resize(samples.size());

  parallel_for(samples.size(), [&](std::size_t i) {
    const StateVector& x = samples[i];
    {
      const MapEvaluation hx = forward.H(x);
      const MapEvaluation back = backward.H(hx.value);
      PointResidual& out = report.hprime_after_h.per_point[i];
      out.residual = op.norm(back.value - x);
      const double moved = hx.error_bound + rounding_allowance(op, {op.norm(hx.value)});
      out.certified_bound = back.error_bound + moved + backward.continuity_bound(moved) +
                            rounding_allowance(op, {op.norm(back.value), op.norm(x)});
      out.y_membership = y_membership_residual(op, back.value - hx.value);
    }
    {
      const MapEvaluation hpx = backward.H(x);
      const MapEvaluation fwd = forward.H(hpx.value);
      PointResidual& out = report.h_after_hprime.per_point[i];
      out.residual = op.norm(fwd.value - x);
      const double moved = hpx.error_bound + rounding_allowance(op, {op.norm(hpx.value)});
      out.certified_bound = fwd.error_bound + moved + forward.continuity_bound(moved) +
                            rounding_allowance(op, {op.norm(fwd.value), op.norm(x)});
      out.y_membership = y_membership_residual(op, fwd.value - hpx.value);
    }
  });
  finalize(report.hprime_after_h);
  finalize(report.h_after_hprime);
  return report;
}

}  // namespace ghlin
