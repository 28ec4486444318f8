#include "ghlin/gh_operator.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "ghlin/errors.hpp"

namespace ghlin {

// ---------------------------------------------------------------------------
// WeightSpec

double WeightSpec::weight(std::int64_t n) const {
  if (n < core_lo) return left_tail;
  if (n > core_hi()) return right_tail;
  return core[static_cast<std::size_t>(n - core_lo)];
}

void WeightSpec::validate() const {
  auto bad = [](double w) { return !std::isfinite(w) || w == 0.0; };
  if (bad(left_tail)) throw PreconditionError("shift weights: left tail must be finite and nonzero");
  if (bad(right_tail)) throw PreconditionError("shift weights: right tail must be finite and nonzero");
  for (std::size_t i = 0; i < core.size(); ++i) {
    if (bad(core[i])) {
      throw PreconditionError("shift weights: w_" + std::to_string(core_lo + static_cast<std::int64_t>(i)) +
                              " must be finite and nonzero");
    }
  }
}

ShiftCriterion check_shift_criterion(const WeightSpec& weights) {
  weights.validate();
  ShiftCriterion r;
  r.left_margin = std::abs(weights.left_tail);
  r.right_margin = std::abs(weights.right_tail);
  r.holds = r.left_margin < 1.0 && r.right_margin > 1.0;
  return r;
}

// ---------------------------------------------------------------------------
// Matrix helpers

double operator_norm(const Eigen::MatrixXd& a, NormKind kind) {
  if (a.size() == 0) return 0.0;
  const double row = a.cwiseAbs().rowwise().sum().maxCoeff();
  const double col = a.cwiseAbs().colwise().sum().maxCoeff();
  if (kind.is_sup()) return row;
  if (kind.p() == 1.0) return col;
  if (kind.p() == 2.0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    return svd.singularValues()(0);
  }
  const double inv_p = 1.0 / kind.p();
  return std::pow(col, inv_p) * std::pow(row, 1.0 - inv_p);
}

namespace {

// Matrix sign function by scaled Newton iteration.
Eigen::MatrixXd matrix_sign(const Eigen::MatrixXd& c) {
  const auto n = c.rows();
  Eigen::MatrixXd x = c;
  for (int iter = 0; iter < 200; ++iter) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(x);
    Eigen::MatrixXd x_inv = lu.inverse();
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) log_det += std::log(std::abs(lu.matrixLU()(i, i)));
    const double mu = iter < 10 ? std::exp(-log_det / static_cast<double>(n)) : 1.0;
    Eigen::MatrixXd next = 0.5 * (mu * x + x_inv / mu);
    const double change = (next - x).cwiseAbs().colwise().sum().maxCoeff();
    const double size = next.cwiseAbs().colwise().sum().maxCoeff();
    x = std::move(next);
    if (iter >= 10 && change <= 1e-14 * size) return x;
  }
  throw PreconditionError("matrix operator: spectral projection iteration did not converge");
}

}  // namespace

// ---------------------------------------------------------------------------
// GHOperator construction

GHOperator GHOperator::make_shift(const WeightSpec& weights, NormKind norm, std::optional<double> t,
                                  int power_cap) {
  const ShiftCriterion crit = check_shift_criterion(weights);
  if (!crit.holds) {
    std::ostringstream msg;
    msg << "shift criterion fails:";
    if (crit.left_margin >= 1.0) {
      msg << " left side lim sup_k |w_-k...w_-k-n|^(1/n) = " << crit.left_margin << " is not < 1;";
    }
    if (crit.right_margin <= 1.0) {
      msg << " right side lim inf_k |w_k...w_k+n|^(1/n) = " << crit.right_margin << " is not > 1;";
    }
    throw PreconditionError(msg.str());
  }
  GHOperator op;
  op.backend_ = Backend::Shift;
  op.norm_ = norm;
  op.weights_ = weights;
  op.rho_m_ = crit.left_margin;
  op.rho_ninv_ = 1.0 / crit.right_margin;
  op.install(t, power_cap);
  return op;
}

GHOperator GHOperator::make_matrix(const Eigen::MatrixXd& t_matrix, NormKind norm,
                                   std::optional<double> t, MatrixOptions options, int power_cap) {
  const auto n = t_matrix.rows();
  if (n == 0 || t_matrix.cols() != n) {
    throw PreconditionError("matrix operator must be square and non-empty");
  }
  if (!t_matrix.allFinite()) throw PreconditionError("matrix operator has non-finite entries");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(t_matrix);
  if (lu.rank() < n) throw PreconditionError("matrix operator is not invertible");

  Eigen::EigenSolver<Eigen::MatrixXd> es(t_matrix, false);
  if (es.info() != Eigen::Success) throw PreconditionError("eigenvalue computation failed");
  const Eigen::VectorXcd lambda = es.eigenvalues();

  GHOperator op;
  op.backend_ = Backend::Matrix;
  op.norm_ = norm;
  op.t_ = t_matrix;
  op.t_inv_ = lu.inverse();

  int n_stable = 0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    const double mod = std::abs(lambda[i]);
    if (std::abs(mod - 1.0) < options.spectral_tol) {
      std::ostringstream msg;
      msg << "not hyperbolic (finite dimension): eigenvalue " << lambda[i].real()
          << (lambda[i].imag() >= 0 ? "+" : "") << lambda[i].imag() << "i has modulus " << mod
          << " within " << options.spectral_tol << " of 1";
      throw PreconditionError(msg.str());
    }
    if (mod < 1.0) {
      ++n_stable;
      op.rho_m_ = std::max(op.rho_m_, mod);
    } else {
      op.rho_ninv_ = std::max(op.rho_ninv_, 1.0 / mod);
    }
  }

  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  if (n_stable == n) {
    op.p_m_ = id;
    op.p_n_ = Eigen::MatrixXd::Zero(n, n);
  } else if (n_stable == 0) {
    op.p_m_ = Eigen::MatrixXd::Zero(n, n);
    op.p_n_ = id;
  } else {
    // The Cayley transform sends |lambda| < 1 to Re mu < 0, so the sign
    // function separates the two spectral subspaces.
    const Eigen::MatrixXd cayley = (t_matrix + id) * (t_matrix - id).inverse();
    const Eigen::MatrixXd sign = matrix_sign(cayley);
    op.p_m_ = 0.5 * (id - sign);
    op.p_n_ = id - op.p_m_;
  }
  op.m_trivial_ = n_stable == 0;
  op.n_trivial_ = n_stable == n;

  const double pm_norm = std::max(1.0, operator_norm(op.p_m_, NormKind::sup()));
  const double scale = pm_norm * pm_norm;
  const double idem = operator_norm(op.p_m_ * op.p_m_ - op.p_m_, NormKind::sup());
  const double t_norm = std::max(1.0, operator_norm(t_matrix, NormKind::sup()));
  const double leak_m = operator_norm(op.p_n_ * t_matrix * op.p_m_, NormKind::sup());
  const double leak_n = operator_norm(op.p_m_ * op.t_inv_ * op.p_n_, NormKind::sup());
  const double tol = options.projection_tol * scale;
  if (idem > tol || leak_m > tol * t_norm ||
      leak_n > tol * std::max(1.0, operator_norm(op.t_inv_, NormKind::sup()))) {
    std::ostringstream msg;
    msg << "spectral projections are ill-conditioned (defective or nearly defective matrix): "
        << "|P_M^2 - P_M| = " << idem << ", |P_N T P_M| = " << leak_m << ", |P_M T^-1 P_N| = " << leak_n;
    throw PreconditionError(msg.str());
  }

  op.install(t, power_cap);
  return op;
}

GHOperator GHOperator::with_t(double t, int power_cap) const {
  GHOperator op = *this;
  op.install(t, power_cap);
  return op;
}

void GHOperator::install(std::optional<double> t, int power_cap) {
  constants_ = estimate_constants(*this, t, power_cap);
  norms_.T_on_M = m_trivial_ ? 0.0 : stable_power_norms(1)[1];
  norms_.Tinv_on_N = n_trivial_ ? 0.0 : unstable_power_norms(1)[1];
  norms_.T = power_norms(1)[1];
  norms_.Tinv = inverse_power_norms(1)[1];
}

// ---------------------------------------------------------------------------
// Accessors

const WeightSpec& GHOperator::weights() const {
  if (!is_shift()) throw PreconditionError("weights() requires the shift backend");
  return weights_;
}
const Eigen::MatrixXd& GHOperator::matrix() const {
  if (is_shift()) throw PreconditionError("matrix() requires the matrix backend");
  return t_;
}
const Eigen::MatrixXd& GHOperator::inverse_matrix() const {
  if (is_shift()) throw PreconditionError("inverse_matrix() requires the matrix backend");
  return t_inv_;
}
const Eigen::MatrixXd& GHOperator::projection_M() const {
  if (is_shift()) throw PreconditionError("projection_M() requires the matrix backend");
  return p_m_;
}
const Eigen::MatrixXd& GHOperator::projection_N() const {
  if (is_shift()) throw PreconditionError("projection_N() requires the matrix backend");
  return p_n_;
}
std::size_t GHOperator::dimension() const {
  return is_shift() ? 0 : static_cast<std::size_t>(t_.rows());
}

void GHOperator::check_vector(const StateVector& x) const {
  if (is_shift()) {
    if (!x.is_sparse()) throw PreconditionError("shift operator acts on sparse StateVectors");
    return;
  }
  if (!x.is_dense() || x.dimension() != dimension()) {
    throw PreconditionError("matrix operator of dimension " + std::to_string(dimension()) +
                            " needs a dense StateVector of that dimension");
  }
}

StateVector GHOperator::zero_vector() const {
  return is_shift() ? StateVector() : StateVector::dense_zero(dimension());
}

// ---------------------------------------------------------------------------
// Action

StateVector GHOperator::apply(const StateVector& x) const {
  check_vector(x);
  if (!is_shift()) return StateVector::dense(t_ * x.coords());
  std::vector<SparseEntry> out;
  out.reserve(x.entries().size());
  for (const auto& e : x.entries()) {
    const double v = weights_.weight(e.index) * e.value;
    if (v != 0.0) out.push_back({e.index - 1, v});
  }
  return StateVector::sparse(std::move(out));
}

StateVector GHOperator::apply_inverse(const StateVector& y) const {
  check_vector(y);
  if (!is_shift()) return StateVector::dense(t_inv_ * y.coords());
  std::vector<SparseEntry> out;
  out.reserve(y.entries().size());
  for (const auto& e : y.entries()) {
    const double v = e.value / weights_.weight(e.index + 1);
    if (v != 0.0) out.push_back({e.index + 1, v});
  }
  return StateVector::sparse(std::move(out));
}

StateVector GHOperator::project_M(const StateVector& x) const {
  check_vector(x);
  if (is_shift()) return x.restricted([](std::int64_t i) { return i <= 0; });
  return StateVector::dense(p_m_ * x.coords());
}

StateVector GHOperator::project_N(const StateVector& x) const {
  check_vector(x);
  if (is_shift()) return x.restricted([](std::int64_t i) { return i > 0; });
  return StateVector::dense(p_n_ * x.coords());
}

// ---------------------------------------------------------------------------
// Power norms

std::vector<double> GHOperator::stable_power_norms(int kmax, double scale) const {
  std::vector<double> out(static_cast<std::size_t>(kmax) + 1, 0.0);
  if (m_trivial_) return out;
  if (!is_shift()) {
    const Eigen::MatrixXd step = t_ / scale;
    Eigen::MatrixXd a = p_m_;
    out[0] = operator_norm(a, norm_);
    for (int k = 1; k <= kmax; ++k) {
      a = step * a;
      out[static_cast<std::size_t>(k)] = operator_norm(a, norm_);
    }
    return out;
  }
  // (T^k y)_m = w_{m+1}...w_{m+k} y_{m+k}: on M the norm is the sup over
  // j <= 0 of |w_{j-k+1}...w_j|. Windows ending below the core all agree.
  const std::int64_t j_lo = std::min<std::int64_t>(0, weights_.core_lo - 1);
  std::vector<double> prod(static_cast<std::size_t>(-j_lo + 1), 1.0);
  out[0] = 1.0;
  for (int k = 1; k <= kmax; ++k) {
    double best = 0.0;
    for (std::int64_t j = j_lo; j <= 0; ++j) {
      double& p = prod[static_cast<std::size_t>(j - j_lo)];
      p *= std::abs(weights_.weight(j - k + 1)) / scale;
      best = std::max(best, p);
    }
    out[static_cast<std::size_t>(k)] = best;
  }
  return out;
}

std::vector<double> GHOperator::unstable_power_norms(int kmax, double scale) const {
  std::vector<double> out(static_cast<std::size_t>(kmax) + 1, 0.0);
  if (n_trivial_) return out;
  if (!is_shift()) {
    const Eigen::MatrixXd step = t_inv_ / scale;
    Eigen::MatrixXd a = p_n_;
    out[0] = operator_norm(a, norm_);
    for (int k = 1; k <= kmax; ++k) {
      a = step * a;
      out[static_cast<std::size_t>(k)] = operator_norm(a, norm_);
    }
    return out;
  }
  // (T^-k z)_m = z_{m-k} / (w_{m-k+1}...w_m): on N the norm is the sup over
  // j >= 1 of 1/|w_{j+1}...w_{j+k}|. Windows starting above the core all agree.
  const std::int64_t j_hi = std::max<std::int64_t>(1, weights_.core_hi());
  std::vector<double> prod(static_cast<std::size_t>(j_hi), 1.0);
  out[0] = 1.0;
  for (int k = 1; k <= kmax; ++k) {
    double best = 0.0;
    for (std::int64_t j = 1; j <= j_hi; ++j) {
      double& p = prod[static_cast<std::size_t>(j - 1)];
      p /= std::abs(weights_.weight(j + k)) * scale;
      best = std::max(best, p);
    }
    out[static_cast<std::size_t>(k)] = best;
  }
  return out;
}

namespace {

// Sum of log|w_i| for i in [s, e].
double log_window_sum(const WeightSpec& w, std::int64_t s, std::int64_t e) {
  if (e < s) return 0.0;
  double total = 0.0;
  const std::int64_t lo = w.core_lo;
  const std::int64_t hi = w.core_hi();
  if (s < lo) total += static_cast<double>(std::min(e, lo - 1) - s + 1) * std::log(std::abs(w.left_tail));
  if (e > hi) total += static_cast<double>(e - std::max(s, hi + 1) + 1) * std::log(std::abs(w.right_tail));
  for (std::int64_t i = std::max(s, lo); i <= std::min(e, hi); ++i) {
    total += std::log(std::abs(w.weight(i)));
  }
  return total;
}

}  // namespace

std::vector<double> GHOperator::power_norms(int kmax) const {
  std::vector<double> out(static_cast<std::size_t>(kmax) + 1, 1.0);
  if (!is_shift()) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(t_.rows(), t_.cols());
    for (int k = 1; k <= kmax; ++k) {
      a = t_ * a;
      out[static_cast<std::size_t>(k)] = operator_norm(a, norm_);
    }
    return out;
  }
  // ||B_w^k|| is the sup of |w_s ... w_{s+k-1}| over all windows.
  for (int k = 1; k <= kmax; ++k) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::int64_t s = weights_.core_lo - k; s <= weights_.core_hi() + 1; ++s) {
      best = std::max(best, log_window_sum(weights_, s, s + k - 1));
    }
    out[static_cast<std::size_t>(k)] = std::exp(best);
  }
  return out;
}

std::vector<double> GHOperator::inverse_power_norms(int kmax) const {
  std::vector<double> out(static_cast<std::size_t>(kmax) + 1, 1.0);
  if (!is_shift()) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(t_.rows(), t_.cols());
    for (int k = 1; k <= kmax; ++k) {
      a = t_inv_ * a;
      out[static_cast<std::size_t>(k)] = operator_norm(a, norm_);
    }
    return out;
  }
  for (int k = 1; k <= kmax; ++k) {
    double worst = std::numeric_limits<double>::infinity();
    for (std::int64_t s = weights_.core_lo - k; s <= weights_.core_hi() + 1; ++s) {
      worst = std::min(worst, log_window_sum(weights_, s, s + k - 1));
    }
    out[static_cast<std::size_t>(k)] = std::exp(-worst);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Constants

Constants estimate_constants(const GHOperator& op, std::optional<double> t, int power_cap) {
  const double rho_max = std::max(op.spectral_radius_M(), op.spectral_radius_Ninv());
  double tt = t.value_or((rho_max + 1.0) / 2.0);
  if (!(tt > 0.0 && tt < 1.0)) {
    throw PreconditionError("decay rate t must lie in (0, 1), got " + std::to_string(tt));
  }
  // t equal to a spectral radius is allowed; the power scan decides.
  if (t && (op.spectral_radius_M() > tt || op.spectral_radius_Ninv() > tt)) {
    std::ostringstream msg;
    msg << "decay rate t = " << tt << " is below the spectral radii rho(T|_M) = "
        << op.spectral_radius_M() << " and rho(T^-1|_N) = " << op.spectral_radius_Ninv();
    throw PreconditionError(msg.str());
  }

  Constants out;
  out.t = tt;
  if (op.is_shift()) {
    out.d = 1.0;
  } else {
    out.d = std::max(operator_norm(op.projection_M(), op.norm_kind()),
                     operator_norm(op.projection_N(), op.norm_kind()));
  }

  // Scan growing batches of powers for the first n at which both scaled
  // norms are <= 1; submultiplicativity certifies every later power.
  int batch = 64;
  while (true) {
    const int kmax = std::min(batch, power_cap);
    const auto sm = op.stable_power_norms(kmax, tt);
    const auto sn = op.unstable_power_norms(kmax, tt);
    double c = 1.0;
    for (int n = 1; n <= kmax; ++n) {
      const auto i = static_cast<std::size_t>(n);
      c = std::max({c, sm[i], sn[i]});
      if (sm[i] <= 1.0 && sn[i] <= 1.0) {
        out.c = c;
        out.n_max = n;
        return out;
      }
    }
    if (kmax >= power_cap) break;
    batch *= 2;
  }
  std::ostringstream msg;
  msg << "constants not certifiable at this t (t = " << tt << "): scaled powers stay above 1 up to n = "
      << power_cap;
  throw CapExceededError(msg.str());
}

double admissible_eps(const Constants& k, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw PreconditionError("gamma must lie in (0, 1), got " + std::to_string(gamma));
  }
  return gamma * (1.0 - k.t) / (k.c * k.d * (1.0 + k.t));
}

double admissible_eps(const GHOperator& op, double gamma) {
  return admissible_eps(op.constants(), gamma);
}

// ---------------------------------------------------------------------------
// Adapted norm

AdaptedNorm::AdaptedNorm(const GHOperator& op, double t, int power_cap)
    : op_(op.with_t(t, power_cap)), t_(t) {
  n_max_ = op_.constants().n_max;
  upper_ = op_.constants().c * op_.constants().d;
}

double AdaptedNorm::operator()(const StateVector& x) const {
  double best = 0.0;
  StateVector y = op_.project_M(x);
  StateVector z = op_.project_N(x);
  double scale = 1.0;
  for (int n = 0; n <= n_max_; ++n) {
    best = std::max({best, op_.norm(y) / scale, op_.norm(z) / scale});
    if (n == n_max_) break;
    y = op_.apply(y);
    z = op_.apply_inverse(z);
    scale *= t_;
  }
  return best;
}

}  // namespace ghlin
