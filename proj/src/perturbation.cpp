#include "ghlin/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "ghlin/errors.hpp"
#include "ghlin/sampling.hpp"

namespace ghlin {

Perturbation::Perturbation(VectorMap eval, double sup_bound, double lip_bound,
                           Certification certification, std::size_t n_samples, std::string description)
    : eval_(std::move(eval)),
      sup_bound_(sup_bound),
      lip_bound_(lip_bound),
      certification_(certification),
      n_samples_(n_samples),
      description_(std::move(description)) {
  if (!eval_) throw PreconditionError("perturbation needs an evaluation function");
  if (!std::isfinite(sup_bound) || sup_bound < 0.0 || !std::isfinite(lip_bound) || lip_bound < 0.0) {
    throw PreconditionError("perturbation bounds must be finite and >= 0");
  }
}

Perturbation zero_perturbation() {
  return Perturbation([](const StateVector& x) { return StateVector::zero_like(x); }, 0.0, 0.0,
                      Certification::Analytic, 0, "zero");
}

Perturbation constant_perturbation(const StateVector& b, NormKind norm) {
  const double nb = ghlin::norm(b, norm);
  return Perturbation(
      [b](const StateVector& x) {
        require_compatible(b, x);
        return b;
      },
      nb, 0.0, Certification::Analytic, 0, "constant");
}

namespace {

// Size factor turning a per-coordinate bound into a bound in the ambient norm.
double window_factor(IndexWindow w, NormKind norm) {
  if (norm.is_sup()) return 1.0;
  return std::pow(static_cast<double>(w.size()), 1.0 / norm.p());
}

template <typename Scalar>
VectorMap coordinatewise(IndexWindow window, Scalar f) {
  return [window, f](const StateVector& x) {
    if (x.is_dense()) {
      const auto n = static_cast<std::int64_t>(x.dimension());
      if (window.lo < 0 || window.hi >= n) {
        throw PreconditionError("perturbation window exceeds the dense dimension");
      }
      Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
      for (std::int64_t i = window.lo; i <= window.hi; ++i) out[i] = f(x.coords()[i]);
      return StateVector::dense(std::move(out));
    }
    std::vector<SparseEntry> out;
    out.reserve(static_cast<std::size_t>(window.size()));
    auto e = x.entries();
    auto it = std::lower_bound(e.begin(), e.end(), window.lo,
                               [](const SparseEntry& s, std::int64_t idx) { return s.index < idx; });
    for (std::int64_t i = window.lo; i <= window.hi; ++i) {
      double xi = 0.0;
      if (it != e.end() && it->index == i) {
        xi = it->value;
        ++it;
      }
      const double v = f(xi);
      if (v != 0.0) out.push_back({i, v});
    }
    return StateVector::sparse(std::move(out));
  };
}

void check_window(IndexWindow w) {
  if (w.hi < w.lo) throw PreconditionError("perturbation window [lo, hi] needs lo <= hi");
}

}  // namespace

Perturbation sine_perturbation(double amplitude, double frequency, IndexWindow window, NormKind norm) {
  check_window(window);
  if (!std::isfinite(amplitude) || !std::isfinite(frequency)) {
    throw PreconditionError("sine perturbation parameters must be finite");
  }
  const double a = std::abs(amplitude);
  std::ostringstream d;
  d << "sine(a=" << amplitude << ", w=" << frequency << ", [" << window.lo << "," << window.hi << "])";
  return Perturbation(coordinatewise(window, [amplitude, frequency](double v) {
                        return amplitude * std::sin(frequency * v);
                      }),
                      a * window_factor(window, norm), a * std::abs(frequency), Certification::Analytic,
                      0, d.str());
}

Perturbation saturating_perturbation(double amplitude, double slope, IndexWindow window, NormKind norm) {
  check_window(window);
  if (!std::isfinite(amplitude) || !std::isfinite(slope)) {
    throw PreconditionError("saturating perturbation parameters must be finite");
  }
  const double a = std::abs(amplitude);
  std::ostringstream d;
  d << "saturating(a=" << amplitude << ", s=" << slope << ", [" << window.lo << "," << window.hi << "])";
  return Perturbation(coordinatewise(window, [amplitude, slope](double v) {
                        return amplitude * std::tanh(slope * v);
                      }),
                      a * window_factor(window, norm), a * std::abs(slope), Certification::Analytic, 0,
                      d.str());
}

double CutoffProfile::chi(double s) const {
  if (s <= r) return 1.0;
  if (s >= 2.0 * r) return 0.0;
  return 2.0 - s / r;
}

Perturbation cutoff(VectorMap alpha, double alpha_lip_on_ball, CutoffProfile profile, NormKind norm,
                    Certification certification) {
  if (!(profile.r > 0.0) || !std::isfinite(profile.r)) {
    throw PreconditionError("cutoff radius r must be positive and finite");
  }
  if (!(alpha_lip_on_ball >= 0.0) || !std::isfinite(alpha_lip_on_ball)) {
    throw PreconditionError("Lipschitz bound of alpha on the ball must be finite and >= 0");
  }
  const double lip = alpha_lip_on_ball;
  VectorMap eval = [alpha = std::move(alpha), profile, norm](const StateVector& x) {
    const double chi = profile.chi(ghlin::norm(x, norm));
    if (chi == 0.0) return StateVector::zero_like(x);
    StateVector v = alpha(x);
    if (chi != 1.0) v *= chi;
    return v;
  };
  std::ostringstream d;
  d << "cutoff(r=" << profile.r << ", L=" << lip << ")";
  return Perturbation(std::move(eval), 2.0 * profile.r * lip, 3.0 * lip, certification, 0, d.str());
}

double estimate_lipschitz_on_ball(const VectorMap& f, const StateVector& like, double radius, NormKind norm,
                                  std::optional<IndexWindow> window, std::size_t n_pairs,
                                  std::uint64_t seed) {
  SampleDomain domain = like.is_dense() ? SampleDomain::dense_space(like.dimension())
                                        : SampleDomain::sparse_window(window.value_or(IndexWindow{-5, 5}));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  double best = 0.0;
  for (std::size_t i = 0; i < n_pairs; ++i) {
    StateVector x = random_in_ball(domain, radius, norm, rng);
    // Short separations probe the local slope; some pairs span the ball.
    const double dist = (i % 4 == 0 ? frac(rng) : 1e-4 * frac(rng)) * radius;
    StateVector y = random_at_distance(x, domain, dist, norm, rng);
    const double ny = ghlin::norm(y, norm);
    if (ny > radius) y = (radius / ny) * y;
    const double dxy = ghlin::norm(x - y, norm);
    if (dxy == 0.0) continue;
    best = std::max(best, ghlin::norm(f(x) - f(y), norm) / dxy);
  }
  return best;
}

StateVector apply_S(const GHOperator& op, const Perturbation& beta, const StateVector& x) {
  return op.apply(x) + beta(x);
}

SInverseResult solve_S_inverse(const GHOperator& op, const Perturbation& beta, const StateVector& y,
                               double tol, int iteration_cap) {
  op.check_vector(y);
  if (!(tol > 0.0)) throw PreconditionError("S^-1 tolerance must be positive");
  const double lip = beta.lip_bound();
  const double q = lip * op.norms().Tinv;
  if (!(q < 1.0)) {
    std::ostringstream msg;
    msg << "contraction condition Lip(beta) * ||T^-1|| < 1 violated: " << lip << " * " << op.norms().Tinv
        << " = " << q;
    throw PreconditionError(msg.str());
  }
  constexpr double kRound = 8.0 * std::numeric_limits<double>::epsilon();

  SInverseResult out;
  StateVector x = op.apply_inverse(y);
  for (int it = 1; it <= iteration_cap; ++it) {
    StateVector next = op.apply_inverse(y - beta(x));
    const double delta = op.norm(next - x);
    out.increments.push_back(delta);
    const double err = q < 1.0 && q > 0.0 ? q / (1.0 - q) * delta : 0.0;
    const double floor = kRound * op.norm(next);
    const bool converged = (err <= tol && lip * delta <= tol) || delta <= floor;
    x = std::move(next);
    if (converged) {
      out.x = std::move(x);
      out.error_bound = q > 0.0 ? q / (1.0 - q) * delta : 0.0;
      out.residual_bound = lip * delta;
      out.iterations = it;
      return out;
    }
  }
  throw CapExceededError("S^-1 Picard iteration exceeded " + std::to_string(iteration_cap) + " iterations");
}

}  // namespace ghlin
