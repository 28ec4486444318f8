#include "ghlin/sampling.hpp"

#include "ghlin/errors.hpp"

namespace ghlin {

namespace {

StateVector random_direction(const SampleDomain& domain, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  if (domain.dense) {
    if (domain.dimension == 0) throw PreconditionError("sample domain has dimension 0");
    Eigen::VectorXd v(static_cast<Eigen::Index>(domain.dimension));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = coord(rng);
    return StateVector::dense(std::move(v));
  }
  if (domain.window.size() <= 0) throw PreconditionError("sample window is empty");
  std::vector<SparseEntry> e;
  e.reserve(static_cast<std::size_t>(domain.window.size()));
  for (std::int64_t i = domain.window.lo; i <= domain.window.hi; ++i) e.push_back({i, coord(rng)});
  return StateVector::sparse(std::move(e));
}

StateVector unit_direction(const SampleDomain& domain, NormKind norm, std::mt19937_64& rng) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    StateVector d = random_direction(domain, rng);
    const double n = ghlin::norm(d, norm);
    if (n > 0.0) return (1.0 / n) * d;
  }
  throw Error("could not draw a nonzero random direction");
}

}  // namespace

StateVector random_in_ball(const SampleDomain& domain, double radius, NormKind norm, std::mt19937_64& rng) {
  StateVector d = unit_direction(domain, norm, rng);
  std::uniform_real_distribution<double> r(0.0, radius);
  return r(rng) * d;
}

StateVector random_at_distance(const StateVector& x, const SampleDomain& domain, double distance,
                               NormKind norm, std::mt19937_64& rng) {
  return axpy(distance, unit_direction(domain, norm, rng), x);
}

}  // namespace ghlin
