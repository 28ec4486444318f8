#include "ghlin/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include "ghlin/conjugacy.hpp"
#include "ghlin/linearizer.hpp"
#include "ghlin/sampling.hpp"

namespace ghlin::cli {

using nlohmann::json;

namespace {

const char* const kCommands[] = {"gh-check", "constants", "conjugate", "linearize", "holder-probe"};

std::string with_line(const std::string& message, int line) {
  return line > 0 ? "line " + std::to_string(line) + ": " + message : message;
}

// Line of the first occurrence of "key" in the source text, or 0.
int line_of_key(const std::string& source, const std::string& key) {
  const auto pos = source.find("\"" + key + "\"");
  if (pos == std::string::npos) return 0;
  return 1 + static_cast<int>(std::count(source.begin(), source.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

int line_of_offset(const std::string& source, std::size_t offset) {
  offset = std::min(offset, source.size());
  return 1 + static_cast<int>(std::count(source.begin(), source.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

// Source text of the config being parsed; lets descriptor errors point at a line.
thread_local const std::string* current_source = nullptr;

[[noreturn]] void fail(const std::string& key, const std::string& message) {
  throw ConfigError(message, current_source ? line_of_key(*current_source, key) : 0);
}

const json& require(const json& obj, const std::string& key) {
  if (!obj.is_object() || !obj.contains(key)) fail(key, "missing required field \"" + key + "\"");
  return obj.at(key);
}

double number(const json& obj, const std::string& key) {
  const json& v = require(obj, key);
  if (!v.is_number()) fail(key, "field \"" + key + "\" must be a number");
  return v.get<double>();
}

double number_or(const json& obj, const std::string& key, double fallback) {
  return obj.is_object() && obj.contains(key) ? number(obj, key) : fallback;
}

std::string text(const json& obj, const std::string& key) {
  const json& v = require(obj, key);
  if (!v.is_string()) fail(key, "field \"" + key + "\" must be a string");
  return v.get<std::string>();
}

std::int64_t parse_index(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(key, "index \"" + s + "\" is not an integer");
  }
}

IndexWindow parse_window(const json& obj, const std::string& key) {
  const json& w = require(obj, key);
  if (!w.is_array() || w.size() != 2 || !w[0].is_number_integer() || !w[1].is_number_integer()) {
    fail(key, "field \"" + key + "\" must be [lo, hi] with integer bounds");
  }
  IndexWindow out{w[0].get<std::int64_t>(), w[1].get<std::int64_t>()};
  if (out.hi < out.lo) fail(key, "window needs lo <= hi");
  return out;
}

IndexWindow default_window(const json& obj, const GHOperator& op) {
  if (obj.contains("window")) return parse_window(obj, "window");
  if (op.is_shift()) fail("window", "sparse perturbations need a \"window\"");
  return {0, static_cast<std::int64_t>(op.dimension()) - 1};
}

WeightSpec parse_weights(const json& desc) {
  WeightSpec w;
  w.left_tail = number(desc, "left_tail");
  w.right_tail = number(desc, "right_tail");
  if (desc.contains("core")) {
    const json& core = desc.at("core");
    if (!core.is_object()) fail("core", "field \"core\" must map indices to weights");
    std::map<std::int64_t, double> entries;
    for (const auto& [k, v] : core.items()) {
      if (!v.is_number()) fail("core", "core weight at index " + k + " must be a number");
      entries[parse_index("core", k)] = v.get<double>();
    }
    if (!entries.empty()) {
      w.core_lo = entries.begin()->first;
      std::int64_t expect = w.core_lo;
      for (const auto& [idx, val] : entries) {
        if (idx != expect) fail("core", "core indices must be contiguous");
        w.core.push_back(val);
        ++expect;
      }
    }
  }
  try {
    w.validate();
  } catch (const PreconditionError& e) {
    fail("core", e.what());
  }
  return w;
}

json constants_json(const GHOperator& op) {
  const Constants& k = op.constants();
  const RestrictionNorms& n = op.norms();
  return json{{"c", k.c},
              {"t", k.t},
              {"d", k.d},
              {"n_max", k.n_max},
              {"psi_inverse_norm", psi_inverse_norm_bound(k)},
              {"norm_T", n.T},
              {"norm_T_inverse", n.Tinv},
              {"norm_T_on_M", n.T_on_M},
              {"norm_T_inverse_on_N", n.Tinv_on_N},
              {"spectral_radius_M", op.spectral_radius_M()},
              {"spectral_radius_N_inverse", op.spectral_radius_Ninv()},
              {"adapted_norm_equivalence",
               {{"lower", 0.5},
                {"upper", AdaptedNorm(op, k.t).upper_equivalence()},
                {"note", "sup over powers n <= n_max; not a closed-form constant"}}}};
}

json report_json(const VerificationReport& r) {
  return json{{"max_residual", r.max_residual},
              {"max_certified_bound", r.max_certified_bound},
              {"max_y_membership_residual", r.max_y_membership},
              {"within_bounds", r.within_bounds},
              {"points", r.per_point.size()}};
}

SampleDomain sample_domain(const RunConfig& config, const GHOperator& op) {
  if (!op.is_shift()) return SampleDomain::dense_space(op.dimension());
  IndexWindow w{0, 0};
  if (config.perturbation && config.perturbation->contains("window")) {
    w = parse_window(*config.perturbation, "window");
  } else if (config.map && config.map->contains("nonlinearity") && config.map->at("nonlinearity").contains("window")) {
    w = parse_window(config.map->at("nonlinearity"), "window");
  } else if (config.perturbation && config.perturbation->contains("value")) {
    StateVector b = parse_vector(config.perturbation->at("value"), op);
    if (!b.entries().empty()) w = {b.entries().front().index, b.entries().back().index};
  }
  return SampleDomain::sparse_window({w.lo - 10, w.hi + 10});
}

std::vector<StateVector> draw_samples(const RunConfig& config, const GHOperator& op, double radius,
                                      const StateVector* center, std::mt19937_64& rng) {
  const SampleDomain domain = sample_domain(config, op);
  std::vector<StateVector> out;
  out.reserve(static_cast<std::size_t>(config.samples));
  for (int i = 0; i < config.samples; ++i) {
    StateVector x = random_in_ball(domain, radius, op.norm_kind(), rng);
    out.push_back(center ? *center + x : std::move(x));
  }
  return out;
}

struct CsvRow {
  double residual;
  double bound;
  double y_membership;
};

void write_csv(const std::string& path, const std::vector<CsvRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "point_id,residual,certified_bound,y_membership_residual\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << i << ',' << rows[i].residual << ',' << rows[i].bound << ',' << rows[i].y_membership << '\n';
  }
}

void append_rows(std::vector<CsvRow>& rows, const VerificationReport& r) {
  for (const auto& p : r.per_point) rows.push_back({p.residual, p.certified_bound, p.y_membership});
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

void write_report(const RunConfig& config, json report) {
  report["command"] = config.command;
  report["timestamp"] = utc_timestamp();
  const std::string path = config.output + ".report.json";
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << report.dump(2) << '\n';
}

SeriesPolicy policy_of(const RunConfig& config) {
  SeriesPolicy p;
  p.tol = config.tol;
  return p;
}

Perturbation perturbation_of(const RunConfig& config, const GHOperator& op) {
  return config.perturbation ? parse_perturbation(*config.perturbation, op) : zero_perturbation();
}

int run_gh_check(const RunConfig& config, std::ostream& log) {
  const json& desc = config.operator_desc;
  json report;
  bool holds = false;
  if (text(desc, "kind") == "shift") {
    const ShiftCriterion c = check_shift_criterion(parse_weights(desc));
    holds = c.holds;
    report = {{"holds", c.holds}, {"left_margin", c.left_margin}, {"right_margin", c.right_margin}};
  } else {
    try {
      const GHOperator op = parse_operator(desc);
      holds = true;
      report = {{"holds", true},
                {"spectral_radius_M", op.spectral_radius_M()},
                {"spectral_radius_N_inverse", op.spectral_radius_Ninv()}};
    } catch (const ConfigError&) {
      throw;
    } catch (const PreconditionError& e) {
      report = {{"holds", false}, {"reason", e.what()}};
    }
  }
  write_report(config, report);
  log << "generalized hyperbolicity criterion " << (holds ? "holds" : "fails") << '\n';
  return holds ? kOk : kResidualExceeded;
}

int run_constants(const RunConfig& config, std::ostream& log) {
  const GHOperator op = parse_operator(config.operator_desc);
  json report = constants_json(op);
  report["gamma"] = config.gamma;
  report["eps"] = admissible_eps(op, config.gamma);
  write_report(config, report);
  log << "c = " << op.constants().c << ", t = " << op.constants().t << ", d = " << op.constants().d
      << ", eps = " << admissible_eps(op, config.gamma) << '\n';
  return kOk;
}

int run_conjugate(const RunConfig& config, std::ostream& log) {
  const GHOperator op = parse_operator(config.operator_desc);
  const Perturbation beta = perturbation_of(config, op);
  const SeriesPolicy policy = policy_of(config);
  const ConjugacyMap fwd = solve_h(op, beta, config.gamma, policy, config.picard_tol);
  const ConjugacyMap bwd = solve_h_prime(op, beta, policy);

  std::mt19937_64 rng(config.seed);
  const std::vector<StateVector> samples = draw_samples(config, op, 1.0, nullptr, rng);
  const VerificationReport forward = verify_conjugacy(fwd, samples);
  const VerificationReport backward = verify_conjugacy(bwd, samples);
  const InverseReport inverse = verify_inverse(fwd, bwd, samples);

  double max_h = 0.0;
  for (const auto& x : samples) {
    const MapEvaluation e = fwd.h(x);
    max_h = std::max(max_h, op.norm(e.value) - e.error_bound);
  }

  const bool ok = forward.within_bounds && backward.within_bounds && inverse.hprime_after_h.within_bounds &&
                  inverse.h_after_hprime.within_bounds;
  json report{{"constants", constants_json(op)},
              {"gamma", config.gamma},
              {"eps", admissible_eps(op, config.gamma)},
              {"perturbation", {{"description", beta.description()},
                                {"sup_bound", beta.sup_bound()},
                                {"lip_bound", beta.lip_bound()},
                                {"certified", beta.certified()}}},
              {"series_terms", fwd.series_terms()},
              {"picard_depth", fwd.picard_depth()},
              {"contraction_factor", fwd.contraction_factor()},
              {"picard_error", fwd.picard_error()},
              {"h_sup_bound", fwd.sup_bound()},
              {"max_h_norm_less_error", max_h},
              {"seed", config.seed},
              {"samples", config.samples},
              {"checks",
               {{"forward_conjugacy", report_json(forward)},
                {"backward_conjugacy", report_json(backward)},
                {"hprime_after_h", report_json(inverse.hprime_after_h)},
                {"h_after_hprime", report_json(inverse.h_after_hprime)}}},
              {"csv_blocks", {"forward_conjugacy", "backward_conjugacy", "hprime_after_h", "h_after_hprime"}},
              {"all_within_bounds", ok}};
  write_report(config, report);

  std::vector<CsvRow> rows;
  append_rows(rows, forward);
  append_rows(rows, backward);
  append_rows(rows, inverse.hprime_after_h);
  append_rows(rows, inverse.h_after_hprime);
  write_csv(config.output + ".samples.csv", rows);

  log << "conjugacy residuals " << (ok ? "within" : "EXCEED") << " certified bounds; max residuals "
      << forward.max_residual << ", " << backward.max_residual << ", " << inverse.hprime_after_h.max_residual
      << ", " << inverse.h_after_hprime.max_residual << '\n';
  return ok ? kOk : kResidualExceeded;
}

int run_linearize(const RunConfig& config, std::ostream& log) {
  const GHOperator op = parse_operator(config.operator_desc);
  if (!config.map) fail("map", "linearize needs a \"map\" with fixed_point and nonlinearity");
  const json& map = *config.map;
  const StateVector p = parse_vector(require(map, "fixed_point"), op);
  const json& nl = require(map, "nonlinearity");
  const std::string kind = text(nl, "kind");
  if (kind != "quadratic" && kind != "cubic") fail("kind", "nonlinearity kind must be quadratic or cubic");
  const double a = number(nl, "coefficient");
  const IndexWindow window = default_window(nl, op);
  const int power = kind == "quadratic" ? 2 : 3;

  auto alpha = [a, power, window, op](const StateVector& y) {
    StateVector masked = y.restricted([window](std::int64_t i) { return i >= window.lo && i <= window.hi; });
    if (masked.is_dense()) {
      Eigen::VectorXd c = masked.coords();
      for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = a * std::pow(c[i], power);
      return StateVector::dense(std::move(c));
    }
    std::vector<SparseEntry> e;
    for (const auto& s : masked.entries()) e.push_back({s.index, a * std::pow(s.value, power)});
    return StateVector::sparse(std::move(e));
  };

  LinearizationProblem problem{
      [p, op, alpha](const StateVector& x) {
        const StateVector y = x - p;
        return p + op.apply(y) + alpha(y);
      },
      p,
      op,
      config.gamma,
      config.cutoff_r,
      config.theta,
      [a, power](double radius) {
        return power == 2 ? 2.0 * std::abs(a) * radius : 3.0 * std::abs(a) * radius * radius;
      },
      true};
  const LinearizationResult result = linearize(problem, policy_of(config), config.picard_tol);

  std::mt19937_64 rng(config.seed);
  const std::vector<StateVector> samples = draw_samples(config, op, result.U_radius, &p, rng);
  std::vector<CsvRow> rows(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const LinearizationResidual r = linearization_residual(result, problem, samples[i]);
    rows[i] = {r.residual, r.certified_bound, y_membership_residual(op, result.backward.h(samples[i] - p).value)};
  }
  bool ok = true;
  double max_res = 0.0, max_bound = 0.0, sum = 0.0;
  for (const auto& r : rows) {
    ok = ok && r.residual <= r.bound;
    max_res = std::max(max_res, r.residual);
    max_bound = std::max(max_bound, r.bound);
    sum += r.residual;
  }
  json report{{"u_radius", result.U_radius},
              {"theta", result.cert.theta},
              {"C", result.cert.C},
              {"domain_diameter", result.cert.domain_diameter},
              {"eps", result.eps},
              {"gamma", result.gamma},
              {"alpha_lip", result.alpha_lip},
              {"lip_certified", result.certified},
              {"seed", config.seed},
              {"residual_stats",
               {{"count", rows.size()},
                {"max_residual", max_res},
                {"mean_residual", rows.empty() ? 0.0 : sum / static_cast<double>(rows.size())},
                {"max_certified_bound", max_bound},
                {"within_bounds", ok}}}};
  write_report(config, report);
  write_csv(config.output + ".samples.csv", rows);
  log << "linearization on radius " << result.U_radius << ": residuals " << (ok ? "within" : "EXCEED")
      << " certified bounds\n";
  return ok ? kOk : kResidualExceeded;
}

int run_holder_probe(const RunConfig& config, std::ostream& log) {
  const GHOperator op = parse_operator(config.operator_desc);
  const Perturbation beta = perturbation_of(config, op);
  const ConjugacyMap bwd = solve_h_prime(op, beta, policy_of(config));
  const double theta = config.theta ? *config.theta : theta_bound(op) / 2.0;
  const double eps = std::max(beta.sup_bound(), beta.lip_bound());
  const HolderCertificate cert{theta, holder_constant(op, theta, eps), 0.99};

  std::mt19937_64 rng(config.seed);
  const SampleDomain domain = sample_domain(config, op);
  std::uniform_real_distribution<double> dist(0.0, cert.domain_diameter);
  std::vector<std::pair<StateVector, StateVector>> pairs;
  for (int i = 0; i < config.samples; ++i) {
    StateVector x = random_in_ball(domain, 1.0, op.norm_kind(), rng);
    StateVector y = random_at_distance(x, domain, dist(rng), op.norm_kind(), rng);
    pairs.emplace_back(std::move(x), std::move(y));
  }
  const HolderReport r = empirical_holder(bwd, cert, pairs);

  std::vector<CsvRow> rows;
  for (const auto& [x, y] : pairs) {
    const double d = op.norm(x - y);
    if (d == 0.0 || d > cert.domain_diameter) continue;
    const MapEvaluation hx = bwd.h(x);
    const MapEvaluation hy = bwd.h(y);
    const double scale = std::pow(d, theta);
    rows.push_back({op.norm(hx.value - hy.value) / scale, cert.C + (hx.error_bound + hy.error_bound) / scale,
                    y_membership_residual(op, hx.value)});
  }
  json report{{"theta", theta},
              {"theta_bound", theta_bound(op)},
              {"C", cert.C},
              {"eps", eps},
              {"domain_diameter", cert.domain_diameter},
              {"max_ratio", r.max_ratio},
              {"max_inflation", r.max_inflation},
              {"pairs_used", r.pairs_used},
              {"within_bound", r.within_bound},
              {"seed", config.seed}};
  write_report(config, report);
  write_csv(config.output + ".samples.csv", rows);
  log << "max Holder ratio " << r.max_ratio << " against C = " << cert.C << '\n';
  return r.within_bound ? kOk : kResidualExceeded;
}

}  // namespace

ConfigError::ConfigError(const std::string& message, int line)
    : PreconditionError(with_line(message, line)), line_(line) {}

NormKind parse_norm(const json& desc) {
  if (desc.is_string()) {
    const auto s = desc.get<std::string>();
    if (s == "sup" || s == "inf") return NormKind::sup();
    if (s == "l1") return NormKind::lp(1.0);
    if (s == "l2") return NormKind::lp(2.0);
    fail("norm", "unknown norm \"" + s + "\"");
  }
  double p = 0.0;
  if (desc.is_number()) {
    p = desc.get<double>();
  } else if (desc.is_object() && desc.contains("p") && desc.at("p").is_number()) {
    p = desc.at("p").get<double>();
  } else {
    fail("norm", "norm must be \"sup\", \"l1\", \"l2\" or {\"p\": value}");
  }
  try {
    return NormKind::lp(p);
  } catch (const PreconditionError& e) {
    fail("norm", e.what());
  }
}

GHOperator parse_operator(const json& desc) {
  if (!desc.is_object()) fail("operator", "operator descriptor must be an object");
  const NormKind norm = desc.contains("norm") ? parse_norm(desc.at("norm")) : NormKind::sup();
  std::optional<double> t;
  if (desc.contains("t")) t = number(desc, "t");
  const std::string kind = text(desc, "kind");
  if (kind == "shift") return GHOperator::make_shift(parse_weights(desc), norm, t);
  if (kind == "matrix") {
    const json& rows = require(desc, "rows");
    if (!rows.is_array() || rows.empty()) fail("rows", "\"rows\" must be a non-empty array of rows");
    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const json& row = rows[static_cast<std::size_t>(i)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) fail("rows", "matrix must be square");
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!row[static_cast<std::size_t>(j)].is_number()) fail("rows", "matrix entries must be numbers");
        m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
      }
    }
    return GHOperator::make_matrix(m, norm, t);
  }
  fail("kind", "operator kind must be \"shift\" or \"matrix\"");
}

StateVector parse_vector(const json& desc, const GHOperator& op) {
  if (op.is_shift()) {
    if (!desc.is_object()) fail("value", "sparse vectors are objects mapping indices to values");
    std::map<std::int64_t, double> entries;
    for (const auto& [k, v] : desc.items()) {
      if (!v.is_number()) fail(k, "vector entries must be numbers");
      entries[parse_index(k, k)] = v.get<double>();
    }
    return StateVector::sparse(entries);
  }
  if (!desc.is_array() || desc.size() != op.dimension()) {
    fail("value", "dense vectors are arrays of length " + std::to_string(op.dimension()));
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(desc.size()));
  for (std::size_t i = 0; i < desc.size(); ++i) {
    if (!desc[i].is_number()) fail("value", "vector entries must be numbers");
    v[static_cast<Eigen::Index>(i)] = desc[i].get<double>();
  }
  return StateVector::dense(std::move(v));
}

json vector_to_json(const StateVector& v) {
  if (v.is_dense()) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.coords().size(); ++i) out.push_back(v.coords()[i]);
    return out;
  }
  json out = json::object();
  for (const auto& e : v.entries()) out[std::to_string(e.index)] = e.value;
  return out;
}

Perturbation parse_perturbation(const json& desc, const GHOperator& op) {
  if (!desc.is_object()) fail("perturbation", "perturbation descriptor must be an object");
  const std::string kind = text(desc, "kind");
  if (kind == "zero") return zero_perturbation();
  if (kind == "constant") return constant_perturbation(parse_vector(require(desc, "value"), op), op.norm_kind());
  if (kind == "sine") {
    return sine_perturbation(number(desc, "amplitude"), number_or(desc, "frequency", 1.0), default_window(desc, op),
                             op.norm_kind());
  }
  if (kind == "saturating") {
    return saturating_perturbation(number(desc, "amplitude"), number_or(desc, "slope", 1.0),
                                   default_window(desc, op), op.norm_kind());
  }
  fail("kind", "perturbation kind must be zero, constant, sine or saturating");
}

RunConfig parse_config(const std::string& source, const std::string& command) {
  RunConfig c;
  c.source = source;
  c.command = command;
  current_source = &c.source;
  struct Reset {
    ~Reset() { current_source = nullptr; }
  } reset;

  if (std::find(std::begin(kCommands), std::end(kCommands), command) == std::end(kCommands)) {
    throw ConfigError("unknown command \"" + command + "\"", 0);
  }
  json j;
  try {
    j = json::parse(source);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what(), line_of_offset(source, e.byte));
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object", 1);

  c.operator_desc = require(j, "operator");
  if (j.contains("perturbation")) c.perturbation = j.at("perturbation");
  if (j.contains("map")) c.map = j.at("map");
  c.gamma = number_or(j, "gamma", c.gamma);
  c.tol = number_or(j, "tol", c.tol);
  c.picard_tol = number_or(j, "picard_tol", c.picard_tol);
  c.cutoff_r = number_or(j, "cutoff_r", c.cutoff_r);
  if (j.contains("theta")) c.theta = number(j, "theta");
  if (j.contains("samples")) {
    if (!j.at("samples").is_number_integer() || j.at("samples").get<long long>() < 0) {
      fail("samples", "\"samples\" must be a non-negative integer");
    }
    c.samples = j.at("samples").get<int>();
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_integer()) fail("seed", "\"seed\" must be an integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("output")) c.output = text(j, "output");

  if (!(c.gamma > 0.0 && c.gamma < 1.0)) fail("gamma", "gamma must lie in (0, 1)");
  if (!(c.tol > 0.0)) fail("tol", "tol must be positive");
  if (!(c.picard_tol > 0.0)) fail("picard_tol", "picard_tol must be positive");
  if (!(c.cutoff_r > 0.0)) fail("cutoff_r", "cutoff_r must be positive");
  if (c.theta && !(*c.theta > 0.0 && *c.theta <= 1.0)) fail("theta", "theta must lie in (0, 1]");
  if (command == "linearize" && !c.map) fail("map", "linearize needs a \"map\" section");
  return c;
}

int run(const RunConfig& config, std::ostream& log) {
  current_source = &config.source;
  struct Reset {
    ~Reset() { current_source = nullptr; }
  } reset;
  try {
    if (config.command == "gh-check") return run_gh_check(config, log);
    if (config.command == "constants") return run_constants(config, log);
    if (config.command == "conjugate") return run_conjugate(config, log);
    if (config.command == "linearize") return run_linearize(config, log);
    if (config.command == "holder-probe") return run_holder_probe(config, log);
    throw ConfigError("unknown command \"" + config.command + "\"", 0);
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return kPreconditionFailed;
  }
}

}  // namespace ghlin::cli
