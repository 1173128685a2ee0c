#include "qsm/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>

#include "qsm/algebra.hpp"
#include "qsm/dynamics.hpp"
#include "qsm/errors.hpp"
#include "qsm/filter.hpp"
#include "qsm/moments.hpp"
#include "qsm/scenario.hpp"

namespace qsm::cli {
namespace {

namespace fs = std::filesystem;

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::vector<std::string>& header)
      : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw Error(ErrorCode::kIo, "cannot write " + path.string());
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
    if (!out_) throw Error(ErrorCode::kIo, "write failed: " + path_.string());
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

// Keys are written in insertion order so the file layout follows the code.
class Summary {
 public:
  void set(const std::string& key, const std::string& value) {
    entries_.emplace_back(key, value);
  }
  void set(const std::string& key, double value) { set(key, format_double(value)); }
  void set_int(const std::string& key, long long value) {
    set(key, std::to_string(value));
  }
  void set_vector(const std::string& prefix, const RVector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i)
      set(prefix + "_" + std::to_string(i + 1), v(i));
  }
  void set_matrix(const std::string& prefix, const RMatrix& a) {
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j)
        set(prefix + "_" + std::to_string(i + 1) + "_" + std::to_string(j + 1),
            a(i, j));
  }

  void write(const fs::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
    for (const auto& [k, v] : entries_) out << k << '=' << v << '\n';
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

std::vector<std::string> indexed(const std::string& prefix, Eigen::Index n) {
  std::vector<std::string> out;
  for (Eigen::Index i = 0; i < n; ++i) out.push_back(prefix + "_" + std::to_string(i + 1));
  return out;
}

std::vector<std::string> indexed2(const std::string& prefix, Eigen::Index rows,
                                  Eigen::Index cols) {
  std::vector<std::string> out;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      out.push_back(prefix + "_" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
  return out;
}

template <typename Derived>
void append(std::vector<std::string>& cells, const Eigen::MatrixBase<Derived>& a) {
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) cells.push_back(format_double(a(i, j)));
}

void concat(std::vector<std::string>& a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
}

struct Context {
  Scenario scenario;
  fs::path out_dir;
  std::ostream& out;
};

SystemSpec system_of(const Scenario& s) {
  return make_system(s.sc, s.energy, s.coupling, s.offset);
}

int run_validate(Context& ctx) {
  const ValidationReport report = validate(ctx.scenario.sc);
  CsvWriter csv(ctx.out_dir / "validation.csv", {"check", "residual", "passed"});
  for (const CheckResult& c : report.checks)
    csv.row({c.check, format_double(c.residual), c.passed ? "1" : "0"});

  Summary summary;
  summary.set_int("n", ctx.scenario.sc.n());
  summary.set_int("violations", static_cast<long long>(report.violations().size()));
  for (const CheckResult& c : report.checks) summary.set("residual_" + c.check, c.residual);
  summary.set("gamma_squared", ctx.scenario.sc.gamma_squared());
  summary.write(ctx.out_dir / "summary.kv");

  if (!report.ok()) {
    std::string names;
    for (const CheckResult& c : report.violations()) names += (names.empty() ? "" : ",") + c.check;
    throw Error(ErrorCode::kInadmissibleConstants, "violated checks: " + names);
  }
  ctx.out << "validate: ok\n";
  return 0;
}

int run_simulate(Context& ctx) {
  const Scenario& s = ctx.scenario;
  const CoefficientSet coeffs = synthesize(system_of(s));
  const std::vector<double> grid = s.grid();
  const Eigen::Index n = coeffs.n();

  MomentState state0{s.t0, s.mu0, covariance_from_mean(s.sc, s.mu0)};
  const std::vector<MomentState> states = covariance_trajectory(
      coeffs, state0, grid, ode::StepPolicy::fixed(s.dt),
      closed_form_mean(coeffs, s.mu0, s.t0));

  std::vector<std::string> header{"t"};
  concat(header, indexed("mu", n));
  concat(header, indexed2("cov_re", n, n));
  concat(header, indexed2("cov_im", n, n));
  CsvWriter csv(ctx.out_dir / "trajectory.csv", header);

  double worst_excess = -std::numeric_limits<double>::infinity();
  const bool admissible = s.sc.gamma_squared() >= 0.0;
  for (const MomentState& st : states) {
    std::vector<std::string> row{format_double(st.t)};
    append(row, st.mu);
    append(row, st.cov.real());
    append(row, st.cov.imag());
    csv.row(row);
    if (admissible) worst_excess = std::max(worst_excess, admissible_ball_excess(s.sc, st.mu));
  }

  const auto hurwitz = linalg::is_hurwitz(coeffs.a);
  Summary summary;
  summary.set_int("n", n);
  summary.set_int("m", s.coupling.rows());
  summary.set_int("samples", static_cast<long long>(states.size()));
  summary.set_int("hurwitz", hurwitz.hurwitz ? 1 : 0);
  summary.set("spectral_abscissa", hurwitz.abscissa);
  if (admissible) summary.set("max_ball_excess", worst_excess);
  summary.set_vector("mu_final", states.back().mu);
  summary.set_int("warnings",
                  static_cast<long long>(admissibility_warnings(s.sc, state0).size()));
  summary.write(ctx.out_dir / "summary.kv");
  ctx.out << "simulate: " << states.size() << " samples\n";
  return 0;
}

int run_invariant(Context& ctx) {
  const Scenario& s = ctx.scenario;
  const CoefficientSet coeffs = synthesize(system_of(s));
  const InvariantState inv = invariant_state(coeffs);
  const Eigen::Index n = coeffs.n();

  std::vector<std::string> header{"index"};
  concat(header, indexed("u", n));
  concat(header, {"re", "im"});
  CsvWriter qcf_csv(ctx.out_dir / "qcf.csv", header);
  for (std::size_t i = 0; i < s.qcf_directions.size(); ++i) {
    const Complex phi = qcf(s.sc, inv.mu, s.qcf_directions[i]);
    std::vector<std::string> row{std::to_string(i + 1)};
    append(row, s.qcf_directions[i]);
    concat(row, {format_double(phi.real()), format_double(phi.imag())});
    qcf_csv.row(row);
  }

  header = {"omega"};
  concat(header, indexed2("re", n, n));
  concat(header, indexed2("im", n, n));
  CsvWriter spec_csv(ctx.out_dir / "spectral.csv", header);
  for (double w : s.omega) {
    const CMatrix density = spectral_density(coeffs, inv.gamma, w);
    std::vector<std::string> row{format_double(w)};
    append(row, density.real());
    append(row, density.imag());
    spec_csv.row(row);
  }

  Summary summary;
  summary.set_int("n", n);
  summary.set("spectral_abscissa", linalg::is_hurwitz(coeffs.a).abscissa);
  summary.set_vector("mu_inf", inv.mu);
  summary.set_matrix("gamma_re", inv.gamma.real());
  summary.set_matrix("gamma_im", inv.gamma.imag());
  summary.set("ale_residual", inv.ale_residual);
  summary.set("route_discrepancy", inv.route_discrepancy);
  if (!s.growth_terms.empty()) {
    summary.set("growth_rate", growth_rate(coeffs, inv.mu, s.growth_terms));
  }
  summary.write(ctx.out_dir / "summary.kv");
  ctx.out << "invariant: ok\n";
  return 0;
}

int run_moments(Context& ctx) {
  const Scenario& s = ctx.scenario;
  const CoefficientSet coeffs = synthesize(system_of(s));
  const MeanFunction mean = closed_form_mean(coeffs, s.mu0, s.t0);

  std::size_t width = 0;
  for (const auto& q : s.moment_queries) width = std::max(width, q.times.size());
  std::vector<std::string> header{"q"};
  concat(header, indexed("t", static_cast<Eigen::Index>(width)));
  concat(header, {"re", "im"});
  CsvWriter csv(ctx.out_dir / "moments.csv", header);
  for (const auto& q : s.moment_queries) {
    for (double t : q.times) {
      if (t < s.t0) throw Error(ErrorCode::kInvalidArgument, "moment query time before t0");
    }
    MomentQuery query;
    query.times = q.times;
    for (const RVector& u : q.directions) query.directions.push_back(u.cast<Complex>());
    const Complex value = multi_moment(coeffs, mean, query);
    std::vector<std::string> row{std::to_string(q.times.size())};
    for (std::size_t i = 0; i < width; ++i)
      row.push_back(i < q.times.size() ? format_double(q.times[i]) : "");
    concat(row, {format_double(value.real()), format_double(value.imag())});
    csv.row(row);
  }

  Summary summary;
  summary.set_int("queries", static_cast<long long>(s.moment_queries.size()));
  summary.write(ctx.out_dir / "summary.kv");
  ctx.out << "moments: " << s.moment_queries.size() << " queries\n";
  return 0;
}

void write_filter_csv(const fs::path& path, const std::vector<double>& times,
                      const std::vector<RMatrix>& p, const std::vector<RMatrix>& k) {
  const Eigen::Index n = p.front().rows();
  const Eigen::Index r = k.front().cols();
  std::vector<std::string> header{"t", "trace_P"};
  concat(header, indexed2("P", n, n));
  concat(header, indexed2("K", n, r));
  CsvWriter csv(path, header);
  for (std::size_t i = 0; i < times.size(); ++i) {
    std::vector<std::string> row{format_double(times[i]), format_double(p[i].trace())};
    append(row, p[i]);
    append(row, k[i]);
    csv.row(row);
  }
}

double min_gap(const std::vector<RMatrix>& upper, const std::vector<RMatrix>& lower) {
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < upper.size(); ++i)
    worst = std::min(worst, linalg::min_eigenvalue_symmetric(upper[i] - lower[i]));
  return worst;
}

int run_filter(Context& ctx, bool force_steady) {
  const Scenario& s = ctx.scenario;
  if (!s.measurement) {
    throw Error(ErrorCode::kConfig, "filter needs a measurement block (D, r, gain_mode)");
  }
  const SystemSpec system = system_of(s);
  const CoefficientSet coeffs = synthesize(system);
  const MeasurementSpec meas = build_measurement(system, s.measurement->d);
  const GainMode mode = force_steady ? GainMode::kSteady : s.measurement->mode;
  const std::vector<double> grid = s.grid();
  const MeanFunction mean = closed_form_mean(coeffs, s.mu0, s.t0);
  const RMatrix p0 = initial_error_covariance(s.sc, s.mu0);
  const ode::StepPolicy policy = ode::StepPolicy::fixed(s.dt);

  Summary summary;
  summary.set_int("n", coeffs.n());
  summary.set_int("r", meas.r());

  std::vector<double> times;
  std::vector<RMatrix> p;
  std::vector<RMatrix> gains;
  if (mode == GainMode::kOptimal) {
    summary.set("mode", "optimal");
    RiccatiTrajectory traj = riccati_trajectory(coeffs, meas, p0, mean, grid, policy);
    times = traj.times;
    p = traj.p;
    gains = traj.gain;
  } else {
    RMatrix k;
    if (mode == GainMode::kSteady) {
      summary.set("mode", "steady");
      const ObserverDesign design = steady_design(coeffs, meas);
      summary.set_vector("mu_inf", design.mu_inf);
      summary.set_matrix("P_inf", design.p);
      summary.set_matrix("K_inf", design.gain);
      summary.set("are_residual", design.are_residual);
      summary.set("method_discrepancy", design.method_discrepancy);
      k = design.gain;
    } else {
      summary.set("mode", "fixed");
      k = s.measurement->k;
    }
    ErrorCovTrajectory traj = error_cov_trajectory(
        coeffs, meas, [&k](double) { return k; }, p0, mean, grid, policy);
    times = traj.times;
    p = traj.p;
    gains.assign(times.size(), k);
  }
  write_filter_csv(ctx.out_dir / "filter.csv", times, p, gains);

  const ObserverOde observer = observer_ode_coefficients(coeffs, meas, gains.back());
  summary.set("closed_loop_abscissa", linalg::is_hurwitz(observer.drift).abscissa);
  summary.set("trace_P_final", p.back().trace());

  if (mode == GainMode::kOptimal && s.gain_comparisons > 0) {
    std::mt19937_64 rng(s.seed);
    std::normal_distribution<double> normal;
    CsvWriter csv(ctx.out_dir / "comparisons.csv", {"index", "epsilon", "min_gap_eigenvalue"});
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < s.gain_comparisons; ++i) {
      const double eps = i % 2 == 0 ? 0.1 : 1.0;
      RMatrix delta(coeffs.n(), meas.r());
      for (Eigen::Index a = 0; a < delta.rows(); ++a)
        for (Eigen::Index b = 0; b < delta.cols(); ++b) delta(a, b) = normal(rng);
      const RMatrix k = gains.back() + eps * delta;
      const ErrorCovTrajectory other = error_cov_trajectory(
          coeffs, meas, [&k](double) { return k; }, p0, mean, grid, policy);
      const double gap = min_gap(other.p, p);
      worst = std::min(worst, gap);
      csv.row({std::to_string(i + 1), format_double(eps), format_double(gap)});
    }
    summary.set("comparison_min_gap", worst);
  }
  summary.write(ctx.out_dir / "summary.kv");
  ctx.out << "filter: " << times.size() << " samples\n";
  return 0;
}

std::string one_line(std::string text) {
  for (char& c : text)
    if (c == '\n' || c == '\r') c = ' ';
  return text;
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

int run(const RunOptions& options, std::ostream& out, std::ostream& err) {
  try {
    Context ctx{load_scenario(options.config_path), {}, out};
    if (options.seed) ctx.scenario.seed = *options.seed;
    ctx.out_dir = options.out_dir ? *options.out_dir : ctx.scenario.output_dir;
    std::error_code ec;
    fs::create_directories(ctx.out_dir, ec);
    if (ec) throw Error(ErrorCode::kIo, "cannot create " + ctx.out_dir.string());

    if (options.command == "validate") return run_validate(ctx);
    if (options.command == "simulate") return run_simulate(ctx);
    if (options.command == "invariant") return run_invariant(ctx);
    if (options.command == "moments") return run_moments(ctx);
    if (options.command == "filter") return run_filter(ctx, options.steady);
    throw Error(ErrorCode::kInvalidArgument, "unknown command '" + options.command + "'");
  } catch (const Error& e) {
    err << "error code=" << error_code_name(e.code()) << " message=" << one_line(e.what())
        << '\n';
  } catch (const std::exception& e) {
    err << "error code=INTERNAL message=" << one_line(e.what()) << '\n';
  }
  return 1;
}

}  // namespace qsm::cli
