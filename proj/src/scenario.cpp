#include "qsm/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "qsm/errors.hpp"
#include "qsm/ode.hpp"

namespace qsm {
namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& message) {
  throw Error(ErrorCode::kConfig, message);
}

std::vector<double> number_list(const json& value, const std::string& key) {
  if (!value.is_array()) config_error("'" + key + "' must be a list of numbers");
  std::vector<double> out;
  out.reserve(value.size());
  for (const json& x : value) {
    if (!x.is_number()) config_error("'" + key + "' must contain only numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

RVector vector_of(const json& value, const std::string& key,
                  Eigen::Index expected) {
  const std::vector<double> xs = number_list(value, key);
  if (expected >= 0 && static_cast<Eigen::Index>(xs.size()) != expected) {
    config_error("'" + key + "' must have " + std::to_string(expected) +
                 " entries, got " + std::to_string(xs.size()));
  }
  return Eigen::Map<const RVector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

RMatrix matrix_of(const json& value, const std::string& key, Eigen::Index rows,
                  Eigen::Index cols) {
  const std::vector<double> xs = number_list(value, key);
  if (static_cast<Eigen::Index>(xs.size()) != rows * cols) {
    config_error("'" + key + "' must have " + std::to_string(rows) + "x" +
                 std::to_string(cols) + " = " + std::to_string(rows * cols) +
                 " entries, got " + std::to_string(xs.size()));
  }
  RMatrix out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      out(i, j) = xs[static_cast<std::size_t>(i * cols + j)];
  return out;
}

Eigen::Index positive_int(const json& obj, const std::string& key) {
  if (!obj.contains(key)) config_error("missing '" + key + "'");
  const json& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() <= 0) {
    config_error("'" + key + "' must be a positive integer");
  }
  return static_cast<Eigen::Index>(v.get<long long>());
}

double number_of(const json& obj, const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_number()) config_error("'" + key + "' must be a number");
  return obj.at(key).get<double>();
}

void reject_unknown(const json& obj, const std::set<std::string>& known,
                    const std::string& where) {
  for (const auto& item : obj.items()) {
    if (!known.count(item.key())) {
      config_error("unknown key '" + item.key() + "' in " + where);
    }
  }
}

StructureConstants constants_from(const json& obj) {
  if (!obj.is_object()) config_error("constants must be an object");
  reject_unknown(obj, {"n", "alpha", "alpha_im", "beta_re", "beta_im"},
                 "constants");
  const Eigen::Index n = positive_int(obj, "n");
  for (const char* key : {"alpha", "beta_re", "beta_im"}) {
    if (!obj.contains(key)) config_error(std::string("constants: missing '") + key + "'");
  }
  CMatrix alpha = matrix_of(obj.at("alpha"), "alpha", n, n).cast<Complex>();
  if (obj.contains("alpha_im")) {
    alpha += Complex(0.0, 1.0) *
             matrix_of(obj.at("alpha_im"), "alpha_im", n, n).cast<Complex>();
  }
  const std::vector<double> re = number_list(obj.at("beta_re"), "beta_re");
  const std::vector<double> im = number_list(obj.at("beta_im"), "beta_im");
  const auto cube = static_cast<std::size_t>(n * n * n);
  if (re.size() != cube || im.size() != cube) {
    config_error("beta_re and beta_im must each have n^3 = " +
                 std::to_string(cube) + " entries");
  }
  Array3<Complex> beta(n);
  for (std::size_t i = 0; i < cube; ++i) beta.data()[i] = Complex(re[i], im[i]);
  return StructureConstants(std::move(alpha), std::move(beta));
}

json constants_to(const StructureConstants& sc) {
  const Eigen::Index n = sc.n();
  json out;
  out["n"] = n;
  json alpha = json::array();
  json alpha_im = json::array();
  bool has_im = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      alpha.push_back(sc.alpha()(i, j).real());
      alpha_im.push_back(sc.alpha()(i, j).imag());
      has_im = has_im || sc.alpha()(i, j).imag() != 0.0;
    }
  }
  out["alpha"] = alpha;
  if (has_im) out["alpha_im"] = alpha_im;
  json re = json::array();
  json im = json::array();
  for (const Complex& c : sc.beta().data()) {
    re.push_back(c.real());
    im.push_back(c.imag());
  }
  out["beta_re"] = re;
  out["beta_im"] = im;
  return out;
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end(), nullptr, true, true);
  } catch (const json::exception& e) {
    config_error(std::string("malformed config: ") + e.what());
  }
}

GainMode gain_mode_of(const std::string& s) {
  if (s == "optimal") return GainMode::kOptimal;
  if (s == "fixed") return GainMode::kFixed;
  if (s == "steady") return GainMode::kSteady;
  config_error("gain_mode must be optimal, fixed or steady (got '" + s + "')");
}

}  // namespace

std::vector<double> Scenario::grid() const {
  if (!(horizon > 0.0) || !(dt > 0.0)) {
    throw Error(ErrorCode::kConfig, "horizon and dt must be positive");
  }
  const double steps = std::round(horizon / dt);
  if (std::abs(steps * dt - horizon) > 1e-9 * horizon) {
    throw Error(ErrorCode::kConfig, "horizon must be a multiple of dt");
  }
  return ode::uniform_grid(t0, t0 + horizon, static_cast<std::size_t>(steps) + 1);
}

Scenario parse_scenario(std::string_view text) {
  const json root = parse_json(text);
  if (!root.is_object()) config_error("config must be a JSON object");
  reject_unknown(root,
                 {"preset", "constants", "m", "E", "M", "N", "mu0", "t0",
                  "horizon", "dt", "r", "D", "gain_mode", "K", "omega",
                  "qcf_directions", "moment_queries", "growth_terms", "gain_comparisons",
                  "seed", "output_dir"},
                 "scenario");

  Scenario s;
  const bool has_preset = root.contains("preset");
  if (has_preset == root.contains("constants")) {
    config_error("give exactly one of 'preset' and 'constants'");
  }
  if (has_preset) {
    if (root.at("preset") != "pauli") config_error("the only preset is 'pauli'");
    s.sc = pauli_preset();
  } else {
    s.sc = constants_from(root.at("constants"));
  }
  const Eigen::Index n = s.sc.n();
  const Eigen::Index m = positive_int(root, "m");
  for (const char* key : {"E", "M", "N", "mu0"}) {
    if (!root.contains(key)) config_error(std::string("missing '") + key + "'");
  }
  s.energy = vector_of(root.at("E"), "E", n);
  s.coupling = matrix_of(root.at("M"), "M", m, n);
  s.offset = vector_of(root.at("N"), "N", m);
  s.mu0 = vector_of(root.at("mu0"), "mu0", n);
  s.t0 = number_of(root, "t0", s.t0);
  s.horizon = number_of(root, "horizon", s.horizon);
  s.dt = number_of(root, "dt", s.dt);

  if (root.contains("D")) {
    MeasurementConfig meas;
    const Eigen::Index r = positive_int(root, "r");
    meas.d = matrix_of(root.at("D"), "D", r, m);
    if (!root.contains("gain_mode") || !root.at("gain_mode").is_string()) {
      config_error("a measurement needs a gain_mode string");
    }
    meas.mode = gain_mode_of(root.at("gain_mode").get<std::string>());
    if (meas.mode == GainMode::kFixed) {
      if (!root.contains("K")) config_error("gain_mode fixed needs 'K'");
      meas.k = matrix_of(root.at("K"), "K", n, r);
    } else if (root.contains("K")) {
      config_error("'K' is only used with gain_mode fixed");
    }
    s.measurement = std::move(meas);
  } else {
    for (const char* key : {"r", "gain_mode", "K"}) {
      if (root.contains(key)) {
        config_error(std::string("'") + key + "' given without 'D'");
      }
    }
  }

  if (root.contains("omega")) s.omega = number_list(root.at("omega"), "omega");
  if (root.contains("qcf_directions")) {
    const json& dirs = root.at("qcf_directions");
    if (!dirs.is_array()) config_error("qcf_directions must be a list");
    for (const json& u : dirs) s.qcf_directions.push_back(vector_of(u, "qcf_directions", n));
  }
  if (root.contains("moment_queries")) {
    const json& queries = root.at("moment_queries");
    if (!queries.is_array()) config_error("moment_queries must be a list");
    for (const json& q : queries) {
      if (!q.is_object()) config_error("each moment query must be an object");
      reject_unknown(q, {"times", "directions"}, "moment query");
      if (!q.contains("times") || !q.contains("directions")) {
        config_error("moment query needs 'times' and 'directions'");
      }
      MomentQueryConfig query;
      query.times = number_list(q.at("times"), "times");
      if (!q.at("directions").is_array()) config_error("directions must be a list");
      for (const json& u : q.at("directions"))
        query.directions.push_back(vector_of(u, "directions", n));
      if (query.times.size() != query.directions.size() || query.times.empty()) {
        config_error("moment query needs one direction per time");
      }
      s.moment_queries.push_back(std::move(query));
    }
  }
  if (root.contains("growth_terms")) {
    const json& terms = root.at("growth_terms");
    if (!terms.is_array()) config_error("growth_terms must be a list");
    for (const json& t : terms) {
      if (!t.is_object()) config_error("each growth term must be an object");
      reject_unknown(t, {"f", "u"}, "growth term");
      if (!t.contains("f") || !t.at("f").is_string() || !t.contains("u")) {
        config_error("growth term needs a function tag 'f' and a direction 'u'");
      }
      s.growth_terms.push_back(
          {EntireFunction::parse(t.at("f").get<std::string>()), vector_of(t.at("u"), "u", n)});
    }
  }
  if (root.contains("gain_comparisons")) {
    const json& v = root.at("gain_comparisons");
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      config_error("gain_comparisons must be a nonnegative integer");
    }
    s.gain_comparisons = static_cast<int>(v.get<long long>());
  }
  if (root.contains("seed")) {
    if (!root.at("seed").is_number_unsigned()) {
      config_error("seed must be a nonnegative integer");
    }
    s.seed = root.at("seed").get<std::uint64_t>();
  }
  if (root.contains("output_dir")) {
    if (!root.at("output_dir").is_string()) config_error("output_dir must be a string");
    s.output_dir = root.at("output_dir").get<std::string>();
  }
  s.grid();
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read config '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

std::string serialize_constants(const StructureConstants& sc) {
  return constants_to(sc).dump();
}

StructureConstants parse_constants(std::string_view text) {
  return constants_from(parse_json(text));
}

}  // namespace qsm
