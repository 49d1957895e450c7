#include "oqt/scenario.hpp"

#include "oqt/bloch.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace oqt {

using ordered_json = nlohmann::ordered_json;

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string config_hash_hex(const ScenarioConfig& config) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(config.canonical_text)));
  return buf;
}

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", x);
  return buf;
}

std::string fmt_param(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

bool valid_identifier(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') {
      return false;
    }
  }
  return true;
}

std::vector<std::pair<std::string, HermitianOperator>> qubit_observables() {
  return {{"sx", HermitianOperator(pauli_x())},
          {"sz", HermitianOperator(pauli_z())}};
}

std::map<std::string, double> merge_params(
    const std::map<std::string, double>& defaults,
    const std::map<std::string, double>& overrides, const std::string& preset) {
  std::map<std::string, double> p = defaults;
  for (const auto& [k, v] : overrides) {
    if (!p.count(k)) {
      throw ConfigError("preset " + preset + ": unknown parameter '" + k + "'");
    }
    p[k] = v;
  }
  return p;
}

std::string canonical_preset_text(const std::string& name,
                                  const std::map<std::string, double>& params,
                                  int samples, const ToleranceSet& tols) {
  std::ostringstream os;
  os << "preset:" << name;
  for (const auto& [k, v] : params) os << ";" << k << "=" << fmt_param(v);
  os << ";samples=" << samples;
  os << ";tol.integrator=" << fmt_param(tols.integrator)
     << ";tol.deg=" << fmt_param(tols.deg) << ";tol.leak=" << fmt_param(tols.leak)
     << ";tol.audit=" << fmt_param(tols.audit)
     << ";tol.decomposition=" << fmt_param(tols.decomposition)
     << ";tol.lambda_floor=" << fmt_param(tols.lambda_floor)
     << ";tol.fd_step=" << fmt_param(tols.fd_step);
  return os.str();
}

int samples_from(std::map<std::string, double>& params, int fallback) {
  const double raw = params.count("samples") ? params.at("samples")
                                             : static_cast<double>(fallback);
  params.erase("samples");
  const int n = static_cast<int>(raw);
  if (n < 2 || static_cast<double>(n) != raw) {
    throw ConfigError("preset: samples must be an integer >= 2");
  }
  return n;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"dephasing", "closed_rabi", "thermal_relaxation", "depolarizing"};
}

ScenarioConfig make_preset(const std::string& name,
                           const std::map<std::string, double>& overrides) {
  const double nan = std::nan("");

  if (name == "dephasing") {
    auto p = merge_params({{"eps", 1.0}, {"Gamma", 0.5}, {"Bx", std::sqrt(0.75)},
                           {"Bz", 0.5}, {"t1", nan}, {"samples", 4001.0}},
                          overrides, name);
    if (std::isnan(p.at("t1"))) p["t1"] = std::log(1e6) / p.at("Gamma");
    const int samples = samples_from(p, 4001);
    ToleranceSet tols;
    DynamicsSpec spec = builtin_channel(ChannelKind::pure_dephasing,
                                        {{"eps", p.at("eps")}, {"Gamma", p.at("Gamma")}});
    return ScenarioConfig{name,
                          std::move(spec),
                          from_bloch(Vec3(p.at("Bx"), 0.0, p.at("Bz"))),
                          0.0,
                          p.at("t1"),
                          samples,
                          qubit_observables(),
                          tols,
                          0,
                          "dephasing",
                          p,
                          canonical_preset_text(name, p, samples, tols)};
  }

  if (name == "closed_rabi") {
    auto p = merge_params({{"eps", 1.0}, {"amp", 0.4}, {"omega", 1.5}, {"Bx", 0.6},
                           {"By", 0.0}, {"Bz", 0.3}, {"t1", 12.0},
                           {"samples", 2401.0}},
                          overrides, name);
    const int samples = samples_from(p, 2401);
    ToleranceSet tols;
    const double eps = p.at("eps"), amp = p.at("amp"), omega = p.at("omega");
    const ComplexMatrix hz = -eps * pauli_z();
    const ComplexMatrix hx = pauli_x();
    Hamiltonian h(
        [hz, hx, amp, omega](double t) {
          return HermitianOperator(ComplexMatrix(hz + amp * std::cos(omega * t) * hx));
        },
        [hx, amp, omega](double t) {
          return HermitianOperator(ComplexMatrix(-amp * omega * std::sin(omega * t) * hx));
        });
    return ScenarioConfig{name,
                          DynamicsSpec(std::move(h)),
                          from_bloch(Vec3(p.at("Bx"), p.at("By"), p.at("Bz"))),
                          0.0,
                          p.at("t1"),
                          samples,
                          qubit_observables(),
                          tols,
                          0,
                          "closed_rabi",
                          p,
                          canonical_preset_text(name, p, samples, tols)};
  }

  if (name == "thermal_relaxation") {
    auto p = merge_params({{"eps", 1.0}, {"gamma", 1.0}, {"nbar", 0.0},
                           {"pe0", 1.0}, {"t1", nan}, {"samples", 14401.0}},
                          overrides, name);
    if (std::isnan(p.at("t1"))) {
      p["t1"] = 18.0 / (p.at("gamma") * (2.0 * p.at("nbar") + 1.0));
    }
    const int samples = samples_from(p, 14401);
    ToleranceSet tols;
    const double pe0 = p.at("pe0");
    if (pe0 < 0.0 || pe0 > 1.0) {
      throw ConfigError("preset thermal_relaxation: pe0 must be in [0, 1]");
    }
    ComplexMatrix rho0 = ComplexMatrix::Zero(2, 2);
    rho0(0, 0) = 1.0 - pe0;
    rho0(1, 1) = pe0;
    DynamicsSpec spec = builtin_channel(
        ChannelKind::thermal_qubit,
        {{"eps", p.at("eps")}, {"gamma", p.at("gamma")}, {"nbar", p.at("nbar")}});
    return ScenarioConfig{name,
                          std::move(spec),
                          DensityMatrix(std::move(rho0)),
                          0.0,
                          p.at("t1"),
                          samples,
                          qubit_observables(),
                          tols,
                          0,
                          "thermal_relaxation",
                          p,
                          canonical_preset_text(name, p, samples, tols)};
  }

  if (name == "depolarizing") {
    auto p = merge_params({{"eps", 1.0}, {"gamma", 0.5}, {"Bx", 0.6}, {"By", 0.0},
                           {"Bz", 0.5}, {"t1", nan}, {"samples", 2001.0}},
                          overrides, name);
    if (std::isnan(p.at("t1"))) p["t1"] = 4.0 / p.at("gamma");
    const int samples = samples_from(p, 2001);
    ToleranceSet tols;
    DynamicsSpec spec = builtin_channel(
        ChannelKind::depolarizing, {{"eps", p.at("eps")}, {"gamma", p.at("gamma")}});
    return ScenarioConfig{name,
                          std::move(spec),
                          from_bloch(Vec3(p.at("Bx"), p.at("By"), p.at("Bz"))),
                          0.0,
                          p.at("t1"),
                          samples,
                          qubit_observables(),
                          tols,
                          0,
                          "depolarizing",
                          p,
                          canonical_preset_text(name, p, samples, tols)};
  }

  throw ConfigError("unknown preset '" + name + "' (available: dephasing, "
                    "closed_rabi, thermal_relaxation, depolarizing)");
}

namespace {

[[noreturn]] void fail_at(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

const ordered_json& require_key(const ordered_json& j, const char* key,
                                const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    fail_at(where, std::string("missing key '") + key + "'");
  }
  return j.at(key);
}

double as_number(const ordered_json& j, const std::string& where) {
  if (!j.is_number()) fail_at(where, "expected a number");
  return j.get<double>();
}

ComplexMatrix parse_matrix(const ordered_json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) {
    fail_at(where, "expected a row-major list of [re, im] pairs");
  }
  const std::size_t n2 = j.size();
  const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(double(n2))));
  if (n < 2 || static_cast<std::size_t>(n) * n != n2) {
    fail_at(where, "entry count " + std::to_string(n2) +
                       " is not a square of a dimension >= 2");
  }
  ComplexMatrix m(n, n);
  for (std::size_t idx = 0; idx < n2; ++idx) {
    const auto& e = j.at(idx);
    if (!e.is_array() || e.size() != 2 || !e.at(0).is_number() ||
        !e.at(1).is_number()) {
      fail_at(where, "entry " + std::to_string(idx) + " is not an [re, im] pair");
    }
    m(static_cast<Eigen::Index>(idx) / n, static_cast<Eigen::Index>(idx) % n) =
        Complex(e.at(0).get<double>(), e.at(1).get<double>());
  }
  return m;
}

ToleranceSet parse_tolerances(const ordered_json& j, const std::string& where) {
  ToleranceSet t;
  if (!j.is_object()) fail_at(where, "expected an object");
  for (const auto& [key, value] : j.items()) {
    const double v = as_number(value, where + "." + key);
    if (key == "integrator") t.integrator = v;
    else if (key == "deg") t.deg = v;
    else if (key == "leak") t.leak = v;
    else if (key == "audit") t.audit = v;
    else if (key == "decomposition") t.decomposition = v;
    else if (key == "lambda_floor") t.lambda_floor = v;
    else if (key == "fd_step") t.fd_step = v;
    else fail_at(where, "unknown tolerance '" + key + "'");
  }
  return t;
}

}  // namespace

ScenarioConfig parse_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open config file '" + path.string() + "'");
  }
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());

  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
    const long line =
        1 + std::count(text.begin(),
                       text.begin() + std::min(byte, text.size()), '\n');
    throw ConfigError("parse error in '" + path.string() + "' at line " +
                      std::to_string(line) + ": " + e.what());
  }
  if (!j.is_object()) {
    throw ConfigError("config root must be an object in '" + path.string() + "'");
  }

  try {
    std::string name = path.stem().string();
    if (j.contains("name")) {
      if (!j.at("name").is_string()) fail_at("name", "expected a string");
      name = j.at("name").get<std::string>();
    }
    if (!valid_identifier(name)) {
      fail_at("name", "'" + name + "' is not filesystem-friendly "
                      "(letters, digits, '_', '-')");
    }

    const ordered_json& dyn = require_key(j, "dynamics", "config");
    std::optional<DynamicsSpec> spec;
    std::map<std::string, double> params;
    if (dyn.contains("channel")) {
      if (!dyn.at("channel").is_string()) fail_at("dynamics.channel", "expected a string");
      const std::string channel = dyn.at("channel").get<std::string>();
      if (dyn.contains("params")) {
        if (!dyn.at("params").is_object()) fail_at("dynamics.params", "expected an object");
        for (const auto& [k, v] : dyn.at("params").items()) {
          params[k] = as_number(v, "dynamics.params." + k);
        }
      }
      try {
        spec.emplace(builtin_channel(channel, params));
      } catch (const ValidationError& e) {
        fail_at("dynamics", e.what());
      }
    } else {
      const ComplexMatrix h =
          parse_matrix(require_key(dyn, "hamiltonian", "dynamics"),
                       "dynamics.hamiltonian");
      std::vector<Dissipator> ds;
      if (dyn.contains("dissipators")) {
        const ordered_json& arr = dyn.at("dissipators");
        if (!arr.is_array()) fail_at("dynamics.dissipators", "expected an array");
        for (std::size_t k = 0; k < arr.size(); ++k) {
          const std::string where = "dynamics.dissipators[" + std::to_string(k) + "]";
          const ordered_json& d = arr.at(k);
          ds.push_back({parse_matrix(require_key(d, "operator", where),
                                     where + ".operator"),
                        as_number(require_key(d, "rate", where), where + ".rate")});
        }
      }
      try {
        spec.emplace(Hamiltonian(HermitianOperator(h)), std::move(ds));
      } catch (const ValidationError& e) {
        fail_at("dynamics", e.what());
      }
    }

    const ordered_json& init = require_key(j, "initial_state", "config");
    std::optional<DensityMatrix> rho0;
    try {
      if (init.contains("bloch")) {
        const ordered_json& b = init.at("bloch");
        if (!b.is_array() || b.size() != 3) {
          fail_at("initial_state.bloch", "expected [x, y, z]");
        }
        rho0.emplace(from_bloch(Vec3(as_number(b.at(0), "initial_state.bloch[0]"),
                                     as_number(b.at(1), "initial_state.bloch[1]"),
                                     as_number(b.at(2), "initial_state.bloch[2]"))));
      } else if (init.contains("matrix")) {
        rho0.emplace(parse_matrix(init.at("matrix"), "initial_state.matrix"));
      } else {
        fail_at("initial_state", "expected 'bloch' or 'matrix'");
      }
    } catch (const ValidationError& e) {
      fail_at("initial_state", e.what());
    }
    if (rho0->dim() != spec->dim()) {
      fail_at("initial_state", "dimension " + std::to_string(rho0->dim()) +
                                   " does not match dynamics dimension " +
                                   std::to_string(spec->dim()));
    }

    const ordered_json& span = require_key(j, "t_span", "config");
    if (!span.is_array() || span.size() != 2) {
      fail_at("t_span", "expected [t0, t1]");
    }
    const double t0 = as_number(span.at(0), "t_span[0]");
    const double t1 = as_number(span.at(1), "t_span[1]");
    if (!(t1 > t0)) fail_at("t_span", "t1 must exceed t0");

    int samples = 1001;
    if (j.contains("sample_count")) {
      if (!j.at("sample_count").is_number_integer()) {
        fail_at("sample_count", "expected an integer");
      }
      samples = j.at("sample_count").get<int>();
      if (samples < 2) fail_at("sample_count", "must be >= 2");
    }

    std::vector<std::pair<std::string, HermitianOperator>> observables;
    if (j.contains("observables")) {
      const ordered_json& obs = j.at("observables");
      if (!obs.is_object()) fail_at("observables", "expected an object");
      for (const auto& [key, value] : obs.items()) {
        if (!valid_identifier(key)) {
          fail_at("observables", "name '" + key + "' is not an identifier");
        }
        try {
          HermitianOperator op(parse_matrix(value, "observables." + key));
          if (op.dim() != spec->dim()) {
            fail_at("observables." + key, "dimension mismatch");
          }
          observables.emplace_back(key, std::move(op));
        } catch (const ValidationError& e) {
          fail_at("observables." + key, e.what());
        }
      }
    }

    ToleranceSet tols;
    if (j.contains("tolerances")) {
      tols = parse_tolerances(j.at("tolerances"), "tolerances");
    }

    std::uint64_t seed = 0;
    if (j.contains("seed")) {
      if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer()) {
        fail_at("seed", "expected an integer");
      }
      seed = j.at("seed").get<std::uint64_t>();
    }

    for (const auto& [key, value] : j.items()) {
      (void)value;
      static const char* known[] = {"name", "dynamics", "initial_state", "t_span",
                                    "sample_count", "observables", "tolerances",
                                    "seed"};
      if (std::find_if(std::begin(known), std::end(known), [&](const char* k) {
            return key == k;
          }) == std::end(known)) {
        fail_at("config", "unknown key '" + key + "'");
      }
    }

    return ScenarioConfig{std::move(name), std::move(*spec), std::move(*rho0),
                          t0, t1, samples, std::move(observables), tols, seed,
                          "", std::move(params), std::move(text)};
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("config '" + path.string() + "': " + e.what());
  }
}

void apply_overrides(ScenarioConfig& config, std::optional<int> samples,
                     std::optional<double> tol_integrator,
                     std::optional<double> tol_audit) {
  std::ostringstream extra;
  if (samples) {
    if (*samples < 2) throw ConfigError("--samples must be >= 2");
    config.sample_count = *samples;
    extra << ";override:samples=" << *samples;
  }
  if (tol_integrator) {
    if (!(*tol_integrator > 0.0)) throw ConfigError("--tol-integrator must be > 0");
    config.tolerances.integrator = *tol_integrator;
    extra << ";override:tol.integrator=" << fmt_param(*tol_integrator);
  }
  if (tol_audit) {
    if (!(*tol_audit > 0.0)) throw ConfigError("--tol-audit must be > 0");
    config.tolerances.audit = *tol_audit;
    extra << ";override:tol.audit=" << fmt_param(*tol_audit);
  }
  config.canonical_text += extra.str();
}

ScenarioAnalysis analyze(const ScenarioConfig& config) {
  IntegratorControl control;
  control.tol = config.tolerances.integrator;
  control.sample_count = config.sample_count;

  ScenarioAnalysis a{integrate(config.spec, config.initial_state,
                               {config.t0, config.t1}, control),
                     {}, {}, {}, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, {}, false};

  AuditOptions opts;
  opts.deg_tol = config.tolerances.deg;
  opts.leak_tol = config.tolerances.leak;
  opts.lambda_floor = config.tolerances.lambda_floor;
  opts.audit_tol = config.tolerances.audit;

  a.frames = track_spectrum(a.trajectory, config.spec, opts.deg_tol);
  a.records = first_law_audit(a.trajectory, config.spec, a.frames, opts);

  const std::size_t n_samples = a.trajectory.times.size();
  std::vector<OmegaGenerator> omegas;
  omegas.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const ComplexMatrix rho_dot = config.spec.apply_generator(
        a.trajectory.times[i], a.trajectory.states[i].matrix());
    omegas.push_back(
        reconstruct_omega(a.frames[i], rho_dot, opts.deg_tol, opts.leak_tol));
  }

  const double h_fd = config.tolerances.fd_step;
  for (const auto& [obs_name, obs] : config.observables) {
    ObservableSeries series{obs_name, {}, {}, 0.0};
    series.samples.reserve(n_samples);
    series.fd_half.reserve(n_samples);
    const HermitianOperator obs_rate = HermitianOperator::zero(obs.dim());
    for (std::size_t i = 0; i < n_samples; ++i) {
      EhrenfestDecomposition d =
          ehrenfest_rate(a.frames[i], omegas[i], a.trajectory.states[i], obs,
                         obs_rate);
      const double t = a.trajectory.times[i];
      const double fd = observable_rate_fd(config.spec, a.trajectory.states[i], t,
                                           obs, h_fd);
      const double fd_half = observable_rate_fd(config.spec,
                                                a.trajectory.states[i], t, obs,
                                                0.5 * h_fd);
      d.fd_reference = fd;
      d.residual = d.total - fd;
      series.worst_residual = std::max(
          {series.worst_residual, std::abs(d.total - fd), std::abs(d.total - fd_half)});
      series.samples.push_back(std::move(d));
      series.fd_half.push_back(fd_half);
    }
    a.max_decomposition_residual =
        std::max(a.max_decomposition_residual, series.worst_residual);
    a.observables.push_back(std::move(series));
  }

  a.delta_E = a.records.back().E - a.records.front().E;
  a.Q_accum = a.records.back().Q_accum;
  a.W_accum = a.records.back().W_accum;
  a.delta_S = a.records.back().S - a.records.front().S;
  for (const ThermoRecord& r : a.records) {
    a.max_first_law_residual =
        std::max(a.max_first_law_residual, std::abs(r.first_law_residual));
    if (r.flagged) ++a.flagged_samples;
  }

  auto add_oracle = [&a](const std::string& label, double value, double expected,
                         double tolerance) {
    const double error = std::abs(value - expected);
    a.oracles.push_back(
        OracleRow{label, value, expected, error, tolerance, error <= tolerance});
  };

  if (config.spec.closed()) {
    double max_ld = 0.0, max_qd = 0.0, max_wd = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
      max_ld = std::max(max_ld, a.frames[i].lambda_dot.cwiseAbs().maxCoeff());
      max_qd = std::max(max_qd, std::abs(a.records[i].Q_dot));
      const double drive = expectation(
          a.trajectory.states[i],
          config.spec.hamiltonian().derivative(a.trajectory.times[i]));
      max_wd = std::max(max_wd, std::abs(a.records[i].W_dot - drive));
    }
    add_oracle("max_abs_lambda_dot", max_ld, 0.0, 1e-9);
    add_oracle("max_abs_heat_rate", max_qd, 0.0, 1e-9);
    add_oracle("max_abs_power_minus_drive", max_wd, 0.0, 1e-8);
  }

  if (config.oracle_preset == "dephasing") {
    const double eps = config.params.at("eps");
    const double bx = config.params.at("Bx");
    const double bz = config.params.at("Bz");
    const double q_expected =
        dephasing_heat_closed_form(std::hypot(bx, bz), bz, eps);
    add_oracle("Q_accum_vs_closed_form", a.Q_accum, q_expected,
               1e-4 * std::max(std::abs(q_expected), 1e-12));
    add_oracle("W_plus_Q", a.W_accum + a.Q_accum, 0.0, 1e-4);
    add_oracle("delta_E", a.delta_E, 0.0, 1e-6);
  } else if (config.oracle_preset == "thermal_relaxation") {
    add_oracle("W_accum", a.W_accum, 0.0, 1e-6);
    add_oracle("Q_minus_delta_E", a.Q_accum - a.delta_E, 0.0, 1e-6);
  } else if (config.oracle_preset == "closed_rabi") {
    add_oracle("Q_accum", a.Q_accum, 0.0, 1e-7);
  }

  bool oracles_pass = true;
  for (const OracleRow& r : a.oracles) oracles_pass = oracles_pass && r.pass;
  a.pass = a.flagged_samples == 0 &&
           a.max_decomposition_residual <= config.tolerances.decomposition &&
           oracles_pass;
  return a;
}

namespace {

void write_timeseries(const ScenarioAnalysis& a, const ScenarioConfig& config,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot write time series file '" + path.string() + "'");
  }
  const Eigen::Index dim = config.initial_state.dim();
  const ToleranceSet& t = config.tolerances;

  out << "# time_series: " << config.name << "\n";
  out << "# config_hash: " << config_hash_hex(config) << "\n";
  out << "# dim: " << dim << "\n";
  out << "# t_span: [" << fmt_param(config.t0) << ", " << fmt_param(config.t1)
      << "] sample_count: " << config.sample_count << "\n";
  out << "# tolerances: integrator=" << fmt_param(t.integrator)
      << " deg=" << fmt_param(t.deg) << " leak=" << fmt_param(t.leak)
      << " audit=" << fmt_param(t.audit)
      << " decomposition=" << fmt_param(t.decomposition)
      << " lambda_floor=" << fmt_param(t.lambda_floor)
      << " fd_step=" << fmt_param(t.fd_step) << "\n";

  out << "t,E,Q_dot,W_dot,S_dot,Q_accum,W_accum,first_law_residual";
  if (dim == 2) out << ",B_norm,B_x,B_y,B_z";
  for (const ObservableSeries& s : a.observables) {
    out << "," << s.name << "_thermal," << s.name << "_drive," << s.name
        << "_coherence," << s.name << "_total," << s.name << "_fd_reference";
  }
  out << ",flagged\n";

  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const ThermoRecord& r = a.records[i];
    out << fmt(r.t) << "," << fmt(r.E) << "," << fmt(r.Q_dot) << ","
        << fmt(r.W_dot) << "," << fmt(r.S_dot) << "," << fmt(r.Q_accum) << ","
        << fmt(r.W_accum) << "," << fmt(r.first_law_residual);
    if (dim == 2) {
      const BlochState b = to_bloch(a.trajectory.states[i]);
      out << "," << fmt(b.B.norm()) << "," << fmt(b.B.x()) << "," << fmt(b.B.y())
          << "," << fmt(b.B.z());
    }
    for (const ObservableSeries& s : a.observables) {
      const EhrenfestDecomposition& d = s.samples[i];
      out << "," << fmt(d.thermal_term) << "," << fmt(d.drive_term) << ","
          << fmt(d.coherence_term) << "," << fmt(d.total) << ","
          << fmt(d.fd_reference.value());
    }
    out << "," << (r.flagged ? 1 : 0) << "\n";
  }
}

void write_summary(const ScenarioAnalysis& a, const ScenarioConfig& config,
                   const std::filesystem::path& path) {
  const ToleranceSet& t = config.tolerances;
  ordered_json s;
  s["name"] = config.name;
  s["config_hash"] = config_hash_hex(config);
  s["dim"] = config.initial_state.dim();
  s["t_span"] = {config.t0, config.t1};
  s["sample_count"] = config.sample_count;
  s["seed"] = config.seed;
  s["tolerances"] = {{"integrator", t.integrator},
                     {"deg", t.deg},
                     {"leak", t.leak},
                     {"audit", t.audit},
                     {"decomposition", t.decomposition},
                     {"lambda_floor", t.lambda_floor},
                     {"fd_step", t.fd_step}};
  s["integrator"] = {{"accepted_steps", a.trajectory.accepted_steps},
                     {"rejected_steps", a.trajectory.rejected_steps},
                     {"max_projection", a.trajectory.max_projection}};
  s["results"] = {{"E_initial", a.records.front().E},
                  {"E_final", a.records.back().E},
                  {"delta_E", a.delta_E},
                  {"Q_accum", a.Q_accum},
                  {"W_accum", a.W_accum},
                  {"S_initial", a.records.front().S},
                  {"S_final", a.records.back().S},
                  {"delta_S", a.delta_S},
                  {"max_first_law_residual", a.max_first_law_residual},
                  {"max_decomposition_residual", a.max_decomposition_residual},
                  {"flagged_samples", a.flagged_samples}};
  ordered_json checks = ordered_json::array();
  for (const OracleRow& r : a.oracles) {
    checks.push_back({{"label", r.label},
                      {"value", r.value},
                      {"expected", r.expected},
                      {"error", r.error},
                      {"tolerance", r.tolerance},
                      {"pass", r.pass}});
  }
  s["closed_form_checks"] = checks;
  s["pass"] = a.pass;

  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot write summary file '" + path.string() + "'");
  }
  out << s.dump(2) << "\n";
}

}  // namespace

ScenarioOutcome run_scenario(const ScenarioConfig& config,
                             const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  ScenarioOutcome outcome{analyze(config),
                          out_dir / (config.name + "_timeseries.csv"),
                          out_dir / (config.name + "_summary.json"), false};
  write_timeseries(outcome.analysis, config, outcome.timeseries_path);
  write_summary(outcome.analysis, config, outcome.summary_path);
  outcome.pass = outcome.analysis.pass;
  return outcome;
}

}  // namespace oqt
