#include "echolab/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "echolab/constants.hpp"
#include "echolab/decay_fits.hpp"
#include "echolab/decoherence.hpp"
#include "echolab/error.hpp"
#include "echolab/io.hpp"
#include "echolab/parallel.hpp"
#include "echolab/sweep_fits.hpp"

namespace echolab {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Config reading. Every object is read through Section so that leftover keys
// surface as validation errors instead of being ignored.

class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError("config: '" + path_ + "' must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  void read(const std::string& key, T& target) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      target = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ValidationError("config: '" + where(key) + "' has the wrong type");
    }
  }

  const json& child(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string where(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.contains(key)) throw ValidationError("config: unknown key '" + where(key) + "'");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

TmVariant parse_tm_variant(const std::string& s) {
  if (s == "paper") return TmVariant::kLiteral;
  if (s == "sqrt") return TmVariant::kSqrtCorrected;
  throw ValidationError("tm_variant must be 'paper' or 'sqrt', got '" + s + "'");
}

std::string tm_variant_name(TmVariant v) {
  return v == TmVariant::kLiteral ? "paper" : "sqrt";
}

NoiseKind parse_noise_kind(const std::string& s) {
  if (s == "none") return NoiseKind::kNone;
  if (s == "multiplicative") return NoiseKind::kMultiplicative;
  if (s == "additive") return NoiseKind::kAdditive;
  throw ValidationError("noise kind must be none, multiplicative or additive, got '" + s + "'");
}

std::string noise_kind_name(NoiseKind k) {
  switch (k) {
    case NoiseKind::kNone: return "none";
    case NoiseKind::kMultiplicative: return "multiplicative";
    case NoiseKind::kAdditive: return "additive";
  }
  return "none";
}

void read_conditions(Section s, ExperimentConditions& c) {
  s.read("B", c.B);
  s.read("T", c.T);
  s.read("g_spin", c.g_spin);
  s.read("g_env", c.g_env);
  s.read("g_g", c.g_g);
  s.finish();
}

void read_decay_params(Section s, DecayParams& p) {
  s.read("I0", p.I0);
  s.read("Gamma0", p.Gamma0);
  s.read("GammaSD", p.GammaSD);
  s.read("R", p.R);
  s.read("T1", p.T1);
  s.finish();
}

void read_dependence(Section s, DependenceParams& p) {
  s.read("Wff", p.Wff);
  s.read("WBN", p.WBN);
  s.read("Tmin", p.Tmin);
  s.read("GammaMax", p.GammaMax);
  s.read("GammaH", p.GammaH);
  s.read("GammaMaxH", p.GammaMaxH);
  s.finish();
}

json conditions_json(const ExperimentConditions& c) {
  return {{"B", c.B}, {"T", c.T}, {"g_spin", c.g_spin}, {"g_env", c.g_env}, {"g_g", c.g_g}};
}

json decay_params_json(const DecayParams& p) {
  return {{"I0", p.I0}, {"Gamma0", p.Gamma0}, {"GammaSD", p.GammaSD}, {"R", p.R}, {"T1", p.T1}};
}

json dependence_json(const DependenceParams& p) {
  return {{"Wff", p.Wff},           {"WBN", p.WBN},         {"Tmin", p.Tmin},
          {"GammaMax", p.GammaMax}, {"GammaH", p.GammaH}, {"GammaMaxH", p.GammaMaxH}};
}

json named_json(const NamedValues& v) {
  json j = json::object();
  for (const auto& [k, x] : v) j[k] = x;
  return j;
}

std::vector<std::string> path_strings(const std::vector<fs::path>& paths) {
  std::vector<std::string> out;
  for (const auto& p : paths) out.push_back(p.generic_string());
  return out;
}

// ---------------------------------------------------------------------------
// Report helpers.

json fit_json(const FitResult& fit) {
  json params = json::object();
  for (std::size_t i = 0; i < fit.names.size(); ++i) {
    const auto& n = fit.names[i];
    params[n] = {{"value", fit.values[i]}, {"sigma", fit.sigma(n)}, {"frozen", fit.is_frozen(n)}};
  }
  json cov = json::array();
  for (Eigen::Index r = 0; r < fit.covariance.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < fit.covariance.cols(); ++c) row.push_back(fit.covariance(r, c));
    cov.push_back(std::move(row));
  }
  json variants = json::object();
  for (const auto& [k, v] : fit.variant_flags) variants[k] = v;
  return {{"parameters", params},
          {"covariance", {{"names", fit.free_names}, {"matrix", cov}}},
          {"chi2", fit.chi2},
          {"chi2_reduced", fit.chi2_reduced},
          {"dof", fit.dof},
          {"iterations", fit.n_iter},
          {"converged", fit.converged},
          {"gradient_cosine", fit.gradient_cosine},
          {"condition_number", fit.condition_number},
          {"flags", fit.flags},
          {"variants", variants}};
}

json phase_memory_json(const PhaseMemoryEstimate& tm) {
  return {{"value_s", tm.value},
          {"sigma_s", tm.sigma},
          {"physical", tm.physical},
          {"fallback", tm.fallback},
          {"variant", tm_variant_name(tm.variant)}};
}

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

// Column-aligned text table.
class TextTable {
 public:
  explicit TextTable(std::vector<std::string> header) { rows_.push_back(std::move(header)); }
  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }
  std::string str() const {
    std::vector<std::size_t> width;
    for (const auto& r : rows_)
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (width.size() <= i) width.push_back(0);
        width[i] = std::max(width[i], r[i].size());
      }
    std::ostringstream os;
    for (std::size_t k = 0; k < rows_.size(); ++k) {
      for (std::size_t i = 0; i < rows_[k].size(); ++i) {
        os << rows_[k][i];
        if (i + 1 < rows_[k].size()) os << std::string(width[i] - rows_[k][i].size() + 2, ' ');
      }
      os << '\n';
      if (k == 0) {
        std::size_t total = 0;
        for (const auto w : width) total += w + 2;
        os << std::string(total > 2 ? total - 2 : 0, '-') << '\n';
      }
    }
    return os.str();
  }

 private:
  std::vector<std::vector<std::string>> rows_;
};

std::string fit_table(const FitResult& fit) {
  TextTable t({"parameter", "value", "sigma", "status"});
  for (std::size_t i = 0; i < fit.names.size(); ++i) {
    const auto& n = fit.names[i];
    t.add({n, fmt(fit.values[i], 6), fit.is_frozen(n) ? "-" : fmt(fit.sigma(n), 3),
           fit.is_frozen(n) ? "frozen" : "free"});
  }
  std::string s = t.str();
  s += "chi2_reduced " + fmt(fit.chi2_reduced) + ", iterations " + std::to_string(fit.n_iter) +
       ", converged " + (fit.converged ? "yes" : "no") + '\n';
  for (const auto& f : fit.flags) s += "flag: " + f + '\n';
  return s;
}

// CSV text from a header and rows of numbers.
std::string csv_text(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
  std::ostringstream os;
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << format_number(r[i]);
    os << '\n';
  }
  return os.str();
}

std::string decay_csv_text(const DecayDataset& d) {
  std::ostringstream os;
  write_decay_csv(os, d);
  return os.str();
}

std::string sweep_csv_text(const SweepDataset& s) {
  std::ostringstream os;
  write_sweep_csv(os, s);
  return os.str();
}

FitOptions fit_options(const RunConfig& cfg) {
  FitOptions o;
  o.throw_on_max_iterations = !cfg.allow_nonconverged;
  return o;
}

// Collects fit outcomes so the command can decide the exit code once.
struct ConvergenceTracker {
  bool all_converged = true;
  void note(const FitResult& fit) { all_converged = all_converged && fit.converged; }
  ExitCode code(const RunConfig& cfg) const {
    return all_converged || cfg.allow_nonconverged ? ExitCode::kSuccess : ExitCode::kNonConvergence;
  }
};

std::vector<double> default_t23() { return logspace(10e-6, 10e-3, 25); }

// ---------------------------------------------------------------------------
// simulate

Report cmd_simulate(const RunConfig& cfg) {
  Report r;
  const auto& sim = cfg.simulate;
  NoiseSpec noise = sim.noise;
  noise.seed = derive_seed(cfg.seed, 0);

  DecayDataset d;
  std::vector<std::vector<double>> curve;
  json truth;
  if (sim.kind == "mims") {
    d = generate_mims_dataset(sim.mims, sim.t12, noise, cfg.conditions);
    const double hi = *std::max_element(sim.t12.begin(), sim.t12.end());
    for (const double t : linspace(0.0, hi, 200)) {
      const double a = mims_amplitude(t, sim.mims);
      curve.push_back({t, 0.0, a * a});
    }
    truth = {{"A0", sim.mims.A0}, {"TM", sim.mims.TM}, {"x", sim.mims.x}};
  } else {
    const bool three = sim.kind == "3PE";
    DelayGrid grid{sim.t12, three ? (sim.t23.empty() ? default_t23() : sim.t23) : std::vector<double>{0.0}};
    d = generate_decay_dataset(sim.truth, grid, noise, cfg.conditions);
    if (three) {
      const double lo = *std::min_element(grid.t23.begin(), grid.t23.end());
      const double hi = *std::max_element(grid.t23.begin(), grid.t23.end());
      const auto dense = lo > 0.0 ? logspace(lo, hi, 200) : linspace(lo, hi, 200);
      for (const double t12 : grid.t12)
        for (const double t23 : dense) curve.push_back({t12, t23, echo_intensity(t12, t23, sim.truth)});
    } else {
      const double hi = *std::max_element(grid.t12.begin(), grid.t12.end());
      for (const double t : linspace(0.0, hi, 200)) curve.push_back({t, 0.0, echo_intensity(t, 0.0, sim.truth)});
    }
    truth = decay_params_json(sim.truth);
  }
  r.files.emplace_back("decay.csv", decay_csv_text(d));
  r.files.emplace_back("decay_curve.csv", csv_text({"t12_s", "t23_s", "intensity"}, curve));

  json results = {{"kind", sim.kind},
                  {"truth", truth},
                  {"samples", d.samples.size()},
                  {"noise", {{"kind", noise_kind_name(noise.kind)}, {"level", noise.level}, {"seed", noise.seed}}}};
  std::string table = "simulate: " + sim.kind + " dataset, " + std::to_string(d.samples.size()) +
                      " samples -> decay.csv, decay_curve.csv\n";

  if (sim.sweep.enabled) {
    SweepSpec spec{sim.sweep.axis, sim.sweep.values, sim.sweep.observable, cfg.conditions, {}};
    NoiseSpec sn = sim.noise;
    sn.seed = derive_seed(cfg.seed, 1);
    const auto s = generate_sweep(sim.sweep.truth, spec, sn, cfg.model);
    const auto sorted = s.sorted_points();
    const double lo = sorted.front().axis;
    const double hi = sorted.back().axis;
    std::vector<std::vector<double>> dense;
    for (const double x : linspace(lo, hi, 200))
      dense.push_back({x, dependence_value(s.observable, s.conditions_at(x), sim.sweep.truth, cfg.model)});
    r.files.emplace_back("sweep.csv", sweep_csv_text(s));
    r.files.emplace_back("sweep_curve.csv",
                         csv_text({std::string(axis_column(s.axis)), "model"}, dense));
    results["sweep"] = {{"observable", to_string(s.observable)},
                        {"axis", to_string(s.axis)},
                        {"points", s.points.size()},
                        {"truth", dependence_json(sim.sweep.truth)},
                        {"seed", sn.seed}};
    table += "simulate: " + std::string(to_string(s.observable)) + " sweep, " +
             std::to_string(s.points.size()) + " points -> sweep.csv, sweep_curve.csv\n";
  }
  r.document["results"] = results;
  r.table = table;
  return r;
}

// ---------------------------------------------------------------------------
// fit-decay

fs::path decay_input(const RunConfig& cfg) {
  if (!cfg.inputs.empty()) return cfg.inputs.front();
  if (cfg.fit_decay.input) return *cfg.fit_decay.input;
  throw ValidationError("fit-decay: no input file given");
}

Report cmd_fit_decay(const RunConfig& cfg) {
  Report r;
  const auto d = load_decay_csv(decay_input(cfg), cfg.conditions);
  std::string model = cfg.fit_decay.model;
  if (model == "auto") model = d.kind == EchoKind::k3PE ? "surface" : "mims";

  const auto opts = fit_options(cfg);
  FitResult fit;
  if (model == "mims") {
    fit = fit_mims_decay(d, opts);
  } else if (model == "surface") {
    fit = fit_3pe_surface(d, opts);
  } else if (model == "2pe-sd") {
    fit = fit_2pe_spectral_diffusion(
        d, cfg.fit_decay.R, cfg.fit_decay.R_sigma,
        cfg.fit_decay.propagate_R ? RatePropagation::kPropagate : RatePropagation::kFixed, opts);
  } else {
    throw ValidationError("fit-decay: unknown model '" + model + "'");
  }
  ConvergenceTracker conv;
  conv.note(fit);

  json results = {{"model", model}, {"kind", to_string(d.kind)}, {"samples", d.samples.size()},
                  {"fit", fit_json(fit)}};
  std::string table = "fit-decay: model " + model + ", " + std::to_string(d.samples.size()) + " samples\n" +
                      fit_table(fit);

  std::vector<std::vector<double>> overlay;
  if (model == "mims") {
    MimsParams p{fit.value("A0"), fit.value("TM"), fit.value("x")};
    for (const auto& s : d.canonical_samples()) {
      const double a = mims_amplitude(s.t12, p);
      overlay.push_back({s.t12, s.t23, s.intensity, s.sigma, a * a});
    }
  } else {
    DecayParams p{fit.value("I0"), fit.value("Gamma0"), fit.value("GammaSD"), fit.value("R"), fit.value("T1")};
    for (const auto& s : d.canonical_samples())
      overlay.push_back({s.t12, s.t23, s.intensity, s.sigma, echo_intensity(s.t12, s.t23, p)});
    json tm = json::object();
    for (const auto v : {TmVariant::kSqrtCorrected, TmVariant::kLiteral}) {
      const auto est = derive_phase_memory(fit, v);
      tm[tm_variant_name(v)] = phase_memory_json(est);
    }
    results["phase_memory"] = tm;
    results["phase_memory_selected"] = tm_variant_name(cfg.model.tm_variant);
    const auto sel = derive_phase_memory(fit, cfg.model.tm_variant);
    table += "T_M (" + tm_variant_name(cfg.model.tm_variant) + ") = " + fmt(sel.value) + " s +- " +
             fmt(sel.sigma, 2) + (sel.physical ? "" : " (non-physical)") + '\n';
  }
  r.files.emplace_back("fit_overlay.csv",
                       csv_text({"t12_s", "t23_s", "intensity", "sigma", "model"}, overlay));
  r.document["results"] = results;
  r.table = table;
  r.exit_code = conv.code(cfg);
  return r;
}

// ---------------------------------------------------------------------------
// fit-sweep

struct SweepOutcome {
  SweepDataset data;
  FitResult fit;
};

std::vector<std::vector<double>> sweep_overlay(const SweepDataset& s, const FitResult& fit, const ModelOptions& m) {
  const auto p = to_dependence_params(fit, {});
  std::vector<std::vector<double>> rows;
  for (const auto& pt : s.sorted_points())
    rows.push_back({pt.axis, pt.value, pt.sigma, dependence_value(s.observable, s.conditions_at(pt.axis), p, m)});
  return rows;
}

Report cmd_fit_sweep(const RunConfig& cfg) {
  Report r;
  const auto inputs = cfg.inputs.empty() ? cfg.fit_sweep.inputs : cfg.inputs;
  if (inputs.empty()) throw ValidationError("fit-sweep: no input files given");
  const auto opts = fit_options(cfg);
  const auto outcomes = parallel_map<SweepOutcome>(inputs.size(), [&](std::size_t i) {
    SweepOutcome o;
    o.data = load_sweep_csv(inputs[i], cfg.conditions);
    for (const auto& [k, v] : cfg.fit_sweep.frozen) o.data.frozen[k] = v;
    o.fit = fit_dependence(o.data, cfg.model, opts);
    return o;
  });

  ConvergenceTracker conv;
  json results = json::array();
  std::string table;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& o = outcomes[i];
    conv.note(o.fit);
    results.push_back({{"input", inputs[i].generic_string()},
                       {"observable", to_string(o.data.observable)},
                       {"axis", to_string(o.data.axis)},
                       {"points", o.data.points.size()},
                       {"fit", fit_json(o.fit)}});
    const std::string axis(axis_column(o.data.axis));
    const std::string obs(observable_column(o.data.observable));
    r.files.emplace_back("sweep_fit_" + std::to_string(i) + ".csv",
                         csv_text({axis, obs, "sigma", "model"}, sweep_overlay(o.data, o.fit, cfg.model)));
    table += "fit-sweep [" + std::to_string(i) + "] " + inputs[i].filename().string() + ": " +
             std::string(to_string(o.data.observable)) + " vs " + std::string(to_string(o.data.axis)) + '\n' +
             fit_table(o.fit) + '\n';
  }
  r.document["results"] = results;
  r.table = table;
  r.exit_code = conv.code(cfg);
  return r;
}

// ---------------------------------------------------------------------------
// extract-traces

std::string metric_mode_name(MetricMode m) { return m == MetricMode::kPeak ? "peak" : "integral"; }
std::string noise_floor_name(NoiseFloor f) { return f == NoiseFloor::kOff ? "off" : "pre-gate"; }

Report cmd_extract_traces(const RunConfig& cfg) {
  Report r;
  const auto& tc = cfg.traces;
  if (tc.inputs.empty()) throw ValidationError("extract-traces: no traces configured");
  const auto metrics = parallel_map<double>(tc.inputs.size(), [&](std::size_t i) {
    const auto& in = tc.inputs[i];
    auto trace = load_trace_csv(in.path);
    trace.f_if = tc.f_if;
    const double center = 2.0 * (in.t12 + in.t23);
    trace.gate = in.gate ? *in.gate : Gate{center - tc.gate_half_width, center + tc.gate_half_width};
    const auto env = demodulate_envelope(trace, tc.lp_cutoff);
    return echo_metric(env, trace.gate, tc.mode, tc.noise_floor);
  });

  DecayDataset d;
  d.conditions = cfg.conditions;
  std::vector<std::vector<double>> rows;
  json items = json::array();
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    const auto& in = tc.inputs[i];
    const double sigma = std::max(std::abs(metrics[i]) * tc.sigma_rel, 1e-300);
    d.samples.push_back({in.t12, in.t23, metrics[i], sigma});
    rows.push_back({static_cast<double>(i), in.t12, in.t23, metrics[i]});
    items.push_back({{"input", in.path.generic_string()}, {"t12", in.t12}, {"t23", in.t23}, {"metric", metrics[i]}});
  }
  d.kind = DecayDataset::infer_kind(d.samples);
  r.files.emplace_back("decay.csv", decay_csv_text(d));
  r.files.emplace_back("metrics.csv", csv_text({"index", "t12_s", "t23_s", "metric"}, rows));
  const double cutoff = tc.lp_cutoff > 0.0 ? tc.lp_cutoff : default_cutoff(tc.f_if);
  r.document["results"] = {{"metric_mode", metric_mode_name(tc.mode)},
                           {"noise_floor", noise_floor_name(tc.noise_floor)},
                           {"lp_cutoff_hz", cutoff},
                           {"kind", to_string(d.kind)},
                           {"traces", items}};
  TextTable t({"trace", "t12_s", "t23_s", "metric"});
  for (std::size_t i = 0; i < rows.size(); ++i)
    t.add({tc.inputs[i].path.filename().string(), fmt(rows[i][1]), fmt(rows[i][2]), fmt(rows[i][3], 6)});
  r.table = "extract-traces: metric " + metric_mode_name(tc.mode) + ", noise floor " +
            noise_floor_name(tc.noise_floor) + "\n" + t.str();
  return r;
}

// ---------------------------------------------------------------------------
// estimate

struct EstimateRow {
  std::string name;
  double value;
  std::string unit;
  std::optional<double> reference;
  std::string note;
};

// Golden-section maximum of the two-level heat capacity in x = dE/(kB T).
std::pair<double, double> schottky_peak() {
  double a = 0.5;
  double b = 6.0;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  auto f = [](double x) { return schottky_heat_capacity(x * PhysicalConstants::kB, 1.0); };
  while (b - a > 1e-10) {
    const double c = b - g * (b - a);
    const double d = a + g * (b - a);
    if (f(c) > f(d)) b = d;
    else a = c;
  }
  const double x = 0.5 * (a + b);
  return {x, f(x)};
}

// Reference rows used for the GammaMax(t12) law.
constexpr std::array<double, 4> kRefT12{10e-6, 15e-6, 20e-6, 30e-6};
constexpr std::array<double, 4> kRefGammaMax{57.8e3, 51.6e3, 37.8e3, 26.2e3};
constexpr std::array<double, 4> kRefGammaMaxSigma{6.0e3, 7.0e3, 1.0e3, 3.0e3};
constexpr std::array<double, 4> kRefGammaSdTmin{0.176, 0.177, 0.162, 0.170};
constexpr double kRefNqp = 10e3;

struct Estimates {
  std::vector<EstimateRow> rows;
  std::vector<std::string> flags;
  json extra;
};

Estimates compute_estimates(const RunConfig& cfg) {
  const auto& e = cfg.estimate;
  const auto& m = cfg.material;
  const PhysicalConstants k;
  Estimates out;
  auto add = [&](std::string name, double v, std::string unit, std::optional<double> ref = {},
                 std::string note = {}) {
    out.rows.push_back({std::move(name), v, std::move(unit), ref, std::move(note)});
  };

  const double sigma_ph = resonant_phonon_density(e.omega_ref, e.delta_omega, m.v);
  const double teff = effective_temperature(e.T_bath, e.Tmin);
  const double b_op = bottleneck_coefficient(m.n_at, sigma_ph, e.omega_ref, teff, cfg.model);
  const double b_sat = m.n_at / sigma_ph;
  add("omega_ref", e.omega_ref, "rad/s", {}, "spin transition frequency used for Sigma_ph");
  add("Sigma_ph", sigma_ph, "1/m^3", 1.86e17, "resonant phonon density");
  add("T_eff", teff, "K", {}, "effective spin temperature at T_bath");
  add("b", b_op, "1", 1e3, "bottleneck coefficient at T_eff");
  add("b_saturated", b_sat, "1", 1e3, "n_at / Sigma_ph");
  const double rg = direct_rate_general(e.tau_1d, e.tau_ph, b_op);
  const double rb = direct_rate_bottleneck(e.tau_ph, b_op);
  add("R_d_general", rg, "1/s");
  add("R_d_bottleneck", rb, "1/s", {}, "strong-bottleneck limit");
  add("R_d_relative_difference", std::abs(rg - rb) / rg, "1");

  const double wbn = bottleneck_coefficient_estimate(m, e.delta_omega / kTwoPi, e.tau_ph);
  add("W_BN_estimate", wbn, "Hz/T^2", 6e3, "strong-bottleneck prefactor");

  const double nqp = nqp_linewidth(m, sigma_ph);
  const double nqp_ratio = e.reference_nqp / nqp;
  add("Gamma_NQP", nqp, "Hz", e.reference_nqp, "sigma0 v Sigma_ph / pi");
  add("Gamma_NQP_reference_ratio", nqp_ratio, "1");
  if (nqp_ratio > 2.0 || nqp_ratio < 0.5) out.flags.push_back("nqp_discrepancy");

  const double T = e.transport_T;
  add("c_debye", debye_heat_capacity(T, m), "J/(m^3 K)", {}, "at transport_T");
  add("kappa", thermal_conductivity(T, m), "W/(m K)", {}, "at transport_T");
  const auto kin = phonon_transport(T, m, TransportConvention::kKinetic);
  const auto cal = phonon_transport(T, m, TransportConvention::kCalibrated);
  add("l_ph_kinetic", kin.mean_free_path, "m", {}, "3 kappa / (c v)");
  add("tau_ph_kinetic", kin.lifetime, "s");
  add("l_ph_calibrated", cal.mean_free_path, "m", 7e-6 / T, "7e-6 m K / T");
  add("tau_ph_calibrated", cal.lifetime, "s", 2e-9 / T);

  const double x = cfg.conditions.g_spin * k.muB * e.schottky_B / (k.kB * e.schottky_T);
  const double c_spin = schottky_heat_capacity(x * k.kB * e.schottky_T, e.schottky_T);
  const double c_host = debye_heat_capacity(e.schottky_T, m);
  add("schottky_x", x, "1", {}, "g muB B / (kB T)");
  add("c_spin", c_spin, "1", {}, "per spin, units of kB");
  add("c_host", c_host, "J/(m^3 K)");
  add("c_spin_over_c_host", c_spin / c_host, "1", 1e3, "dimensionless c_spin against host value");
  add("c_spin_over_c_host_volumetric", m.n_at * k.kB * c_spin / c_host, "1", {},
      "n_at kB c_spin against host value");
  const auto [xp, cp] = schottky_peak();
  add("schottky_peak_x", xp, "1");
  add("schottky_peak_c", cp, "1");

  const auto law = fit_gamma_max_law(kRefT12, kRefGammaMax, kRefGammaMaxSigma);
  add("GammaMax0", law.model.GammaMax0, "Hz", 90e3, "log-linear law over reference rows");
  add("tau_t12", law.model.tau_t12, "s", 25e-6);

  json hosts = json::array();
  for (const auto& h : host_reference_table())
    hosts.push_back({{"host", std::string(h.host)},
                     {"heat_capacity_j_per_g_k", h.heat_capacity_j_per_g_k},
                     {"conductivity_w_per_m_k", {h.conductivity_low_w_per_m_k, h.conductivity_high_w_per_m_k}}});
  out.extra["hosts"] = hosts;
  return out;
}

json rows_json(const std::vector<EstimateRow>& rows) {
  json a = json::array();
  for (const auto& r : rows) {
    json row = {{"name", r.name}, {"value", r.value}, {"unit", r.unit}};
    row["reference"] = r.reference ? json(*r.reference) : json(nullptr);
    if (!r.note.empty()) row["note"] = r.note;
    a.push_back(std::move(row));
  }
  return a;
}

std::string rows_table(const std::vector<EstimateRow>& rows) {
  TextTable t({"quantity", "value", "unit", "reference", "note"});
  for (const auto& r : rows) t.add({r.name, fmt(r.value), r.unit, r.reference ? fmt(*r.reference) : "-", r.note});
  return t.str();
}

std::string rows_csv_text(const std::vector<EstimateRow>& rows) {
  std::ostringstream os;
  os << "quantity,value,unit,reference\n";
  for (const auto& r : rows)
    os << r.name << ',' << format_number(r.value) << ',' << r.unit << ','
       << (r.reference ? format_number(*r.reference) : std::string{}) << '\n';
  return os.str();
}

Report cmd_estimate(const RunConfig& cfg) {
  Report r;
  const auto est = compute_estimates(cfg);
  r.document["results"] = {{"rows", rows_json(est.rows)}, {"hosts", est.extra["hosts"]}};
  r.document["flags"] = est.flags;
  r.files.emplace_back("estimate.csv", rows_csv_text(est.rows));
  r.table = "estimate\n" + rows_table(est.rows);
  for (const auto& f : est.flags) r.table += "flag: " + f + '\n';
  return r;
}

// ---------------------------------------------------------------------------
// table1

struct Table1Row {
  std::string label;
  std::string t12;
  FitResult fit;
  SweepDataset data;
};

SweepDataset table1_synthetic(Observable obs, const DependenceParams& truth, const NamedValues& frozen,
                              const RunConfig& cfg, std::uint64_t stream) {
  SweepSpec spec{SweepAxis::kB, logspace(0.03, 0.3, cfg.table1.points), obs, cfg.conditions, frozen};
  spec.fixed.B = 0.0;
  NoiseSpec noise{NoiseKind::kMultiplicative, cfg.table1.noise_level, derive_seed(cfg.seed, stream)};
  return generate_sweep(truth, spec, noise, cfg.model);
}

Report cmd_table1(const RunConfig& cfg) {
  Report r;
  const NamedValues rate_frozen{{"Wff", 10e3}, {"WBN", 7.5e3}};

  // Jobs: R, four GammaSD rows, Gamma0. Provided files replace synthetic ones by role.
  struct Job {
    std::string label;
    double t12;
    std::function<SweepDataset()> make;
  };
  std::vector<Job> jobs;
  jobs.push_back({"R", 0.0, [&] {
                    return table1_synthetic(Observable::kR, {10e3, 7.5e3, 0.074, 0, 0, 0}, {}, cfg, 10);
                  }});
  for (std::size_t i = 0; i < kRefT12.size(); ++i)
    jobs.push_back({"GammaSD", kRefT12[i], [&, i] {
                      return table1_synthetic(Observable::kGammaSD,
                                              {0, 0, kRefGammaSdTmin[i], kRefGammaMax[i], 0, 0}, {}, cfg, 20 + i);
                    }});
  jobs.push_back({"Gamma0", 0.0, [&] {
                    return table1_synthetic(Observable::kGamma0, {10e3, 7.5e3, 0.074, 0, 300.0, 8.4e3},
                                            rate_frozen, cfg, 30);
                  }});
  bool provided = false;
  if (!cfg.table1.inputs.empty()) {
    provided = true;
    jobs.clear();
    for (const auto& in : cfg.table1.inputs) {
      jobs.push_back({"", in.t12, [&cfg, &in, rate_frozen] {
                        auto s = load_sweep_csv(in.path, cfg.conditions);
                        if (s.observable == Observable::kGamma0)
                          for (const auto& [k, v] : rate_frozen) s.frozen.emplace(k, v);
                        return s;
                      }});
    }
  }

  const auto opts = fit_options(cfg);
  auto rows = parallel_map<Table1Row>(jobs.size(), [&](std::size_t i) {
    Table1Row row;
    row.data = jobs[i].make();
    row.label = std::string(to_string(row.data.observable));
    row.t12 = jobs[i].t12 > 0.0 ? fmt(jobs[i].t12 * 1e6, 3) : "all";
    row.fit = fit_dependence(row.data, cfg.model, opts);
    return row;
  });

  ConvergenceTracker conv;
  std::vector<std::string> flags;
  json table_rows = json::array();
  TextTable t({"row", "t12_us", "Wff_Hz", "WBN_Hz/T^2", "Tmin_mK", "GammaMax_Hz", "GammaH_Hz"});
  auto cell = [](const FitResult& f, const std::string& n, double scale = 1.0) -> std::string {
    if (!f.has(n)) return "-";
    if (f.is_frozen(n)) return "fixed " + fmt(f.value(n) * scale);
    return fmt(f.value(n) * scale) + " +- " + fmt(f.sigma(n) * scale, 2);
  };
  std::vector<double> law_t12, law_g, law_s;
  const FitResult* rate_fit = nullptr;
  const FitResult* g0_fit = nullptr;
  const FitResult* sd_first = nullptr;  // shortest-t12 GammaSD row
  double sd_t12 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    conv.note(row.fit);
    for (const auto& f : row.fit.flags) flags.push_back(row.label + ":" + f);
    const bool gmax = row.data.observable == Observable::kGammaSD;
    const bool g0 = row.data.observable == Observable::kGamma0;
    t.add({row.label, row.t12, cell(row.fit, "Wff"), cell(row.fit, "WBN"), cell(row.fit, "Tmin", 1e3),
           gmax ? cell(row.fit, "GammaMax") : (g0 ? cell(row.fit, "GammaMaxH") : "-"), cell(row.fit, "GammaH")});
    json jr = {{"row", row.label}, {"t12_s", jobs[i].t12}, {"fit", fit_json(row.fit)}};
    if (provided) jr["input"] = cfg.table1.inputs[i].path.generic_string();
    table_rows.push_back(jr);
    const std::string axis(axis_column(row.data.axis));
    const std::string obs(observable_column(row.data.observable));
    r.files.emplace_back("table1_" + std::to_string(i) + "_" + row.label + ".csv",
                         csv_text({axis, obs, "sigma", "model"}, sweep_overlay(row.data, row.fit, cfg.model)));
    if (gmax && jobs[i].t12 > 0.0) {
      law_t12.push_back(jobs[i].t12);
      law_g.push_back(row.fit.value("GammaMax"));
      law_s.push_back(std::max(row.fit.sigma("GammaMax"), 1e-12 * row.fit.value("GammaMax")));
      if (jobs[i].t12 < sd_t12) {
        sd_t12 = jobs[i].t12;
        sd_first = &row.fit;
      }
    }
    if (row.data.observable == Observable::kR) rate_fit = &row.fit;
    if (g0) g0_fit = &row.fit;
  }

  json results = {{"rows", table_rows}, {"source", provided ? "provided" : "synthetic"}};
  std::string text = "table1 (" + std::string(provided ? "provided" : "synthetic") + " data)\n" + t.str();

  if (law_t12.size() >= 2) {
    const auto law = fit_gamma_max_law(law_t12, law_g, law_s);
    results["gamma_max_law"] = {{"GammaMax0", law.model.GammaMax0},
                                {"GammaMax0_sigma", law.model.GammaMax0 * law.sigma_log_gamma0},
                                {"tau_t12", law.model.tau_t12},
                                {"tau_t12_sigma", law.sigma_tau}};
    text += "GammaMax(t12) law: GammaMax0 = " + fmt(law.model.GammaMax0) + " Hz, tau_t12 = " +
            fmt(law.model.tau_t12 * 1e6) + " us\n";
  }

  // Estimator row mirroring the numerical-estimation line of the table.
  const auto est = compute_estimates(cfg);
  json est_row = json::object();
  for (const auto& row : est.rows)
    if (row.name == "W_BN_estimate" || row.name == "Gamma_NQP" || row.name == "Sigma_ph" || row.name == "b")
      est_row[row.name] = row.value;
  results["estimates"] = est_row;
  for (const auto& f : est.flags) flags.push_back(f);

  // Phase-memory trend from the fitted rows.
  if (rate_fit && g0_fit && sd_first) {
    auto params = to_dependence_params(*rate_fit, {});
    params = to_dependence_params(*g0_fit, params);
    const auto sd = to_dependence_params(*sd_first, {});
    json trend = json::array();
    TextTable tt({"B_T", "Gamma0_Hz", "GammaSD_Hz", "R_per_s", "TM_sqrt_s", "TM_paper_s"});
    double tm_lo = 0.0;
    double tm_hi = 0.0;
    bool literal_bad = false;
    for (const double B : {0.03, 0.3}) {
      ExperimentConditions c = cfg.conditions;
      c.B = B;
      const double R = relaxation_rate(c, params, cfg.model);
      const double g0 = effective_homogeneous_linewidth(c, params, R);
      const double gsd = spectral_diffusion_linewidth(c, sd.GammaMax, sd.Tmin);
      const auto sq = phase_memory_time(g0, gsd, R, TmVariant::kSqrtCorrected);
      const auto lit = phase_memory_time(g0, gsd, R, TmVariant::kLiteral);
      literal_bad = literal_bad || !lit.physical || std::abs(lit.value - sq.value) > 0.1 * sq.value;
      (B < 0.1 ? tm_lo : tm_hi) = sq.value;
      trend.push_back({{"B", B}, {"Gamma0", g0}, {"GammaSD", gsd}, {"R", R}, {"TM_sqrt", sq.value},
                       {"TM_paper", lit.value}, {"TM_paper_physical", lit.physical}});
      tt.add({fmt(B), fmt(g0), fmt(gsd), fmt(R), fmt(sq.value), fmt(lit.value)});
    }
    results["phase_memory_trend"] = trend;
    results["phase_memory_ratio"] = tm_hi / tm_lo;
    if (literal_bad) flags.push_back("tm_literal_variant_discrepancy");
    text += "T_M trend at T = " + fmt(cfg.conditions.T) + " K (ratio " + fmt(tm_hi / tm_lo, 3) + ")\n" + tt.str();
  }

  r.document["results"] = results;
  r.document["flags"] = flags;
  for (const auto& f : flags) text += "flag: " + f + '\n';
  r.table = text;
  r.exit_code = conv.code(cfg);
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------

RunConfig RunConfig::from_json(const json& j, const fs::path& base) {
  RunConfig cfg;
  Section root(j, "");
  if (root.has("conditions")) read_conditions(Section(root.child("conditions"), "conditions"), cfg.conditions);
  if (root.has("model")) {
    Section s(root.child("model"), "model");
    s.read("thermal_divisor", cfg.model.thermal_divisor);
    std::string v = tm_variant_name(cfg.model.tm_variant);
    s.read("tm_variant", v);
    cfg.model.tm_variant = parse_tm_variant(v);
    s.finish();
  }
  if (root.has("material")) {
    Section s(root.child("material"), "material");
    auto& m = cfg.material;
    s.read("c_coeff", m.c_coeff);
    s.read("kappa_coeff", m.kappa_coeff);
    s.read("v", m.v);
    s.read("sigma0", m.sigma0);
    s.read("n_at", m.n_at);
    s.finish();
  }
  if (root.has("estimate")) {
    Section s(root.child("estimate"), "estimate");
    auto& e = cfg.estimate;
    s.read("omega_ref", e.omega_ref);
    s.read("delta_omega", e.delta_omega);
    s.read("tau_ph", e.tau_ph);
    s.read("tau_1d", e.tau_1d);
    s.read("T_bath", e.T_bath);
    s.read("Tmin", e.Tmin);
    s.read("schottky_B", e.schottky_B);
    s.read("schottky_T", e.schottky_T);
    s.read("transport_T", e.transport_T);
    s.read("reference_nqp", e.reference_nqp);
    s.finish();
  }
  if (root.has("simulate")) {
    Section s(root.child("simulate"), "simulate");
    auto& sim = cfg.simulate;
    s.read("kind", sim.kind);
    if (s.has("truth")) read_decay_params(Section(s.child("truth"), s.where("truth")), sim.truth);
    if (s.has("mims")) {
      Section ms(s.child("mims"), s.where("mims"));
      ms.read("A0", sim.mims.A0);
      ms.read("TM", sim.mims.TM);
      ms.read("x", sim.mims.x);
      ms.finish();
    }
    s.read("t12", sim.t12);
    s.read("t23", sim.t23);
    if (s.has("noise")) {
      Section ns(s.child("noise"), s.where("noise"));
      std::string kind = noise_kind_name(sim.noise.kind);
      ns.read("kind", kind);
      sim.noise.kind = parse_noise_kind(kind);
      ns.read("level", sim.noise.level);
      ns.finish();
    }
    if (s.has("sweep")) {
      Section ss(s.child("sweep"), s.where("sweep"));
      auto& sw = sim.sweep;
      sw.enabled = true;
      std::string obs(to_string(sw.observable));
      std::string axis(to_string(sw.axis));
      ss.read("observable", obs);
      ss.read("axis", axis);
      sw.observable = parse_observable(obs);
      sw.axis = parse_axis(axis);
      ss.read("values", sw.values);
      if (ss.has("truth")) read_dependence(Section(ss.child("truth"), ss.where("truth")), sw.truth);
      ss.finish();
    }
    s.finish();
  }
  if (root.has("fit_decay")) {
    Section s(root.child("fit_decay"), "fit_decay");
    auto& f = cfg.fit_decay;
    if (s.has("input")) {
      std::string p;
      s.read("input", p);
      f.input = resolve(base, p);
    }
    s.read("model", f.model);
    s.read("R", f.R);
    s.read("R_sigma", f.R_sigma);
    s.read("propagate_R", f.propagate_R);
    s.finish();
  }
  if (root.has("fit_sweep")) {
    Section s(root.child("fit_sweep"), "fit_sweep");
    std::vector<std::string> inputs;
    s.read("inputs", inputs);
    for (const auto& p : inputs) cfg.fit_sweep.inputs.push_back(resolve(base, p));
    std::map<std::string, double> frozen;
    s.read("frozen", frozen);
    for (const auto& [k, v] : frozen) cfg.fit_sweep.frozen[k] = v;
    s.finish();
  }
  if (root.has("traces")) {
    Section s(root.child("traces"), "traces");
    auto& tc = cfg.traces;
    if (s.has("inputs")) {
      const auto& arr = s.child("inputs");
      if (!arr.is_array()) throw ValidationError("config: 'traces.inputs' must be an array");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        Section is(arr[i], "traces.inputs[" + std::to_string(i) + "]");
        TraceInput in;
        std::string p;
        is.read("path", p);
        in.path = resolve(base, p);
        is.read("t12", in.t12);
        is.read("t23", in.t23);
        if (is.has("gate")) {
          std::array<double, 2> g{};
          is.read("gate", g);
          in.gate = Gate{g[0], g[1]};
        }
        is.finish();
        tc.inputs.push_back(std::move(in));
      }
    }
    s.read("f_if", tc.f_if);
    s.read("lp_cutoff", tc.lp_cutoff);
    s.read("gate_half_width", tc.gate_half_width);
    std::string mode = metric_mode_name(tc.mode);
    s.read("mode", mode);
    if (mode != "peak" && mode != "integral") throw ValidationError("traces.mode must be peak or integral");
    tc.mode = mode == "peak" ? MetricMode::kPeak : MetricMode::kIntegral;
    std::string floor = noise_floor_name(tc.noise_floor);
    s.read("noise_floor", floor);
    if (floor != "off" && floor != "pre-gate") throw ValidationError("traces.noise_floor must be off or pre-gate");
    tc.noise_floor = floor == "off" ? NoiseFloor::kOff : NoiseFloor::kPreGateSubtract;
    s.read("sigma_rel", tc.sigma_rel);
    s.finish();
  }
  if (root.has("table1")) {
    Section s(root.child("table1"), "table1");
    s.read("points", cfg.table1.points);
    s.read("noise_level", cfg.table1.noise_level);
    if (s.has("inputs")) {
      const auto& arr = s.child("inputs");
      if (!arr.is_array()) throw ValidationError("config: 'table1.inputs' must be an array");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        Section is(arr[i], "table1.inputs[" + std::to_string(i) + "]");
        Table1Input in;
        std::string p;
        is.read("path", p);
        in.path = resolve(base, p);
        is.read("t12", in.t12);
        is.finish();
        cfg.table1.inputs.push_back(std::move(in));
      }
    }
    s.finish();
  }
  std::string out;
  root.read("out", out);
  if (!out.empty()) cfg.out_dir = resolve(base, out);
  root.read("seed", cfg.seed);
  root.read("allow_nonconverged", cfg.allow_nonconverged);
  std::vector<std::string> inputs;
  root.read("inputs", inputs);
  for (const auto& p : inputs) cfg.inputs.push_back(resolve(base, p));
  root.finish();
  return cfg;
}

RunConfig RunConfig::load(const fs::path& path) {
  const auto text = read_text_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("config " + path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

// The output directory is left out: it does not affect any result.
json RunConfig::to_json() const {
  json j;
  j["conditions"] = conditions_json(conditions);
  j["model"] = {{"thermal_divisor", model.thermal_divisor}, {"tm_variant", tm_variant_name(model.tm_variant)}};
  j["material"] = {{"c_coeff", material.c_coeff}, {"kappa_coeff", material.kappa_coeff}, {"v", material.v},
                   {"sigma0", material.sigma0},   {"n_at", material.n_at}};
  j["estimate"] = {{"omega_ref", estimate.omega_ref},     {"delta_omega", estimate.delta_omega},
                   {"tau_ph", estimate.tau_ph},           {"tau_1d", estimate.tau_1d},
                   {"T_bath", estimate.T_bath},           {"Tmin", estimate.Tmin},
                   {"schottky_B", estimate.schottky_B},   {"schottky_T", estimate.schottky_T},
                   {"transport_T", estimate.transport_T}, {"reference_nqp", estimate.reference_nqp}};
  json sim = {{"kind", simulate.kind},
              {"truth", decay_params_json(simulate.truth)},
              {"mims", {{"A0", simulate.mims.A0}, {"TM", simulate.mims.TM}, {"x", simulate.mims.x}}},
              {"t12", simulate.t12},
              {"t23", simulate.t23.empty() ? default_t23() : simulate.t23},
              {"noise", {{"kind", noise_kind_name(simulate.noise.kind)}, {"level", simulate.noise.level}}}};
  if (simulate.sweep.enabled)
    sim["sweep"] = {{"observable", to_string(simulate.sweep.observable)},
                    {"axis", to_string(simulate.sweep.axis)},
                    {"values", simulate.sweep.values},
                    {"truth", dependence_json(simulate.sweep.truth)}};
  j["simulate"] = sim;
  json fd = {{"model", fit_decay.model}, {"R", fit_decay.R}, {"R_sigma", fit_decay.R_sigma},
             {"propagate_R", fit_decay.propagate_R}};
  if (fit_decay.input) fd["input"] = fit_decay.input->generic_string();
  j["fit_decay"] = fd;
  j["fit_sweep"] = {{"inputs", path_strings(fit_sweep.inputs)}, {"frozen", named_json(fit_sweep.frozen)}};
  json tin = json::array();
  for (const auto& in : traces.inputs) {
    json t = {{"path", in.path.generic_string()}, {"t12", in.t12}, {"t23", in.t23}};
    if (in.gate) t["gate"] = {in.gate->start, in.gate->end};
    tin.push_back(t);
  }
  j["traces"] = {{"inputs", tin},
                 {"f_if", traces.f_if},
                 {"lp_cutoff", traces.lp_cutoff},
                 {"gate_half_width", traces.gate_half_width},
                 {"mode", metric_mode_name(traces.mode)},
                 {"noise_floor", noise_floor_name(traces.noise_floor)},
                 {"sigma_rel", traces.sigma_rel}};
  json t1in = json::array();
  for (const auto& in : table1.inputs) t1in.push_back({{"path", in.path.generic_string()}, {"t12", in.t12}});
  j["table1"] = {{"points", table1.points}, {"noise_level", table1.noise_level}, {"inputs", t1in}};
  j["seed"] = seed;
  j["allow_nonconverged"] = allow_nonconverged;
  j["inputs"] = path_strings(inputs);
  return j;
}

void RunConfig::validate() const {
  conditions.validate();
  model.validate();
  material.validate();
  simulate.truth.validate();
  simulate.mims.validate();
  simulate.noise.validate();
  if (simulate.kind != "3PE" && simulate.kind != "2PE" && simulate.kind != "mims")
    throw ValidationError("simulate.kind must be 3PE, 2PE or mims");
  if (simulate.t12.empty()) throw ValidationError("simulate.t12 must not be empty");
  if (simulate.sweep.enabled) simulate.sweep.truth.validate();
  if (table1.points < kMinSweepPoints) throw ValidationError("table1.points is below the sweep minimum");
  if (!(table1.noise_level >= 0.0)) throw ValidationError("table1.noise_level must be >= 0");
  if (!(traces.sigma_rel > 0.0)) throw ValidationError("traces.sigma_rel must be > 0");
  auto must_exist = [](const fs::path& p) {
    if (!fs::exists(p)) throw ValidationError("input file does not exist: " + p.string());
  };
  for (const auto& p : inputs) must_exist(p);
  if (fit_decay.input) must_exist(*fit_decay.input);
  for (const auto& p : fit_sweep.inputs) must_exist(p);
  for (const auto& in : traces.inputs) must_exist(in.path);
  for (const auto& in : table1.inputs) must_exist(in.path);
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Report run_command(std::string_view command, const RunConfig& config) {
  config.validate();
  Report r;
  if (command == "simulate") r = cmd_simulate(config);
  else if (command == "fit-decay") r = cmd_fit_decay(config);
  else if (command == "fit-sweep") r = cmd_fit_sweep(config);
  else if (command == "extract-traces") r = cmd_extract_traces(config);
  else if (command == "estimate") r = cmd_estimate(config);
  else if (command == "table1") r = cmd_table1(config);
  else throw ValidationError("unknown command '" + std::string(command) + "'");

  r.command = std::string(command);
  const json cfg = config.to_json();
  r.document["command"] = r.command;
  r.document["exit_code"] = static_cast<int>(r.exit_code);
  if (!r.document.contains("flags")) r.document["flags"] = json::array();
  r.document["provenance"] = {{"config", cfg},
                              {"config_hash", "fnv1a64:" + fnv1a_hex(cfg.dump())},
                              {"seed", config.seed},
                              {"version", std::string(kVersion)},
                              {"rng", std::string(kRngVersion)}};
  std::string header = "echolab " + std::string(kVersion) + " " + r.command + ", seed " +
                       std::to_string(config.seed) + ", config fnv1a64:" + fnv1a_hex(cfg.dump()) + "\n\n";
  r.table = header + r.table;
  return r;
}

void write_report(const Report& report, const RunConfig& config) {
  std::error_code ec;
  fs::create_directories(config.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + config.out_dir.string() + ": " + ec.message());
  write_text_file(config.out_dir / "report.json", report.document.dump(2) + "\n");
  write_text_file(config.out_dir / "report.txt", report.table);
  for (const auto& [name, text] : report.files) write_text_file(config.out_dir / name, text);
}

}  // namespace echolab
