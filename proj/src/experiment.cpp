#include "lbr/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "lbr/errors.hpp"
#include "lbr/tradeoff.hpp"
#include "parallel.hpp"

namespace lbr {

using nlohmann::json;

std::vector<double> ThresholdGrid::expand() const {
  if (!values.empty()) return values;
  std::vector<double> out;
  const auto count = static_cast<std::int64_t>(std::floor((stop - start) / step + 1e-9));
  for (std::int64_t i = 0; i <= count; ++i) out.push_back(start + double(i) * step);
  return out;
}

bool operator==(const RouterConfig& a, const RouterConfig& b) {
  return a.n == b.n && a.m == b.m && a.m_active == b.m_active && a.alpha == b.alpha &&
         a.beta == b.beta && a.epsilon == b.epsilon;
}

bool operator==(const EvalPolicy& a, const EvalPolicy& b) {
  return a.form == b.form && a.path == b.path && a.tolerance == b.tolerance && a.max_terms == b.max_terms;
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return a.router == b.router && a.traffic == b.traffic && a.policy == b.policy &&
         a.scaling == b.scaling && a.bounds == b.bounds && a.sim == b.sim && a.sweep == b.sweep &&
         a.power == b.power && a.tradeoff == b.tradeoff && a.output == b.output;
}

TrafficSpec ExperimentConfig::traffic_spec() const {
  const int n = router.n;
  if (traffic.load) return TrafficSpec::uniform(n, *traffic.load, traffic.sigma_ik, traffic.sigma);
  if (static_cast<int>(traffic.rates.size()) != n)
    throw ConfigError("traffic.rates must have n = " + std::to_string(n) + " rows");
  std::vector<double> flat;
  for (const auto& row : traffic.rates) {
    if (static_cast<int>(row.size()) != n) throw ConfigError("traffic.rates rows must have n entries");
    flat.insert(flat.end(), row.begin(), row.end());
  }
  return TrafficSpec(n, flat, std::vector<double>(flat.size(), traffic.sigma_ik), traffic.sigma);
}

PowerModel ExperimentConfig::power_model() const {
  if (power.kind == "table") return PowerModel::table(power.table);
  return PowerModel::affine(power.w0, power.w1, router.m);
}

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <class T>
void read(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

std::string form_name(ChernoffForm f) { return f == ChernoffForm::tight ? "tight" : "loose"; }
std::string path_name(SumPath p) { return p == SumPath::numeric ? "numeric" : "closed_form"; }
std::string scaling_name(ScalingReading r) { return r == ScalingReading::active ? "active" : "full"; }

template <class E>
E pick(const std::string& s, const std::map<std::string, E>& names, const std::string& what) {
  const auto it = names.find(s);
  if (it == names.end()) throw ConfigError("unknown " + what + " '" + s + "'");
  return it->second;
}

ThresholdGrid parse_grid(const json& j, const std::string& where) {
  ThresholdGrid g;
  if (j.is_array()) {
    g.values = j.get<std::vector<double>>();
    if (g.values.empty()) throw ConfigError(where + " must not be empty");
    return g;
  }
  check_keys(j, {"start", "stop", "step"}, where);
  read(j, "start", g.start);
  read(j, "stop", g.stop);
  read(j, "step", g.step);
  if (!(g.step > 0.0) || !(g.stop >= g.start)) throw ConfigError(where + " needs step > 0 and stop >= start");
  return g;
}

json grid_json(const ThresholdGrid& g) {
  if (!g.values.empty()) return g.values;
  return {{"start", g.start}, {"stop", g.stop}, {"step", g.step}};
}

ExperimentConfig parse_checked(const json& j) {
  ExperimentConfig c;
  check_keys(j, {"router", "traffic", "policy", "bounds", "sim", "sweep", "power", "tradeoff", "output"},
             "config");

  if (j.contains("router")) {
    const json& r = j.at("router");
    check_keys(r, {"n", "m", "m_active", "alpha", "beta", "epsilon"}, "router");
    read(r, "n", c.router.n);
    read(r, "m", c.router.m);
    c.router.m_active = c.router.m;
    read(r, "m_active", c.router.m_active);
    read(r, "alpha", c.router.alpha);
    read(r, "beta", c.router.beta);
    read(r, "epsilon", c.router.epsilon);
  }
  c.router.validate();

  if (j.contains("traffic")) {
    const json& t = j.at("traffic");
    check_keys(t, {"load", "rates", "sigma", "sigma_ik"}, "traffic");
    if (t.contains("load") && t.contains("rates")) throw ConfigError("traffic: give either load or rates");
    if (t.contains("rates")) {
      c.traffic.load.reset();
      c.traffic.rates = t.at("rates").get<std::vector<std::vector<double>>>();
    }
    if (t.contains("load")) c.traffic.load = t.at("load").get<double>();
    read(t, "sigma", c.traffic.sigma);
    read(t, "sigma_ik", c.traffic.sigma_ik);
  }
  if (c.traffic.load && !(*c.traffic.load >= 0.0 && *c.traffic.load <= 1.0 + kRateTolerance))
    throw ConfigError("traffic.load must be in [0, 1]");
  c.traffic_spec();

  if (j.contains("policy")) {
    const json& p = j.at("policy");
    check_keys(p, {"form", "path", "tolerance", "max_terms", "scaling"}, "policy");
    if (p.contains("form"))
      c.policy.form = pick<ChernoffForm>(p.at("form").get<std::string>(),
                                         {{"tight", ChernoffForm::tight}, {"loose", ChernoffForm::loose}}, "form");
    if (p.contains("path"))
      c.policy.path = pick<SumPath>(p.at("path").get<std::string>(),
                                    {{"numeric", SumPath::numeric}, {"closed_form", SumPath::closed_form}}, "path");
    read(p, "tolerance", c.policy.tolerance);
    read(p, "max_terms", c.policy.max_terms);
    if (p.contains("scaling"))
      c.scaling = pick<ScalingReading>(
          p.at("scaling").get<std::string>(),
          {{"active", ScalingReading::active}, {"full", ScalingReading::full}}, "scaling");
  }
  c.policy.validate();

  if (j.contains("bounds")) {
    const json& b = j.at("bounds");
    check_keys(b, {"curves", "thresholds", "sigma_k"}, "bounds");
    if (b.contains("curves")) {
      c.bounds.curves.clear();
      for (const auto& name : b.at("curves").get<std::vector<std::string>>())
        c.bounds.curves.push_back(curve_kind_from_string(name));
      if (c.bounds.curves.empty()) throw ConfigError("bounds.curves must not be empty");
    }
    if (b.contains("thresholds")) c.bounds.thresholds = parse_grid(b.at("thresholds"), "bounds.thresholds");
    read(b, "sigma_k", c.bounds.sigma_k);
  }

  if (j.contains("sim")) {
    const json& s = j.at("sim");
    check_keys(s, {"seed", "horizon", "warmup", "thresholds"}, "sim");
    read(s, "seed", c.sim.seed);
    read(s, "horizon", c.sim.horizon);
    if (s.contains("warmup") && !s.at("warmup").is_null()) c.sim.warmup = s.at("warmup").get<std::int64_t>();
    if (s.contains("thresholds")) c.sim.thresholds = parse_grid(s.at("thresholds"), "sim.thresholds");
  }
  if (c.sim.horizon < 0 || (c.sim.warmup && (*c.sim.warmup < 0 || *c.sim.warmup > c.sim.horizon)))
    throw ConfigError("sim: need horizon >= warmup >= 0");

  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    check_keys(s, {"param", "values"}, "sweep");
    read(s, "param", c.sweep.param);
    read(s, "values", c.sweep.values);
    static const std::set<std::string> params{"none", "speedup", "alpha", "beta", "m_active"};
    if (!params.count(c.sweep.param)) throw ConfigError("unknown sweep.param '" + c.sweep.param + "'");
  }

  if (j.contains("power")) {
    const json& p = j.at("power");
    check_keys(p, {"kind", "w0", "w1", "table"}, "power");
    read(p, "kind", c.power.kind);
    read(p, "w0", c.power.w0);
    read(p, "w1", c.power.w1);
    read(p, "table", c.power.table);
    if (c.power.kind != "affine" && c.power.kind != "table")
      throw ConfigError("unknown power.kind '" + c.power.kind + "'");
  }
  c.power_model();

  if (j.contains("tradeoff")) {
    const json& t = j.at("tradeoff");
    check_keys(t, {"mode", "target", "loads", "delay_budget"}, "tradeoff");
    read(t, "mode", c.tradeoff.mode);
    read(t, "target", c.tradeoff.target);
    read(t, "loads", c.tradeoff.loads);
    if (t.contains("delay_budget") && !t.at("delay_budget").is_null())
      c.tradeoff.delay_budget = t.at("delay_budget").get<double>();
    if (c.tradeoff.mode != "frontier" && c.tradeoff.mode != "lookup")
      throw ConfigError("unknown tradeoff.mode '" + c.tradeoff.mode + "'");
    if (!(c.tradeoff.target > 0.0 && c.tradeoff.target < 1.0)) throw ConfigError("tradeoff.target must be in (0, 1)");
  }

  if (j.contains("output")) {
    const json& o = j.at("output");
    check_keys(o, {"path", "format"}, "output");
    read(o, "path", c.output.path);
    read(o, "format", c.output.format);
    if (c.output.format != "csv") throw ConfigError("output.format must be csv");
  }
  return c;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  try {
    return parse_checked(j);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["router"] = {{"n", c.router.n},         {"m", c.router.m},       {"m_active", c.router.m_active},
                 {"alpha", c.router.alpha}, {"beta", c.router.beta}, {"epsilon", c.router.epsilon}};
  json t = {{"sigma", c.traffic.sigma}, {"sigma_ik", c.traffic.sigma_ik}};
  if (c.traffic.load)
    t["load"] = *c.traffic.load;
  else
    t["rates"] = c.traffic.rates;
  j["traffic"] = t;
  j["policy"] = {{"form", form_name(c.policy.form)},
                 {"path", path_name(c.policy.path)},
                 {"tolerance", c.policy.tolerance},
                 {"max_terms", c.policy.max_terms},
                 {"scaling", scaling_name(c.scaling)}};
  json curves = json::array();
  for (CurveKind k : c.bounds.curves) curves.push_back(to_string(k));
  j["bounds"] = {{"curves", curves}, {"thresholds", grid_json(c.bounds.thresholds)}, {"sigma_k", c.bounds.sigma_k}};
  j["sim"] = {{"seed", c.sim.seed},
              {"horizon", c.sim.horizon},
              {"warmup", c.sim.warmup ? json(*c.sim.warmup) : json(nullptr)},
              {"thresholds", grid_json(c.sim.thresholds)}};
  j["sweep"] = {{"param", c.sweep.param}, {"values", c.sweep.values}};
  j["power"] = {{"kind", c.power.kind}, {"w0", c.power.w0}, {"w1", c.power.w1}, {"table", c.power.table}};
  j["tradeoff"] = {{"mode", c.tradeoff.mode},
                   {"target", c.tradeoff.target},
                   {"loads", c.tradeoff.loads},
                   {"delay_budget", std::isinf(c.tradeoff.delay_budget) ? json(nullptr) : json(c.tradeoff.delay_budget)}};
  j["output"] = {{"path", c.output.path}, {"format", c.output.format}};
  return j;
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.router = {20, 80, 80, 2.0, 2.0, 0.05};
  c.traffic.load = 1.0;
  c.policy = EvalPolicy{};
  c.bounds.curves = {CurveKind::middle_q};
  c.bounds.thresholds = {{}, 1.0, 100.0, 1.0};
  if (name == "figure2") {
    c.sweep = {"speedup", {2.0, 3.0, 4.0, 5.0}};
  } else if (name == "figure3") {
    // Mesh links at 1/20 packet per slot.
    c.router.alpha = 4.0;
    c.router.beta = 4.0;
    c.sweep = {"m_active", {40.0, 50.0, 60.0, 70.0, 80.0}};
  } else {
    throw ConfigError("unknown preset '" + name + "' (figure2, figure3)");
  }
  return c;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.8e", v);
  return buf;
}

namespace {

std::string format_threshold(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_meta(std::ostream& out, const std::string& command, const ExperimentConfig& c) {
  out << "# lbr " << kToolVersion << " command=" << command << " config=" << to_json(c).dump() << "\n";
}

struct SweepEntry {
  std::string label;
  RouterConfig router;
};

std::vector<SweepEntry> sweep_entries(const ExperimentConfig& c) {
  std::vector<SweepEntry> out;
  if (c.sweep.param == "none" || c.sweep.values.empty()) {
    out.push_back({"", c.router});
    return out;
  }
  for (double v : c.sweep.values) {
    SweepEntry e{c.sweep.param + "=" + format_threshold(v), c.router};
    if (c.sweep.param == "speedup") {
      e.router.alpha = v;
      e.router.beta = v;
    } else if (c.sweep.param == "alpha") {
      e.router.alpha = v;
    } else if (c.sweep.param == "beta") {
      e.router.beta = v;
    } else {
      if (v != std::floor(v)) throw ConfigError("sweep over m_active needs integer values");
      e.router.m_active = static_cast<int>(v);
    }
    e.router.validate();
    out.push_back(e);
  }
  return out;
}

std::string curve_id(CurveKind k, const std::string& label) {
  return label.empty() ? to_string(k) : to_string(k) + "@" + label;
}

void write_curve(std::ostream& out, const std::string& id, const TailCurve& curve, bool samples) {
  for (const TailPoint& p : curve.points) {
    out << id << "," << format_threshold(p.threshold) << "," << format_number(p.probability) << ","
        << format_number(p.log10_probability);
    if (samples) out << "," << curve.samples;
    out << "\n";
  }
}

std::int64_t warmup_of(const ExperimentConfig& c) {
  return c.sim.warmup ? *c.sim.warmup : c.sim.horizon / 10;
}

}  // namespace

int cmd_bounds(const ExperimentConfig& c, std::ostream& out, std::ostream& log) {
  const TrafficSpec spec = c.traffic_spec();
  const double r_bar = max_load(spec);
  const std::vector<SweepEntry> entries = sweep_entries(c);
  const std::vector<double> thresholds = c.bounds.thresholds.expand();
  const OutputStage stage{c.router.epsilon, c.bounds.sigma_k};

  struct Result {
    std::vector<TailCurve> curves;
    std::string infeasible;
  };
  std::vector<Result> results(entries.size());
  detail::parallel_for(entries.size(), 0, [&](std::size_t e) {
    CanonicalParams p;
    try {
      p = canonicalize(entries[e].router, r_bar, spec.sigma(), c.scaling);
    } catch (const OverloadError& err) {
      results[e].infeasible = err.what();
      return;
    }
    BoundEvaluator eval(p, c.policy);
    for (CurveKind k : c.bounds.curves) results[e].curves.push_back(tail_curve(k, thresholds, eval, stage));
  });

  write_meta(out, "bounds", c);
  out << "curve_id,threshold,probability,log10_probability\n";
  int status = kExitOk;
  for (std::size_t e = 0; e < entries.size(); ++e) {
    const Result& r = results[e];
    if (!r.infeasible.empty()) {
      for (CurveKind k : c.bounds.curves) out << curve_id(k, entries[e].label) << ",,infeasible,\n";
      log << "infeasible " << (entries[e].label.empty() ? "base config" : entries[e].label) << ": "
          << r.infeasible << "\n";
      status = kExitInfeasible;
      continue;
    }
    for (std::size_t k = 0; k < r.curves.size(); ++k) {
      const std::string id = curve_id(c.bounds.curves[k], entries[e].label);
      if (r.curves[k].truncation_cap_reached)
        log << "warning: " << id << " hit the term cap; values are not bounds\n";
      write_curve(out, id, r.curves[k], false);
    }
  }
  return status;
}

namespace {

TailStats simulate(const ExperimentConfig& c, std::ostream& log) {
  const TrafficSpec spec = c.traffic_spec();
  const AdmissibilityReport rep = validate_admissible(spec, c.router);
  if (!rep.ok()) {
    log << "refusing to simulate inadmissible traffic:\n" << rep.describe() << "\n";
    throw ConfigError("inadmissible traffic");
  }
  return run(c.router, spec, c.sim.seed, c.sim.horizon, warmup_of(c));
}

}  // namespace

int cmd_simulate(const ExperimentConfig& c, std::ostream& out, std::ostream& log) {
  const TailStats stats = simulate(c, log);
  const std::vector<double> thresholds = c.sim.thresholds.expand();

  write_meta(out, "simulate", c);
  out << "curve_id,threshold,probability,log10_probability,samples\n";
  for (Quantity q : kAllQuantities) {
    if (stats.at(q).total == 0) continue;
    write_curve(out, to_string(q), empirical_tail(stats, q, thresholds), true);
  }
  for (Quantity q : kAllQuantities) {
    const Histogram& h = stats.at(q);
    out << "# summary " << to_string(q) << " samples=" << h.total << " mean=" << format_number(h.mean())
        << " max=" << h.max_value << "\n";
  }
  const char* stage[] = {"input", "middle", "output"};
  for (int s = 0; s < 3; ++s)
    out << "# summary max_queue_" << stage[s] << " first_half=" << stats.max_queue_first_half[s]
        << " second_half=" << stats.max_queue_second_half[s] << "\n";
  return kExitOk;
}

int cmd_validate(const ExperimentConfig& c, std::ostream& out, std::ostream& log, double log_bias) {
  const TailStats stats = simulate(c, log);
  ValidationOptions opts;
  opts.thresholds = c.sim.thresholds.expand();
  opts.policy = c.policy;
  opts.reading = c.scaling;
  opts.log_bias = log_bias;
  const ValidationReport rep = validate_against_bounds(stats, c.router, c.traffic_spec(), opts);

  write_meta(out, "validate", c);
  out << "quantity,threshold,empirical,bound,std_error,samples,verdict\n";
  for (const ValidationRow& r : rep.rows) {
    out << to_string(r.quantity) << "," << format_threshold(r.threshold) << "," << format_number(r.empirical)
        << "," << format_number(r.bound) << "," << format_number(r.std_error) << "," << r.samples << ","
        << (r.pass ? "PASS" : "FAIL") << "\n";
  }
  out << "# result " << (rep.ok() ? "PASS" : "FAIL") << " checked=" << rep.rows.size()
      << " failures=" << rep.failures() << "\n";
  log << (rep.ok() ? "PASS" : "FAIL") << ": " << rep.rows.size() << " checks, " << rep.failures()
      << " failures\n";
  return rep.ok() ? kExitOk : kExitValidation;
}

int cmd_tradeoff(const ExperimentConfig& c, std::ostream& out, std::ostream& log) {
  const PowerModel power = c.power_model();
  FrontierOptions opts;
  opts.policy = c.policy;
  opts.reading = c.scaling;
  opts.sigma = c.traffic.sigma;
  auto opt_str = [](const auto& v) { return v ? std::to_string(*v) : std::string(); };

  if (c.tradeoff.mode == "lookup") {
    const auto rows = lookup_table(c.router, power, c.tradeoff.loads, c.tradeoff.target, c.tradeoff.delay_budget, opts);
    write_meta(out, "tradeoff", c);
    out << "load,m_active,power,delay_bound,meets_budget\n";
    int status = kExitOk;
    for (const LookupRow& r : rows) {
      out << format_threshold(r.load) << "," << opt_str(r.m_active) << ","
          << (r.m_active ? format_number(r.power) : std::string()) << "," << opt_str(r.delay_bound) << ","
          << (r.m_active ? "true" : "false") << "\n";
      if (!r.m_active) {
        log << "load " << r.load << ": delay budget cannot be met\n";
        status = kExitInfeasible;
      }
    }
    return status;
  }

  std::vector<FrontierPoint> points;
  try {
    points = frontier(c.router, c.traffic_spec(), power, c.tradeoff.target, opts);
  } catch (const OverloadError& e) {
    write_meta(out, "tradeoff", c);
    out << "m_active,power,delay_bound,queue_bound,feasible\n";
    log << e.what() << "\n";
    return kExitInfeasible;
  }
  write_meta(out, "tradeoff", c);
  out << "m_active,power,delay_bound,queue_bound,feasible\n";
  for (const FrontierPoint& p : points) {
    out << p.m_active << "," << format_number(p.power) << "," << opt_str(p.delay_bound) << ","
        << opt_str(p.queue_bound) << "," << (p.feasible ? "true" : "false") << "\n";
  }
  return kExitOk;
}

}  // namespace lbr
