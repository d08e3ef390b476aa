#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lbr/bounds.hpp"
#include "lbr/model.hpp"
#include "lbr/sim.hpp"

namespace lbr {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitStatus { kExitOk = 0, kExitConfig = 1, kExitInfeasible = 2, kExitValidation = 3 };

/// Either an explicit list or start:stop:step (stop included).
struct ThresholdGrid {
  std::vector<double> values;
  double start = 1.0;
  double stop = 100.0;
  double step = 1.0;

  std::vector<double> expand() const;
  bool operator==(const ThresholdGrid&) const = default;
};

struct ExperimentConfig {
  RouterConfig router;

  struct Traffic {
    std::optional<double> load = 1.0;      // uniform load, or
    std::vector<std::vector<double>> rates;  // an explicit n x n matrix
    double sigma = 0.0;
    double sigma_ik = 0.0;
    bool operator==(const Traffic&) const = default;
  } traffic;

  EvalPolicy policy;
  ScalingReading scaling = ScalingReading::active;

  struct Bounds {
    std::vector<CurveKind> curves{CurveKind::middle_q};
    ThresholdGrid thresholds;
    double sigma_k = 0.0;
    bool operator==(const Bounds&) const = default;
  } bounds;

  struct Sim {
    std::uint64_t seed = 1;
    std::int64_t horizon = 1'000'000;
    std::optional<std::int64_t> warmup;  // a tenth of the horizon when unset
    ThresholdGrid thresholds{{}, 0.0, 50.0, 1.0};
    bool operator==(const Sim&) const = default;
  } sim;

  struct Sweep {
    std::string param = "none";  // none, speedup, alpha, beta, m_active
    std::vector<double> values;
    bool operator==(const Sweep&) const = default;
  } sweep;

  struct Power {
    std::string kind = "affine";  // affine or table
    double w0 = 0.0;
    double w1 = 1.0;
    std::vector<double> table;
    bool operator==(const Power&) const = default;
  } power;

  struct Tradeoff {
    std::string mode = "frontier";  // frontier or lookup
    double target = 1e-6;
    std::vector<double> loads{0.25, 0.5, 0.75, 1.0};
    double delay_budget = std::numeric_limits<double>::infinity();
    bool operator==(const Tradeoff&) const = default;
  } tradeoff;

  struct Output {
    std::string path = "-";
    std::string format = "csv";
    bool operator==(const Output&) const = default;
  } output;

  TrafficSpec traffic_spec() const;
  PowerModel power_model() const;
};

bool operator==(const RouterConfig& a, const RouterConfig& b);
bool operator==(const EvalPolicy& a, const EvalPolicy& b);
bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

/// Unknown keys and ill-typed values raise ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& c);

// figure2 or figure3.
ExperimentConfig preset(const std::string& name);

/// Subcommands. Each writes a CSV table to out and returns an ExitStatus.
/// Progress and diagnostics go to log.
int cmd_bounds(const ExperimentConfig& c, std::ostream& out, std::ostream& log);
int cmd_simulate(const ExperimentConfig& c, std::ostream& out, std::ostream& log);
int cmd_validate(const ExperimentConfig& c, std::ostream& out, std::ostream& log,
                 double log_bias = 0.0);
int cmd_tradeoff(const ExperimentConfig& c, std::ostream& out, std::ostream& log);

// "%.8e", with inf and nan spelled out.
std::string format_number(double v);

}  // namespace lbr
