#include "trustdecay/harness/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "trustdecay/error.hpp"
#include "trustdecay/harness/csv.hpp"
#include "trustdecay/harness/parallel.hpp"
#include "trustdecay/rng.hpp"
#include "trustdecay/simulation.hpp"

namespace trustdecay {
namespace {

// Re-labels precondition failures raised while interpreting configuration.
template <class F>
auto as_config_error(const std::string& field, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(field, e.what());
  }
}

bool valid_label(const std::string& label) {
  if (label.empty()) return false;
  return std::all_of(label.begin(), label.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '-';
  });
}

void set_double(Config& cfg, const std::string& key, double v) { cfg.set(key, format_double(v)); }
void set_size(Config& cfg, const std::string& key, std::size_t v) { cfg.set(key, std::to_string(v)); }
void set_doubles(Config& cfg, const std::string& key, const std::vector<double>& v) {
  cfg.set(key, join_doubles(v));
}

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace

EnvironmentSpec environment_from_config(const Config& cfg) {
  EnvironmentSpec spec;
  spec.kind = as_config_error("env.kind", [&] { return parse_environment_kind(cfg.get_string("env.kind")); });
  spec.T = cfg.get_size("env.T");
  spec.outliers = cfg.get_size("env.outliers", 0);
  switch (spec.kind) {
    case EnvironmentKind::two_expert_switch: {
      TwoExpertParams p;
      p.switches = cfg.get_size("env.K", p.switches);
      p.segment_length = cfg.get_size("env.L", p.segment_length);
      p.stress_window = cfg.get_size("env.H", p.stress_window);
      p.delta = cfg.get_double("env.delta", p.delta);
      spec.params = p;
      break;
    }
    case EnvironmentKind::gaussian_drift: {
      GaussianDriftParams p;
      p.schedule = as_config_error("env.schedule", [&] {
        return parse_mean_schedule(cfg.get_string("env.schedule", "constant"));
      });
      p.mu0 = cfg.get_doubles("env.mu0");
      p.mu1 = cfg.get_doubles("env.mu1");
      p.step = cfg.get_doubles("env.step");
      p.sd = cfg.get_doubles("env.sd");
      p.period = cfg.get_size("env.period", p.period);
      p.amplitude = cfg.get_double("env.amplitude", p.amplitude);
      p.wave_period = cfg.get_size("env.wave_period", p.wave_period);
      p.wave_direction = cfg.get_doubles("env.wave_direction");
      p.loss_bias = cfg.get_double("env.loss_bias", p.loss_bias);
      p.loss_scale = cfg.get_double("env.loss_scale", p.loss_scale);
      spec.params = p;
      break;
    }
    case EnvironmentKind::stationary: {
      StationaryParams p;
      p.model = as_config_error("env.model", [&] {
        return parse_loss_model(cfg.get_string("env.model", "linear"));
      });
      p.means = cfg.get_doubles("env.means");
      p.target = cfg.get_doubles("env.target");
      p.noise_sd = cfg.get_double("env.noise_sd", p.noise_sd);
      p.stress = cfg.get_doubles("env.stress");
      p.require_stress = cfg.get_bool("env.require_stress", p.require_stress);
      spec.params = p;
      break;
    }
    case EnvironmentKind::volatility_regime: {
      VolatilityParams p;
      p.mu_low = cfg.get_doubles("env.mu_low");
      p.sd_low = cfg.get_doubles("env.sd_low");
      p.mu_high = cfg.get_doubles("env.mu_high");
      p.sd_high = cfg.get_doubles("env.sd_high");
      p.regime_length = cfg.get_size("env.regime_length", p.regime_length);
      p.stress_bound = cfg.get_double("env.stress_bound", p.stress_bound);
      p.vol_ref = cfg.get_double("env.vol_ref", p.vol_ref);
      p.loss_bias = cfg.get_double("env.loss_bias", p.loss_bias);
      p.loss_scale = cfg.get_double("env.loss_scale", p.loss_scale);
      spec.params = p;
      break;
    }
    case EnvironmentKind::adversarial_a:
    case EnvironmentKind::adversarial_b:
      spec.params = AdversarialParams{};
      break;
  }
  as_config_error("env", [&] { spec.validate(); });
  return spec;
}

void environment_to_config(const EnvironmentSpec& spec, Config& cfg) {
  cfg.set("env.kind", std::string(to_string(spec.kind)));
  set_size(cfg, "env.T", spec.T);
  set_size(cfg, "env.outliers", spec.outliers);
  if (const auto* p = std::get_if<TwoExpertParams>(&spec.params)) {
    set_size(cfg, "env.K", p->switches);
    set_size(cfg, "env.L", p->segment_length);
    set_size(cfg, "env.H", p->stress_window);
    set_double(cfg, "env.delta", p->delta);
  } else if (const auto* p = std::get_if<GaussianDriftParams>(&spec.params)) {
    cfg.set("env.schedule", std::string(to_string(p->schedule)));
    set_doubles(cfg, "env.mu0", p->mu0);
    set_doubles(cfg, "env.mu1", p->mu1);
    set_doubles(cfg, "env.step", p->step);
    set_doubles(cfg, "env.sd", p->sd);
    set_size(cfg, "env.period", p->period);
    set_double(cfg, "env.amplitude", p->amplitude);
    set_size(cfg, "env.wave_period", p->wave_period);
    set_doubles(cfg, "env.wave_direction", p->wave_direction);
    set_double(cfg, "env.loss_bias", p->loss_bias);
    set_double(cfg, "env.loss_scale", p->loss_scale);
  } else if (const auto* p = std::get_if<StationaryParams>(&spec.params)) {
    cfg.set("env.model", std::string(to_string(p->model)));
    set_doubles(cfg, "env.means", p->means);
    set_doubles(cfg, "env.target", p->target);
    set_double(cfg, "env.noise_sd", p->noise_sd);
    set_doubles(cfg, "env.stress", p->stress);
    cfg.set("env.require_stress", p->require_stress ? "true" : "false");
  } else if (const auto* p = std::get_if<VolatilityParams>(&spec.params)) {
    set_doubles(cfg, "env.mu_low", p->mu_low);
    set_doubles(cfg, "env.sd_low", p->sd_low);
    set_doubles(cfg, "env.mu_high", p->mu_high);
    set_doubles(cfg, "env.sd_high", p->sd_high);
    set_size(cfg, "env.regime_length", p->regime_length);
    set_double(cfg, "env.stress_bound", p->stress_bound);
    set_double(cfg, "env.vol_ref", p->vol_ref);
    set_double(cfg, "env.loss_bias", p->loss_bias);
    set_double(cfg, "env.loss_scale", p->loss_scale);
  }
}

LearnerConfig learner_from_config(const Config& cfg, const std::string& label) {
  const std::string prefix = "learner." + label + ".";
  LearnerConfig c;
  c.kind = as_config_error(prefix + "kind", [&] {
    return parse_learner_kind(cfg.get_string(prefix + "kind", label));
  });
  c.eta = cfg.get_double(prefix + "eta", c.eta);
  c.tilt.mode = as_config_error(prefix + "tilt", [&] {
    return parse_tilt_mode(cfg.get_string(prefix + "tilt", std::string(to_string(c.tilt.mode))));
  });
  c.tilt.kappa = cfg.get_double(prefix + "kappa", c.tilt.kappa);
  c.tilt.lambda = cfg.get_double(prefix + "lambda", c.tilt.lambda);
  c.tilt.window = cfg.get_size(prefix + "window", c.tilt.window);
  c.stress_window = cfg.get_size(prefix + "stress_window", c.stress_window);
  c.exploration = cfg.get_double(prefix + "exploration", c.exploration);
  c.ons_alpha = cfg.get_double(prefix + "ons_alpha", c.ons_alpha);
  c.share_alpha = cfg.get_double(prefix + "share_alpha", c.share_alpha);
  c.lambda_max = cfg.get_double(prefix + "lambda_max", c.lambda_max);
  c.grid_points = cfg.get_size(prefix + "grid_points", c.grid_points);
  c.eta_master = cfg.get_double(prefix + "eta_master", c.eta_master);
  as_config_error("learner." + label, [&] { c.validate(); });
  return c;
}

void learner_to_config(const LearnerConfig& c, const std::string& label, Config& cfg) {
  const std::string prefix = "learner." + label + ".";
  cfg.set(prefix + "kind", std::string(to_string(c.kind)));
  set_double(cfg, prefix + "eta", c.eta);
  cfg.set(prefix + "tilt", std::string(to_string(c.tilt.mode)));
  set_double(cfg, prefix + "kappa", c.tilt.kappa);
  set_double(cfg, prefix + "lambda", c.tilt.lambda);
  set_size(cfg, prefix + "window", c.tilt.window);
  set_size(cfg, prefix + "stress_window", c.stress_window);
  set_double(cfg, prefix + "exploration", c.exploration);
  set_double(cfg, prefix + "ons_alpha", c.ons_alpha);
  set_double(cfg, prefix + "share_alpha", c.share_alpha);
  set_double(cfg, prefix + "lambda_max", c.lambda_max);
  set_size(cfg, prefix + "grid_points", c.grid_points);
  set_double(cfg, prefix + "eta_master", c.eta_master);
}

std::vector<LearnerEntry> learners_from_config(const Config& cfg) {
  const auto labels = cfg.get_list("learners");
  if (labels.empty()) throw ConfigError("learners", "learner list is empty");
  std::set<std::string> seen;
  std::vector<LearnerEntry> out;
  for (const auto& label : labels) {
    if (!valid_label(label)) throw ConfigError("learners", "invalid label '" + label + "'");
    if (!seen.insert(label).second) throw ConfigError("learners", "duplicate label '" + label + "'");
    out.push_back(LearnerEntry{label, learner_from_config(cfg, label)});
  }
  return out;
}

void ExperimentConfig::validate() const {
  if (learners.empty()) throw ConfigError("learners", "learner list is empty");
  std::set<std::string> seen;
  for (const auto& l : learners) {
    if (!valid_label(l.label)) throw ConfigError("learners", "invalid label '" + l.label + "'");
    if (!seen.insert(l.label).second) throw ConfigError("learners", "duplicate label '" + l.label + "'");
    as_config_error("learner." + l.label, [&] { l.config.validate(); });
  }
  as_config_error("env", [&] { environment.validate(); });
  for (std::size_t k : metrics.outlier_ks) {
    if (k > environment.T) throw ConfigError("metrics.outlier_ks", "k exceeds T");
  }
}

EnvironmentSpec ExperimentConfig::seeded_environment() const {
  EnvironmentSpec spec = environment;
  spec.seed = split_seed(seed, "environment", 0);
  return spec;
}

std::uint64_t ExperimentConfig::learner_seed(std::size_t index) const {
  return split_seed(seed, "learner", index);
}

ExperimentConfig experiment_from_config(const Config& cfg) {
  ExperimentConfig c;
  c.seed = cfg.get_u64("seed", 0);
  c.environment = environment_from_config(cfg);
  c.learners = learners_from_config(cfg);
  c.metrics.outlier_ks = cfg.get_sizes("metrics.outlier_ks");
  c.metrics.tail_window = cfg.get_size("metrics.tail_window", 0);
  c.metrics.calibration = cfg.get_bool("metrics.calibration", false);
  c.validate();
  return c;
}

Config experiment_to_config(const ExperimentConfig& c) {
  Config cfg;
  cfg.set("seed", std::to_string(c.seed));
  environment_to_config(c.environment, cfg);
  std::string labels;
  for (std::size_t i = 0; i < c.learners.size(); ++i) {
    labels += (i ? "," : "") + c.learners[i].label;
    learner_to_config(c.learners[i].config, c.learners[i].label, cfg);
  }
  cfg.set("learners", labels);
  cfg.set("metrics.outlier_ks", join_sizes(c.metrics.outlier_ks));
  set_size(cfg, "metrics.tail_window", c.metrics.tail_window);
  cfg.set("metrics.calibration", c.metrics.calibration ? "true" : "false");
  return cfg;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentResult result;
  result.trace = generate(config.seeded_environment());
  const std::size_t n = config.learners.size();
  result.runs.resize(n);
  parallel_for(n, [&](std::size_t i) {
    const auto& l = config.learners[i];
    result.runs[i] = run_learner(result.trace, l.config, l.label, config.learner_seed(i));
  });
  ReportOptions options{config.metrics.outlier_ks, config.metrics.tail_window};
  for (const auto& run : result.runs) result.reports.push_back(dynamic_regret(run, result.trace, options));
  if (config.metrics.calibration) {
    result.calibration = calibration_fit(result.trace.rounds, 50, config.seed);
  }

  if (!config.output_dir.empty()) {
    const auto& dir = config.output_dir;
    std::ostringstream trace_csv;
    write_trace_csv(trace_csv, result.trace);
    write_file(dir / "trace.csv", trace_csv.str());
    for (std::size_t i = 0; i < n; ++i) {
      std::ostringstream run_csv;
      write_run_csv(run_csv, result.runs[i]);
      write_file(dir / ("run_" + result.runs[i].label + ".csv"), run_csv.str());
      write_file(dir / ("report_" + result.runs[i].label + ".json"), dump(result.reports[i].to_json()));
    }
    if (result.calibration) {
      nlohmann::ordered_json j;
      j["a"] = result.calibration->a;
      j["b"] = result.calibration->b;
      j["max_violation"] = result.calibration->max_violation;
      write_file(dir / "calibration.json", dump(j));
    }
  }
  return result;
}

ExperimentConfig demo_two_expert(std::size_t segment_length, std::uint64_t seed) {
  constexpr std::size_t K = 10;
  constexpr std::size_t H = 5;
  const std::size_t T = (K + 1) * segment_length;
  const double eta = std::sqrt(std::log(2.0) / static_cast<double>(T));

  ExperimentConfig c;
  c.seed = seed;
  c.environment.kind = EnvironmentKind::two_expert_switch;
  c.environment.T = T;
  c.environment.params = TwoExpertParams{K, segment_length, H, 0.8};

  LearnerConfig eg;
  eg.kind = LearnerKind::eg;
  eg.eta = eta;

  LearnerConfig fs;
  fs.kind = LearnerKind::fixed_share;
  fs.eta = eta;
  fs.share_alpha = 1.0 / static_cast<double>(T);

  LearnerConfig td;
  td.kind = LearnerKind::tdmd;
  td.eta = eta;
  td.tilt = TiltSchedule{TiltMode::constant, 0.0, 6.0 / eta, 20};
  td.stress_window = H;

  c.learners = {{"eg", eg}, {"fixed_share", fs}, {"tdmd", td}};
  c.metrics.outlier_ks = {0};
  return c;
}

SweepSpec sweep_from_config(const Config& cfg) {
  SweepSpec s;
  s.parameter = cfg.get_string("sweep.parameter");
  s.grid = cfg.get_doubles("sweep.grid");
  s.seeds = cfg.get_size("sweep.seeds", 1);
  if (s.grid.empty()) throw ConfigError("sweep.grid", "grid is empty");
  if (s.seeds == 0) throw ConfigError("sweep.seeds", "need at least one seed");
  static const std::set<std::string> known{"lambda", "eta", "T", "intensity"};
  if (!known.count(s.parameter)) {
    throw ConfigError("sweep.parameter", "unknown parameter '" + s.parameter + "'");
  }
  return s;
}

ExperimentConfig apply_sweep_parameter(ExperimentConfig c, const std::string& parameter,
                                       double value) {
  if (parameter == "lambda") {
    if (value < 0.0) throw ConfigError("sweep.grid", "lambda must be >= 0");
    for (auto& l : c.learners) {
      if (l.config.kind == LearnerKind::hedge) {
        l.config.lambda_max = value;
      } else if (l.config.kind != LearnerKind::eg && l.config.kind != LearnerKind::fixed_share) {
        l.config.tilt.mode = TiltMode::constant;
        l.config.tilt.lambda = value;
      }
    }
  } else if (parameter == "eta") {
    if (!(value > 0.0)) throw ConfigError("sweep.grid", "eta must be > 0");
    for (auto& l : c.learners) l.config.eta = value;
  } else if (parameter == "T") {
    if (!(value >= 1.0)) throw ConfigError("sweep.grid", "T must be >= 1");
    c.environment.T = static_cast<std::size_t>(std::llround(value));
  } else if (parameter == "intensity") {
    auto* p = std::get_if<TwoExpertParams>(&c.environment.params);
    if (!p) throw ConfigError("sweep.parameter", "intensity sweeps need env.kind=two_expert_switch");
    const auto spec = switch_family_spec(value, c.environment.T, p->stress_window, 0);
    const auto& q = std::get<TwoExpertParams>(spec.params);
    p->switches = q.switches;
    p->segment_length = q.segment_length;
  } else {
    throw ConfigError("sweep.parameter", "unknown parameter '" + parameter + "'");
  }
  c.validate();
  return c;
}

std::vector<SweepRow> sweep(const ExperimentConfig& config, const SweepSpec& spec) {
  if (spec.grid.empty()) throw ConfigError("sweep.grid", "grid is empty");
  if (spec.seeds == 0) throw ConfigError("sweep.seeds", "need at least one seed");
  const std::size_t n_learners = config.learners.size();
  std::vector<ExperimentConfig> cells;
  for (double v : spec.grid) {
    const ExperimentConfig base = apply_sweep_parameter(config, spec.parameter, v);
    for (std::size_t r = 0; r < spec.seeds; ++r) {
      ExperimentConfig cell = base;
      cell.seed = r == 0 ? config.seed : split_seed(config.seed, "sweep", r);
      cell.output_dir.clear();
      cells.push_back(std::move(cell));
    }
  }
  std::vector<std::vector<double>> regrets(cells.size(), std::vector<double>(n_learners));
  parallel_for(cells.size(), [&](std::size_t c) {
    const Trace trace = generate(cells[c].seeded_environment());
    for (std::size_t i = 0; i < n_learners; ++i) {
      const auto& l = cells[c].learners[i];
      regrets[c][i] = run_learner(trace, l.config, l.label, cells[c].learner_seed(i)).cumulative_regret();
    }
  });

  std::vector<SweepRow> rows;
  for (std::size_t g = 0; g < spec.grid.size(); ++g) {
    for (std::size_t i = 0; i < n_learners; ++i) {
      double mean = 0.0;
      for (std::size_t r = 0; r < spec.seeds; ++r) mean += regrets[g * spec.seeds + r][i];
      mean /= static_cast<double>(spec.seeds);
      double var = 0.0;
      for (std::size_t r = 0; r < spec.seeds; ++r) {
        const double dev = regrets[g * spec.seeds + r][i] - mean;
        var += dev * dev;
      }
      const double sd = spec.seeds > 1 ? std::sqrt(var / static_cast<double>(spec.seeds - 1)) : 0.0;
      rows.push_back(SweepRow{spec.grid[g], config.learners[i].label, mean, sd, spec.seeds});
    }
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "value,learner,mean_regret,stddev_regret,seeds\n";
  for (const auto& r : rows) {
    out << format_double(r.value) << ',' << r.label << ',' << format_double(r.mean_regret) << ','
        << format_double(r.stddev_regret) << ',' << r.seeds << '\n';
  }
}

FragilityStudy fragility_study_from_config(const Config& cfg) {
  FragilityStudy s;
  const auto probs = cfg.get_doubles("fragility.probabilities");
  const auto table = cfg.get_matrix("fragility.loss_table");
  s.distribution = as_config_error("fragility", [&] {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(table.size()),
                      static_cast<Eigen::Index>(table.front().size()));
    for (std::size_t i = 0; i < table.size(); ++i) {
      for (std::size_t j = 0; j < table[i].size(); ++j) {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = table[i][j];
      }
    }
    return FiniteDistribution(SimplexPoint(probs), std::move(m));
  });
  const auto decision = cfg.get_doubles("fragility.decision", {0.0});
  s.decision = as_config_error("fragility.decision", [&] {
    if (decision.size() == 1) {
      if (decision[0] < 0.0 || decision[0] != std::floor(decision[0])) {
        throw std::invalid_argument("a single entry must be a candidate index");
      }
      return SimplexPoint::vertex(s.distribution.candidates(), static_cast<std::size_t>(decision[0]));
    }
    return SimplexPoint(decision);
  });
  if (s.decision.dim() != s.distribution.candidates()) {
    throw ConfigError("fragility.decision", "needs one weight per loss-table column");
  }
  s.epsilons = cfg.get_doubles("fragility.epsilons", {0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0});
  s.deltas = cfg.get_doubles("fragility.deltas", {0.01, 0.05, 0.1, 0.2});
  s.tol = cfg.get_double("fragility.tol", 1e-6);
  for (double e : s.epsilons) {
    if (e < 0.0) throw ConfigError("fragility.epsilons", "entries must be >= 0");
  }
  for (double d : s.deltas) {
    if (!(d > 0.0)) throw ConfigError("fragility.deltas", "entries must be > 0");
  }
  if (!(s.tol > 0.0)) throw ConfigError("fragility.tol", "must be > 0");
  return s;
}

FragilityStudyResult run_fragility_study(const FragilityStudy& study,
                                         const std::filesystem::path& out) {
  FragilityStudyResult r;
  for (double e : study.epsilons) {
    r.fragility.emplace_back(e, fragility(study.decision, study.distribution, e));
  }
  for (double d : study.deltas) {
    r.bandwidth.emplace_back(d, belief_bandwidth(study.decision, study.distribution, d, study.tol));
  }
  if (!out.empty()) {
    std::ostringstream frag, bw;
    write_fragility_csv(frag, r.fragility);
    write_bandwidth_csv(bw, r.bandwidth);
    write_file(out / "fragility.csv", frag.str());
    write_file(out / "bandwidth.csv", bw.str());
  }
  return r;
}

FiSearch fi_search_from_config(const Config& cfg) {
  FiSearch s;
  s.seed = cfg.get_u64("seed", 0);
  s.learners = learners_from_config(cfg);
  s.T = cfg.get_size("fi.T", s.T);
  s.alpha = cfg.get_double("fi.alpha", s.alpha);
  s.stress_window = cfg.get_size("fi.H", s.stress_window);
  s.max_intensity = cfg.get_double("fi.max_intensity", s.max_intensity);
  s.tol = cfg.get_double("fi.tol", s.tol);
  s.seeds = cfg.get_size("fi.seeds", s.seeds);
  if (s.T < 2) throw ConfigError("fi.T", "must be >= 2");
  if (!(s.alpha > 0.0)) throw ConfigError("fi.alpha", "must be > 0");
  if (!(s.tol > 0.0)) throw ConfigError("fi.tol", "must be > 0");
  if (s.seeds == 0) throw ConfigError("fi.seeds", "must be >= 1");
  if (s.max_intensity < 0.0) throw ConfigError("fi.max_intensity", "must be >= 0");
  return s;
}

RegretFunction learner_regret(const LearnerConfig& config) {
  return [config](const Trace& trace, std::uint64_t seed) {
    return run_learner(trace, config, "", seed).cumulative_regret();
  };
}

std::vector<std::pair<std::string, FragilityIndexResult>> run_fi_search(
    const FiSearch& search, const std::filesystem::path& out) {
  const double max_intensity =
      search.max_intensity > 0.0 ? search.max_intensity : static_cast<double>(search.T) / 8.0;
  const auto family = switch_drift_family(search.T, search.stress_window, max_intensity);
  std::vector<std::pair<std::string, FragilityIndexResult>> results;
  for (const auto& l : search.learners) {
    results.emplace_back(l.label, fragility_index(learner_regret(l.config), search.alpha, search.T,
                                                  family, search.tol, search.seeds,
                                                  split_seed(search.seed, "fi", 0)));
  }
  if (!out.empty()) {
    std::ostringstream csv;
    csv << "learner,intensity,path_length,mean_regret,within_budget\n";
    nlohmann::ordered_json summary = nlohmann::ordered_json::object();
    for (const auto& [label, r] : results) {
      for (const auto& p : r.probes) {
        csv << label << ',' << format_double(p.intensity) << ',' << format_double(p.path_length)
            << ',' << format_double(p.mean_regret) << ',' << (p.within_budget ? 1 : 0) << '\n';
      }
      nlohmann::ordered_json j;
      j["fragility_index"] = r.index;
      j["intensity"] = r.intensity;
      j["budget"] = r.budget;
      j["probes"] = r.probes.size();
      j["diagnostic"] = r.diagnostic;
      summary[label] = j;
    }
    write_file(out / "fi_probes.csv", csv.str());
    write_file(out / "fi_summary.json", dump(summary));
  }
  return results;
}

DistributedStudy distributed_from_config(const Config& cfg) {
  DistributedStudy s;
  s.seed = cfg.get_u64("seed", 0);
  s.environment = environment_from_config(cfg);
  s.environment.seed = split_seed(s.seed, "environment", 0);
  const auto learners = learners_from_config(cfg);
  const std::string chosen = cfg.get_string("distributed.learner", learners.front().label);
  const auto it = std::find_if(learners.begin(), learners.end(),
                               [&](const LearnerEntry& l) { return l.label == chosen; });
  if (it == learners.end()) throw ConfigError("distributed.learner", "no learner labelled '" + chosen + "'");
  if (it->config.kind != LearnerKind::tdmd && it->config.kind != LearnerKind::eg) {
    throw ConfigError("distributed.learner", "gossip runs need an eg or tdmd learner");
  }
  s.learner = it->config;
  s.topology.kind = as_config_error("distributed.topology", [&] {
    return parse_topology(cfg.get_string("distributed.topology", "ring"));
  });
  s.topology.n = cfg.get_size("distributed.n", 16);
  s.topology.degree = cfg.get_size("distributed.degree", 2);
  s.topology.seed = cfg.get_u64("distributed.topology_seed", split_seed(s.seed, "topology", 0));
  if (s.topology.n < 1) throw ConfigError("distributed.n", "must be >= 1");
  return s;
}

std::vector<Trace> agent_shards(const EnvironmentSpec& environment, std::size_t n) {
  std::vector<Trace> shards(n);
  parallel_for(n, [&](std::size_t i) {
    EnvironmentSpec spec = environment;
    spec.seed = split_seed(environment.seed, "agent", i);
    shards[i] = generate(spec);
  });
  return shards;
}

GossipResult run_distributed(const DistributedStudy& study, const std::filesystem::path& out) {
  const MixingMatrix W =
      study.topology.n == 1
          ? MixingMatrix::from_weights(Eigen::MatrixXd::Ones(1, 1), "single")
          : as_config_error("distributed", [&] { return build_mixing_matrix(study.topology); });
  const auto shards = agent_shards(study.environment, study.topology.n);
  GossipResult result = gossip_tdmd_run(shards, W, study.learner);
  if (!out.empty()) {
    std::ostringstream csv;
    write_consensus_csv(csv, result);
    write_file(out / "consensus.csv", csv.str());
    nlohmann::ordered_json j;
    j["topology"] = W.topology_name;
    j["n"] = study.topology.n;
    j["spectral_gap"] = W.spectral_gap;
    j["second_eigenvalue"] = W.second_eigenvalue;
    j["mean_agent_regret"] = result.mean_agent_regret;
    j["total_regret"] = result.total_regret;
    j["final_consensus_error"] = result.consensus.empty() ? 0.0 : result.consensus.back();
    write_file(out / "distributed_summary.json", dump(j));
  }
  return result;
}

}  // namespace trustdecay
