#include "trustdecay/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "trustdecay/drift.hpp"
#include "trustdecay/error.hpp"
#include "trustdecay/harness/parallel.hpp"
#include "trustdecay/rng.hpp"
#include "trustdecay/simd/kernels.hpp"

namespace trustdecay {
namespace {

constexpr double kTiltKlTolerance = 1e-10;

struct Tilt {
  std::vector<double> q;
  double kl = 0.0;
};

// Q ∝ D exp(eta (h - h_top)) over the support of D.
Tilt tilt_at(const SimplexPoint& D, std::span<const double> h, double h_top, double eta) {
  const std::size_t m = D.dim();
  std::vector<double> log_w(m, -std::numeric_limits<double>::infinity());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i) {
    if (D[i] > 0.0) {
      log_w[i] = std::log(D[i]) + eta * (h[i] - h_top);
      top = std::max(top, log_w[i]);
    }
  }
  double z = 0.0;
  for (double lw : log_w) {
    if (std::isfinite(lw)) z += std::exp(lw - top);
  }
  const double lse = top + std::log(z);
  Tilt t;
  t.q.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (!std::isfinite(log_w[i])) continue;
    const double log_q = log_w[i] - lse;
    t.q[i] = std::exp(log_q);
    t.kl += t.q[i] * (log_q - std::log(D[i]));
  }
  t.kl = std::max(t.kl, 0.0);
  const double total = std::accumulate(t.q.begin(), t.q.end(), 0.0);
  for (double& v : t.q) v /= total;
  return t;
}

double expectation(std::span<const double> q, std::span<const double> h) {
  double acc = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] > 0.0) acc += q[i] * h[i];
  }
  return acc;
}

}  // namespace

double RunRecord::cumulative_regret() const {
  double total = 0.0;
  for (const auto& r : rounds) total += r.instant_regret;
  return total;
}

nlohmann::ordered_json RegretReport::to_json() const {
  nlohmann::ordered_json j;
  j["label"] = label;
  j["cumulative_regret"] = cumulative_regret;
  j["S_T"] = S_T;
  j["V_T"] = V_T;
  j["comparator_path"] = comparator_path;
  j["per_switch_tails"] = per_switch_tails;
  nlohmann::ordered_json ks = nlohmann::ordered_json::object();
  for (const auto& [k, v] : outlier_regret_k) ks[std::to_string(k)] = v;
  j["outlier_regret_k"] = ks;
  return j;
}

double regret_excluding(std::span<const double> instant_regrets, std::size_t k) {
  std::vector<bool> excluded(instant_regrets.size(), false);
  if (k > 0) {
    std::vector<std::size_t> order(instant_regrets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return instant_regrets[a] > instant_regrets[b];
    });
    for (std::size_t i = 0; i < std::min(k, order.size()); ++i) {
      if (instant_regrets[order[i]] > 0.0) excluded[order[i]] = true;
    }
  }
  double total = 0.0;
  for (std::size_t i = 0; i < instant_regrets.size(); ++i) {
    if (!excluded[i]) total += instant_regrets[i];
  }
  return total;
}

std::vector<double> per_switch_tails(std::span<const double> instant_regrets, const Trace& trace,
                                     std::size_t tail_window) {
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < trace.rounds.size(); ++i) {
    if (trace.rounds[i].switch_flag) starts.push_back(i);
  }
  std::vector<double> tails;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const std::size_t end = tail_window > 0
                                ? std::min(starts[k] + tail_window, instant_regrets.size())
                                : (k + 1 < starts.size() ? starts[k + 1] : instant_regrets.size());
    double tail = 0.0;
    for (std::size_t i = starts[k]; i < end; ++i) tail += instant_regrets[i];
    tails.push_back(tail);
  }
  return tails;
}

double comparator_path_length(const Trace& trace) {
  double total = 0.0;
  for (std::size_t i = 1; i < trace.rounds.size(); ++i) {
    total += simd::l1_distance(trace.rounds[i].comparator.weights(),
                               trace.rounds[i - 1].comparator.weights());
  }
  return total;
}

double stress_variation(const Trace& trace) {
  double total = 0.0;
  for (std::size_t i = 1; i < trace.rounds.size(); ++i) {
    const auto a = trace.rounds[i].stress.values();
    const auto b = trace.rounds[i - 1].stress.values();
    double sup = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) sup = std::max(sup, std::fabs(a[j] - b[j]));
    total += sup * sup;
  }
  return total;
}

RegretReport dynamic_regret(const RunRecord& run, const Trace& trace,
                            const ReportOptions& options) {
  if (run.rounds.size() != trace.rounds.size()) {
    throw std::invalid_argument("dynamic_regret: trace/run length mismatch (" +
                                std::to_string(trace.rounds.size()) + " vs " +
                                std::to_string(run.rounds.size()) + ")");
  }
  std::vector<double> inst(run.rounds.size());
  for (std::size_t i = 0; i < inst.size(); ++i) inst[i] = run.rounds[i].instant_regret;

  RegretReport report;
  report.label = run.label;
  report.cumulative_regret = run.cumulative_regret();
  report.S_T = kl_path_length(trace.epsilons());
  report.V_T = stress_variation(trace);
  report.comparator_path = comparator_path_length(trace);
  report.per_switch_tails = per_switch_tails(inst, trace, options.tail_window);
  for (std::size_t k : options.outlier_ks) {
    report.outlier_regret_k[k] = k == 0 ? report.cumulative_regret : regret_excluding(inst, k);
  }
  return report;
}

FiniteDistribution::FiniteDistribution(SimplexPoint probs, Eigen::MatrixXd table)
    : probabilities(std::move(probs)), loss_table(std::move(table)) {
  if (static_cast<std::size_t>(loss_table.rows()) != probabilities.dim()) {
    throw std::invalid_argument("FiniteDistribution: loss table needs one row per outcome");
  }
  if (loss_table.cols() < 1) throw std::invalid_argument("FiniteDistribution: no decision candidates");
  for (Eigen::Index i = 0; i < loss_table.size(); ++i) {
    const double v = loss_table.data()[i];
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument("FiniteDistribution: losses must lie in [0, 1]");
    }
  }
}

std::vector<double> FiniteDistribution::decision_loss(const SimplexPoint& x) const {
  if (x.dim() != candidates()) {
    throw std::invalid_argument("decision_loss: decision dimension must equal candidate count");
  }
  const Eigen::Map<const Eigen::VectorXd> w(x.weights().data(), loss_table.cols());
  const Eigen::VectorXd l = loss_table * w;
  return std::vector<double>(l.data(), l.data() + l.size());
}

std::vector<double> FiniteDistribution::decision_loss(std::size_t candidate) const {
  if (candidate >= candidates()) throw std::invalid_argument("decision_loss: candidate out of range");
  const Eigen::VectorXd l = loss_table.col(static_cast<Eigen::Index>(candidate));
  return std::vector<double>(l.data(), l.data() + l.size());
}

TiltResult worst_case_tilt(const SimplexPoint& D, std::span<const double> h, double epsilon) {
  if (h.size() != D.dim()) throw std::invalid_argument("worst_case_tilt: dimension mismatch");
  for (double v : h) {
    if (!std::isfinite(v)) throw std::invalid_argument("worst_case_tilt: non-finite h");
  }
  if (!(epsilon >= 0.0)) throw std::invalid_argument("worst_case_tilt: epsilon must be >= 0");

  const double mean = expectation(D.weights(), h);
  double h_top = -std::numeric_limits<double>::infinity();
  double h_bottom = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < D.dim(); ++i) {
    if (D[i] > 0.0) {
      h_top = std::max(h_top, h[i]);
      h_bottom = std::min(h_bottom, h[i]);
    }
  }
  if (epsilon == 0.0 || h_top == h_bottom) return TiltResult{mean, D, 0.0};

  double top_mass = 0.0;
  for (std::size_t i = 0; i < D.dim(); ++i) {
    if (D[i] > 0.0 && h[i] == h_top) top_mass += D[i];
  }
  if (-std::log(top_mass) <= epsilon) {
    std::vector<double> q(D.dim(), 0.0);
    for (std::size_t i = 0; i < D.dim(); ++i) {
      if (D[i] > 0.0 && h[i] == h_top) q[i] = D[i] / top_mass;
    }
    return TiltResult{h_top, SimplexPoint::normalized(std::move(q)),
                      std::numeric_limits<double>::infinity()};
  }

  // KL(tilt(eta) || D) rises continuously from 0 towards -log top_mass.
  double hi = 1.0 / (h_top - h_bottom);
  while (tilt_at(D, h, h_top, hi).kl < epsilon) {
    hi *= 2.0;
    if (!std::isfinite(hi)) throw NumericalError("worst_case_tilt: tilt parameter diverged");
  }
  double lo = 0.0;
  for (int it = 0; it < 400 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double kl = tilt_at(D, h, h_top, mid).kl;
    if (kl <= epsilon) {
      lo = mid;
      if (epsilon - kl <= kTiltKlTolerance) break;
    } else {
      hi = mid;
    }
  }
  Tilt best = tilt_at(D, h, h_top, lo);
  const double value = expectation(best.q, h);
  return TiltResult{value, SimplexPoint::normalized(std::move(best.q)), lo};
}

namespace {

double fragility_of_loss(std::span<const double> loss_x, const FiniteDistribution& D,
                         double epsilon) {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("fragility: epsilon must be >= 0");
  double worst = 0.0;
  std::vector<double> h(loss_x.size());
  for (std::size_t u = 0; u < D.candidates(); ++u) {
    for (std::size_t i = 0; i < h.size(); ++i) {
      h[i] = loss_x[i] - D.loss_table(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(u));
    }
    worst = std::max(worst, worst_case_tilt(D.probabilities, h, epsilon).value);
  }
  return worst;
}

}  // namespace

double fragility(const SimplexPoint& x, const FiniteDistribution& D, double epsilon) {
  return fragility_of_loss(D.decision_loss(x), D, epsilon);
}

double fragility(std::size_t candidate, const FiniteDistribution& D, double epsilon) {
  return fragility_of_loss(D.decision_loss(candidate), D, epsilon);
}

double saturation_radius(const SimplexPoint& D) {
  double smallest = 1.0;
  for (double p : D.weights()) {
    if (p > 0.0) smallest = std::min(smallest, p);
  }
  return -std::log(smallest);
}

std::string Bandwidth::to_string() const {
  if (unbounded) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

Bandwidth belief_bandwidth(const SimplexPoint& x, const FiniteDistribution& D, double delta,
                           double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("belief_bandwidth: tol must be > 0");
  if (!(delta > 0.0)) throw std::invalid_argument("belief_bandwidth: delta must be > 0");
  const auto loss_x = D.decision_loss(x);
  if (fragility_of_loss(loss_x, D, 0.0) > delta) return Bandwidth{0.0, false};
  const double eps_max = saturation_radius(D.probabilities);
  if (fragility_of_loss(loss_x, D, eps_max) <= delta) return Bandwidth{0.0, true};
  double lo = 0.0;
  double hi = eps_max;
  while (hi - lo >= tol) {
    const double mid = 0.5 * (lo + hi);
    if (fragility_of_loss(loss_x, D, mid) <= delta) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return Bandwidth{0.5 * (lo + hi), false};
}

DriftFamily switch_drift_family(std::size_t T, std::size_t stress_window, double max_intensity) {
  return DriftFamily{[T, stress_window](double s, std::uint64_t seed) {
                       return switch_family_spec(s, T, stress_window, seed);
                     },
                     max_intensity};
}

FiProbe probe_intensity(const RegretFunction& learner, const DriftFamily& family, double s,
                        double budget, std::size_t seeds, std::uint64_t seed) {
  if (seeds == 0) throw std::invalid_argument("fragility_index: need at least one seed");
  std::vector<double> regrets(seeds), paths(seeds);
  parallel_for(seeds, [&](std::size_t i) {
    const Trace trace = generate(family.make(s, split_seed(seed, "fi_env", i)));
    regrets[i] = learner(trace, split_seed(seed, "fi_learner", i));
    paths[i] = kl_path_length(trace.epsilons());
  });
  FiProbe probe;
  probe.intensity = s;
  for (std::size_t i = 0; i < seeds; ++i) {
    probe.mean_regret += regrets[i];
    probe.path_length += paths[i];
  }
  probe.mean_regret /= static_cast<double>(seeds);
  probe.path_length /= static_cast<double>(seeds);
  probe.within_budget = probe.mean_regret <= budget;
  return probe;
}

FragilityIndexResult fragility_index(const RegretFunction& learner, double alpha, std::size_t T,
                                     const DriftFamily& family, double search_tol,
                                     std::size_t seeds, std::uint64_t seed) {
  if (!(alpha > 0.0)) throw std::invalid_argument("fragility_index: alpha must be > 0");
  if (!(search_tol > 0.0)) throw std::invalid_argument("fragility_index: search_tol must be > 0");
  if (!(family.max_intensity >= 0.0)) {
    throw std::invalid_argument("fragility_index: max_intensity must be >= 0");
  }
  FragilityIndexResult result;
  result.budget = alpha * std::sqrt(static_cast<double>(T));

  auto probe = [&](double s) {
    result.probes.push_back(probe_intensity(learner, family, s, result.budget, seeds, seed));
    return result.probes.back();
  };

  const FiProbe base = probe(0.0);
  if (!base.within_budget) {
    result.diagnostic = "mean regret " + std::to_string(base.mean_regret) +
                        " exceeds alpha*sqrt(T) = " + std::to_string(result.budget) +
                        " at zero intensity";
    return result;
  }
  FiProbe best = base;
  const FiProbe top = probe(family.max_intensity);
  if (top.within_budget) {
    best = top;
  } else {
    double lo = 0.0;
    double hi = family.max_intensity;
    while (hi - lo > search_tol) {
      const double mid = 0.5 * (lo + hi);
      const FiProbe p = probe(mid);
      if (p.within_budget) {
        lo = mid;
        best = p;
      } else {
        hi = mid;
      }
    }
  }
  result.index = best.path_length;
  result.intensity = best.intensity;
  return result;
}

SensitivityResult sensitivity_mc(std::span<const double> loss_x, const SimplexPoint& D,
                                 double epsilon, double alpha, std::size_t T, std::size_t trials,
                                 std::uint64_t seed) {
  if (trials < 100) throw std::invalid_argument("sensitivity_mc: trials must be >= 100");
  if (T < 1) throw std::invalid_argument("sensitivity_mc: T must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("sensitivity_mc: alpha in (0,1)");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("sensitivity_mc: epsilon must be >= 0");
  if (loss_x.size() != D.dim()) throw std::invalid_argument("sensitivity_mc: dimension mismatch");
  for (double v : loss_x) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("sensitivity_mc: losses must lie in [0, 1]");
  }

  SensitivityResult result;
  result.bound = std::sqrt(2.0 * epsilon * std::log(1.0 / alpha) / static_cast<double>(T));
  result.deviations.assign(trials, 0.0);
  parallel_for(trials, [&](std::size_t k) {
    Rng rng(split_seed(seed, "trial", k));
    double total = 0.0;
    for (std::size_t s = 0; s < T; ++s) total += loss_x[rng.categorical(D.weights())];
    const double f_hat = total / static_cast<double>(T);
    std::vector<double> up(loss_x.size()), down(loss_x.size());
    for (std::size_t i = 0; i < up.size(); ++i) {
      up[i] = loss_x[i] - f_hat;
      down[i] = -up[i];
    }
    result.deviations[k] = std::max(worst_case_tilt(D, up, epsilon).value,
                                    worst_case_tilt(D, down, epsilon).value);
  });
  std::size_t within = 0;
  std::size_t within_relaxed = 0;
  for (double dev : result.deviations) {
    result.mean_deviation += dev;
    within += dev <= result.bound;
    within_relaxed += dev <= 2.0 * result.bound;
  }
  const double n = static_cast<double>(trials);
  result.mean_deviation /= n;
  result.coverage = static_cast<double>(within) / n;
  result.coverage_relaxed = static_cast<double>(within_relaxed) / n;
  result.discrepancy = result.coverage < 1.0 - alpha;
  return result;
}

SensitivityResult sensitivity_mc(const SimplexPoint& x, const FiniteDistribution& D,
                                 double epsilon, double alpha, std::size_t T, std::size_t trials,
                                 std::uint64_t seed) {
  return sensitivity_mc(D.decision_loss(x), D.probabilities, epsilon, alpha, T, trials, seed);
}

}  // namespace trustdecay
