#pragma once

// Experiment harness: seeded trial sweeps for both agents, CSV results,
// aggregate curves, box-plot statistics and standalone SVG charts.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <istream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "metagarden/cognitive.hpp"
#include "metagarden/garden.hpp"
#include "metagarden/learner.hpp"
#include "metagarden/meta.hpp"

namespace metagarden {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Seed of one trial, derived from the master seed, the goal count and the
/// trial index so any trial can be regenerated on its own.
inline std::uint64_t trial_seed(std::uint64_t master, int n_goals, int trial) {
  std::uint64_t per_count = splitmix64(splitmix64(master) ^ static_cast<std::uint64_t>(n_goals));
  return splitmix64(per_count ^ (static_cast<std::uint64_t>(trial) << 32 | 0x5bd1e995ull));
}

struct ExperimentConfig {
  AgentMode agent = AgentMode::kLearning;
  double ratio = 0.75;
  int goals_min = 1;
  int goals_max = 20;
  int trials = 100;
  std::uint64_t seed = 42;
  EpisodeOptions episode;

  void check() const {
    if (trials < 1) throw std::invalid_argument("trials must be at least 1");
    if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("ratio must lie strictly between 0 and 1");
    if (goals_min < 0 || goals_max > kGardenCells || goals_min > goals_max) {
      throw std::invalid_argument("goal range must satisfy 0 <= min <= max <= " + std::to_string(kGardenCells));
    }
  }
};

struct TrialRow {
  std::string agent;
  double ratio = 0;
  int n_goals = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  int goals_total = 0;
  int goals_achieved = 0;
  int goals_rejected = 0;
  int steps = 0;
  int learn_events = 0;

  double percent() const { return goals_total == 0 ? 100.0 : 100.0 * goals_achieved / goals_total; }
  friend bool operator==(const TrialRow&, const TrialRow&) = default;
};

/// The full dual-cycle agent: cognition plus the meta controller and the
/// rule learner, all persisting across episodes.
class LearningAgent {
 public:
  LearningAgent() : agent_(AgentMode::kLearning), controller_(learner_) {}
  LearningAgent(const LearningAgent&) = delete;
  LearningAgent& operator=(const LearningAgent&) = delete;

  EpisodeResult run(const GardenProblem& p, const EpisodeOptions& opts = {}) {
    return agent_.run_episode(p.world, p.goals, &controller_, opts);
  }
  EpisodeResult run(const GardenProblem& p, const EpisodeOptions& opts, MetaHook& extra) {
    Chain chain{controller_, extra};
    return agent_.run_episode(p.world, p.goals, &chain, opts);
  }

  CognitiveAgent& cognition() { return agent_; }
  const AgentModel& model() const { return agent_.model(); }
  RuleLearner& learner() { return learner_; }
  MetaController& controller() { return controller_; }

 private:
  struct Chain : MetaHook {
    MetaHook& a;
    MetaHook& b;
    Chain(MetaHook& x, MetaHook& y) : a(x), b(y) {}
    void begin_episode(Episode& e) override { a.begin_episode(e), b.begin_episode(e); }
    void after_phase(Episode& e) override { a.after_phase(e), b.after_phase(e); }
    void end_episode(Episode& e) override { a.end_episode(e), b.end_episode(e); }
  };

  CognitiveAgent agent_;
  RuleLearner learner_;
  MetaController controller_;
};

inline TrialRow make_row(const ExperimentConfig& cfg, int n, int trial, std::uint64_t seed, const EpisodeResult& r) {
  return {to_string(cfg.agent), cfg.ratio, n, trial, seed, r.total, r.achieved, r.rejected, r.steps, r.learn_events};
}

/// Runs every trial in ascending goal count, then trial index. The learning
/// agent (supplied or created here) keeps its model across all of them; the
/// standard agent starts each trial from the original domain. `on_trial`
/// sees each row together with its episode.
using TrialCallback = std::function<void(const TrialRow&, const EpisodeResult&)>;

inline std::vector<TrialRow> run_experiment(const ExperimentConfig& cfg, LearningAgent* learner = nullptr,
                                            const TrialCallback& on_trial = {}) {
  cfg.check();
  std::unique_ptr<LearningAgent> owned;
  if (cfg.agent == AgentMode::kLearning && !learner) {
    owned = std::make_unique<LearningAgent>();
    learner = owned.get();
  }
  CognitiveAgent standard(AgentMode::kStandard);
  std::vector<TrialRow> rows;
  for (int n = cfg.goals_min; n <= cfg.goals_max; ++n) {
    for (int k = 0; k < cfg.trials; ++k) {
      auto seed = trial_seed(cfg.seed, n, k);
      auto problem = generate_problem({seed, n, cfg.ratio});
      auto r = cfg.agent == AgentMode::kLearning ? learner->run(problem, cfg.episode)
                                                 : standard.run_episode(problem.world, problem.goals, nullptr, cfg.episode);
      rows.push_back(make_row(cfg, n, k, seed, r));
      if (on_trial) on_trial(rows.back(), r);
    }
  }
  return rows;
}

// --- CSV ---------------------------------------------------------------------

inline constexpr std::string_view kCsvHeader =
    "agent,ratio,n_goals,trial,seed,goals_total,goals_achieved,goals_rejected,steps,learn_events";

inline std::string format_ratio(double r) {
  std::ostringstream os;
  os << r;
  return os.str();
}

inline void write_csv_row(std::ostream& os, const TrialRow& r) {
  os << r.agent << ',' << format_ratio(r.ratio) << ',' << r.n_goals << ',' << r.trial << ',' << r.seed << ','
     << r.goals_total << ',' << r.goals_achieved << ',' << r.goals_rejected << ',' << r.steps << ','
     << r.learn_events << '\n';
}

inline void write_csv(std::ostream& os, const std::vector<TrialRow>& rows) {
  os << kCsvHeader << '\n';
  for (const auto& r : rows) write_csv_row(os, r);
}

struct CsvError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::vector<TrialRow> read_csv(std::istream& is) {
  std::vector<TrialRow> rows;
  std::string line;
  if (!std::getline(is, line)) return rows;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw CsvError("unexpected CSV header: " + line);
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
    if (f.size() != 10) throw CsvError("line " + std::to_string(lineno) + ": expected 10 fields");
    try {
      TrialRow r;
      r.agent = f[0];
      r.ratio = std::stod(f[1]);
      r.n_goals = std::stoi(f[2]);
      r.trial = std::stoi(f[3]);
      r.seed = std::stoull(f[4]);
      r.goals_total = std::stoi(f[5]);
      r.goals_achieved = std::stoi(f[6]);
      r.goals_rejected = std::stoi(f[7]);
      r.steps = std::stoi(f[8]);
      r.learn_events = std::stoi(f[9]);
      if (r.goals_achieved < 0 || r.goals_achieved > r.goals_total) throw CsvError("achieved outside [0, total]");
      rows.push_back(std::move(r));
    } catch (const std::logic_error& e) {
      throw CsvError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

// --- aggregation -------------------------------------------------------------

/// agent -> n_goals -> mean percentage of goals achieved.
using CurveTable = std::map<std::string, std::map<int, double>>;

inline CurveTable aggregate(const std::vector<TrialRow>& rows) {
  std::map<std::string, std::map<int, std::pair<double, int>>> acc;
  for (const auto& r : rows) {
    auto& [sum, n] = acc[r.agent][r.n_goals];
    sum += r.percent();
    ++n;
  }
  CurveTable out;
  for (const auto& [agent, per] : acc) {
    for (const auto& [g, sn] : per) out[agent][g] = sn.first / sn.second;
  }
  return out;
}

struct BoxStats {
  double q1 = 0, median = 0, q3 = 0;
  double lower = 0, upper = 0;
  std::vector<double> outliers;
  double iqr() const { return q3 - q1; }
};

/// Linear-interpolation quantile on a sorted sample.
inline double quantile(const std::vector<double>& sorted, double q) {
  double h = (static_cast<double>(sorted.size()) - 1) * q;
  auto lo = static_cast<std::size_t>(std::floor(h));
  auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline BoxStats boxplot_stats(std::vector<double> samples) {
  if (samples.empty()) throw std::invalid_argument("boxplot_stats needs at least one sample");
  std::sort(samples.begin(), samples.end());
  BoxStats b;
  b.q1 = quantile(samples, 0.25);
  b.median = quantile(samples, 0.5);
  b.q3 = quantile(samples, 0.75);
  b.lower = b.q1 - 1.5 * b.iqr();
  b.upper = b.q3 + 1.5 * b.iqr();
  for (double v : samples) {
    if (v < b.lower || v > b.upper) b.outliers.push_back(v);
  }
  return b;
}

/// Achieved-goal counts of one agent at one goal count.
inline std::vector<double> achieved_samples(const std::vector<TrialRow>& rows, const std::string& agent, int n_goals) {
  std::vector<double> out;
  for (const auto& r : rows) {
    if (r.agent == agent && r.n_goals == n_goals) out.push_back(r.goals_achieved);
  }
  return out;
}

// --- SVG ---------------------------------------------------------------------

namespace svg_detail {

inline std::string num(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

inline const char* series_colour(const std::string& agent) {
  if (agent == "learning") return "#1f77b4";
  if (agent == "standard") return "#2ca02c";
  return "#7f7f7f";
}

constexpr double kW = 640, kH = 400, kLeft = 60, kRight = 20, kTop = 40, kBottom = 50;

inline void header(std::ostream& os, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" viewBox=\"0 0 "
     << kW << ' ' << kH << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << num(kW / 2) << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
     << title << "</text>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kH - kBottom << "\" x2=\"" << kW - kRight << "\" y2=\"" << kH - kBottom
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kH - kBottom
     << "\" stroke=\"black\"/>\n";
}

inline void y_ticks(std::ostream& os, double lo, double hi, const std::function<double(double)>& y) {
  for (int i = 0; i <= 5; ++i) {
    double v = lo + (hi - lo) * i / 5.0;
    os << "<line x1=\"" << kLeft - 4 << "\" y1=\"" << num(y(v)) << "\" x2=\"" << kLeft << "\" y2=\"" << num(y(v))
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << kLeft - 8 << "\" y=\"" << num(y(v) + 4)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << num(v) << "</text>\n";
  }
}

}  // namespace svg_detail

/// Mean percentage of goals achieved against goal count, one polyline per
/// agent.
inline std::string curve_svg(const CurveTable& table, const std::string& title = "Goals achieved (%)") {
  using namespace svg_detail;
  int gmin = 1 << 30, gmax = -(1 << 30);
  for (const auto& [a, per] : table) {
    for (const auto& [g, v] : per) gmin = std::min(gmin, g), gmax = std::max(gmax, g);
  }
  if (gmin > gmax) throw std::invalid_argument("curve plot needs at least one point");
  double span = std::max(1, gmax - gmin);
  auto x = [&](double g) { return kLeft + (g - gmin) / span * (kW - kLeft - kRight); };
  auto y = [&](double v) { return kH - kBottom - v / 100.0 * (kH - kTop - kBottom); };
  std::ostringstream os;
  header(os, title);
  y_ticks(os, 0, 100, y);
  for (int g = gmin; g <= gmax; ++g) {
    os << "<text x=\"" << num(x(g)) << "\" y=\"" << kH - kBottom + 16
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << g << "</text>\n";
  }
  os << "<text x=\"" << num(kW / 2) << "\" y=\"" << kH - 10
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">number of goals</text>\n";
  int legend = 0;
  for (const auto& [agent, per] : table) {
    os << "<polyline fill=\"none\" stroke=\"" << series_colour(agent) << "\" stroke-width=\"2\" points=\"";
    bool first = true;
    for (const auto& [g, v] : per) {
      os << (first ? "" : " ") << num(x(g)) << ',' << num(y(v));
      first = false;
    }
    os << "\"/>\n";
    double ly = kTop + 14 + 16 * legend++;
    os << "<line x1=\"" << kW - 150 << "\" y1=\"" << num(ly) << "\" x2=\"" << kW - 130 << "\" y2=\"" << num(ly)
       << "\" stroke=\"" << series_colour(agent) << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << kW - 124 << "\" y=\"" << num(ly + 4) << "\" font-family=\"sans-serif\" font-size=\"12\">"
       << agent << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

/// One box per agent: box from q1 to q3, orange median, whiskers at the
/// 1.5 IQR fences and a dot for every outlier.
inline std::string box_svg(const std::map<std::string, BoxStats>& boxes, const std::string& title = "Goals achieved") {
  using namespace svg_detail;
  if (boxes.empty()) throw std::invalid_argument("box plot needs at least one series");
  double lo = 0, hi = 1;
  for (const auto& [a, b] : boxes) {
    lo = std::min(lo, b.lower);
    hi = std::max(hi, b.upper);
    for (double o : b.outliers) lo = std::min(lo, o), hi = std::max(hi, o);
  }
  auto y = [&](double v) { return kH - kBottom - (v - lo) / (hi - lo) * (kH - kTop - kBottom); };
  double slot = (kW - kLeft - kRight) / static_cast<double>(boxes.size());
  std::ostringstream os;
  header(os, title);
  y_ticks(os, lo, hi, y);
  std::size_t i = 0;
  for (const auto& [agent, b] : boxes) {
    double cx = kLeft + slot * (static_cast<double>(i++) + 0.5);
    double half = std::min(40.0, slot / 4);
    os << "<line x1=\"" << num(cx) << "\" y1=\"" << num(y(b.upper)) << "\" x2=\"" << num(cx) << "\" y2=\""
       << num(y(b.q3)) << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << num(cx) << "\" y1=\"" << num(y(b.q1)) << "\" x2=\"" << num(cx) << "\" y2=\""
       << num(y(b.lower)) << "\" stroke=\"black\"/>\n";
    for (double w : {b.lower, b.upper}) {
      os << "<line x1=\"" << num(cx - half / 2) << "\" y1=\"" << num(y(w)) << "\" x2=\"" << num(cx + half / 2)
         << "\" y2=\"" << num(y(w)) << "\" stroke=\"black\"/>\n";
    }
    os << "<rect x=\"" << num(cx - half) << "\" y=\"" << num(y(b.q3)) << "\" width=\"" << num(2 * half)
       << "\" height=\"" << num(y(b.q1) - y(b.q3)) << "\" fill=\"none\" stroke=\"" << series_colour(agent)
       << "\" stroke-width=\"2\"/>\n";
    os << "<line x1=\"" << num(cx - half) << "\" y1=\"" << num(y(b.median)) << "\" x2=\"" << num(cx + half)
       << "\" y2=\"" << num(y(b.median)) << "\" stroke=\"#ff7f0e\" stroke-width=\"2\"/>\n";
    for (double o : b.outliers) {
      os << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(y(o)) << "\" r=\"3\" fill=\"black\"/>\n";
    }
    os << "<text x=\"" << num(cx) << "\" y=\"" << kH - kBottom + 16
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << agent << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

// --- replay ------------------------------------------------------------------

inline nlohmann::json to_json(const GardenWorld& w) {
  nlohmann::json plants = nlohmann::json::array();
  for (const auto& [c, k] : w.plants) {
    plants.push_back({{"x", c.x}, {"y", c.y}, {"kind", k == PlantKind::kNative ? "native" : "invasive"}});
  }
  return {{"agent", {w.agent.x, w.agent.y}}, {"clock", w.clock}, {"plants", plants}};
}

inline GardenWorld world_from_json(const nlohmann::json& j) {
  GardenWorld w;
  w.agent = {j.at("agent").at(0).get<int>(), j.at("agent").at(1).get<int>()};
  w.clock = j.at("clock").get<int>();
  for (const auto& p : j.at("plants")) {
    auto kind = p.at("kind").get<std::string>();
    if (kind != "native" && kind != "invasive") throw std::invalid_argument("unknown plant kind " + kind);
    w.plants[{p.at("x").get<int>(), p.at("y").get<int>()}] = kind == "native" ? PlantKind::kNative : PlantKind::kInvasive;
  }
  return w;
}

/// Records the world after every executed action.
class WorldRecorder : public MetaHook {
 public:
  void begin_episode(Episode& e) override {
    snapshots_.clear();
    snapshots_.push_back(e.world);
  }
  void after_phase(Episode& e) override {
    if (e.world.clock != snapshots_.back().clock) snapshots_.push_back(e.world);
  }
  const std::vector<GardenWorld>& snapshots() const { return snapshots_; }

 private:
  std::vector<GardenWorld> snapshots_;
};

/// Re-executes one trial of `cfg`. For the learning agent every earlier
/// trial of the sweep is run first so its model matches the original run.
inline nlohmann::json replay_trial(const ExperimentConfig& cfg, int n_goals, int trial) {
  cfg.check();
  if (n_goals < cfg.goals_min || n_goals > cfg.goals_max || trial < 0 || trial >= cfg.trials) {
    throw std::invalid_argument("trial lies outside the configured sweep");
  }
  auto seed = trial_seed(cfg.seed, n_goals, trial);
  auto problem = generate_problem({seed, n_goals, cfg.ratio});
  WorldRecorder rec;
  EpisodeResult r;
  if (cfg.agent == AgentMode::kLearning) {
    LearningAgent agent;
    for (int n = cfg.goals_min; n <= n_goals; ++n) {
      for (int k = 0; k < cfg.trials && !(n == n_goals && k == trial); ++k) {
        agent.run(generate_problem({trial_seed(cfg.seed, n, k), n, cfg.ratio}), cfg.episode);
      }
    }
    r = agent.run(problem, cfg.episode, rec);
  } else {
    CognitiveAgent agent(AgentMode::kStandard);
    r = agent.run_episode(problem.world, problem.goals, &rec, cfg.episode);
  }
  nlohmann::json worlds = nlohmann::json::array();
  for (const auto& w : rec.snapshots()) worlds.push_back(to_json(w));
  std::ostringstream row;
  write_csv_row(row, make_row(cfg, n_goals, trial, seed, r));
  auto line = row.str();
  line.pop_back();
  return {{"row", line}, {"worlds", worlds}, {"trace", export_trace(r.trace)}};
}

}  // namespace metagarden
