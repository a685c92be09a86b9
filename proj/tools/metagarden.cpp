// metagarden: run garden experiments, plot results, solve PDDL tasks and
// replay single trials.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "metagarden/experiment.hpp"
#include "metagarden/pddl.hpp"
#include "metagarden/planner.hpp"

namespace mg = metagarden;

namespace {

constexpr int kUsageError = 2;

struct GoalRange {
  int lo = 1;
  int hi = 20;
};

GoalRange parse_range(const std::string& s) {
  auto colon = s.find(':');
  try {
    if (colon == std::string::npos) {
      int v = std::stoi(s);
      return {v, v};
    }
    return {std::stoi(s.substr(0, colon)), std::stoi(s.substr(colon + 1))};
  } catch (const std::exception&) {
    throw CLI::ValidationError("--goals", "expected N or LO:HI, got " + s);
  }
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

struct SweepOptions {
  std::string agent = "learning";
  double ratio = 0.75;
  std::string goals = "1:20";
  int trials = 100;
  std::uint64_t seed = 42;
  int cycle_cap = 500;
  std::size_t node_cap = 200'000;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--agent", agent, "standard or learning")->check(CLI::IsMember({"standard", "learning"}));
    cmd->add_option("--ratio", ratio, "fraction of goals that are native plants")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--goals", goals, "goal count N or range LO:HI");
    cmd->add_option("--trials", trials, "trials per goal count")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", seed, "master seed (default: $METAGARDEN_SEED or 42)");
    cmd->add_option("--cycle-cap", cycle_cap, "cognitive cycles per episode")->check(CLI::PositiveNumber);
    cmd->add_option("--node-cap", node_cap, "planner node limit")->check(CLI::PositiveNumber);
  }

  mg::ExperimentConfig config() const {
    mg::ExperimentConfig cfg;
    cfg.agent = agent == "learning" ? mg::AgentMode::kLearning : mg::AgentMode::kStandard;
    cfg.ratio = ratio;
    auto r = parse_range(goals);
    cfg.goals_min = r.lo;
    cfg.goals_max = r.hi;
    cfg.trials = trials;
    cfg.seed = seed;
    cfg.episode.cycle_cap = cycle_cap;
    cfg.episode.search.node_cap = node_cap;
    try {
      cfg.check();
    } catch (const std::invalid_argument& e) {
      throw CLI::ValidationError(e.what());
    }
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Metacognitive gardening agent: experiments, plots, planning and replay"};
  app.require_subcommand(1);

  SweepOptions sweep;
  if (const char* env = std::getenv("METAGARDEN_SEED")) {
    try {
      sweep.seed = std::stoull(env);
    } catch (const std::exception&) {
      std::cerr << "error: METAGARDEN_SEED is not an unsigned integer\n";
      return kUsageError;
    }
  }

  std::string run_out = "-";
  auto* run = app.add_subcommand("run", "run a trial sweep and write CSV rows");
  sweep.add_to(run);
  run->add_option("--out", run_out, "CSV output path ('-' for stdout)");

  std::vector<std::string> plot_in;
  std::string plot_kind = "curve", plot_out = "-";
  int plot_goals = 10;
  auto* plot = app.add_subcommand("plot", "render an SVG from one or more result CSVs");
  plot->add_option("--in", plot_in, "CSV inputs")->required()->check(CLI::ExistingFile);
  plot->add_option("--kind", plot_kind, "curve or box")->check(CLI::IsMember({"curve", "box"}));
  plot->add_option("--goals", plot_goals, "goal count for box plots")->check(CLI::PositiveNumber);
  plot->add_option("--out", plot_out, "SVG output path ('-' for stdout)");

  std::string domain_path, problem_path;
  std::size_t solve_cap = 200'000;
  auto* solve = app.add_subcommand("solve", "plan for a PDDL domain and problem");
  solve->add_option("--domain", domain_path, "domain file")->required()->check(CLI::ExistingFile);
  solve->add_option("--problem", problem_path, "problem file")->required()->check(CLI::ExistingFile);
  solve->add_option("--node-cap", solve_cap, "planner node limit")->check(CLI::PositiveNumber);

  int replay_n = 1, replay_trial = 0;
  std::string replay_out = "-";
  auto* replay = app.add_subcommand("replay", "re-run one trial and dump world snapshots and the trace as JSON");
  sweep.add_to(replay);
  replay->add_option("--n-goals", replay_n, "goal count of the trial")->required();
  replay->add_option("--trial", replay_trial, "trial index")->required();
  replay->add_option("--out", replay_out, "JSON output path ('-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*run) {
      auto cfg = sweep.config();
      std::ofstream file;
      if (run_out != "-") {
        file.open(run_out);
        if (!file) throw std::runtime_error("cannot write " + run_out);
      }
      std::ostream& out = run_out == "-" ? std::cout : file;
      out << mg::kCsvHeader << '\n';
      std::size_t done = 0;
      mg::run_experiment(cfg, nullptr, [&](const mg::TrialRow& row, const mg::EpisodeResult&) {
        mg::write_csv_row(out, row);
        out.flush();
        if (!out) throw std::runtime_error("write failed after " + std::to_string(done) + " completed rows");
        ++done;
      });
      if (run_out != "-") std::cerr << "wrote " << done << " rows to " << run_out << "\n";
    } else if (*plot) {
      std::vector<mg::TrialRow> rows;
      for (const auto& path : plot_in) {
        std::ifstream in(path);
        auto part = mg::read_csv(in);
        rows.insert(rows.end(), part.begin(), part.end());
      }
      if (rows.empty()) throw std::runtime_error("no rows in input");
      std::string svg;
      if (plot_kind == "curve") {
        svg = mg::curve_svg(mg::aggregate(rows));
      } else {
        std::map<std::string, mg::BoxStats> boxes;
        for (const std::string agent : {"learning", "standard"}) {
          auto s = mg::achieved_samples(rows, agent, plot_goals);
          if (!s.empty()) boxes[agent] = mg::boxplot_stats(s);
        }
        if (boxes.empty()) throw std::runtime_error("no rows with " + std::to_string(plot_goals) + " goals");
        svg = mg::box_svg(boxes, "Goals achieved, " + std::to_string(plot_goals) + "-goal problems");
      }
      write_text(plot_out, svg);
    } else if (*solve) {
      auto domain = mg::parse_domain(slurp(domain_path));
      auto problem = mg::parse_problem(slurp(problem_path), domain);
      auto r = mg::plan(mg::ground(domain, problem), {solve_cap});
      if (r.status == mg::PlanStatus::kSolved) {
        for (const auto& s : r.plan.steps) std::cout << s.str() << "\n";
        std::cout << "; " << r.plan.size() << " steps, " << r.expanded << " expanded\n";
        return 0;
      }
      std::cout << (r.status == mg::PlanStatus::kUnsolvable ? "unsolvable" : "node limit reached") << "\n";
      return 1;
    } else if (*replay) {
      auto cfg = sweep.config();
      auto j = mg::replay_trial(cfg, replay_n, replay_trial);
      write_text(replay_out, j.dump(2) + "\n");
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const mg::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
