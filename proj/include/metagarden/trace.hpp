#pragma once

// Introspective trace: snapshots of cognition's working memory interleaved
// with the cognitive processes that produced them.

#include <array>
#include <cstdint>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "metagarden/agenda.hpp"
#include "metagarden/planner.hpp"

namespace metagarden {

struct TraceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class MentalAction : std::uint8_t {
  kPerceive,
  kDetectDiscrepancies,
  kExplanation,
  kGoalInsertion,
  kEvaluate,
  kIntend,
  kPlan,
  kAct,
};

inline constexpr std::array<std::string_view, 8> kMentalActionNames{
    "Perceive", "DetectDiscrepancies", "Explanation", "GoalInsertion",
    "Evaluate", "Intend",              "Plan",        "Act"};

inline std::string_view to_string(MentalAction a) { return kMentalActionNames[static_cast<int>(a)]; }

inline std::optional<MentalAction> parse_mental_action(std::string_view s) {
  for (std::size_t i = 0; i < kMentalActionNames.size(); ++i) {
    if (kMentalActionNames[i] == s) return static_cast<MentalAction>(i);
  }
  return std::nullopt;
}

/// Cognitive phase a mental action belongs to.
inline std::string_view phase_of(MentalAction a) {
  switch (a) {
    case MentalAction::kDetectDiscrepancies:
    case MentalAction::kExplanation:
    case MentalAction::kGoalInsertion:
      return "Interpret";
    default:
      return to_string(a);
  }
}

struct ActionRef {
  Symbol schema;
  std::vector<Symbol> args;

  std::string str() const {
    std::string out = "(" + schema.name();
    for (auto a : args) out += " " + a.name();
    return out + ")";
  }
  friend bool operator==(const ActionRef&, const ActionRef&) = default;
};

/// The seven-field snapshot (g_c, agenda, plan, world model, D, E, last
/// action). The world model is the believed fluent facts plus a fingerprint
/// of the believed domain text.
struct MentalState {
  std::vector<Literal> current_goals;
  std::vector<GoalRecord> agenda;
  std::shared_ptr<const Plan> plan;
  std::size_t plan_cursor = 0;
  State believed;
  std::uint64_t domain_fingerprint = 0;
  DiscrepancySet discrepancies;
  std::optional<Explanation> explanation;
  std::optional<ActionRef> last_action;

  bool has_plan() const { return plan && plan_cursor < plan->size(); }

  friend bool operator==(const MentalState&, const MentalState&) = default;
};

class Trace {
 public:
  /// Appends (pre, action, post). `pre` must equal the last recorded state.
  void record(const MentalState& pre, MentalAction action, MentalState post) {
    if (states_.empty()) {
      states_.push_back(pre);
    } else if (!(states_.back() == pre)) {
      throw TraceError("pre-state of " + std::string(to_string(action)) +
                       " does not match the last recorded state");
    }
    actions_.push_back(action);
    states_.push_back(std::move(post));
  }

  /// Appends after the last state; the trace must already hold one.
  void append(MentalAction action, MentalState post) {
    if (states_.empty()) throw TraceError("append on an empty trace");
    actions_.push_back(action);
    states_.push_back(std::move(post));
  }

  void start(MentalState s0) {
    if (!states_.empty()) throw TraceError("trace already started");
    states_.push_back(std::move(s0));
  }

  const std::vector<MentalState>& states() const { return states_; }
  const std::vector<MentalAction>& actions() const { return actions_; }
  std::size_t action_count() const { return actions_.size(); }
  bool empty() const { return states_.empty(); }
  const MentalState& back() const { return states_.back(); }

 private:
  std::vector<MentalState> states_;
  std::vector<MentalAction> actions_;
};

/// View of actions [begin, end) of a trace; action i maps the state at
/// index i to the state at index i + 1.
struct TraceSegment {
  const Trace* trace = nullptr;
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool empty() const { return begin == end; }

  struct Triple {
    std::size_t index;
    const MentalState& pre;
    MentalAction action;
    const MentalState& post;
  };
  Triple triple(std::size_t k) const {
    std::size_t i = begin + k;
    return {i, trace->states()[i], trace->actions()[i], trace->states()[i + 1]};
  }
};

/// Hands out the part of the trace recorded since the previous call.
class Monitor {
 public:
  TraceSegment monitor(const Trace& trace) {
    if (cursor_ > trace.action_count()) cursor_ = 0;
    TraceSegment seg{&trace, cursor_, trace.action_count()};
    cursor_ = trace.action_count();
    return seg;
  }
  void reset() { cursor_ = 0; }

 private:
  std::size_t cursor_ = 0;
};

inline std::uint64_t fingerprint(std::string_view text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) h = (h ^ c) * 1099511628211ull;
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

inline nlohmann::json to_json(const MentalState& s) {
  using nlohmann::json;
  auto lits = [](const auto& v) {
    json a = json::array();
    for (const auto& l : v) a.push_back(l.str());
    return a;
  };
  auto atoms = [](std::vector<Atom> v) {
    std::sort(v.begin(), v.end(), atom_less_by_name);
    json a = json::array();
    for (const auto& x : v) a.push_back(x.str());
    return a;
  };
  json agenda = json::array();
  for (const auto& r : s.agenda) agenda.push_back({{"goal", r.formula.str()}, {"status", to_string(r.status)}});
  json plan = json::array();
  if (s.plan) {
    for (const auto& st : s.plan->steps) plan.push_back(st.str());
  }
  json expl = nullptr;
  if (s.explanation) expl = {{"pattern", s.explanation->pattern}, {"culprit", s.explanation->culprit}};
  return {
      {"current_goals", lits(s.current_goals)},
      {"agenda", agenda},
      {"plan", plan},
      {"plan_cursor", s.plan_cursor},
      {"world", atoms(s.believed.facts())},
      {"domain_fingerprint", hex64(s.domain_fingerprint)},
      {"discrepancies", {{"missing", atoms(s.discrepancies.missing)}, {"extra", atoms(s.discrepancies.extra)}}},
      {"explanation", expl},
      {"last_action", s.last_action ? json(s.last_action->str()) : json(nullptr)},
  };
}

/// {"elements": [state, action, state, ...]}
inline nlohmann::json export_trace(const Trace& t) {
  using nlohmann::json;
  json elems = json::array();
  for (std::size_t i = 0; i < t.states().size(); ++i) {
    elems.push_back({{"kind", "state"}, {"index", i}, {"fields", to_json(t.states()[i])}});
    if (i < t.actions().size()) {
      auto a = t.actions()[i];
      elems.push_back({{"kind", "action"}, {"tag", to_string(a)}, {"phase", phase_of(a)}});
    }
  }
  return {{"elements", elems}};
}

/// Checks an exported trace: starts and ends with a state, strictly
/// alternates, carries known tags, and |states| = |actions| + 1. Returns an
/// empty string when valid, else a diagnostic.
inline std::string validate_trace_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("elements") || !j["elements"].is_array()) return "missing elements array";
  const auto& e = j["elements"];
  if (e.empty()) return "empty trace";
  std::size_t states = 0, actions = 0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (!e[i].is_object() || !e[i].contains("kind")) return "element " + std::to_string(i) + " lacks kind";
    auto kind = e[i]["kind"].get<std::string>();
    bool want_state = i % 2 == 0;
    if (want_state && kind != "state") return "element " + std::to_string(i) + " should be a state";
    if (!want_state && kind != "action") return "element " + std::to_string(i) + " should be an action";
    if (kind == "state") {
      if (!e[i].contains("fields")) return "state " + std::to_string(i) + " lacks fields";
      ++states;
    } else {
      auto tag = e[i].value("tag", std::string{});
      auto parsed = parse_mental_action(tag);
      if (!parsed) return "unknown mental action '" + tag + "'";
      if (e[i].value("phase", std::string{}) != phase_of(*parsed)) return "phase tag mismatch at " + std::to_string(i);
      ++actions;
    }
  }
  if (states != actions + 1) return "state/action count mismatch";
  return {};
}

}  // namespace metagarden
