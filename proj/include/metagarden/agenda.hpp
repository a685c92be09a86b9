#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "metagarden/logic.hpp"

namespace metagarden {

enum class GoalStatus { kPending, kCurrent, kAchieved, kRejected };

inline const char* to_string(GoalStatus s) {
  switch (s) {
    case GoalStatus::kPending: return "pending";
    case GoalStatus::kCurrent: return "current";
    case GoalStatus::kAchieved: return "achieved";
    case GoalStatus::kRejected: return "rejected";
  }
  return "?";
}

struct GoalRecord {
  Literal formula;
  GoalStatus status = GoalStatus::kPending;
  friend bool operator==(const GoalRecord&, const GoalRecord&) = default;
};

/// Ordered goal store. Status only moves pending -> current -> achieved, or
/// from pending/current to rejected.
class Agenda {
 public:
  /// Returns false if the goal is already present.
  bool insert(const Literal& goal) {
    if (find(goal)) return false;
    records_.push_back({goal, GoalStatus::kPending});
    return true;
  }

  void set_status(std::size_t i, GoalStatus to) {
    auto from = records_.at(i).status;
    bool ok = (from == GoalStatus::kPending && to == GoalStatus::kCurrent) ||
              (from == GoalStatus::kCurrent && to == GoalStatus::kAchieved) ||
              ((from == GoalStatus::kPending || from == GoalStatus::kCurrent) && to == GoalStatus::kRejected);
    if (!ok) {
      throw ContractViolation(std::string("illegal goal transition ") + to_string(from) + " -> " +
                              to_string(to) + " for " + records_[i].formula.str());
    }
    records_[i].status = to;
  }

  const GoalRecord* find(const Literal& goal) const {
    auto it = std::find_if(records_.begin(), records_.end(), [&](auto& r) { return r.formula == goal; });
    return it == records_.end() ? nullptr : &*it;
  }

  std::size_t count(GoalStatus s) const {
    return static_cast<std::size_t>(
        std::count_if(records_.begin(), records_.end(), [&](auto& r) { return r.status == s; }));
  }

  std::vector<Literal> with_status(GoalStatus s) const {
    std::vector<Literal> out;
    for (const auto& r : records_) {
      if (r.status == s) out.push_back(r.formula);
    }
    return out;
  }

  const std::vector<GoalRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  friend bool operator==(const Agenda&, const Agenda&) = default;

 private:
  std::vector<GoalRecord> records_;
};

/// Outcome of the cognitive Explain step.
struct Explanation {
  std::string pattern;
  Binding bindings;
  std::string culprit;

  friend bool operator==(const Explanation& a, const Explanation& b) {
    return a.pattern == b.pattern && a.culprit == b.culprit && a.bindings.entries() == b.bindings.entries();
  }
};

}  // namespace metagarden
