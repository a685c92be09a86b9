#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>

namespace metagarden {

/// Interned identifier. Two symbols are equal iff their names are equal.
/// Ordering follows intern order, so anything printed must sort by name().
class Symbol {
 public:
  constexpr Symbol() = default;
  explicit Symbol(std::string_view name);

  const std::string& name() const;
  std::uint32_t id() const { return id_; }
  bool empty() const { return id_ == 0; }
  bool is_variable() const { return !empty() && name().front() == '?'; }

  friend bool operator==(Symbol, Symbol) = default;
  friend auto operator<=>(Symbol, Symbol) = default;

 private:
  std::uint32_t id_ = 0;
};

namespace detail {

class SymbolTable {
 public:
  static SymbolTable& instance() {
    static SymbolTable table;
    return table;
  }

  std::uint32_t intern(std::string_view name) {
    {
      std::shared_lock lock(mutex_);
      if (auto it = ids_.find(name); it != ids_.end()) return it->second;
    }
    std::unique_lock lock(mutex_);
    if (auto it = ids_.find(name); it != ids_.end()) return it->second;
    names_.emplace_back(name);
    auto id = static_cast<std::uint32_t>(names_.size() - 1);
    ids_.emplace(names_.back(), id);
    return id;
  }

  const std::string& name(std::uint32_t id) {
    std::shared_lock lock(mutex_);
    return names_[id];
  }

 private:
  SymbolTable() {
    names_.emplace_back();
    ids_.emplace(names_.back(), 0);
  }

  std::shared_mutex mutex_;
  std::deque<std::string> names_;  // deque keeps references stable
  std::unordered_map<std::string_view, std::uint32_t> ids_;
};

}  // namespace detail

inline Symbol::Symbol(std::string_view name)
    : id_(detail::SymbolTable::instance().intern(name)) {}

inline const std::string& Symbol::name() const {
  return detail::SymbolTable::instance().name(id_);
}

/// Orders symbols by spelling rather than intern order.
struct ByName {
  bool operator()(Symbol a, Symbol b) const { return a.name() < b.name(); }
};

}  // namespace metagarden

template <>
struct std::hash<metagarden::Symbol> {
  std::size_t operator()(metagarden::Symbol s) const noexcept {
    return std::hash<std::uint32_t>{}(s.id());
  }
};
