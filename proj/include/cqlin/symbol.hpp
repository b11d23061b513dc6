#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <string_view>

namespace cqlin {

// Interned name for relations and variables. Ids are process-wide and
// assigned in first-intern order.
class Symbol {
 public:
  Symbol() = default;
  explicit Symbol(std::string_view name);

  static Symbol from_id(std::uint32_t id) {
    Symbol s;
    s.id_ = id;
    return s;
  }

  std::uint32_t id() const { return id_; }
  const std::string& name() const;

  friend bool operator==(Symbol a, Symbol b) { return a.id_ == b.id_; }
  friend auto operator<=>(Symbol a, Symbol b) { return a.id_ <=> b.id_; }

 private:
  std::uint32_t id_ = 0;  // 0 is the empty name
};

inline std::ostream& operator<<(std::ostream& os, Symbol s) { return os << s.name(); }

// Orders symbols by their text, for output that must not depend on intern order.
struct SymbolNameLess {
  bool operator()(Symbol a, Symbol b) const { return a.name() < b.name(); }
};

}  // namespace cqlin

template <>
struct std::hash<cqlin::Symbol> {
  std::size_t operator()(cqlin::Symbol s) const noexcept { return std::hash<std::uint32_t>{}(s.id()); }
};
