#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cqlin/symbol.hpp"

namespace cqlin {

// Database term: a constant or a labelled null. Ids index a process-wide
// pool, so equal descriptions always give equal values.
struct Value {
  std::uint32_t id = 0;

  friend bool operator==(Value a, Value b) { return a.id == b.id; }
  friend auto operator<=>(Value a, Value b) { return a.id <=> b.id; }
};

using Tuple = std::vector<Value>;

// Identity of a chase null: which rule minted it, for which existential
// variable, at which frontier image.
struct SkolemId {
  std::uint32_t tgd_index = 0;
  Symbol head_variable;
  std::vector<Value> frontier_image;

  friend bool operator==(const SkolemId&, const SkolemId&) = default;
};

struct NamedConstant {
  Symbol name;
};

// A constant annotated with a query variable, written <tag,value>.
struct TaggedConstant {
  Symbol tag;
  Value value;
};

struct NullValue {
  SkolemId skolem;
};

using ValueInfo = std::variant<NamedConstant, TaggedConstant, NullValue>;

Value constant(std::string_view name);
Value constant(Symbol name);
Value tagged(Symbol tag, Value value);
Value skolem_null(const SkolemId& id);

const ValueInfo& describe(Value v);
bool is_null(Value v);
bool is_tagged(Value v);

// Text form: names as-is, tagged constants as <tag,value>, nulls as
// _:t<tgd>.<var>.<hash of the frontier image>.
const std::string& render(Value v);

// Term of a query or instance; variables live in their own namespace.
struct Term {
  enum class Kind : std::uint8_t { Constant, Null, Variable };

  Kind kind = Kind::Constant;
  std::uint32_t id = 0;

  static Term of(Value v) { return {is_null(v) ? Kind::Null : Kind::Constant, v.id}; }
  static Term variable(Symbol s) { return {Kind::Variable, s.id()}; }

  friend bool operator==(Term, Term) = default;
};

}  // namespace cqlin

template <>
struct std::hash<cqlin::Value> {
  std::size_t operator()(cqlin::Value v) const noexcept { return std::hash<std::uint32_t>{}(v.id); }
};
