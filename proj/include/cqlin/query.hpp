#pragma once

#include <span>
#include <string>
#include <vector>

#include "cqlin/symbol.hpp"

namespace cqlin {

struct Atom {
  Symbol relation;
  std::vector<Symbol> args;  // variables

  friend bool operator==(const Atom&, const Atom&) = default;
  friend auto operator<=>(const Atom&, const Atom&) = default;
};

// Relation symbol reserved for the answer-variable guard of free-connex tests.
inline const Symbol& guard_relation() {
  static const Symbol s("__guard");
  return s;
}

// Variables in order of first occurrence.
std::vector<Symbol> variables_of(std::span<const Atom> atoms);

// q(x̄) ← atoms. Answer variables are distinct and each occurs in an atom.
class ConjunctiveQuery {
 public:
  ConjunctiveQuery() = default;
  ConjunctiveQuery(std::vector<Symbol> answer_vars, std::vector<Atom> atoms, Symbol head = Symbol("q"));

  const std::vector<Symbol>& answer_vars() const { return answer_vars_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  Symbol head() const { return head_; }

  std::size_t arity() const { return answer_vars_.size(); }
  bool is_boolean() const { return answer_vars_.empty(); }
  bool is_answer_var(Symbol v) const;

  // All variables, answer variables first, then by first occurrence.
  std::vector<Symbol> variables() const;
  std::vector<Symbol> existential_vars() const;
  bool is_full() const { return existential_vars().empty(); }

  ConjunctiveQuery without_atom(std::size_t index) const;
  ConjunctiveQuery with_atoms(std::vector<Atom> atoms) const;

  friend bool operator==(const ConjunctiveQuery&, const ConjunctiveQuery&) = default;

 private:
  std::vector<Symbol> answer_vars_;
  std::vector<Atom> atoms_;
  Symbol head_{"q"};
};

// body → ∃ existentials. head. An empty body means "true".
struct Tgd {
  std::vector<Atom> body;
  std::vector<Atom> head;

  // Body variables that occur in the head, in body order.
  std::vector<Symbol> frontier() const;
  // Head variables absent from the body, in head order.
  std::vector<Symbol> existentials() const;
  bool is_full() const { return existentials().empty(); }

  friend bool operator==(const Tgd&, const Tgd&) = default;
};

using TgdSet = std::vector<Tgd>;

std::string to_string(const Atom& atom);
std::string to_string(const ConjunctiveQuery& q);
std::string to_string(const Tgd& tgd);
std::string to_string(const TgdSet& tgds);

}  // namespace cqlin
