#include "cqlin/query.hpp"

#include <algorithm>
#include <unordered_set>

#include "cqlin/errors.hpp"

namespace cqlin {

std::vector<Symbol> variables_of(std::span<const Atom> atoms) {
  std::vector<Symbol> out;
  std::unordered_set<Symbol> seen;
  for (const Atom& a : atoms) {
    for (Symbol v : a.args) {
      if (seen.insert(v).second) out.push_back(v);
    }
  }
  return out;
}

ConjunctiveQuery::ConjunctiveQuery(std::vector<Symbol> answer_vars, std::vector<Atom> atoms, Symbol head)
    : answer_vars_(std::move(answer_vars)), atoms_(std::move(atoms)), head_(head) {
  std::unordered_set<Symbol> in_atoms;
  for (const Atom& a : atoms_) in_atoms.insert(a.args.begin(), a.args.end());
  std::unordered_set<Symbol> seen;
  for (Symbol x : answer_vars_) {
    if (!seen.insert(x).second) throw DomainError("answer variable " + x.name() + " is listed twice");
    if (!in_atoms.count(x)) throw DomainError("answer variable " + x.name() + " occurs in no atom");
  }
}

bool ConjunctiveQuery::is_answer_var(Symbol v) const {
  return std::find(answer_vars_.begin(), answer_vars_.end(), v) != answer_vars_.end();
}

std::vector<Symbol> ConjunctiveQuery::variables() const {
  std::vector<Symbol> out = answer_vars_;
  for (Symbol v : variables_of(atoms_)) {
    if (!is_answer_var(v)) out.push_back(v);
  }
  return out;
}

std::vector<Symbol> ConjunctiveQuery::existential_vars() const {
  std::vector<Symbol> out;
  for (Symbol v : variables_of(atoms_)) {
    if (!is_answer_var(v)) out.push_back(v);
  }
  return out;
}

ConjunctiveQuery ConjunctiveQuery::without_atom(std::size_t index) const {
  std::vector<Atom> rest = atoms_;
  rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(index));
  return ConjunctiveQuery(answer_vars_, std::move(rest), head_);
}

ConjunctiveQuery ConjunctiveQuery::with_atoms(std::vector<Atom> atoms) const {
  return ConjunctiveQuery(answer_vars_, std::move(atoms), head_);
}

std::vector<Symbol> Tgd::frontier() const {
  std::unordered_set<Symbol> in_head;
  for (const Atom& a : head) in_head.insert(a.args.begin(), a.args.end());
  std::vector<Symbol> out;
  for (Symbol v : variables_of(body)) {
    if (in_head.count(v)) out.push_back(v);
  }
  return out;
}

std::vector<Symbol> Tgd::existentials() const {
  std::unordered_set<Symbol> in_body;
  for (const Atom& a : body) in_body.insert(a.args.begin(), a.args.end());
  std::vector<Symbol> out;
  for (Symbol v : variables_of(head)) {
    if (!in_body.count(v)) out.push_back(v);
  }
  return out;
}

namespace {

std::string join_atoms(const std::vector<Atom>& atoms) {
  std::string out;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (i) out += ", ";
    out += to_string(atoms[i]);
  }
  return out;
}

}  // namespace

std::string to_string(const Atom& atom) {
  std::string out = atom.relation.name() + "(";
  for (std::size_t i = 0; i < atom.args.size(); ++i) {
    if (i) out += ",";
    out += atom.args[i].name();
  }
  return out + ")";
}

std::string to_string(const ConjunctiveQuery& q) {
  std::string out = q.head().name() + "(";
  for (std::size_t i = 0; i < q.answer_vars().size(); ++i) {
    if (i) out += ",";
    out += q.answer_vars()[i].name();
  }
  out += ") :- ";
  out += q.atoms().empty() ? std::string("true") : join_atoms(q.atoms());
  return out + ".";
}

std::string to_string(const Tgd& tgd) {
  return (tgd.body.empty() ? std::string("true") : join_atoms(tgd.body)) + " -> " + join_atoms(tgd.head) + ".";
}

std::string to_string(const TgdSet& tgds) {
  std::string out;
  for (const Tgd& t : tgds) out += to_string(t) + "\n";
  return out;
}

}  // namespace cqlin
