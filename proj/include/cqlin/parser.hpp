#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "cqlin/database.hpp"
#include "cqlin/query.hpp"

namespace cqlin {

// Grammars (all accept '#' comments):
//   query:     q(x1,...,xk) :- R(...), ..., S(...).     body may be `true`
//   tgds:      R(...), S(...) -> T(...), U(...).        one per statement; body may be `true`
//   database:  R(c1,...,ck).                            constants are names, numbers or "quoted"
// Variables in rules start with a lowercase letter or underscore.
ConjunctiveQuery parse_query(std::string_view text);
TgdSet parse_tgds(std::string_view text);
Database parse_database(std::string_view text);

std::string read_file(const std::filesystem::path& path);
// A fact file, or a directory of headerless R.csv files.
Database load_database(const std::filesystem::path& path);

// Throws ArityError if q, tgds and db disagree on some relation's arity.
void check_schema(const ConjunctiveQuery& q, const TgdSet& tgds, const Database* db = nullptr);

std::string render_constant(Value v);
std::string to_string(const Fact& fact);
// One fact per line, relations in declaration order.
std::string to_string(const Database& db);

}  // namespace cqlin
