#include "cqlin/symbol.hpp"

#include <mutex>
#include <shared_mutex>
#include <unordered_map>

#include "stable_store.hpp"

namespace cqlin {
namespace {

struct SymbolTable {
  std::shared_mutex mutex;
  detail::StableStore<std::string> names;
  std::unordered_map<std::string, std::uint32_t> ids;

  SymbolTable() {
    names.append(std::string());
    ids.emplace(std::string(), 0);
  }
};

SymbolTable& table() {
  static SymbolTable t;
  return t;
}

}  // namespace

Symbol::Symbol(std::string_view name) {
  auto& t = table();
  {
    std::shared_lock lock(t.mutex);
    if (auto it = t.ids.find(std::string(name)); it != t.ids.end()) {
      id_ = it->second;
      return;
    }
  }
  std::unique_lock lock(t.mutex);
  auto [it, inserted] = t.ids.try_emplace(std::string(name), t.names.size());
  if (inserted) t.names.append(std::string(name));
  id_ = it->second;
}

const std::string& Symbol::name() const { return table().names[id_]; }

}  // namespace cqlin
