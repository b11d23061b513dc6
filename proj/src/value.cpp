#include "cqlin/value.hpp"

#include <cstdio>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>

#include "stable_store.hpp"

namespace cqlin {
namespace {

std::uint64_t fnv1a(std::string_view text, std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

struct SkolemKeyHash {
  std::size_t operator()(const SkolemId& s) const noexcept {
    std::uint64_t h = (std::uint64_t{s.tgd_index} << 32) ^ s.head_variable.id();
    for (Value v : s.frontier_image) h = h * 1000003u ^ v.id;
    return static_cast<std::size_t>(h);
  }
};

struct Entry {
  ValueInfo info;
  std::string text;
};

struct ValuePool {
  std::shared_mutex mutex;
  detail::StableStore<Entry> entries;
  std::unordered_map<std::uint32_t, std::uint32_t> by_name;
  std::unordered_map<std::uint64_t, std::uint32_t> by_tag;
  std::unordered_map<SkolemId, std::uint32_t, SkolemKeyHash> by_skolem;

  // Id 0 is reserved so a default Value never aliases a real constant.
  ValuePool() { entries.append(Entry{NamedConstant{Symbol()}, "?"}); }
};

ValuePool& pool() {
  static ValuePool p;
  return p;
}

std::string null_text(const SkolemId& s) {
  std::string frontier;
  for (std::size_t i = 0; i < s.frontier_image.size(); ++i) {
    if (i) frontier += ',';
    frontier += render(s.frontier_image[i]);
  }
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(frontier)));
  return "_:t" + std::to_string(s.tgd_index) + "." + s.head_variable.name() + "." + hash;
}

template <typename Map, typename Key, typename Make>
Value intern(Map ValuePool::*map, const Key& key, Make make) {
  auto& p = pool();
  {
    std::shared_lock lock(p.mutex);
    auto& m = p.*map;
    if (auto it = m.find(key); it != m.end()) return Value{it->second};
  }
  // Render before locking: rendering a null reads other entries.
  Entry entry = make();
  std::unique_lock lock(p.mutex);
  auto& m = p.*map;
  if (auto it = m.find(key); it != m.end()) return Value{it->second};
  const std::uint32_t id = p.entries.append(std::move(entry));
  m.emplace(key, id);
  return Value{id};
}

}  // namespace

Value constant(Symbol name) {
  return intern(&ValuePool::by_name, name.id(), [&] { return Entry{NamedConstant{name}, name.name()}; });
}

Value constant(std::string_view name) { return constant(Symbol(name)); }

Value tagged(Symbol tag, Value value) {
  const std::uint64_t key = (std::uint64_t{tag.id()} << 32) | value.id;
  return intern(&ValuePool::by_tag, key, [&] {
    return Entry{TaggedConstant{tag, value}, "<" + tag.name() + "," + render(value) + ">"};
  });
}

Value skolem_null(const SkolemId& id) {
  return intern(&ValuePool::by_skolem, id, [&] { return Entry{NullValue{id}, null_text(id)}; });
}

const ValueInfo& describe(Value v) { return pool().entries[v.id].info; }

bool is_null(Value v) { return std::holds_alternative<NullValue>(describe(v)); }

bool is_tagged(Value v) { return std::holds_alternative<TaggedConstant>(describe(v)); }

const std::string& render(Value v) { return pool().entries[v.id].text; }

}  // namespace cqlin
