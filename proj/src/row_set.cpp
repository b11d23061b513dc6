#include "cqlin/row_set.hpp"

#include <algorithm>
#include <cassert>

namespace cqlin {

std::uint64_t RowSet::hash_row(std::span<const Value> row) {
  std::uint64_t h = 0x9e3779b97f4a7c15ull;
  for (Value v : row) {
    h ^= v.id;
    h *= 0xff51afd7ed558ccdull;
    h ^= h >> 32;
  }
  return h;
}

bool RowSet::equal_at(std::uint32_t id, std::span<const Value> row) const {
  const Value* stored = data_.data() + static_cast<std::size_t>(id) * width_;
  return std::equal(row.begin(), row.end(), stored);
}

void RowSet::rehash(std::size_t capacity) {
  slots_.assign(capacity, kEmpty);
  const std::size_t mask = capacity - 1;
  for (std::uint32_t id = 0; id < count_; ++id) {
    std::size_t pos = hashes_[id] & mask;
    while (slots_[pos] != kEmpty) pos = (pos + 1) & mask;
    slots_[pos] = id;
  }
}

void RowSet::reserve(std::size_t rows) {
  data_.reserve(rows * width_);
  hashes_.reserve(rows);
  std::size_t capacity = 16;
  while (capacity < rows * 2) capacity <<= 1;
  if (capacity > slots_.size()) rehash(capacity);
}

void RowSet::clear() {
  count_ = 0;
  data_.clear();
  hashes_.clear();
  slots_.clear();
}

std::pair<std::uint32_t, bool> RowSet::insert(std::span<const Value> row) {
  assert(row.size() == width_);
  if ((count_ + 1) * 2 > slots_.size()) rehash(std::max<std::size_t>(16, slots_.size() * 2));
  const auto h = static_cast<std::uint32_t>(hash_row(row));
  const std::size_t mask = slots_.size() - 1;
  std::size_t pos = h & mask;
  while (slots_[pos] != kEmpty) {
    const std::uint32_t id = slots_[pos];
    if (hashes_[id] == h && equal_at(id, row)) return {id, false};
    pos = (pos + 1) & mask;
  }
  const auto id = static_cast<std::uint32_t>(count_++);
  slots_[pos] = id;
  hashes_.push_back(h);
  data_.insert(data_.end(), row.begin(), row.end());
  return {id, true};
}

std::optional<std::uint32_t> RowSet::find(std::span<const Value> row) const {
  if (slots_.empty() || row.size() != width_) return std::nullopt;
  const auto h = static_cast<std::uint32_t>(hash_row(row));
  const std::size_t mask = slots_.size() - 1;
  std::size_t pos = h & mask;
  while (slots_[pos] != kEmpty) {
    const std::uint32_t id = slots_[pos];
    if (hashes_[id] == h && equal_at(id, row)) return id;
    pos = (pos + 1) & mask;
  }
  return std::nullopt;
}

}  // namespace cqlin
