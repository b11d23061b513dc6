#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cqlin/value.hpp"

namespace cqlin {

// Deduplicated fixed-width rows in insertion order, stored flat. Row ids are
// dense and stable. Open addressing over row ids keeps lookups allocation-free.
class RowSet {
 public:
  explicit RowSet(std::size_t width = 0) : width_(width) {}

  std::size_t width() const { return width_; }
  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }

  std::span<const Value> row(std::uint32_t id) const {
    return {data_.data() + static_cast<std::size_t>(id) * width_, width_};
  }
  const std::vector<Value>& data() const { return data_; }

  // Returns the row id and whether the row was new.
  std::pair<std::uint32_t, bool> insert(std::span<const Value> row);
  std::optional<std::uint32_t> find(std::span<const Value> row) const;
  bool contains(std::span<const Value> row) const { return find(row).has_value(); }

  void reserve(std::size_t rows);
  void clear();

 private:
  static constexpr std::uint32_t kEmpty = 0xffffffffu;

  static std::uint64_t hash_row(std::span<const Value> row);
  bool equal_at(std::uint32_t id, std::span<const Value> row) const;
  void rehash(std::size_t capacity);

  std::size_t width_;
  std::size_t count_ = 0;
  std::vector<Value> data_;
  std::vector<std::uint32_t> hashes_;
  std::vector<std::uint32_t> slots_;
};

}  // namespace cqlin
