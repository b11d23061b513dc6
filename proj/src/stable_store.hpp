#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>

namespace cqlin::detail {

// Append-only storage addressed by 32-bit ids. Elements never move, so a
// reader holding an id can read without taking the writer's lock.
template <typename T>
class StableStore {
 public:
  static constexpr std::uint32_t kChunkBits = 14;
  static constexpr std::uint32_t kChunkSize = 1u << kChunkBits;
  static constexpr std::uint32_t kMaxChunks = 1u << (32 - kChunkBits);

  StableStore() : chunks_(std::make_unique<std::array<std::atomic<T*>, kMaxChunks>>()) {
    for (auto& c : *chunks_) c.store(nullptr, std::memory_order_relaxed);
  }
  ~StableStore() {
    for (auto& c : *chunks_) delete[] c.load(std::memory_order_relaxed);
  }
  StableStore(const StableStore&) = delete;
  StableStore& operator=(const StableStore&) = delete;

  // Caller serializes appends.
  std::uint32_t append(T value) {
    const std::uint32_t id = size_;
    auto& slot = (*chunks_)[id >> kChunkBits];
    T* chunk = slot.load(std::memory_order_acquire);
    if (chunk == nullptr) {
      chunk = new T[kChunkSize];
      slot.store(chunk, std::memory_order_release);
    }
    chunk[id & (kChunkSize - 1)] = std::move(value);
    ++size_;
    return id;
  }

  const T& operator[](std::uint32_t id) const {
    return (*chunks_)[id >> kChunkBits].load(std::memory_order_acquire)[id & (kChunkSize - 1)];
  }

  std::uint32_t size() const { return size_; }

 private:
  std::unique_ptr<std::array<std::atomic<T*>, kMaxChunks>> chunks_;
  std::uint32_t size_ = 0;
};

}  // namespace cqlin::detail
