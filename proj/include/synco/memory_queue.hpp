#pragma once

#include <cstddef>

#include "synco/core_math.hpp"

namespace synco {

/// Fixed-capacity FIFO bank of key features used as memory negatives.
/// Once full, every enqueue evicts the oldest entries.
class MemoryQueue {
 public:
  MemoryQueue() = default;
  MemoryQueue(std::size_t capacity, std::size_t dim);

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }
  bool full() const noexcept { return size_ == capacity_; }

  /// Throws BatchTooLarge if keys.size() > capacity().
  void enqueue(const FeatureSet& keys);

  /// Snapshot of the contents, oldest first.
  FeatureSet negatives() const;

  friend bool operator==(const MemoryQueue&, const MemoryQueue&) = default;

 private:
  std::size_t capacity_ = 0;
  std::size_t dim_ = 0;
  std::size_t size_ = 0;
  std::size_t head_ = 0;  // slot of the oldest entry
  Vector slots_;
};

}  // namespace synco
