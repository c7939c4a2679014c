#include "synco/memory_queue.hpp"

#include <algorithm>
#include <string>

namespace synco {

MemoryQueue::MemoryQueue(std::size_t capacity, std::size_t dim)
    : capacity_(capacity), dim_(dim), slots_(capacity * dim, 0.0) {
  if (capacity == 0) throw BatchTooLarge("queue capacity must be positive");
}

void MemoryQueue::enqueue(const FeatureSet& keys) {
  if (keys.empty()) return;
  if (keys.size() > capacity_) {
    throw BatchTooLarge("batch of " + std::to_string(keys.size()) + " keys exceeds queue capacity " +
                        std::to_string(capacity_));
  }
  if (keys.dim() != dim_) throw DimensionMismatch("queue dimension " + std::to_string(dim_) + " vs keys " +
                                                  std::to_string(keys.dim()));
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const std::size_t slot = (head_ + size_) % capacity_;
    std::ranges::copy(keys[i], slots_.begin() + static_cast<std::ptrdiff_t>(slot * dim_));
    if (size_ < capacity_) {
      ++size_;
    } else {
      head_ = (head_ + 1) % capacity_;
    }
  }
}

FeatureSet MemoryQueue::negatives() const {
  FeatureSet out(dim_);
  out.reserve(size_);
  for (std::size_t i = 0; i < size_; ++i) {
    const std::size_t slot = (head_ + i) % capacity_;
    const auto* p = slots_.data() + slot * dim_;
    out.push_back(FeatureVector::from_unit(Vector(p, p + dim_)));
  }
  return out;
}

}  // namespace synco
