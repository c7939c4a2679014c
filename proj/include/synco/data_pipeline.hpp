#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "synco/core_math.hpp"

namespace synco {

using Label = std::int32_t;

/// Raw input vectors, optionally labeled. Labels feed evaluation only.
struct Dataset {
  Matrix samples;
  std::optional<std::vector<Label>> labels;

  std::size_t size() const noexcept { return samples.rows(); }
  std::size_t dim() const noexcept { return samples.cols(); }
  bool has_labels() const noexcept { return labels.has_value(); }
  std::size_t num_classes() const;
  void validate() const;
};

/// Label-free view handed to pretraining. There is no way to reach labels from it.
class UnlabeledDataset {
 public:
  UnlabeledDataset() = default;
  std::size_t size() const noexcept { return samples_.rows(); }
  std::size_t dim() const noexcept { return samples_.cols(); }
  std::span<const double> operator[](std::size_t i) const { return samples_.row(i); }

 private:
  friend UnlabeledDataset strip_labels(const Dataset&);
  explicit UnlabeledDataset(Matrix samples) : samples_(std::move(samples)) {}
  Matrix samples_;
};

UnlabeledDataset strip_labels(const Dataset& dataset);

struct GaussianMixtureSpec {
  std::size_t num_classes = 10;
  std::size_t per_class = 500;
  std::size_t dim = 32;
  double class_separation = 1.0;
  double noise_sigma = 0.5;
};

/// Class means uniform on the sphere of radius class_separation; samples are
/// mean + N(0, noise_sigma^2 I). Samples are grouped by class, labels 0..C-1.
Dataset generate_gaussian_mixture(const GaussianMixtureSpec& spec, std::uint64_t seed);

/// IDX images (magic 0x00000803, unsigned bytes) scaled to [0, 1] and flattened,
/// with an optional IDX label file (magic 0x00000801).
Dataset load_idx(const std::filesystem::path& images,
                 const std::optional<std::filesystem::path>& labels = std::nullopt);

/// CSV with a header row and one sample per line. A last header column named
/// "label" is read as integer class ids.
Dataset load_csv(const std::filesystem::path& path);

struct AugmentationConfig {
  double jitter_sigma = 0.1;
  double scale_lo = 0.8;
  double scale_hi = 1.2;
  double mask_fraction = 0.25;

  void validate() const;
};

/// One draw t ~ T: zero floor(mask_fraction * d) random coordinates, scale by
/// u ~ U(lo, hi), then add N(0, jitter_sigma^2 I).
Vector augment(std::span<const double> x, const AugmentationConfig& config, Rng& rng);

/// Two independent augmentations (view_q, view_k) of the same input.
std::pair<Vector, Vector> two_views(std::span<const double> x, const AugmentationConfig& config, Rng& rng);

}  // namespace synco
