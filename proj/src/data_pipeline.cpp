#include "synco/data_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

namespace synco {

std::size_t Dataset::num_classes() const {
  if (!labels) return 0;
  return std::set<Label>(labels->begin(), labels->end()).size();
}

void Dataset::validate() const {
  if (labels && labels->size() != samples.rows()) {
    throw ShapeMismatch("dataset has " + std::to_string(samples.rows()) + " samples but " +
                        std::to_string(labels->size()) + " labels");
  }
}

UnlabeledDataset strip_labels(const Dataset& dataset) { return UnlabeledDataset(dataset.samples); }

Dataset generate_gaussian_mixture(const GaussianMixtureSpec& spec, std::uint64_t seed) {
  if (spec.num_classes == 0 || spec.per_class == 0 || spec.dim == 0 || !(spec.class_separation > 0.0)) {
    throw ConfigError("gaussian mixture needs positive class count, size, dimension and separation");
  }
  Rng rng(seed);
  Rng mean_rng = rng.split(1);
  Rng noise_rng = rng.split(2);

  std::vector<Vector> means;
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    FeatureVector dir;
    for (;;) {
      try {
        dir = normalize(gaussian_sample(spec.dim, 1.0, mean_rng));
        break;
      } catch (const ZeroVectorError&) {
      }
    }
    Vector mean(dir.values().begin(), dir.values().end());
    for (double& v : mean) v *= spec.class_separation;
    means.push_back(std::move(mean));
  }

  Dataset ds;
  ds.samples = Matrix(spec.num_classes * spec.per_class, spec.dim);
  ds.labels.emplace();
  ds.labels->reserve(ds.samples.rows());
  std::size_t r = 0;
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    for (std::size_t i = 0; i < spec.per_class; ++i, ++r) {
      const Vector noise = gaussian_sample(spec.dim, spec.noise_sigma, noise_rng);
      auto row = ds.samples.row(r);
      for (std::size_t j = 0; j < spec.dim; ++j) row[j] = means[c][j] + noise[j];
      ds.labels->push_back(static_cast<Label>(c));
    }
  }
  return ds;
}

namespace {

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct IdxFile {
  std::vector<std::uint32_t> dims;
  std::size_t data_offset = 0;
  std::vector<unsigned char> bytes;
};

std::uint32_t read_be32(const std::vector<unsigned char>& b, std::size_t off) {
  if (off + 4 > b.size()) throw FormatError("unexpected end of IDX header", off);
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) | (std::uint32_t{b[off + 2]} << 8) |
         std::uint32_t{b[off + 3]};
}

IdxFile parse_idx(const std::filesystem::path& path, std::uint32_t expected_magic) {
  IdxFile f;
  f.bytes = read_bytes(path);
  const std::uint32_t magic = read_be32(f.bytes, 0);
  if (magic != expected_magic) {
    std::ostringstream msg;
    msg << "bad IDX magic 0x" << std::hex << magic << " in " << path.string() << ", expected 0x" << expected_magic;
    throw FormatError(msg.str(), 0);
  }
  const std::size_t ndims = magic & 0xffu;
  std::size_t count = 1;
  for (std::size_t i = 0; i < ndims; ++i) {
    f.dims.push_back(read_be32(f.bytes, 4 + 4 * i));
    count *= f.dims.back();
  }
  f.data_offset = 4 + 4 * ndims;
  if (f.bytes.size() < f.data_offset + count) {
    throw FormatError("IDX payload truncated: need " + std::to_string(count) + " bytes, have " +
                          std::to_string(f.bytes.size() - f.data_offset),
                      f.bytes.size());
  }
  return f;
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images, const std::optional<std::filesystem::path>& labels) {
  const IdxFile img = parse_idx(images, 0x00000803);
  const std::size_t n = img.dims[0];
  const std::size_t d = static_cast<std::size_t>(img.dims[1]) * img.dims[2];
  Dataset ds;
  ds.samples = Matrix(n, d);
  for (std::size_t i = 0; i < n * d; ++i) ds.samples.data()[i] = img.bytes[img.data_offset + i] / 255.0;

  if (labels) {
    const IdxFile lab = parse_idx(*labels, 0x00000801);
    if (lab.dims[0] != n) {
      throw FormatError("label file holds " + std::to_string(lab.dims[0]) + " labels for " + std::to_string(n) +
                            " images",
                        4);
    }
    ds.labels.emplace();
    for (std::size_t i = 0; i < n; ++i) ds.labels->push_back(static_cast<Label>(lab.bytes[lab.data_offset + i]));
  }
  return ds;
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };

  std::string line;
  std::size_t offset = 0;
  if (!std::getline(in, line)) throw FormatError("CSV has no header row", 0);
  offset += line.size() + 1;
  auto header = split(line);
  if (!header.empty() && !header.back().empty() && header.back().back() == '\r') header.back().pop_back();
  const bool labeled = !header.empty() && header.back() == "label";
  const std::size_t d = header.size() - (labeled ? 1 : 0);
  if (d == 0) throw FormatError("CSV header declares no feature columns", 0);

  Dataset ds;
  ds.samples = Matrix(0, d);
  if (labeled) ds.labels.emplace();
  Vector row(d);
  while (std::getline(in, line)) {
    const std::size_t line_start = offset;
    offset += line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw FormatError("CSV row has " + std::to_string(cells.size()) + " cells, header has " +
                            std::to_string(header.size()),
                        line_start);
    }
    try {
      for (std::size_t j = 0; j < d; ++j) row[j] = std::stod(cells[j]);
      if (labeled) ds.labels->push_back(static_cast<Label>(std::stol(cells.back())));
    } catch (const std::logic_error&) {
      throw FormatError("CSV cell is not a number", line_start);
    }
    ds.samples.append_row(row);
  }
  return ds;
}

void AugmentationConfig::validate() const {
  if (!(jitter_sigma >= 0.0)) throw ConfigError("augmentation.jitter_sigma must be >= 0");
  if (!(scale_lo > 0.0 && scale_lo <= scale_hi)) throw ConfigError("augmentation requires 0 < scale_lo <= scale_hi");
  if (!(mask_fraction >= 0.0 && mask_fraction < 1.0)) throw ConfigError("augmentation.mask_fraction must lie in [0, 1)");
}

Vector augment(std::span<const double> x, const AugmentationConfig& config, Rng& rng) {
  Vector v(x.begin(), x.end());
  const std::size_t d = v.size();
  const auto masked = static_cast<std::size_t>(std::floor(config.mask_fraction * static_cast<double>(d)));
  if (masked > 0) {
    std::vector<std::size_t> idx(d);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // partial Fisher-Yates: the first `masked` slots become a uniform subset
    for (std::size_t i = 0; i < masked; ++i) {
      const std::size_t j = i + rng.index(d - i);
      std::swap(idx[i], idx[j]);
      v[idx[i]] = 0.0;
    }
  }
  const double scale = config.scale_lo == config.scale_hi ? config.scale_lo : rng.uniform(config.scale_lo, config.scale_hi);
  for (double& e : v) e *= scale;
  if (config.jitter_sigma > 0.0) {
    const Vector noise = gaussian_sample(d, config.jitter_sigma, rng);
    for (std::size_t i = 0; i < d; ++i) v[i] += noise[i];
  }
  return v;
}

std::pair<Vector, Vector> two_views(std::span<const double> x, const AugmentationConfig& config, Rng& rng) {
  Vector a = augment(x, config, rng);
  Vector b = augment(x, config, rng);
  return {std::move(a), std::move(b)};
}

}  // namespace synco
