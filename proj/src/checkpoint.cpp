#include "synco/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

namespace synco {

namespace {

constexpr std::array<char, 8> kMagic = {'S', 'Y', 'N', 'C', 'O', 'C', 'K', 'P'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

class Writer {
 public:
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void put_doubles(const Vector& v) {
    for (double x : v) put(x);
  }
  void put_params(const EncoderParams& p) {
    for (const auto& l : p.layers) {
      put_doubles(l.weights);
      put_doubles(l.bias);
    }
  }
  void raw(const char* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
  const std::vector<char>& bytes() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  explicit Reader(std::vector<char> bytes) : buf_(std::move(bytes)) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > buf_.size()) throw FormatError("checkpoint truncated", pos_);
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void get_doubles(Vector& v) {
    for (double& x : v) x = get<double>();
  }
  void get_params(EncoderParams& p) {
    for (auto& l : p.layers) {
      get_doubles(l.weights);
      get_doubles(l.bias);
    }
  }
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == buf_.size(); }
  const char* at(std::size_t n) {
    if (pos_ + n > buf_.size()) throw FormatError("checkpoint truncated", pos_);
    const char* p = buf_.data() + pos_;
    pos_ += n;
    return p;
  }

 private:
  std::vector<char> buf_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const TrainState& state) {
  Writer w;
  w.raw(kMagic.data(), kMagic.size());
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint64_t>(state.seed);
  w.put<std::uint64_t>(state.epoch);
  w.put<std::uint64_t>(state.step);
  w.put<double>(state.encoder.momentum);
  const auto sizes = state.encoder.query.sizes();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(sizes.size()));
  for (auto s : sizes) w.put<std::uint64_t>(s);
  w.put_params(state.encoder.query);
  w.put_params(state.encoder.key);
  w.put_params(state.velocity);

  const FeatureSet contents = state.queue.negatives();
  w.put<std::uint64_t>(state.queue.capacity());
  w.put<std::uint64_t>(state.queue.dim());
  w.put<std::uint64_t>(contents.size());
  for (double x : contents.data()) w.put(x);

  const auto tmp = std::filesystem::path(path).concat(".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + tmp.string());
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    if (!out) throw IoError("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::vector<char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  Reader r(std::move(bytes));

  if (!std::equal(kMagic.begin(), kMagic.end(), r.at(kMagic.size()))) throw FormatError("not a checkpoint file", 0);
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version), 8);
  }
  TrainState s;
  s.seed = r.get<std::uint64_t>();
  s.epoch = r.get<std::uint64_t>();
  s.step = r.get<std::uint64_t>();
  const double momentum = r.get<double>();
  const auto n_sizes = r.get<std::uint32_t>();
  if (n_sizes < 2 || n_sizes > 64) throw FormatError("implausible layer count", r.pos() - 4);
  std::vector<std::size_t> sizes(n_sizes);
  for (auto& sz : sizes) {
    sz = r.get<std::uint64_t>();
    if (sz == 0 || sz > (1u << 20)) throw FormatError("implausible layer size", r.pos() - 8);
  }
  EncoderParams query = EncoderParams::zeros(sizes);
  EncoderParams key = query;
  s.velocity = query;
  r.get_params(query);
  r.get_params(key);
  r.get_params(s.velocity);
  s.encoder.query = std::move(query);
  s.encoder.key = std::move(key);
  s.encoder.momentum = momentum;

  const auto capacity = r.get<std::uint64_t>();
  const auto dim = r.get<std::uint64_t>();
  const auto size = r.get<std::uint64_t>();
  if (capacity == 0 || capacity > (1u << 24) || size > capacity || dim != sizes.back()) throw FormatError("inconsistent queue header", r.pos() - 24);
  s.queue = MemoryQueue(capacity, dim);
  FeatureSet contents(dim);
  Vector row(dim);
  for (std::uint64_t i = 0; i < size; ++i) {
    const std::size_t at = r.pos();
    r.get_doubles(row);
    try {
      contents.push_back(FeatureVector::from_unit(row));
    } catch (const ZeroVectorError&) {
      throw FormatError("queue entry " + std::to_string(i) + " is not unit-norm", at);
    }
  }
  s.queue.enqueue(contents);
  if (!r.done()) throw FormatError("trailing bytes after checkpoint payload", r.pos());
  return s;
}

}  // namespace synco
