#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "polarndf/error.hpp"
#include "polarndf/io.hpp"
#include "polarndf/ndf.hpp"

namespace polarndf {

namespace {

constexpr char kMagic[8] = {'P', 'N', 'D', 'F', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  template <typename T>
  void put(T value) {
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    bytes.insert(bytes.end(), raw, raw + sizeof(T));
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}
  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) {
      throw Error(ErrorKind::CorruptCheckpoint, "checkpoint truncated at byte " + std::to_string(pos_));
    }
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, raw, sizeof(T));
    return v;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::uint64_t fnv1a(std::span<const std::uint8_t> b) {
  std::uint64_t h = 1469598103934665603ull;
  for (auto c : b) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

std::vector<std::uint8_t> checkpoint_bytes(const NdfModel& model) {
  const auto& a = model.architecture();
  Writer w;
  for (char c : kMagic) w.put(static_cast<std::uint8_t>(c));
  w.put(kVersion);
  w.put(a.skeleton_hash);
  w.put(static_cast<std::uint32_t>(a.num_connections()));
  w.put(static_cast<std::uint32_t>(a.representation));
  w.put(static_cast<std::uint32_t>(Activation::softplus));
  w.put(static_cast<std::uint32_t>(a.embedding_dim));
  w.put(static_cast<std::uint32_t>(a.encoder_hidden));
  w.put(static_cast<std::uint32_t>(a.decoder_hidden.size()));
  for (int h : a.decoder_hidden) w.put(static_cast<std::uint32_t>(h));
  for (int p : a.parent_connection) w.put(static_cast<std::int32_t>(p));
  w.put(model.seed());
  w.put(static_cast<std::uint64_t>(model.num_parameters()));
  for (double v : model.parameters()) w.put(v);
  w.put(fnv1a(w.bytes));
  return w.bytes;
}

void checkpoint_save(const NdfModel& model, const std::filesystem::path& path) {
  const auto bytes = checkpoint_bytes(model);
  atomic_write(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

NdfModel checkpoint_from_bytes(std::span<const std::uint8_t> bytes, std::optional<std::uint64_t> expected_skeleton_hash) {
  if (bytes.size() < sizeof(kMagic) + sizeof(kVersion) ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorKind::FormatVersionMismatch, "not a polarndf checkpoint (bad magic)");
  }
  Reader r(bytes);
  for (std::size_t i = 0; i < sizeof(kMagic); ++i) r.get<std::uint8_t>();
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion) {
    throw Error(ErrorKind::FormatVersionMismatch, "checkpoint version " + std::to_string(version) + ", expected " +
                                                      std::to_string(kVersion));
  }
  NdfArchitecture a;
  a.skeleton_hash = r.get<std::uint64_t>();
  const auto J = r.get<std::uint32_t>();
  const auto rep = r.get<std::uint32_t>();
  const auto act = r.get<std::uint32_t>();
  if (rep > 1 || act != static_cast<std::uint32_t>(Activation::softplus) || J == 0 || J > 1024) {
    throw Error(ErrorKind::CorruptCheckpoint, "invalid hyperparameter block");
  }
  a.representation = static_cast<Representation>(rep);
  a.embedding_dim = static_cast<int>(r.get<std::uint32_t>());
  a.encoder_hidden = static_cast<int>(r.get<std::uint32_t>());
  const auto n_dec = r.get<std::uint32_t>();
  if (n_dec > 64) throw Error(ErrorKind::CorruptCheckpoint, "invalid decoder depth");
  a.decoder_hidden.clear();
  for (std::uint32_t i = 0; i < n_dec; ++i) a.decoder_hidden.push_back(static_cast<int>(r.get<std::uint32_t>()));
  for (std::uint32_t j = 0; j < J; ++j) a.parent_connection.push_back(r.get<std::int32_t>());
  const auto seed = r.get<std::uint64_t>();
  const auto n_params = r.get<std::uint64_t>();
  if (n_params * sizeof(double) + sizeof(std::uint64_t) != r.remaining()) {
    throw Error(ErrorKind::CorruptCheckpoint, "parameter block size does not match file length");
  }
  std::vector<double> params(n_params);
  for (auto& v : params) v = r.get<double>();
  const auto stored = r.get<std::uint64_t>();
  if (stored != fnv1a(bytes.first(bytes.size() - sizeof(std::uint64_t)))) {
    throw Error(ErrorKind::CorruptCheckpoint, "checksum mismatch");
  }
  if (expected_skeleton_hash && *expected_skeleton_hash != a.skeleton_hash) {
    throw Error(ErrorKind::SkeletonMismatch, "checkpoint was trained on a different skeleton");
  }
  try {
    return NdfModel(std::move(a), seed, std::move(params));
  } catch (const Error& e) {
    throw Error(ErrorKind::CorruptCheckpoint, e.what());
  }
}

NdfModel checkpoint_load(const std::filesystem::path& path, std::optional<std::uint64_t> expected_skeleton_hash) {
  const std::string raw = read_file(path);
  return checkpoint_from_bytes(std::span(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()),
                               expected_skeleton_hash);
}

}  // namespace polarndf
