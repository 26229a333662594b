#pragma once

// Binary model files. Layout (host byte order, little-endian on every
// supported platform):
//
//   "WIKISVD\0"  u32 version  u8 variant  hyperparameters
//   u64 sim_fingerprint  u64 train_checksum  f64[] loss_trace
//   u32 n_components, then per component:
//     f64 mu  f64[] b_user  f64[] b_item  matrix P  matrix Q  u8 block flags
//     [tilde: f64[] f64[] matrix matrix] [f64[] y_item]
//     [u64 n, (u64 key, f64 value) x n sorted by key] [matrix Y]
//   "END\0"
//
// f64[] is a u64 length followed by the values; a matrix is u64 rows, u64
// cols and rows*cols values. Doubles are stored bit-exactly.

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "wikisvd/errors.hpp"
#include "wikisvd/svd.hpp"

namespace wikisvd {

inline constexpr std::uint32_t kModelFormatVersion = 1;

namespace detail {

inline constexpr char kModelMagic[8] = {'W', 'I', 'K', 'I', 'S', 'V', 'D', '\0'};
inline constexpr char kModelTrailer[4] = {'E', 'N', 'D', '\0'};
inline constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}
  template <typename T>
  void put(const T& v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void put_vec(const std::vector<double>& v) {
    put<std::uint64_t>(v.size());
    out_.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  void put_matrix(const Matrix& m) {
    put<std::uint64_t>(m.rows());
    put<std::uint64_t>(m.cols());
    out_.write(reinterpret_cast<const char*>(m.data().data()),
               static_cast<std::streamsize>(m.data().size() * sizeof(double)));
  }
  void bytes(const char* p, std::size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }

 private:
  std::ostream& out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::istream& in) : in_(in) {}
  template <typename T>
  T get() {
    T v{};
    read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
  }
  std::vector<double> get_vec() {
    const auto n = get<std::uint64_t>();
    if (n > kMaxElements) throw FormatError("model file: implausible vector length");
    std::vector<double> v(n);
    read(reinterpret_cast<char*>(v.data()), n * sizeof(double));
    return v;
  }
  Matrix get_matrix() {
    const auto rows = get<std::uint64_t>();
    const auto cols = get<std::uint64_t>();
    if (rows > kMaxElements || cols > kMaxElements || (cols != 0 && rows > kMaxElements / cols))
      throw FormatError("model file: implausible matrix shape");
    Matrix m(rows, cols);
    read(reinterpret_cast<char*>(m.data().data()), m.data().size() * sizeof(double));
    return m;
  }
  void read(char* p, std::size_t n) {
    in_.read(p, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw FormatError("model file truncated");
  }

 private:
  std::istream& in_;
};

enum BlockFlags : std::uint8_t { kTilde = 1, kYItem = 2, kYUserItem = 4, kY = 8 };

}  // namespace detail

inline void save_model(const TrainedModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  detail::BinaryWriter w(out);
  w.bytes(detail::kModelMagic, sizeof detail::kModelMagic);
  w.put(kModelFormatVersion);
  w.put(static_cast<std::uint8_t>(model.variant));
  const auto& h = model.hyper;
  w.put<std::int32_t>(h.factors);
  w.put(h.gamma);
  w.put(h.gamma_art);
  w.put(h.lambda);
  w.put<std::int32_t>(h.epochs);
  w.put<std::uint64_t>(h.seed);
  w.put(h.mixture_weight);
  w.put<std::uint8_t>(h.clamp);
  w.put(h.init_scale);
  w.put<std::uint8_t>(h.center_neighbors);
  w.put<std::uint8_t>(h.base_only);
  w.put(model.sim_fingerprint);
  w.put(model.train_checksum);
  w.put_vec(model.loss_trace);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.params.size()));
  for (const auto& p : model.params) {
    w.put(p.mu);
    w.put_vec(p.b_user);
    w.put_vec(p.b_item);
    w.put_matrix(p.P);
    w.put_matrix(p.Q);
    std::uint8_t flags = 0;
    if (p.tilde) flags |= detail::kTilde;
    if (p.y_item) flags |= detail::kYItem;
    if (p.y_user_item) flags |= detail::kYUserItem;
    if (p.Y) flags |= detail::kY;
    w.put(flags);
    if (p.tilde) {
      w.put_vec(p.tilde->b_user);
      w.put_vec(p.tilde->b_item);
      w.put_matrix(p.tilde->P);
      w.put_matrix(p.tilde->Q);
    }
    if (p.y_item) w.put_vec(*p.y_item);
    if (p.y_user_item) {
      std::vector<std::pair<std::uint64_t, double>> kv(p.y_user_item->begin(), p.y_user_item->end());
      std::sort(kv.begin(), kv.end());
      w.put<std::uint64_t>(kv.size());
      for (const auto& [k, v] : kv) {
        w.put(k);
        w.put(v);
      }
    }
    if (p.Y) w.put_matrix(*p.Y);
  }
  w.bytes(detail::kModelTrailer, sizeof detail::kModelTrailer);
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline TrainedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  detail::BinaryReader r(in);
  char magic[sizeof detail::kModelMagic];
  r.read(magic, sizeof magic);
  if (std::memcmp(magic, detail::kModelMagic, sizeof magic) != 0) throw FormatError("'" + path + "' is not a model file");
  const auto version = r.get<std::uint32_t>();
  if (version != kModelFormatVersion)
    throw VersionError("model format version " + std::to_string(version) + " unsupported (expected " +
                       std::to_string(kModelFormatVersion) + ")");
  TrainedModel m;
  const auto variant = r.get<std::uint8_t>();
  if (variant > static_cast<std::uint8_t>(VariantKind::kSimLatent)) throw FormatError("unknown variant tag");
  m.variant = static_cast<VariantKind>(variant);
  auto& h = m.hyper;
  h.factors = r.get<std::int32_t>();
  h.gamma = r.get<double>();
  h.gamma_art = r.get<double>();
  h.lambda = r.get<double>();
  h.epochs = r.get<std::int32_t>();
  h.seed = r.get<std::uint64_t>();
  h.mixture_weight = r.get<double>();
  h.clamp = r.get<std::uint8_t>() != 0;
  h.init_scale = r.get<double>();
  h.center_neighbors = r.get<std::uint8_t>() != 0;
  h.base_only = r.get<std::uint8_t>() != 0;
  m.sim_fingerprint = r.get<std::uint64_t>();
  m.train_checksum = r.get<std::uint64_t>();
  m.loss_trace = r.get_vec();
  const auto n_components = r.get<std::uint32_t>();
  const std::uint32_t expected = m.variant == VariantKind::kMixture ? 2 : 1;
  if (n_components != expected) throw FormatError("model file: wrong number of parameter sets for its variant");
  for (std::uint32_t c = 0; c < n_components; ++c) {
    ModelParams p;
    p.mu = r.get<double>();
    p.b_user = r.get_vec();
    p.b_item = r.get_vec();
    p.P = r.get_matrix();
    p.Q = r.get_matrix();
    const auto flags = r.get<std::uint8_t>();
    if (flags & detail::kTilde) {
      TildeBlock t;
      t.b_user = r.get_vec();
      t.b_item = r.get_vec();
      t.P = r.get_matrix();
      t.Q = r.get_matrix();
      p.tilde = std::move(t);
    }
    if (flags & detail::kYItem) p.y_item = r.get_vec();
    if (flags & detail::kYUserItem) {
      p.y_user_item.emplace();
      const auto n = r.get<std::uint64_t>();
      if (n > detail::kMaxElements) throw FormatError("model file: implausible pair-weight count");
      for (std::uint64_t k = 0; k < n; ++k) {
        const auto key = r.get<std::uint64_t>();
        (*p.y_user_item)[key] = r.get<double>();
      }
    }
    if (flags & detail::kY) p.Y = r.get_matrix();
    if (p.P.rows() != p.b_user.size() || p.Q.rows() != p.b_item.size() || p.P.cols() != p.Q.cols())
      throw FormatError("model file: inconsistent parameter shapes");
    m.params.push_back(std::move(p));
  }
  char trailer[sizeof detail::kModelTrailer];
  r.read(trailer, sizeof trailer);
  if (std::memcmp(trailer, detail::kModelTrailer, sizeof trailer) != 0) throw FormatError("model file: bad trailer");
  return m;
}

}  // namespace wikisvd
