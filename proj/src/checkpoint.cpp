#include "traceoracle/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <type_traits>

#include "traceoracle/error.hpp"
#include "traceoracle/rng.hpp"

namespace traceoracle {

namespace {

std::uint64_t checksum(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001B3ULL;
  }
  return h;
}

class Writer {
 public:
  template <typename T>
  void put(T value) {
    static_assert(std::is_integral_v<T>);
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bytes.push_back(static_cast<std::uint8_t>(u & 0xFF));
      if constexpr (sizeof(T) > 1) u = static_cast<U>(u >> 8);
    }
  }
  void put_f64(double x) { put(std::bit_cast<std::uint64_t>(x)); }
  void put_bytes(std::string_view s) { bytes.insert(bytes.end(), s.begin(), s.end()); }

  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    using U = std::make_unsigned_t<T>;
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) u = static_cast<U>(u | (static_cast<U>(bytes_[pos_ + i]) << (8 * i)));
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }
  double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
  std::string get_string(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (n > bytes_.size() - pos_) throw Error(ErrorCode::CorruptCheckpoint, "checkpoint truncated");
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

template <typename Scalar>
std::vector<std::uint8_t> save_checkpoint(const ModelParams<Scalar>& params, const Vocabulary& vocab,
                                          const FieldSet& fields) {
  const ModelConfig& c = params.config;
  Writer w;
  w.put_bytes(kCheckpointMagic);
  w.put(kCheckpointVersion);
  w.put(static_cast<std::uint8_t>(std::is_same_v<Scalar, float> ? Precision::Float32 : Precision::Float64));
  for (int v : {c.vocab_size, c.seq_len, c.embed_dim, c.num_layers, c.num_heads, c.ffn_dim, c.mlp_hidden}) {
    w.put(static_cast<std::int32_t>(v));
  }
  w.put_f64(c.dropout);
  w.put(static_cast<std::int32_t>(c.num_classes));
  w.put(fields.bits());

  w.put(static_cast<std::uint32_t>(vocab.size()));
  for (const std::string& t : vocab.tokens()) {
    w.put(static_cast<std::uint32_t>(t.size()));
    w.put_bytes(t);
  }

  std::uint32_t count = 0;
  params.for_each_tensor([&](std::string_view, const Matrix<Scalar>&) { ++count; });
  w.put(count);
  params.for_each_tensor([&](std::string_view, const Matrix<Scalar>& m) {
    w.put(static_cast<std::uint32_t>(m.rows()));
    w.put(static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) w.put_f64(static_cast<double>(m(i, j)));
  });
  w.put(checksum(w.bytes));
  return std::move(w.bytes);
}

Checkpoint load_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kCheckpointMagic.size() + 8 ||
      !std::equal(kCheckpointMagic.begin(), kCheckpointMagic.end(), bytes.begin())) {
    throw Error(ErrorCode::CorruptCheckpoint, "missing checkpoint magic");
  }
  const auto body = bytes.first(bytes.size() - 8);
  Reader tail(bytes.last(8));
  if (tail.get<std::uint64_t>() != checksum(body)) {
    throw Error(ErrorCode::CorruptCheckpoint, "checksum mismatch");
  }

  Reader r(body);
  r.get_string(kCheckpointMagic.size());
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::VersionMismatch, "checkpoint format " + std::to_string(version) + ", expected " +
                                                std::to_string(kCheckpointVersion));
  }
  Checkpoint ck;
  const auto precision = r.get<std::uint8_t>();
  if (precision > 1) throw Error(ErrorCode::CorruptCheckpoint, "unknown precision tag");
  ck.precision = static_cast<Precision>(precision);

  ModelConfig c;
  for (int* v : {&c.vocab_size, &c.seq_len, &c.embed_dim, &c.num_layers, &c.num_heads, &c.ffn_dim, &c.mlp_hidden}) {
    *v = r.get<std::int32_t>();
  }
  c.dropout = r.get_f64();
  c.num_classes = r.get<std::int32_t>();
  try {
    c.validate();
    ck.fields = FieldSet::from_bits(r.get<std::uint16_t>());
  } catch (const std::exception& ex) {
    throw Error(ErrorCode::CorruptCheckpoint, ex.what());
  }

  const auto ntok = r.get<std::uint32_t>();
  std::vector<std::string> tokens;
  for (std::uint32_t i = 0; i < ntok; ++i) tokens.push_back(r.get_string(r.get<std::uint32_t>()));
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i < static_cast<std::size_t>(kNumReserved)) {
      if (tokens[i] != ck.vocab.token(static_cast<int>(i))) {
        throw Error(ErrorCode::CorruptCheckpoint, "vocabulary lacks reserved tokens");
      }
    } else if (ck.vocab.add(tokens[i]) != static_cast<int>(i)) {
      throw Error(ErrorCode::CorruptCheckpoint, "duplicate vocabulary token");
    }
  }
  if (ck.vocab.size() != c.vocab_size) {
    throw Error(ErrorCode::CorruptCheckpoint, "vocabulary size disagrees with config");
  }

  ck.params = ModelParams<double>::zeros(c);
  std::uint32_t expected = 0;
  ck.params.for_each_tensor([&](std::string_view, const Matrix<double>&) { ++expected; });
  if (r.get<std::uint32_t>() != expected) throw Error(ErrorCode::CorruptCheckpoint, "tensor count mismatch");
  ck.params.for_each_tensor([&](std::string_view name, Matrix<double>& m) {
    const auto rows = r.get<std::uint32_t>();
    const auto cols = r.get<std::uint32_t>();
    if (rows != m.rows() || cols != m.cols()) {
      throw Error(ErrorCode::CorruptCheckpoint, "tensor " + std::string(name) + " has the wrong shape");
    }
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = r.get_f64();
  });
  return ck;
}

template std::vector<std::uint8_t> save_checkpoint<float>(const ModelParams<float>&, const Vocabulary&,
                                                          const FieldSet&);
template std::vector<std::uint8_t> save_checkpoint<double>(const ModelParams<double>&, const Vocabulary&,
                                                           const FieldSet&);

}  // namespace traceoracle
