#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace ibmexit {

// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as
// easy as 1, 2, 3").
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t m0 = 0xD2511F53u, m1 = 0xCD9E8D57u;
  constexpr std::uint32_t w0 = 0x9E3779B9u, w1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += w0;
      key[1] += w1;
    }
    const std::uint64_t p0 = std::uint64_t{m0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{m1} * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
  }
  return ctr;
}

namespace detail {

// Tables for the 128-layer ziggurat of Marsaglia & Tsang in Doornik's
// formulation.
struct ZigguratTables {
  static constexpr int layers = 128;
  static constexpr double r = 3.442619855899;
  static constexpr double v = 9.91256303526217e-3;
  std::array<double, layers + 1> x{};
  std::array<double, layers> ratio{};

  ZigguratTables() {
    double f = std::exp(-0.5 * r * r);
    x[0] = v / f;
    x[1] = r;
    x[layers] = 0.0;
    for (int i = 2; i < layers; ++i) {
      x[i] = std::sqrt(-2.0 * std::log(v / x[i - 1] + f));
      f = std::exp(-0.5 * x[i] * x[i]);
    }
    for (int i = 0; i < layers; ++i) ratio[i] = x[i + 1] / x[i];
  }
};

inline const ZigguratTables& ziggurat() {
  static const ZigguratTables tables;
  return tables;
}

}  // namespace detail

// Counter-based stream: draw i of stream (seed, stream_id) is a pure function
// of (seed, stream_id, i), so streams never overlap and need no shared state.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  std::uint32_t next_u32() {
    if (pos_ == kWords) refill();
    return buffer_[pos_++];
  }
  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    return (std::uint64_t{next_u32()} << 32) | lo;
  }
  result_type operator()() { return next_u64(); }

  // Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double standard_normal() {
    const auto& z = detail::ziggurat();
    for (;;) {
      // One 32-bit word per attempt: 7 bits pick the layer, 25 bits give the
      // signed abscissa.
      const std::uint32_t bits = next_u32();
      const int i = static_cast<int>(bits & 0x7F);
      const double u = 2.0 * ((static_cast<double>(bits >> 7) + 0.5) * 0x1.0p-25) - 1.0;
      if (std::fabs(u) < z.ratio[i]) return u * z.x[i];
      if (i == 0) return tail(u < 0);
      const double x = u * z.x[i];
      const double f0 = std::exp(-0.5 * (z.x[i] * z.x[i] - x * x));
      const double f1 = std::exp(-0.5 * (z.x[i + 1] * z.x[i + 1] - x * x));
      if (f1 + uniform() * (f0 - f1) < 1.0) return x;
    }
  }

 private:
  double tail(bool negative) {
    constexpr double r = detail::ZigguratTables::r;
    double x, y;
    do {
      x = std::log(uniform()) / r;
      y = std::log(uniform());
    } while (-2.0 * y < x * x);
    return negative ? x - r : r - x;
  }

  void refill() {
    for (int l = 0; l < kBlocks; ++l) {
      const std::uint64_t c = counter_ + static_cast<std::uint64_t>(l);
      const auto out = philox4x32({static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32),
                                   static_cast<std::uint32_t>(stream_id_), static_cast<std::uint32_t>(stream_id_ >> 32)},
                                  {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
      for (int i = 0; i < 4; ++i) buffer_[4 * l + i] = out[i];
    }
    counter_ += kBlocks;
    pos_ = 0;
  }

  static constexpr int kBlocks = 4;
  static constexpr int kWords = 4 * kBlocks;
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, kWords> buffer_{};
  int pos_ = kWords;
};

inline RngStream rng_stream(std::uint64_t seed, std::uint64_t stream_id) { return RngStream(seed, stream_id); }
inline double uniform(RngStream& s) { return s.uniform(); }
inline double standard_normal(RngStream& s) { return s.standard_normal(); }

}  // namespace ibmexit
