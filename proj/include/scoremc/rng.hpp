#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "scoremc/types.hpp"

namespace scoremc {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Every output
// block is a pure function of (key, counter), so draws can be addressed by
// (seed, particle, stream, block) and are identical under any scheduling.
struct Philox4x32 {
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t(kMul0) * ctr[0];
      const std::uint64_t p1 = std::uint64_t(kMul1) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
             static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
             static_cast<std::uint32_t>(p0)};
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }
};

// One logical stream of i.i.d. uniforms / standard normals, addressed by
// (seed, particle, stream). Each 128-bit Philox block yields two uniforms in
// (0,1); normals come from the Box-Muller transform, cosine branch first.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, std::uint32_t particle, std::uint32_t stream)
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        particle_(particle),
        stream_(stream) {}

  // Uniform on (0,1), endpoints excluded.
  double uniform() {
    if (pending_ == 0) refill();
    return buf_[2 - pending_--];
  }

  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  void fill_normal(double* data, Index count) {
    for (Index i = 0; i < count; ++i) data[i] = normal();
  }

  void fill_normal(Matrix& m) { fill_normal(m.data(), m.size()); }

  Vector normal_vector(Index d) {
    Vector v(d);
    fill_normal(v.data(), d);
    return v;
  }

 private:
  void refill() {
    const auto w = Philox4x32::block(
        {static_cast<std::uint32_t>(block_),
         static_cast<std::uint32_t>(block_ >> 32), stream_, particle_},
        key_);
    ++block_;
    buf_[0] = to_unit(w[0], w[1]);
    buf_[1] = to_unit(w[2], w[3]);
    pending_ = 2;
  }

  static double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t x = (std::uint64_t(hi) << 32) | lo;
    return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint32_t particle_;
  std::uint32_t stream_;
  std::uint64_t block_ = 0;
  double buf_[2] = {0, 0};
  int pending_ = 0;
  double cached_ = 0;
  bool have_cached_ = false;
};

}  // namespace scoremc
