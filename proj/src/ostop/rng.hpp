#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace ostop {

// Philox4x32-10 counter-based generator.  Streams are keyed by
// (seed, path_index), so path i draws the same numbers no matter how paths
// are distributed over threads.
class PhiloxStream {
 public:
  PhiloxStream(std::uint64_t seed, std::uint64_t path_index)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        path_{static_cast<std::uint32_t>(path_index),
              static_cast<std::uint32_t>(path_index >> 32)} {}

  std::uint32_t next_u32() {
    if (have_ == 0) refill();
    return buf_[--have_];
  }

  std::uint64_t next_u64() {
    std::uint64_t hi = next_u32(), lo = next_u32();
    return (hi << 32) | lo;
  }

  // uniform on (0,1)
  double next_uniform() { return (next_u64() >> 11) * 0x1.0p-53 + 0x1.0p-54; }

 private:
  void refill() {
    std::uint32_t x0 = static_cast<std::uint32_t>(block_);
    std::uint32_t x1 = static_cast<std::uint32_t>(block_ >> 32);
    std::uint32_t x2 = path_[0], x3 = path_[1];
    ++block_;
    std::uint32_t k0 = key_[0], k1 = key_[1];
    for (int round = 0; round < 10; ++round) {
      std::uint64_t p0 = 0xD2511F53ull * x0;
      std::uint64_t p1 = 0xCD9E8D57ull * x2;
      std::uint32_t h0 = static_cast<std::uint32_t>(p0 >> 32), l0 = static_cast<std::uint32_t>(p0);
      std::uint32_t h1 = static_cast<std::uint32_t>(p1 >> 32), l1 = static_cast<std::uint32_t>(p1);
      std::uint32_t y0 = h1 ^ x1 ^ k0;
      std::uint32_t y1 = l1;
      std::uint32_t y2 = h0 ^ x3 ^ k1;
      std::uint32_t y3 = l0;
      x0 = y0;
      x1 = y1;
      x2 = y2;
      x3 = y3;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    buf_[0] = x0;
    buf_[1] = x1;
    buf_[2] = x2;
    buf_[3] = x3;
    have_ = 4;
  }

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 2> path_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int have_ = 0;
};

namespace detail {

struct ZigguratTables {
  std::uint32_t kn[128];
  double wn[128], fn[128];
  ZigguratTables() {
    const double m1 = 2147483648.0;
    double dn = 3.442619855899, tn = dn;
    const double vn = 9.91256303526217e-3;
    double q = vn / std::exp(-0.5 * dn * dn);
    kn[0] = static_cast<std::uint32_t>((dn / q) * m1);
    kn[1] = 0;
    wn[0] = q / m1;
    wn[127] = dn / m1;
    fn[0] = 1.0;
    fn[127] = std::exp(-0.5 * dn * dn);
    for (int i = 126; i >= 1; --i) {
      dn = std::sqrt(-2.0 * std::log(vn / dn + std::exp(-0.5 * dn * dn)));
      kn[i + 1] = static_cast<std::uint32_t>((dn / tn) * m1);
      tn = dn;
      fn[i] = std::exp(-0.5 * dn * dn);
      wn[i] = dn / m1;
    }
  }
};

inline const ZigguratTables& ziggurat() {
  static const ZigguratTables t;
  return t;
}

}  // namespace detail

// Marsaglia-Tsang 128-layer ziggurat for standard normals.
class NormalSampler {
 public:
  explicit NormalSampler(PhiloxStream& s) : s_(&s), t_(&detail::ziggurat()) {}

  double operator()() {
    for (;;) {
      std::int32_t hz = static_cast<std::int32_t>(s_->next_u32());
      std::uint32_t iz = static_cast<std::uint32_t>(hz) & 127u;
      std::uint32_t ahz = static_cast<std::uint32_t>(
          hz < 0 ? -static_cast<std::int64_t>(hz) : static_cast<std::int64_t>(hz));
      if (ahz < t_->kn[iz]) return hz * t_->wn[iz];
      double x = nfix(hz, iz);
      if (!std::isnan(x)) return x;
    }
  }

  void fill(double* out, int n) {
    for (int i = 0; i < n; ++i) out[i] = (*this)();
  }

 private:
  double nfix(std::int32_t hz, std::uint32_t iz) {
    const double r = 3.442619855899;
    double x = hz * t_->wn[iz];
    if (iz == 0) {
      double y;
      do {
        x = -std::log(s_->next_uniform()) / r;
        y = -std::log(s_->next_uniform());
      } while (y + y < x * x);
      return hz > 0 ? r + x : -r - x;
    }
    if (t_->fn[iz] + s_->next_uniform() * (t_->fn[iz - 1] - t_->fn[iz]) < std::exp(-0.5 * x * x))
      return x;
    return std::numeric_limits<double>::quiet_NaN();  // resample
  }

  PhiloxStream* s_;
  const detail::ZigguratTables* t_;
};

// exp(x) for |x| <= 0.35 via a degree-7 Taylor polynomial (relative error
// below 2e-12 on that range); falls back to std::exp outside.
inline double exp_small(double x) {
  if (std::abs(x) > 0.35) return std::exp(x);
  double s = 1.0 + x / 7.0;
  s = 1.0 + x * s / 6.0;
  s = 1.0 + x * s / 5.0;
  s = 1.0 + x * s / 4.0;
  s = 1.0 + x * s / 3.0;
  s = 1.0 + x * s / 2.0;
  return 1.0 + x * s;
}

}  // namespace ostop
