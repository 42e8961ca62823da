// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <numbers>

namespace qfc {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Ordinary frequency held as an exact integer number of hertz.
///
/// Comb grid arithmetic (pump + k * fsr, passband edges) stays exact in this
/// representation; conversion to floating point happens only when a lineshape
/// or phase has to be evaluated.
class Frequency {
 public:
  constexpr Frequency() = default;

  static constexpr Frequency from_hz(std::int64_t hz) { return Frequency(hz); }
  static Frequency from_hz(double hz) { return Frequency(std::llround(hz)); }
  static Frequency from_mhz(double mhz) { return from_hz(mhz * 1e6); }
  static Frequency from_ghz(double ghz) { return from_hz(ghz * 1e9); }
  static Frequency from_thz(double thz) { return from_hz(thz * 1e12); }

  constexpr std::int64_t hz() const { return hz_; }
  constexpr double hz_f() const { return static_cast<double>(hz_); }
  constexpr double ghz() const { return static_cast<double>(hz_) * 1e-9; }
  constexpr double thz() const { return static_cast<double>(hz_) * 1e-12; }

  constexpr Frequency operator+(Frequency o) const { return Frequency(hz_ + o.hz_); }
  constexpr Frequency operator-(Frequency o) const { return Frequency(hz_ - o.hz_); }
  constexpr Frequency operator-() const { return Frequency(-hz_); }
  constexpr Frequency operator*(std::int64_t k) const { return Frequency(hz_ * k); }
  friend constexpr Frequency operator*(std::int64_t k, Frequency f) { return f * k; }

  constexpr auto operator<=>(const Frequency&) const = default;

 private:
  constexpr explicit Frequency(std::int64_t hz) : hz_(hz) {}
  std::int64_t hz_ = 0;
};

/// Floor division for signed integers (rounds toward negative infinity).
constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

constexpr std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
  return -floor_div(-a, b);
}

/// Wraps an angle into [0, 2*pi).
inline double wrap_two_pi(double angle) {
  double r = std::fmod(angle, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

/// Wraps an angle into (-pi, pi].
inline double wrap_pi(double angle) {
  double r = wrap_two_pi(angle);
  return r > kPi ? r - kTwoPi : r;
}

}  // namespace qfc
