#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <ostream>

namespace srir {

inline constexpr double kPi = 3.14159265358979323846;

/// Speed of sound in air at 20 degC, m/s.
inline constexpr double kSpeedOfSound = 343.0;
inline constexpr double kDefaultSampleRate = 48000.0;

/// Number of octave bands in the repository-wide filterbank (62.5 Hz .. 8 kHz).
inline constexpr std::size_t kNumBands = 8;

using Bands = std::array<double, kNumBands>;

inline constexpr Bands kOctaveCenters = {62.5, 125.0, 250.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0};

inline double band_lower_edge(std::size_t band) { return kOctaveCenters[band] / std::sqrt(2.0); }
inline double band_upper_edge(std::size_t band) { return kOctaveCenters[band] * std::sqrt(2.0); }

inline Bands uniform_bands(double v) {
  Bands b;
  b.fill(v);
  return b;
}

inline double band_mean(const Bands& b) {
  double s = 0.0;
  for (double v : b) s += v;
  return s / static_cast<double>(b.size());
}

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr double operator[](std::size_t i) const { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr double& operator[](std::size_t i) { return i == 0 ? x : (i == 1 ? y : z); }

  constexpr Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  constexpr Vec3& operator*=(double s) {
    x *= s;
    y *= s;
    z *= s;
    return *this;
  }

  friend constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
  friend constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
  friend constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;

  friend std::ostream& operator<<(std::ostream& os, const Vec3& v) {
    return os << '(' << v.x << ", " << v.y << ", " << v.z << ')';
  }
};

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

inline Vec3 normalized(const Vec3& v) { return v * (1.0 / norm(v)); }

inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

}  // namespace srir
