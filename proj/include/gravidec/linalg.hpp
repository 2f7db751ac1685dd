#pragma once

#include <array>
#include <cmath>
#include <complex>

// Small fixed-size vector/matrix types used throughout.  Nothing fancy:
// the library only ever needs 3-vectors and symmetric 3x3 tensors.

namespace gravidec {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }

  constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
};

inline constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

using cdouble = std::complex<double>;

struct CVec3 {
  cdouble x{}, y{}, z{};

  // Complex dot without conjugation (the transversality/normalization
  // conventions of the polarization basis are stated with this product).
  cdouble dot(const CVec3& o) const { return x * o.x + y * o.y + z * o.z; }
  cdouble dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  CVec3 conj() const { return {std::conj(x), std::conj(y), std::conj(z)}; }
  double norm2() const { return std::norm(x) + std::norm(y) + std::norm(z); }
};

using Mat3 = std::array<std::array<double, 3>, 3>;
using CMat3 = std::array<std::array<cdouble, 3>, 3>;

inline double frobenius_norm2(const CMat3& m) {
  double s = 0.0;
  for (const auto& row : m)
    for (const auto& v : row) s += std::norm(v);
  return s;
}

}  // namespace gravidec
