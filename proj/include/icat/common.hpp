#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace icat {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double k) const { return {x * k, y * k}; }
  constexpr bool operator==(const Vec2&) const = default;

  double norm() const { return std::hypot(x, y); }
  constexpr double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  constexpr double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  // Counter-clockwise perpendicular.
  constexpr Vec2 left() const { return {-y, x}; }
};

inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

inline Vec2 unit_from_heading(double heading) {
  return {std::cos(heading), std::sin(heading)};
}

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

struct Pose {
  Vec2 position;
  double heading = 0.0;
};

template <class Tag>
struct StrongId {
  std::uint32_t value = 0;
  constexpr auto operator<=>(const StrongId&) const = default;
};

using NodeId = StrongId<struct NodeTag>;
using EdgeId = StrongId<struct EdgeTag>;
using CarId = std::uint32_t;

class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NoRoute : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OffPath : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

/// Derives an independent stream seed from a master seed and a stream tag.
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace icat

template <class Tag>
struct std::hash<icat::StrongId<Tag>> {
  std::size_t operator()(const icat::StrongId<Tag>& id) const noexcept {
    return std::hash<std::uint32_t>{}(id.value);
  }
};
