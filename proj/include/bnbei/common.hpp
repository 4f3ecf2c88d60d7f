#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bnbei {

using Point = std::vector<double>;
using Rng = std::mt19937_64;

// Error hierarchy. Every failure the library reports derives from Error so
// callers that only care about success can catch one type.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input outside the unit cube, or otherwise outside an operation's domain.
struct DomainError : Error {
  using Error::Error;
};

// Invalid configuration or parameter values.
struct ConfigError : Error {
  using Error::Error;
};

// Correlation matrix could not be factorized.
struct IllConditionedError : Error {
  using Error::Error;
};

// GP maximum-likelihood fit failed for every start.
struct FitError : Error {
  using Error::Error;
};

// Requested contour level does not occur on the search grid.
struct LevelNotAttainedError : Error {
  using Error::Error;
};

// Derivative requested at s = 0.
struct DerivativeUndefinedError : Error {
  using Error::Error;
};

inline bool in_unit_cube(std::span<const double> x) {
  for (double v : x) {
    if (!(v >= 0.0 && v <= 1.0)) return false;
  }
  return true;
}

inline void require_unit_cube(std::span<const double> x, const char* what) {
  if (!in_unit_cube(x)) throw DomainError(std::string(what) + ": point outside [0,1]^d");
}

// Stateless 64-bit mixer used to derive independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(base ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

// Uniform on [0, 1) built from the top 53 bits of the engine output.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

// Uniform integer in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = uniform_index(rng, i);
    std::swap(v[i - 1], v[j]);
  }
}

// Random Latin hypercube in [lower, upper]: one point per stratum along every
// axis, uniform within the stratum.
std::vector<Point> latin_hypercube(std::size_t n, std::span<const double> lower,
                                   std::span<const double> upper, Rng& rng);

inline std::vector<Point> latin_hypercube(std::size_t n, std::size_t dim, Rng& rng) {
  std::vector<double> lo(dim, 0.0), hi(dim, 1.0);
  return latin_hypercube(n, lo, hi, rng);
}

}  // namespace bnbei
