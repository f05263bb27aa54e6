#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace urisk {

// Standard normal density, CDF, and inverse CDF. The inverse uses Acklam's
// rational approximation refined by one Halley step, accurate to ~1e-15.
double normal_pdf(double x);
double normal_cdf(double x);
double normal_quantile(double p);

// Sample statistics. sd uses the n-1 denominator.
double mean(const std::vector<double>& v);
double sd(const std::vector<double>& v);

// Type-7 (linear interpolation) sample quantile of an unsorted vector.
double sample_quantile(std::vector<double> v, double p);

// Kolmogorov-Smirnov statistic of a sample against Uniform(0,1).
double ks_uniform(std::vector<double> v);

// 64-bit FNV-1a, used for config hashing in run manifests.
std::uint64_t fnv1a64(const std::string& s);

// splitmix64 mixing step, used to derive per-replication seeds.
std::uint64_t splitmix64(std::uint64_t x);

// Seed of the independent stream for replication `rep` of a study seeded
// with `seed`.
inline std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t rep) {
  return splitmix64(splitmix64(seed) + 0x9e3779b97f4a7c15ULL * (rep + 1));
}

// Deterministic random stream: std::mt19937_64 (bit-exact per the C++
// standard) mapped to doubles through the inverse normal CDF, so the same
// seed yields the same draws on every platform. Uniforms take the top 53
// bits offset by half an ulp to stay inside (0,1).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }
  double normal() { return normal_quantile(uniform()); }

  // Stream for replication `rep`, decorrelated from `seed` via splitmix64.
  static Rng for_rep(std::uint64_t seed, std::uint64_t rep) {
    return Rng(derive_stream_seed(seed, rep));
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace urisk
