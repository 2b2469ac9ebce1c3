#ifndef GBH_NUMERIC_HPP
#define GBH_NUMERIC_HPP

#include <cstdint>
#include <random>
#include <span>

namespace gbh {

/// Neumaier-compensated running sum. Infinite terms propagate as usual.
class CompensatedSum {
 public:
  CompensatedSum& operator+=(double x) noexcept;
  [[nodiscard]] double value() const noexcept { return sum_ + correction_; }

 private:
  double sum_ = 0.0;
  double correction_ = 0.0;
};

double compensated_sum(std::span<const double> xs) noexcept;

/// Upper tail of the standard normal, 1 - Phi(x), evaluated through erfc
/// so that neither tail suffers cancellation.
double normal_upper_tail(double x) noexcept;

/// Standard normal CDF.
double normal_cdf(double x) noexcept;

/// Random engine used throughout the library.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Sub-seed for stream (a, b) of a master seed. Streams for distinct
/// (a, b) pairs are decorrelated by two rounds of SplitMix64 mixing.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) noexcept;

}  // namespace gbh

#endif  // GBH_NUMERIC_HPP
