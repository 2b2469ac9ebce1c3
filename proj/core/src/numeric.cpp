#include "gbh/numeric.hpp"

#include <cmath>
#include <numbers>

namespace gbh {

CompensatedSum& CompensatedSum::operator+=(double x) noexcept {
  const double t = sum_ + x;
  if (std::isfinite(t)) {
    if (std::fabs(sum_) >= std::fabs(x)) {
      correction_ += (sum_ - t) + x;
    } else {
      correction_ += (x - t) + sum_;
    }
  }
  sum_ = t;
  return *this;
}

double compensated_sum(std::span<const double> xs) noexcept {
  CompensatedSum acc;
  for (double x : xs) {
    acc += x;
  }
  return acc.value();
}

double normal_upper_tail(double x) noexcept {
  return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

double normal_cdf(double x) noexcept {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(mix64(master ^ mix64(a)) ^ mix64(b + 0x632be59bd9b4e019ULL));
}

}  // namespace gbh
