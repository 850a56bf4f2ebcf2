#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace rppg {

/// Seeded random stream. Each label gets an independent substream derived from
/// the master seed, so draws for one purpose never depend on how many draws
/// another purpose made.
class RngState {
 public:
  explicit RngState(std::uint64_t seed, std::string label = "master");

  std::uint64_t seed() const { return seed_; }
  const std::string& label() const { return label_; }

  /// Independent substream "<label>/<child>" under the same master seed.
  RngState substream(std::string_view child) const;

  double uniform(double lo, double hi);
  double normal(double mean, double stddev);
  bool bernoulli(double p);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::string label_;
  std::mt19937_64 engine_;
};

std::uint64_t derive_stream_seed(std::uint64_t seed, std::string_view label);

}  // namespace rppg
