#include "rppg/rng.hpp"

namespace rppg {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t derive_stream_seed(std::uint64_t seed, std::string_view label) {
  return splitmix64(splitmix64(seed) ^ fnv1a(label));
}

RngState::RngState(std::uint64_t seed, std::string label)
    : seed_(seed),
      label_(std::move(label)),
      engine_(derive_stream_seed(seed, label_)) {}

RngState RngState::substream(std::string_view child) const {
  std::string label = label_;
  label += '/';
  label += child;
  return RngState(seed_, std::move(label));
}

double RngState::uniform(double lo, double hi) {
  if (!(hi > lo)) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

double RngState::normal(double mean, double stddev) {
  if (!(stddev > 0)) return mean;
  return std::normal_distribution<double>(mean, stddev)(engine_);
}

bool RngState::bernoulli(double p) {
  if (p <= 0) return false;
  if (p >= 1) return true;
  return std::bernoulli_distribution(p)(engine_);
}

}  // namespace rppg
