// SPDX-License-Identifier: Apache-2.0
#include "hbf/rng.hpp"

namespace hbf {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_key(std::uint64_t root, std::string_view stream,
                         std::initializer_list<std::uint64_t> counters) {
  std::uint64_t h = splitmix(root);
  for (unsigned char c : stream) h = splitmix(h ^ c);
  h = splitmix(h ^ 0xff);
  for (std::uint64_t c : counters) h = splitmix(h ^ splitmix(c));
  return h;
}

double Rng::uniform() {
  // 53 random mantissa bits, identical across standard libraries.
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  std::uniform_int_distribution<std::int64_t> d(lo, hi);
  return d(engine_);
}

double Rng::normal() {
  std::normal_distribution<double> d(0.0, 1.0);
  return d(engine_);
}

}  // namespace hbf
