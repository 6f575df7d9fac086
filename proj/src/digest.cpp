#include "pot/digest.hpp"

#include <cstdio>

namespace pot {

namespace {

constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kPrime = 0x100000001b3ULL;

void mix(std::uint64_t& h, unsigned char byte) noexcept {
  h ^= byte;
  h *= kPrime;
}

}  // namespace

std::uint64_t run_digest(const std::vector<Word>& cells, const std::vector<std::string>& labels) {
  std::uint64_t h = kOffset;
  for (Word w : cells) {
    for (int b = 0; b < 8; ++b) mix(h, static_cast<unsigned char>(w >> (8 * b)));
  }
  for (const auto& label : labels) {
    for (char c : label) mix(h, static_cast<unsigned char>(c));
    mix(h, '\n');
  }
  return h;
}

std::string hex_digest(std::uint64_t d) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(d));
  return buf;
}

}  // namespace pot
