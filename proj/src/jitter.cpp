#include "pot/jitter.hpp"

#include <chrono>
#include <thread>

#include "pot/cycles.hpp"

namespace pot {

void Jitter::perturb() {
  const std::uint64_t r = rng_();
  switch (r % 16) {
    case 10:
    case 11:
    case 12:
      std::this_thread::yield();
      break;
    case 13:
    case 14:
      for (std::uint64_t i = (r >> 8) % 2000; i > 0; --i) cpu_relax();
      break;
    case 15:
      std::this_thread::sleep_for(std::chrono::microseconds((r >> 8) % 50));
      break;
    default:
      break;
  }
}

}  // namespace pot
