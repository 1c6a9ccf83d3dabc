#include "resbound/rng.hpp"

#include "resbound/numeric.hpp"

namespace resbound {

std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index) {
  return splitmix64(splitmix64(seed ^ fnv1a64(tag)) + index);
}

}  // namespace resbound
