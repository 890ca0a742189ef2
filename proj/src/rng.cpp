#include "tmis/rng.hpp"

namespace tmis {

std::uint64_t derive_key(std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (std::uint64_t part : parts) {
    h = mix64(h ^ mix64(part + CounterRng::golden_gamma));
  }
  return h;
}

std::uint64_t hash_name(std::string_view name) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace tmis
