#pragma once

// RandomTape: a public source of random bits with hierarchical labeled
// substreams.  Same (root seed, label path) always yields the same bits;
// distinct labels yield independent streams.  Every randomized experiment
// in this library draws from a tape, which makes runs byte-reproducible.

#include <cstdint>
#include <string>
#include <string_view>

namespace orthokey {

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

}  // namespace detail

class RandomTape {
 public:
  explicit RandomTape(std::uint64_t root_seed)
      : root_(root_seed), state_(detail::mix64(root_seed ^ kInit)) {}

  // independent substream; label paths compose ("batch" -> "batch/trial/7")
  RandomTape sub(std::string_view label) const {
    RandomTape t(0);
    t.root_ = root_;
    t.label_ = label_.empty() ? std::string(label)
                              : label_ + "/" + std::string(label);
    t.state_ = detail::mix64(root_ ^ kInit ^
                             (detail::fnv1a64(t.label_) * 0x9E3779B97F4A7C15ull));
    return t;
  }
  RandomTape sub(std::string_view label, std::uint64_t index) const {
    return sub(std::string(label) + "/" + std::to_string(index));
  }

  std::uint64_t root() const { return root_; }
  const std::string& label() const { return label_; }

  // 64 fresh bits (splitmix64)
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    return detail::mix64(z);
  }

  // unbiased draw from [0, m)
  std::uint64_t below(std::uint64_t m) {
    if (m == 0) return 0;
    const std::uint64_t threshold = -m % m;  // 2^64 mod m
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % m;
    }
  }

  bool bit() { return next() >> 63; }

  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  static constexpr std::uint64_t kInit = 0x6F72746B65793A31ull;

  std::uint64_t root_;
  std::uint64_t state_;
  std::string label_;
};

}  // namespace orthokey
