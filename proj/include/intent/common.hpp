#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace intent {

/// Version string stamped into every file the library writes.
inline constexpr std::string_view kVersion = "intent-pred 0.3.0";

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 64-bit FNV-1a. Used for config, plan, vocabulary and TF-IDF fingerprints.
class Fnv1a {
 public:
  Fnv1a& update(std::string_view bytes) {
    for (unsigned char c : bytes) {
      state_ ^= c;
      state_ *= 0x100000001b3ULL;
    }
    return *this;
  }
  Fnv1a& update(std::uint64_t value) {
    for (int i = 0; i < 8; ++i) {
      state_ ^= static_cast<unsigned char>(value >> (8 * i));
      state_ *= 0x100000001b3ULL;
    }
    return *this;
  }
  std::uint64_t digest() const { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::string fingerprint(std::string_view bytes) { return Fnv1a{}.update(bytes).hex(); }

}  // namespace intent
