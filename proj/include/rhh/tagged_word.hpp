#pragma once

#include <cstdint>
#include <stdexcept>

namespace rhh {

// A 64-bit table word. The low two bits distinguish plain values from
// descriptor references; the upper 62 bits carry the payload. Tag 0b11 is
// never used.
enum class Tag : std::uint64_t {
  kValue = 0,
  kKcasRef = 1,
  kRdcssRef = 2,
};

struct TaggedWord {
  std::uint64_t raw = 0;

  static constexpr unsigned kTagBits = 2;
  static constexpr std::uint64_t kTagMask = 0x3;
  static constexpr std::uint64_t kMaxPayload = (std::uint64_t{1} << 62) - 1;

  static constexpr TaggedWord from_raw(std::uint64_t r) { return TaggedWord{r}; }

  // Encodes a plain value. Payloads must fit in 62 bits.
  static TaggedWord value(std::uint64_t payload) {
    if (payload > kMaxPayload) {
      throw std::out_of_range("TaggedWord: value payload exceeds 62 bits");
    }
    return TaggedWord{payload << kTagBits};
  }

  constexpr Tag tag() const { return static_cast<Tag>(raw & kTagMask); }
  constexpr std::uint64_t payload() const { return raw >> kTagBits; }
  constexpr bool is_value() const { return tag() == Tag::kValue; }

  friend constexpr bool operator==(TaggedWord, TaggedWord) = default;
};

inline TaggedWord encode_value(std::uint64_t v) { return TaggedWord::value(v); }

}  // namespace rhh
