#include "slowfast/random.hpp"

#include <cmath>

#include "slowfast/error.hpp"

namespace slowfast {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t replica, StreamId stream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      base_{0u, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(replica),
            static_cast<std::uint32_t>(replica >> 32)} {}

std::uint64_t RandomStream::next_u64() {
  if (buffered_ == 0) {
    if (block_ == 0xFFFFFFFFu) fail(ErrorCode::ResourceLimit, "random stream exhausted");
    PhiloxCounter ctr = base_;
    ctr[0] = block_++;
    const PhiloxCounter out = philox4x32_10(ctr, key_);
    buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
    buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
    buffered_ = 2;
  }
  return buffer_[2 - buffered_--];
}

double RandomStream::uniform() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RandomStream::exponential(double rate) { return -std::log(uniform()) / rate; }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  const PhiloxCounter counter{static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                              0x5eedU, 0xffffffffU};
  const PhiloxKey key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  const PhiloxCounter out = philox4x32_10(counter, key);
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

}  // namespace slowfast
