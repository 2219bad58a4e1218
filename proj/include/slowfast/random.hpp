#pragma once

#include <array>
#include <cstdint>

namespace slowfast {

// Philox4x32-10 counter-based generator.
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key);

// Independent sub-streams of one replica.
enum class StreamId : std::uint32_t {
  Clock = 0,        // Poisson inter-jump gaps
  Transitions = 1,  // one uniform per jump of the fast process
  ClassDraw = 2,    // draw of the random-ODE class index
  Auxiliary = 3,
};

// A stream is keyed by (seed, replica, stream id) and walks a block counter,
// so replicas are independent of scheduling order.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t replica, StreamId stream);

  std::uint64_t next_u64();
  // Uniform on the open interval (0, 1).
  double uniform();
  double exponential(double rate);

 private:
  PhiloxKey key_;
  PhiloxCounter base_;
  std::uint32_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
};

// Seed of the index-th sub-experiment of a run keyed by seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace slowfast
