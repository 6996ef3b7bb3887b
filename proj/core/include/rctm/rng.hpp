#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>

namespace rctm {

// Deterministic seeded random stream. A (seed, stream) pair fully determines
// the draw sequence; distinct stream ids give statistically independent
// streams off one root seed. All samplers in distrib.hpp consume uniforms
// from here only, so the sequence is reproducible across platforms (the
// engine is the fully-specified std::mt19937_64; no library distributions
// are used anywhere).
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t seed, std::uint64_t stream);

  // uniform in [0, 1)
  double uniform();
  // uniform in (0, 1]
  double uniform_pos() { return 1.0 - uniform(); }
  // standard normal (Box-Muller, one value per two uniforms)
  double normal();

  std::uint64_t next_u64() { return engine_(); }

  void save(std::ostream& os) const;
  void load(std::istream& is);
  bool operator==(const RngStream& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

// Named stream ids so every module draws from its own lane of the root seed.
// rctm_d consumes the kDropout stream only for dropout masks, which is what
// makes rho = 0 runs bit-identical to plain rctm.
namespace stream {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kProportions = 2;
inline constexpr std::uint64_t kBirth = 3;
inline constexpr std::uint64_t kFilter = 4;
inline constexpr std::uint64_t kForward = 5;
inline constexpr std::uint64_t kDropout = 6;
inline constexpr std::uint64_t kSplit = 7;
inline constexpr std::uint64_t kFoldIn = 8;
inline constexpr std::uint64_t kSynth = 9;
}  // namespace stream

}  // namespace rctm
