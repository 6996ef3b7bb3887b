#include "rctm/rng.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace rctm {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream)
    : engine_(splitmix64(splitmix64(seed) ^ splitmix64(stream * 0x9e3779b97f4a7c15ULL + 1))) {}

double RngStream::uniform() {
  // 53-bit mantissa; in [0, 1)
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  const double u1 = uniform_pos();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

void RngStream::save(std::ostream& os) const {
  std::ostringstream ss;
  ss << engine_;
  const std::string s = ss.str();
  const std::uint64_t n = s.size();
  os.write(reinterpret_cast<const char*>(&n), sizeof(n));
  os.write(s.data(), static_cast<std::streamsize>(n));
}

void RngStream::load(std::istream& is) {
  std::uint64_t n = 0;
  is.read(reinterpret_cast<char*>(&n), sizeof(n));
  if (!is || n > (1u << 20)) throw std::runtime_error("rng state: truncated or corrupt");
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  if (!is) throw std::runtime_error("rng state: truncated");
  std::istringstream ss(s);
  ss >> engine_;
  if (!ss) throw std::runtime_error("rng state: parse failure");
}

}  // namespace rctm
