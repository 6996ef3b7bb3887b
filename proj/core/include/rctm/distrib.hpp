#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rctm/rng.hpp"

namespace rctm {

// Sampling kernels for every distribution the model uses. All are pure
// given an explicit RngStream; parallel callers must use distinct streams.
//
// Numeric guards (needed downstream, where -log(1-xi) must stay finite):
//   gamma draws are floored at kGammaFloor,
//   beta draws are clamped to [kBetaEps, 1-kBetaEps].
inline constexpr double kGammaFloor = 1e-300;
inline constexpr double kBetaEps = 1e-12;

// Gamma(shape, scale). Mean shape*scale. Marsaglia-Tsang.
double gamma(double shape, double scale, RngStream& rng);

// Beta(a, b). Mean a/(a+b).
double beta(double a, double b, RngStream& rng);

// Dirichlet over the positive entries of `concentration`; zero entries give
// exact zeros in the output. Throws if all entries are zero.
std::vector<double> dirichlet(std::span<const double> concentration, RngStream& rng);
void dirichlet_into(std::span<const double> concentration, RngStream& rng,
                    std::span<double> out);

// Multinomial counts: distributes n over the cells of `probs` (must sum to 1
// within 1e-9). Output sums to n exactly.
std::vector<std::uint32_t> multinomial_counts(std::uint32_t n, std::span<const double> probs,
                                              RngStream& rng);
void multinomial_counts_into(std::uint32_t n, std::span<const double> probs, RngStream& rng,
                             std::span<std::uint32_t> out);

// Multinomial from unnormalized non-negative weights.
void multinomial_weights_into(std::uint32_t n, std::span<const double> weights, RngStream& rng,
                              std::span<std::uint32_t> out);

// Binomial(n, p), by Bernoulli summation (exact; all model call sites have
// small n).
std::uint32_t binomial(std::uint32_t n, double p, RngStream& rng);

// Chinese restaurant table count: l = sum_{n=1..m} Bern(r/(n-1+r)).
// 0 <= result <= m, and result >= 1 whenever m >= 1.
std::uint32_t crt(std::uint64_t m, double r, RngStream& rng);

std::uint32_t bernoulli(double p, RngStream& rng);

// Poisson(rate). Chunked Knuth product-of-uniforms; exact for any rate.
std::uint32_t poisson(double rate, RngStream& rng);

// Index draw proportional to non-negative weights (linear scan; small K).
std::size_t categorical(std::span<const double> weights, RngStream& rng);

// E[CRT(m, r)] = sum_{n=1..m} r/(n-1+r); used by tests and diagnostics.
double crt_mean(std::uint64_t m, double r);

}  // namespace rctm
