#include "rctm/distrib.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rctm {

namespace {

double gamma_shape_ge1(double shape, RngStream& rng) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform_pos();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

}  // namespace

double gamma(double shape, double scale, RngStream& rng) {
  if (!(shape > 0.0) || !(scale > 0.0))
    throw std::invalid_argument("gamma: shape and scale must be positive");
  double g;
  if (shape >= 1.0) {
    g = gamma_shape_ge1(shape, rng);
  } else {
    // boost trick: Gamma(a) = Gamma(a+1) * U^{1/a}
    const double boost = gamma_shape_ge1(shape + 1.0, rng);
    const double u = rng.uniform_pos();
    g = boost * std::pow(u, 1.0 / shape);
  }
  return std::max(g * scale, kGammaFloor);
}

double beta(double a, double b, RngStream& rng) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("beta: parameters must be positive");
  const double x = gamma(a, 1.0, rng);
  const double y = gamma(b, 1.0, rng);
  const double v = x / (x + y);
  return std::clamp(v, kBetaEps, 1.0 - kBetaEps);
}

void dirichlet_into(std::span<const double> concentration, RngStream& rng,
                    std::span<double> out) {
  if (concentration.size() != out.size())
    throw std::invalid_argument("dirichlet: size mismatch");
  double sum = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < concentration.size(); ++i) {
    const double c = concentration[i];
    if (c < 0.0) throw std::invalid_argument("dirichlet: negative concentration");
    if (c > 0.0) {
      out[i] = gamma(c, 1.0, rng);
      sum += out[i];
      any = true;
    } else {
      out[i] = 0.0;
    }
  }
  if (!any) throw std::invalid_argument("dirichlet: all-zero concentration");
  for (auto& v : out) v /= sum;
}

std::vector<double> dirichlet(std::span<const double> concentration, RngStream& rng) {
  std::vector<double> out(concentration.size());
  dirichlet_into(concentration, rng, out);
  return out;
}

std::uint32_t binomial(std::uint32_t n, double p, RngStream& rng) {
  if (p <= 0.0) return 0;
  if (p >= 1.0) return n;
  std::uint32_t k = 0;
  for (std::uint32_t i = 0; i < n; ++i) k += (rng.uniform() < p);
  return k;
}

void multinomial_counts_into(std::uint32_t n, std::span<const double> probs, RngStream& rng,
                             std::span<std::uint32_t> out) {
  if (probs.size() != out.size()) throw std::invalid_argument("multinomial: size mismatch");
  double total = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw std::invalid_argument("multinomial: negative probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("multinomial: probabilities must sum to 1");
  std::uint32_t left = n;
  double mass = 1.0;
  for (std::size_t k = 0; k + 1 < probs.size(); ++k) {
    if (left == 0) {
      out[k] = 0;
      continue;
    }
    const double p = mass > 0.0 ? std::min(probs[k] / mass, 1.0) : 1.0;
    const std::uint32_t c = binomial(left, p, rng);
    out[k] = c;
    left -= c;
    mass -= probs[k];
  }
  if (!out.empty()) out[out.size() - 1] = left;
}

std::vector<std::uint32_t> multinomial_counts(std::uint32_t n, std::span<const double> probs,
                                              RngStream& rng) {
  std::vector<std::uint32_t> out(probs.size());
  multinomial_counts_into(n, probs, rng, out);
  return out;
}

void multinomial_weights_into(std::uint32_t n, std::span<const double> weights, RngStream& rng,
                              std::span<std::uint32_t> out) {
  if (weights.size() != out.size()) throw std::invalid_argument("multinomial: size mismatch");
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("multinomial: negative weight");
    total += w;
  }
  if (total <= 0.0) throw std::invalid_argument("multinomial: zero weight sum");
  std::uint32_t left = n;
  double mass = total;
  for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
    if (left == 0) {
      out[k] = 0;
      continue;
    }
    const double p = mass > 0.0 ? std::min(weights[k] / mass, 1.0) : 1.0;
    const std::uint32_t c = binomial(left, p, rng);
    out[k] = c;
    left -= c;
    mass -= weights[k];
  }
  if (!out.empty()) out[out.size() - 1] = left;
}

std::uint32_t crt(std::uint64_t m, double r, RngStream& rng) {
  if (!(r > 0.0)) throw std::invalid_argument("crt: r must be positive");
  std::uint32_t l = 0;
  for (std::uint64_t n = 1; n <= m; ++n) {
    const double p = r / (static_cast<double>(n) - 1.0 + r);
    l += (rng.uniform() < p);
  }
  return l;
}

double crt_mean(std::uint64_t m, double r) {
  double e = 0.0;
  for (std::uint64_t n = 1; n <= m; ++n) e += r / (static_cast<double>(n) - 1.0 + r);
  return e;
}

std::uint32_t bernoulli(double p, RngStream& rng) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("bernoulli: p must be in [0,1]");
  if (p <= 0.0) return 0;
  if (p >= 1.0) return 1;
  return rng.uniform() < p ? 1u : 0u;
}

std::uint32_t poisson(double rate, RngStream& rng) {
  if (rate < 0.0) throw std::invalid_argument("poisson: rate must be non-negative");
  if (rate == 0.0) return 0;
  std::uint32_t total = 0;
  // Knuth in chunks so exp(-rate) never underflows.
  while (rate > 500.0) {
    total += poisson(500.0, rng);
    rate -= 500.0;
  }
  const double limit = std::exp(-rate);
  double prod = rng.uniform_pos();
  std::uint32_t k = 0;
  while (prod > limit) {
    ++k;
    prod *= rng.uniform_pos();
  }
  total += k;
  return total;
}

std::size_t categorical(std::span<const double> weights, RngStream& rng) {
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("categorical: negative weight");
    total += w;
  }
  if (total <= 0.0) throw std::invalid_argument("categorical: zero weight sum");
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
    u -= weights[i];
    if (u < 0.0) return i;
  }
  return weights.size() - 1;
}

}  // namespace rctm
