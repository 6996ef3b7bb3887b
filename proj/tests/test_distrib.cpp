#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "rctm/distrib.hpp"
#include "stats.hpp"

using namespace rctm;

TEST_CASE("gamma moments and identities") {
  RngStream rng(42, 1);
  SUBCASE("mean of Gamma(2,3) draws") {
    double sum = 0.0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) sum += gamma(2.0, 3.0, rng);
    CHECK(sum / n == doctest::Approx(6.0).epsilon(0.05 / 6.0));
  }
  SUBCASE("shape=1 is Exponential(scale): KS at alpha=0.01") {
    const int n = 100000;
    std::vector<double> xs(n);
    for (auto& x : xs) x = gamma(1.0, 2.0, rng);
    const double d = teststat::ks_distance(std::move(xs), [](double x) {
      return 1.0 - std::exp(-x / 2.0);
    });
    CHECK(d * std::sqrt(static_cast<double>(n)) < 1.628);
  }
  SUBCASE("scale -> 0 clamps at the positivity floor") {
    const double g = gamma(2.0, 1e-310, rng);
    CHECK(g >= kGammaFloor);
  }
  SUBCASE("invalid parameters throw") {
    CHECK_THROWS_AS(gamma(0.0, 1.0, rng), std::invalid_argument);
    CHECK_THROWS_AS(gamma(1.0, -1.0, rng), std::invalid_argument);
  }
}

TEST_CASE("dirichlet support and moments") {
  RngStream rng(7, 2);
  SUBCASE("degenerate support") {
    const std::vector<double> conc{0.0, 5.0, 0.0};
    const auto v = dirichlet(conc, rng);
    CHECK(v[0] == 0.0);
    CHECK(v[1] == doctest::Approx(1.0));
    CHECK(v[2] == 0.0);
  }
  SUBCASE("Dir(1,1) mean") {
    const std::vector<double> conc{1.0, 1.0};
    double s0 = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) s0 += dirichlet(conc, rng)[0];
    CHECK(s0 / n == doctest::Approx(0.5).epsilon(0.02));
  }
  SUBCASE("many small concentrations still sum to one") {
    const std::vector<double> conc(50, 0.1);
    const auto v = dirichlet(conc, rng);
    double sum = 0.0;
    for (double x : v) sum += x;
    CHECK(std::abs(sum - 1.0) < 1e-12);
    for (double x : v) CHECK(x > 0.0);
  }
  SUBCASE("all-zero concentration throws") {
    const std::vector<double> conc{0.0, 0.0};
    CHECK_THROWS_AS(dirichlet(conc, rng), std::invalid_argument);
  }
}

TEST_CASE("multinomial counts") {
  RngStream rng(11, 3);
  SUBCASE("n = 0") {
    const std::vector<double> p{0.5, 0.5};
    const auto c = multinomial_counts(0, p, rng);
    CHECK(c[0] == 0);
    CHECK(c[1] == 0);
  }
  SUBCASE("degenerate cell") {
    const std::vector<double> p{1.0, 0.0, 0.0};
    const auto c = multinomial_counts(7, p, rng);
    CHECK(c[0] == 7);
    CHECK(c[1] == 0);
    CHECK(c[2] == 0);
  }
  SUBCASE("single large draw within 3 sigma") {
    const std::vector<double> p{0.2, 0.8};
    const auto c = multinomial_counts(100000, p, rng);
    CHECK(c[0] + c[1] == 100000);
    CHECK(std::abs(static_cast<double>(c[0]) - 20000.0) <= 400.0);
  }
  SUBCASE("totals always conserved") {
    const std::vector<double> p{0.1, 0.3, 0.6};
    for (std::uint32_t n = 0; n < 50; ++n) {
      const auto c = multinomial_counts(n, p, rng);
      CHECK(c[0] + c[1] + c[2] == n);
    }
  }
}

TEST_CASE("crt bounds and expectation") {
  RngStream rng(13, 4);
  SUBCASE("m = 0 gives 0") { CHECK(crt(0, 1.5, rng) == 0); }
  SUBCASE("m = 1 gives 1 for any r") {
    for (double r : {0.1, 1.0, 10.0}) CHECK(crt(1, r, rng) == 1);
  }
  SUBCASE("bounds") {
    for (int i = 0; i < 200; ++i) {
      const auto l = crt(10, 0.7, rng);
      CHECK(l >= 1);
      CHECK(l <= 10);
    }
  }
  SUBCASE("mean of CRT(10, 1) is the harmonic number H_10") {
    double sum = 0.0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) sum += crt(10, 1.0, rng);
    CHECK(sum / n == doctest::Approx(2.9289682539682538).epsilon(0.01 / 2.9));
  }
  SUBCASE("expectation identity over the (m, r) grid, 3 MC standard errors") {
    for (std::uint64_t m : {1ull, 5ull, 10ull, 50ull}) {
      for (double r : {0.5, 1.0, 2.0}) {
        const int n = 100000;
        double sum = 0.0, sum2 = 0.0;
        for (int i = 0; i < n; ++i) {
          const double l = crt(m, r, rng);
          sum += l;
          sum2 += l * l;
        }
        const double mean = sum / n;
        const double var = sum2 / n - mean * mean;
        const double se = std::sqrt(std::max(var, 1e-12) / n);
        CHECK(std::abs(mean - crt_mean(m, r)) <= 3.0 * se + 1e-9);
      }
    }
  }
  SUBCASE("r <= 0 throws") { CHECK_THROWS_AS(crt(5, 0.0, rng), std::invalid_argument); }
}

TEST_CASE("beta moments") {
  RngStream rng(17, 5);
  SUBCASE("mean of Beta(2,2)") {
    double sum = 0.0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) sum += beta(2.0, 2.0, rng);
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
  }
  SUBCASE("Beta(1,1) is uniform: KS at alpha=0.01") {
    const int n = 100000;
    std::vector<double> xs(n);
    for (auto& x : xs) x = beta(1.0, 1.0, rng);
    const double d = teststat::ks_distance(std::move(xs), [](double x) { return x; });
    CHECK(d * std::sqrt(static_cast<double>(n)) < 1.628);
  }
  SUBCASE("clamped away from 0 and 1") {
    for (int i = 0; i < 1000; ++i) {
      const double x = beta(0.001, 100.0, rng);
      CHECK(x >= kBetaEps);
      CHECK(x <= 1.0 - kBetaEps);
    }
  }
  SUBCASE("invalid parameters throw") {
    CHECK_THROWS_AS(beta(0.0, 1.0, rng), std::invalid_argument);
    CHECK_THROWS_AS(beta(1.0, 0.0, rng), std::invalid_argument);
  }
}

TEST_CASE("bernoulli and poisson") {
  RngStream rng(19, 6);
  CHECK(bernoulli(0.0, rng) == 0);
  CHECK(bernoulli(1.0, rng) == 1);
  CHECK(poisson(0.0, rng) == 0);
  SUBCASE("mean of Pois(3.7)") {
    double sum = 0.0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) sum += poisson(3.7, rng);
    CHECK(sum / n == doctest::Approx(3.7).epsilon(0.02 / 3.7));
  }
  SUBCASE("large rate stays exact in mean") {
    double sum = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) sum += poisson(1100.0, rng);
    CHECK(sum / n == doctest::Approx(1100.0).epsilon(0.002));
  }
}

TEST_CASE("determinism: identical (params, seed, stream) give identical draws") {
  auto run = [](std::uint64_t seed, std::uint64_t stream) {
    RngStream rng(seed, stream);
    std::vector<double> out;
    out.push_back(gamma(2.5, 0.7, rng));
    out.push_back(beta(1.1, 3.0, rng));
    const std::vector<double> conc{0.5, 1.5, 2.0};
    for (double v : dirichlet(conc, rng)) out.push_back(v);
    out.push_back(static_cast<double>(crt(20, 1.3, rng)));
    out.push_back(static_cast<double>(poisson(4.2, rng)));
    const std::vector<double> p{0.3, 0.7};
    for (auto c : multinomial_counts(9, p, rng)) out.push_back(c);
    return out;
  };
  CHECK(run(123, 5) == run(123, 5));
  CHECK(run(123, 5) != run(123, 6));
  CHECK(run(123, 5) != run(124, 5));
}

TEST_CASE("poisson-multinomial thinning equivalence (two-sample chi-square)") {
  // independent Pois(0.3), Pois(0.7) versus Pois(1.0) + multinomial split
  const int n = 1000000;
  const int cap = 6;
  const std::size_t tail = static_cast<std::size_t>((cap + 1) * (cap + 1));
  auto cell = [&](std::uint32_t y1, std::uint32_t y2) -> std::size_t {
    if (y1 + y2 > static_cast<std::uint32_t>(cap)) return tail;  // pooled
    return static_cast<std::size_t>(y1) * (cap + 1) + y2;
  };
  std::vector<std::uint64_t> ha(tail + 1, 0), hb(tail + 1, 0);
  RngStream ra(101, 1), rb(101, 2);
  for (int i = 0; i < n; ++i) {
    const std::uint32_t y1 = poisson(0.3, ra);
    const std::uint32_t y2 = poisson(0.7, ra);
    ++ha[cell(y1, y2)];
  }
  const std::vector<double> probs{0.3, 0.7};
  for (int i = 0; i < n; ++i) {
    const std::uint32_t tot = poisson(1.0, rb);
    const auto c = multinomial_counts(tot, probs, rb);
    ++hb[cell(c[0], c[1])];
  }
  const double p = teststat::chi2_two_sample_pvalue(ha, hb);
  CHECK(p > 0.001);
}
