#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rctm/chain.hpp"
#include "rctm/distrib.hpp"
#include "rctm/model.hpp"
#include "rctm/proportions.hpp"

using namespace rctm;

namespace {

SlicedCorpus grid_corpus(std::uint32_t docs_per_slice, std::uint32_t T, std::uint32_t V) {
  SlicedCorpus c;
  for (std::uint32_t w = 0; w < V; ++w) c.vocabulary.push_back("w" + std::to_string(w));
  c.slices.resize(T);
  c.slice_boundaries.resize(T + 1);
  for (std::uint32_t t = 0; t <= T; ++t) c.slice_boundaries[t] = t;
  for (std::uint32_t t = 0; t < T; ++t)
    for (std::uint32_t d = 0; d < docs_per_slice; ++d) {
      Document doc;
      doc.id = std::to_string(t * 1000 + d);
      doc.timestamp = t;
      doc.counts = {{d % V, 2}, {(d + 2) % V, 2}};
      c.slices[t].push_back(doc);
    }
  return c;
}

std::uint64_t doc_tokens(const SliceAssign& as, std::uint32_t d) {
  std::uint64_t n = 0;
  for (std::uint32_t c : as.docs[d].counts) n += c;
  return n;
}

}  // namespace

TEST_CASE("affinity is forced active by any assigned count") {
  const auto c = grid_corpus(3, 1, 4);
  HyperParams h;
  h.k_init = 2;
  ModelState s = init_model(c, h, 21);
  RngStream rng(1, 99);
  const std::uint32_t K = s.K(0);
  for (std::uint32_t d = 0; d < 3; ++d)
    for (std::uint32_t k = 0; k < K; ++k)
      if (s.assign[0].x_dk[d * K + k] > 0)
        CHECK(sample_affinity(s, 0, d, k, rng) == 1);
}

TEST_CASE("affinity probability matches the hand computation") {
  // single doc, single topic, no counts: the beta-ratio factor vanishes and
  // the column factor is eta0 / (1 + eta0)
  const double eta0 = 0.1, alpha = 0.1;
  const double by_hand = eta0 / (1.0 + eta0);
  CHECK(affinity_prob(0, 0, 1, alpha, eta0) == doctest::Approx(by_hand).epsilon(1e-12));

  // two zero rows, three zero columns in a 10-doc slice: direct log-beta
  {
    const std::uint32_t n0 = 2, z = 3, D = 10;
    const double a = alpha * n0;
    const double log_ratio = std::lgamma(a + n0) + std::lgamma(a + alpha) - std::lgamma(a) -
                             std::lgamma(a + n0 + alpha);
    const double expected =
        std::exp(log_ratio) * (z + eta0) / (static_cast<double>(D) - z + eta0);
    CHECK(affinity_prob(n0, z, D, alpha, eta0) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("affinity probability is always a probability") {
  for (std::uint32_t D : {1u, 2u, 7u, 40u}) {
    for (std::uint32_t n0 = 0; n0 < 6; ++n0) {
      for (std::uint32_t z = 0; z < D; ++z) {
        const double p = affinity_prob(n0, z, D, 0.1, 0.1);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        CHECK(std::isfinite(p));
      }
    }
  }
}

TEST_CASE("theta respects the affinity support") {
  const auto c = grid_corpus(2, 1, 4);
  HyperParams h;
  h.k_init = 2;
  ModelState s = init_model(c, h, 33);
  RngStream rng(2, 50);
  const std::uint32_t K = s.K(0);

  SUBCASE("single active topic takes all the mass") {
    s.slices[0].theta_bar[0 * K + 0] = 1;
    s.slices[0].theta_bar[0 * K + 1] = 0;
    // counts must sit on the active topic for a consistent state
    auto& as = s.assign[0];
    auto& da = as.docs[0];
    for (std::size_t i = 0; i < da.words.size(); ++i) {
      const std::uint32_t w = da.words[i];
      const std::uint32_t c1 = da.x[i * K + 1];
      if (c1) {
        da.x[i * K + 0] += c1;
        da.x[i * K + 1] = 0;
        as.x_dk[0 * K + 0] += c1;
        as.x_dk[0 * K + 1] -= c1;
        as.x_wk[w * K + 0] += c1;
        as.x_wk[w * K + 1] -= c1;
        as.x_k[0] += c1;
        as.x_k[1] -= c1;
      }
    }
    sample_theta(s, 0, 0, rng);
    CHECK(s.slices[0].theta[0 * K + 0] == doctest::Approx(1.0));
    CHECK(s.slices[0].theta[0 * K + 1] == 0.0);
  }

  SUBCASE("two active topics with zero counts are symmetric Dir(alpha, alpha)") {
    // strip the counts from doc 0 entirely onto doc-specific inactive state:
    // easier to test the kernel directly through a crafted state
    ModelState toy = s;
    auto& as = toy.assign[0];
    auto& da = as.docs[0];
    for (std::size_t i = 0; i < da.words.size(); ++i) {
      const std::uint32_t w = da.words[i];
      for (std::uint32_t k = 0; k < K; ++k) {
        const std::uint32_t cnt = da.x[i * K + k];
        if (!cnt) continue;
        as.x_dk[0 * K + k] -= cnt;
        as.x_wk[w * K + k] -= cnt;
        as.x_k[k] -= cnt;
        da.x[i * K + k] = 0;
      }
      da.counts[i] = 0;
    }
    toy.slices[0].theta_bar[0 * K + 0] = 1;
    toy.slices[0].theta_bar[0 * K + 1] = 1;
    double mean0 = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      sample_theta(toy, 0, 0, rng);
      mean0 += toy.slices[0].theta[0 * K + 0];
    }
    CHECK(mean0 / n == doctest::Approx(0.5).epsilon(0.02));
  }

  SUBCASE("inactive topics get exactly zero") {
    for (std::uint32_t d = 0; d < 2; ++d) {
      sample_theta(s, 0, d, rng);
      for (std::uint32_t k = 0; k < K; ++k)
        if (!s.slices[0].theta_bar[d * K + k]) CHECK(s.slices[0].theta[d * K + k] == 0.0);
    }
  }
}

TEST_CASE("assignments: conservation and degenerate routing") {
  const auto c = grid_corpus(4, 1, 5);
  HyperParams h;
  h.k_init = 3;
  ModelState s = init_model(c, h, 44);
  RngStream rng(3, 60);
  const std::uint32_t K = s.K(0);

  SUBCASE("one active topic takes every token") {
    const std::uint32_t d = 0;
    for (std::uint32_t k = 0; k < K; ++k) {
      s.slices[0].theta[d * K + k] = k == 1 ? 1.0 : 0.0;
      s.slices[0].theta_bar[d * K + k] = k == 1 ? 1 : 0;
    }
    sample_assignments(s, 0, d, rng);
    const std::uint64_t total = doc_tokens(s.assign[0], d);
    CHECK(s.assign[0].x_dk[d * K + 1] == total);
  }

  SUBCASE("symmetric theta and identical phi rows split evenly in expectation") {
    ModelState toy = s;
    const std::uint32_t d = 1;
    auto& sl = toy.slices[0];
    for (std::uint32_t k = 0; k < K; ++k) {
      sl.theta[d * K + k] = k < 2 ? 0.5 : 0.0;
      sl.theta_bar[d * K + k] = k < 2 ? 1 : 0;
      for (std::uint32_t w = 0; w < toy.V; ++w)
        sl.phi[k * toy.V + w] = 1.0 / toy.V;
    }
    // move the doc's counts onto the active support first
    sample_assignments(toy, 0, d, rng);
    // make one word with count 10
    auto& da = toy.assign[0].docs[d];
    auto& as = toy.assign[0];
    for (std::size_t i = 0; i < da.words.size(); ++i) {
      const std::uint32_t w = da.words[i];
      for (std::uint32_t k = 0; k < K; ++k) {
        const std::uint32_t cnt = da.x[i * K + k];
        as.x_dk[d * K + k] -= cnt;
        as.x_wk[w * K + k] -= cnt;
        as.x_k[k] -= cnt;
        da.x[i * K + k] = 0;
      }
    }
    da.words = {0};
    da.counts = {10};
    da.x.assign(K, 0);
    da.x[0] = 10;
    as.x_dk[d * K + 0] += 10;
    as.x_wk[0 * K + 0] += 10;
    as.x_k[0] += 10;

    double mean = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      sample_assignments(toy, 0, d, rng);
      mean += toy.assign[0].x_dk[d * K + 0];
    }
    CHECK(mean / n == doctest::Approx(5.0).epsilon(0.01));
  }

  SUBCASE("token totals survive a full sweep") {
    std::uint64_t before = 0;
    for (std::uint32_t d = 0; d < 4; ++d) before += doc_tokens(s.assign[0], d);
    sweep_slice(s, 0, true);
    std::uint64_t after = 0;
    for (std::uint32_t d = 0; d < 4; ++d) after += doc_tokens(s.assign[0], d);
    CHECK(before == after);
    CHECK_NOTHROW(validate(s));
  }
}

TEST_CASE("birth and death bookkeeping") {
  const auto c = grid_corpus(5, 3, 6);

  SUBCASE("eta0 = 0 never births") {
    HyperParams h;
    h.k_init = 3;
    h.eta0 = 1e-300;  // positivity is required, but the rate is effectively 0
    ModelState s = init_model(c, h, 71);
    for (int it = 0; it < 5; ++it)
      for (std::uint32_t t = 0; t < s.T; ++t) sweep_slice(s, t, true);
    for (std::uint32_t t = 0; t < s.T; ++t) CHECK(s.K(t) == 3);
  }

  SUBCASE("rctm_f never changes K") {
    HyperParams h;
    h.mode = Mode::kRctmF;
    h.k_fixed = 4;
    ModelState s = init_model(c, h, 72);
    for (int it = 0; it < 5; ++it) {
      for (std::uint32_t t = 0; t < s.T; ++t) sweep_slice(s, t, true);
      const FilterCache cache = backward_filter(s);
      forward_sample(s, cache);
      prune_dead_topics(s, cache);
    }
    for (std::uint32_t t = 0; t < s.T; ++t) CHECK(s.K(t) == 4);
    CHECK_NOTHROW(validate(s));
  }

  SUBCASE("remove_topic shrinks exactly one row and one column of B") {
    HyperParams h;
    h.k_init = 4;
    ModelState s = init_model(c, h, 73);
    const std::uint32_t K0 = s.K(0), K1 = s.K(1), K2 = s.K(2);
    REQUIRE(s.slices[1].b_prev.size() == K0 * K1);
    REQUIRE(s.slices[2].b_prev.size() == K1 * K2);

    // force topic 2 at slice 1 empty, then remove it
    auto& as = s.assign[1];
    auto& sl = s.slices[1];
    for (std::uint32_t d = 0; d < as.D(); ++d) {
      auto& da = as.docs[d];
      for (std::size_t i = 0; i < da.words.size(); ++i) {
        const std::uint32_t w = da.words[i];
        const std::uint32_t cnt = da.x[i * K1 + 2];
        if (!cnt) continue;
        da.x[i * K1 + 0] += cnt;
        da.x[i * K1 + 2] = 0;
        as.x_dk[d * K1 + 0] += cnt;
        as.x_dk[d * K1 + 2] -= cnt;
        as.x_wk[w * K1 + 0] += cnt;
        as.x_wk[w * K1 + 2] -= cnt;
        as.x_k[0] += cnt;
        as.x_k[2] -= cnt;
      }
      if (sl.theta_bar[d * K1 + 2] && !sl.theta_bar[d * K1 + 0]) sl.theta_bar[d * K1 + 0] = 1;
    }
    REQUIRE(as.x_k[2] == 0);
    remove_topic(s, 1, 2);
    CHECK(s.K(1) == K1 - 1);
    CHECK(s.slices[1].b_prev.size() == K0 * (K1 - 1));
    CHECK(s.slices[2].b_prev.size() == (K1 - 1) * K2);
    CHECK(s.slices[1].r.size() == K1 - 1);
    CHECK_NOTHROW(validate(s));
  }
}

TEST_CASE("support invariants after sweeps") {
  const auto c = grid_corpus(6, 2, 5);
  HyperParams h;
  h.k_init = 4;
  ModelState s = init_model(c, h, 88);
  for (int it = 0; it < 10; ++it) {
    for (std::uint32_t t = 0; t < s.T; ++t) sweep_slice(s, t, true);
    const FilterCache cache = backward_filter(s);
    forward_sample(s, cache);
    prune_dead_topics(s, cache);
    CHECK_NOTHROW(validate(s));
    // theta_bar = 0 implies both zero counts and zero theta
    for (std::uint32_t t = 0; t < s.T; ++t) {
      const std::uint32_t K = s.K(t);
      for (std::uint32_t d = 0; d < s.assign[t].D(); ++d) {
        bool active = false;
        for (std::uint32_t k = 0; k < K; ++k) {
          if (!s.slices[t].theta_bar[d * K + k]) {
            CHECK(s.assign[t].x_dk[d * K + k] == 0);
            CHECK(s.slices[t].theta[d * K + k] == 0.0);
          } else {
            active = true;
          }
        }
        CHECK(active);
      }
    }
  }
}
