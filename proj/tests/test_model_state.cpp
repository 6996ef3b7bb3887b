#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "rctm/model.hpp"

using namespace rctm;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("rctm_ms_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

SlicedCorpus small_corpus(std::uint32_t docs_per_slice, std::uint32_t T, std::uint32_t V) {
  SlicedCorpus c;
  for (std::uint32_t w = 0; w < V; ++w) c.vocabulary.push_back("w" + std::to_string(w));
  c.slices.resize(T);
  c.slice_boundaries.resize(T + 1);
  for (std::uint32_t t = 0; t <= T; ++t) c.slice_boundaries[t] = t;
  for (std::uint32_t t = 0; t < T; ++t)
    for (std::uint32_t d = 0; d < docs_per_slice; ++d) {
      Document doc;
      doc.id = std::to_string(t * 100 + d);
      doc.timestamp = t;
      doc.counts = {{(d + t) % V, 3}, {(d + t + 1) % V, 1}};
      c.slices[t].push_back(doc);
    }
  return c;
}

}  // namespace

TEST_CASE("init on the single-doc single-topic corpus") {
  SlicedCorpus c = small_corpus(1, 1, 3);
  HyperParams h;
  h.mode = Mode::kRctmF;
  h.k_fixed = 1;
  const ModelState s = init_model(c, h, 5);
  REQUIRE(s.T == 1);
  REQUIRE(s.K(0) == 1);
  CHECK(s.slices[0].theta_bar[0] == 1);
  CHECK(s.slices[0].theta[0] == doctest::Approx(1.0));
  CHECK_NOTHROW(validate(s));
}

TEST_CASE("init invariants hold across modes and shapes") {
  for (Mode mode : {Mode::kRctm, Mode::kRctmD, Mode::kRctmF}) {
    for (std::uint32_t T : {1u, 3u}) {
      HyperParams h;
      h.mode = mode;
      h.k_init = 6;
      h.k_fixed = 4;
      if (mode == Mode::kRctmD) h.rho = 0.3;
      const auto c = small_corpus(5, T, 7);
      const ModelState s = init_model(c, h, 11);
      CHECK_NOTHROW(validate(s));
      for (std::uint32_t t = 0; t < T; ++t)
        CHECK(s.K(t) == (mode == Mode::kRctmF ? h.k_fixed : h.k_init));
    }
  }
}

TEST_CASE("init is bit-identical under one seed") {
  const auto c = small_corpus(4, 2, 5);
  HyperParams h;
  const ModelState a = init_model(c, h, 99);
  const ModelState b = init_model(c, h, 99);
  CHECK(states_equal_core(a, b));
  const ModelState d = init_model(c, h, 100);
  CHECK_FALSE(states_equal_core(a, d));
}

TEST_CASE("init refuses an empty slice") {
  auto c = small_corpus(2, 2, 5);
  c.slices[1].clear();
  HyperParams h;
  CHECK_THROWS(init_model(c, h, 1));
}

TEST_CASE("checkpoint round-trip reproduces the state exactly") {
  TempDir tmp;
  const auto c = small_corpus(3, 2, 5);
  HyperParams h;
  h.mode = Mode::kRctmD;
  h.rho = 0.25;
  ModelState s = init_model(c, h, 42);
  s.iteration = 17;
  // move the streams so the saved rng position is nontrivial
  (void)s.streams.proportions.uniform();
  (void)s.streams.forward.uniform();

  const std::string path = (tmp.path / "ckpt.bin").string();
  PosteriorSummary sum;
  sum.V = s.V;
  sum.T = s.T;
  sum.retained = 2;
  sum.slice_K = {s.K(0), s.K(1)};
  sum.mean_phi = {s.slices[0].phi, s.slices[1].phi};
  sum.mean_b = {{}, s.slices[1].b_prev};
  sum.mean_theta = {s.slices[0].theta, s.slices[1].theta};
  sum.loglik_trace = {-10.5, -9.25};
  sum.k_trace = {{s.K(0), s.K(1)}, {s.K(0), s.K(1)}};
  save_checkpoint(s, &sum, path);

  PosteriorSummary sum2;
  const ModelState r = load_checkpoint(path, &sum2);
  CHECK(states_equal_core(s, r));
  CHECK(r.hyper.rho == s.hyper.rho);
  CHECK(r.hyper.mode == s.hyper.mode);
  CHECK(r.seed == s.seed);
  CHECK(r.iteration == 17);
  CHECK(r.vocab == s.vocab);
  CHECK(r.streams.proportions == s.streams.proportions);
  CHECK(r.streams.forward == s.streams.forward);
  CHECK(r.streams.dropout == s.streams.dropout);
  CHECK(sum2.retained == 2);
  CHECK(sum2.mean_phi == sum.mean_phi);
  CHECK(sum2.loglik_trace == sum.loglik_trace);

  // the rng position must resume identically
  ModelState s2 = load_checkpoint(path);
  CHECK(s2.streams.proportions.uniform() == s.streams.proportions.uniform());

  SUBCASE("state.json lands next to the checkpoint") {
    CHECK(fs::exists(tmp.path / "state.json"));
  }
}

TEST_CASE("checkpoint rejects foreign and truncated files") {
  TempDir tmp;
  const std::string bad = (tmp.path / "bad.bin").string();
  {
    std::ofstream os(bad, std::ios::binary);
    os << "NOTRCTM_whatever";
  }
  CHECK_THROWS_WITH_AS(load_checkpoint(bad), doctest::Contains("magic"), std::runtime_error);

  const auto c = small_corpus(2, 1, 4);
  HyperParams h;
  const ModelState s = init_model(c, h, 3);
  const std::string good = (tmp.path / "good.bin").string();
  save_checkpoint(s, nullptr, good);
  const auto size = fs::file_size(good);
  const std::string cut = (tmp.path / "cut.bin").string();
  {
    std::ifstream is(good, std::ios::binary);
    std::vector<char> buf(size / 2);
    is.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    std::ofstream os(cut, std::ios::binary);
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  CHECK_THROWS_AS(load_checkpoint(cut), std::runtime_error);
}

TEST_CASE("validate catches corruption") {
  const auto c = small_corpus(3, 2, 5);
  HyperParams h;
  ModelState s = init_model(c, h, 8);
  SUBCASE("off-simplex phi") {
    s.slices[0].phi[0] += 0.5;
    CHECK_THROWS(validate(s));
  }
  SUBCASE("marginal drift") {
    s.assign[1].x_k[0] += 1;
    CHECK_THROWS(validate(s));
  }
  SUBCASE("theta outside the support") {
    s.slices[0].theta_bar[0] = 0;
    s.slices[0].theta[0] = 0.5;
    CHECK_THROWS(validate(s));
  }
  SUBCASE("non-positive c") {
    s.slices[0].c = 0.0;
    CHECK_THROWS(validate(s));
  }
}
