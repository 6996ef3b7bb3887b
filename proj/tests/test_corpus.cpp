#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "rctm/corpus.hpp"

using namespace rctm;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("rctm_test_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream os(p);
  os << content;
}

SlicedCorpus toy_corpus(std::uint32_t docs_per_slice, std::uint32_t T) {
  SlicedCorpus c;
  c.vocabulary = {"alpha", "beta", "gamma"};
  c.slices.resize(T);
  c.slice_boundaries.resize(T + 1);
  for (std::uint32_t t = 0; t <= T; ++t) c.slice_boundaries[t] = t * 100;
  for (std::uint32_t t = 0; t < T; ++t) {
    for (std::uint32_t d = 0; d < docs_per_slice; ++d) {
      Document doc;
      doc.id = "t" + std::to_string(t) + "d" + std::to_string(d);
      doc.timestamp = t * 100 + d;
      doc.counts = {{d % 3, 2}, {(d + 1) % 3, 1}};
      c.slices[t].push_back(doc);
    }
  }
  return c;
}

}  // namespace

TEST_CASE("jsonl ingest builds vocabulary and keeps all docs") {
  TempDir tmp;
  write_file(tmp.path / "in.jsonl",
             R"({"id":"1","timestamp":0,"text":"a b"})"
             "\n"
             R"({"id":"2","timestamp":10,"text":"b c"})"
             "\n"
             R"({"id":"3","timestamp":20,"text":"a c"})"
             "\n");
  IngestReport rep;
  const auto c = ingest((tmp.path / "in.jsonl").string(), IngestFormat::kJsonl, {}, &rep);
  CHECK(c.vocab_size() == 3);
  CHECK(c.doc_total() == 3);
  CHECK(rep.dropped_empty_docs == 0);
  CHECK(c.token_total() == 6);
}

TEST_CASE("all-stopword document is dropped with a warning count") {
  TempDir tmp;
  write_file(tmp.path / "stop.txt", "the\nof\n");
  write_file(tmp.path / "in.jsonl",
             R"({"id":"1","timestamp":0,"text":"the of"})"
             "\n"
             R"({"id":"2","timestamp":10,"text":"signal the noise"})"
             "\n");
  PreprocessOptions opt;
  opt.stopword_path = (tmp.path / "stop.txt").string();
  IngestReport rep;
  const auto c = ingest((tmp.path / "in.jsonl").string(), IngestFormat::kJsonl, opt, &rep);
  CHECK(rep.dropped_empty_docs == 1);
  CHECK(c.doc_total() == 1);
  CHECK(c.vocab_size() == 2);  // signal, noise
}

TEST_CASE("df thresholds shrink the vocabulary") {
  TempDir tmp;
  std::string lines;
  for (int i = 0; i < 10; ++i)
    lines += R"({"id":")" + std::to_string(i) + R"(","timestamp":)" + std::to_string(i * 10) +
             R"(,"text":"common rare)" + std::to_string(i) + R"( everywhere"})" + "\n";
  write_file(tmp.path / "in.jsonl", lines);
  PreprocessOptions opt;
  opt.min_df = 5;
  auto c = ingest((tmp.path / "in.jsonl").string(), IngestFormat::kJsonl, opt);
  CHECK(c.vocab_size() == 2);  // common, everywhere survive; rareN fail min_df
  opt.max_df = 0.5;
  CHECK_THROWS(ingest((tmp.path / "in.jsonl").string(), IngestFormat::kJsonl, opt));
}

TEST_CASE("tsv ingest and malformed records report the line number") {
  TempDir tmp;
  write_file(tmp.path / "in.tsv", "1\t0\tred green\n2\t50\tblue red\n");
  const auto c = ingest((tmp.path / "in.tsv").string(), IngestFormat::kTsv, {});
  CHECK(c.vocab_size() == 3);

  write_file(tmp.path / "bad.tsv", "1\t0\tok tokens\nmissing-tabs-line\n");
  try {
    ingest((tmp.path / "bad.tsv").string(), IngestFormat::kTsv, {});
    FAIL("expected a parse error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }

  write_file(tmp.path / "bad.jsonl", R"({"id":"1","timestamp":0,"text":"fine"})"
                                     "\nnot json\n");
  try {
    ingest((tmp.path / "bad.jsonl").string(), IngestFormat::kJsonl, {});
    FAIL("expected a parse error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("missing input file errors") {
  CHECK_THROWS(ingest("/nonexistent/file.jsonl", IngestFormat::kJsonl, {}));
}

TEST_CASE("slice partitions timestamps evenly") {
  SlicedCorpus c;
  c.vocabulary = {"x"};
  c.slices.resize(1);
  for (std::int64_t ts : {0, 10, 20, 30}) {
    Document d;
    d.id = std::to_string(ts);
    d.timestamp = ts;
    d.counts = {{0, 1}};
    c.slices[0].push_back(d);
  }
  c.slice_boundaries = {0, 31};

  const auto s = slice(c, 2);
  REQUIRE(s.num_slices() == 2);
  CHECK(s.slices[0].size() == 2);  // 0, 10
  CHECK(s.slices[1].size() == 2);  // 20, 30
  CHECK(s.slices[0][0].timestamp == 0);
  CHECK(s.slices[1][0].timestamp == 20);

  SUBCASE("token totals conserved") { CHECK(s.token_total() == c.token_total()); }
  SUBCASE("single doc, T = 1") {
    SlicedCorpus one;
    one.vocabulary = {"x"};
    one.slices.resize(1);
    Document d;
    d.id = "only";
    d.timestamp = 5;
    d.counts = {{0, 3}};
    one.slices[0].push_back(d);
    one.slice_boundaries = {5, 6};
    const auto r = slice(one, 1);
    CHECK(r.num_slices() == 1);
    CHECK(r.slices[0].size() == 1);
  }
  SUBCASE("identical timestamps with T > 1 error") {
    SlicedCorpus flat;
    flat.vocabulary = {"x"};
    flat.slices.resize(1);
    for (int i = 0; i < 3; ++i) {
      Document d;
      d.id = std::to_string(i);
      d.timestamp = 42;
      d.counts = {{0, 1}};
      flat.slices[0].push_back(d);
    }
    flat.slice_boundaries = {42, 43};
    CHECK_THROWS(slice(flat, 2));
    CHECK_NOTHROW(slice(flat, 1));
  }
}

TEST_CASE("slice handles a SOTU-like configuration") {
  // 227 yearly documents cut into 5 equidistant slices
  SlicedCorpus c;
  c.vocabulary = {"w"};
  c.slices.resize(1);
  for (int year = 0; year < 227; ++year) {
    Document d;
    d.id = std::to_string(year);
    d.timestamp = year;
    d.counts = {{0, 1}};
    c.slices[0].push_back(d);
  }
  c.slice_boundaries = {0, 227};
  const auto s = slice(c, 5);
  CHECK(s.num_slices() == 5);
  CHECK(s.doc_total() == 227);
  std::size_t lo = 227, hi = 0;
  for (const auto& sl : s.slices) {
    lo = std::min(lo, sl.size());
    hi = std::max(hi, sl.size());
  }
  CHECK(hi - lo <= 2);  // near-equal occupancy for uniform arrivals
}

TEST_CASE("split is stratified, deterministic and conserving") {
  const auto c = toy_corpus(10, 3);
  const auto sp = split(c, 0.9, 7);
  for (std::uint32_t t = 0; t < 3; ++t) {
    CHECK(sp.train.slices[t].size() == 9);
    CHECK(sp.heldout.slices[t].size() == 1);
  }
  SUBCASE("same seed, same split") {
    const auto sp2 = split(c, 0.9, 7);
    for (std::uint32_t t = 0; t < 3; ++t) {
      REQUIRE(sp2.train.slices[t].size() == sp.train.slices[t].size());
      for (std::size_t d = 0; d < sp.train.slices[t].size(); ++d)
        CHECK(sp2.train.slices[t][d].id == sp.train.slices[t][d].id);
    }
  }
  SUBCASE("different seed differs somewhere") {
    bool same = true;
    const auto sp2 = split(c, 0.9, 8);
    for (std::uint32_t t = 0; t < 3 && same; ++t)
      for (std::size_t d = 0; d < sp.heldout.slices[t].size(); ++d)
        if (sp2.heldout.slices[t][d].id != sp.heldout.slices[t][d].id) same = false;
    CHECK_FALSE(same);
  }
  SUBCASE("60/40 within one document") {
    const auto c100 = toy_corpus(100, 1);
    const auto sp2 = split(c100, 0.6, 3);
    CHECK(std::abs(static_cast<int>(sp2.train.slices[0].size()) - 60) <= 1);
    CHECK(std::abs(static_cast<int>(sp2.heldout.slices[0].size()) - 40) <= 1);
  }
  SUBCASE("token totals conserved") {
    CHECK(sp.train.token_total() + sp.heldout.token_total() == c.token_total());
  }
  SUBCASE("tiny slice goes to train with a warning") {
    const auto c1 = toy_corpus(1, 2);
    const auto sp1 = split(c1, 0.5, 1);
    CHECK(sp1.unsplit_slices == 2);
    CHECK(sp1.train.doc_total() == 2);
    CHECK(sp1.heldout.doc_total() == 0);
  }
  SUBCASE("invalid ratio") {
    CHECK_THROWS(split(c, 0.0, 1));
    CHECK_THROWS(split(c, 1.0, 1));
  }
}

TEST_CASE("corpus directory round-trip preserves every count") {
  TempDir tmp;
  const auto c = toy_corpus(4, 3);
  save_corpus_dir(c, (tmp.path / "corpus").string());
  const auto r = load_corpus_dir((tmp.path / "corpus").string());
  REQUIRE(r.num_slices() == c.num_slices());
  CHECK(r.vocabulary == c.vocabulary);
  CHECK(r.slice_boundaries == c.slice_boundaries);
  for (std::uint32_t t = 0; t < c.num_slices(); ++t) {
    REQUIRE(r.slices[t].size() == c.slices[t].size());
    for (std::size_t d = 0; d < c.slices[t].size(); ++d) {
      CHECK(r.slices[t][d].id == c.slices[t][d].id);
      CHECK(r.slices[t][d].counts == c.slices[t][d].counts);
    }
  }
  CHECK(r.token_total() == c.token_total());
}

TEST_CASE("ingest accepts records shaped like the real datasets") {
  // id/timestamp/text with multi-year spans and numeric ids
  TempDir tmp;
  write_file(tmp.path / "in.jsonl",
             R"({"id":1987,"timestamp":557452800,"text":"learning networks"})"
             "\n"
             R"({"id":2017,"timestamp":1483228800,"text":"deep networks"})"
             "\n");
  const auto c = ingest((tmp.path / "in.jsonl").string(), IngestFormat::kJsonl, {});
  CHECK(c.doc_total() == 2);
  const auto s = slice(c, 2);
  CHECK(s.slices[0].size() == 1);
  CHECK(s.slices[1].size() == 1);
}
