#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rctm {

// Bag-of-words document: sparse (word index, count) pairs over a shared
// vocabulary, plus an integer epoch-seconds timestamp.
struct Document {
  std::string id;
  std::int64_t timestamp = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> counts;  // (word, count), word < V

  std::uint64_t token_total() const;
};

// Documents partitioned into T chronologically ordered, disjoint time slices.
struct SlicedCorpus {
  std::vector<std::string> vocabulary;
  std::vector<std::vector<Document>> slices;
  std::vector<std::int64_t> slice_boundaries;  // T+1 edges; slice t covers [b_t, b_{t+1})

  std::uint32_t vocab_size() const { return static_cast<std::uint32_t>(vocabulary.size()); }
  std::uint32_t num_slices() const { return static_cast<std::uint32_t>(slices.size()); }
  std::uint64_t token_total() const;
  std::size_t doc_total() const;
};

struct SplitCorpus {
  SlicedCorpus train;
  SlicedCorpus heldout;
  double ratio = 0.0;                // train fraction p
  std::uint32_t unsplit_slices = 0;  // slices too small to split (all went to train)
};

struct PreprocessOptions {
  std::string stopword_path;     // optional; one term per line
  std::uint32_t min_df = 1;      // keep terms appearing in >= min_df documents
  double max_df = 1.0;           // keep terms appearing in <= max_df fraction of documents
  bool lowercase = true;
};

enum class IngestFormat { kJsonl, kTsv };

struct IngestReport {
  std::uint32_t dropped_empty_docs = 0;  // emptied by stopword/df filtering
  std::uint32_t raw_terms = 0;           // vocabulary size before df filtering
};

// Reads id/timestamp/text records, tokenizes, builds the vocabulary and
// returns a single-slice corpus spanning the full time range (use slice()
// to re-partition). Throws std::runtime_error with the offending line
// number on malformed records, and when no document survives filtering.
SlicedCorpus ingest(const std::string& path, IngestFormat format,
                    const PreprocessOptions& options, IngestReport* report = nullptr);

// Re-partitions all documents of `corpus` into T equidistant slices between
// the min and max timestamp. Slices may be empty. Throws if T > 1 and all
// timestamps coincide.
SlicedCorpus slice(const SlicedCorpus& corpus, std::uint32_t T);

// Equidistant slices of fixed duration (seconds); T derived from the range.
SlicedCorpus slice_by_duration(const SlicedCorpus& corpus, std::int64_t duration);

// Deterministic per-slice split: ~p of each slice to train, rest held out.
// Slices with fewer than 2 documents go entirely to train.
SplitCorpus split(const SlicedCorpus& corpus, double p, std::uint64_t seed);

// Directory form: vocab.txt, meta.json (slice boundaries), slices/<t>.jsonl
// of {"id", "counts": [[word, count], ...]}.
void save_corpus_dir(const SlicedCorpus& corpus, const std::string& dir);
SlicedCorpus load_corpus_dir(const std::string& dir);

}  // namespace rctm
