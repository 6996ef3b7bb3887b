#pragma once

#include <cstdint>
#include <vector>

#include "rctm/corpus.hpp"
#include "rctm/model.hpp"

namespace rctm {

// Held-out evaluation over a frozen PosteriorSummary: per-word perplexity,
// NPMI topic coherence, document time-stamp prediction.

struct FoldInConfig {
  std::uint32_t sweeps = 50;  // theta averaged over the last half
  double alpha = 0.1;
  std::uint64_t seed = 1;
};

// Gibbs sweeps of the proportion/assignment updates on one document with
// the slice-t topics frozen and an all-active support. Deterministic per
// (seed, slice, doc index).
std::vector<double> fold_in(const Document& doc, std::uint32_t t, const PosteriorSummary& summary,
                            const FoldInConfig& config, std::uint32_t doc_index);

// exp(- sum x log(sum_k theta phi) / sum x) over all held-out tokens; theta
// from fold-in at the document's own slice. `workers` > 1 parallelizes over
// documents (per-document streams keep the result order-independent).
double perplexity(const SlicedCorpus& heldout, const PosteriorSummary& summary,
                  const FoldInConfig& config, std::uint32_t workers = 1);

struct CoherenceResult {
  std::vector<double> per_topic;  // topic-major over all slices
  double average = 0.0;
  std::uint32_t skipped_pairs = 0;  // pairs with a word absent from the reference
};

// Mean pairwise normalized PMI over the top-k words of every topic of every
// slice. Word and pair probabilities are document frequencies in the
// reference corpus (slices pooled).
CoherenceResult coherence_npmi(const PosteriorSummary& summary, const SlicedCorpus& reference,
                               std::uint32_t top_k = 10, double epsilon = 1e-12);

// Most likely slice for the document: argmax over t of the fold-in
// log-likelihood under slice-t topics; ties break to the earliest slice.
std::uint32_t predict_timestamp(const Document& doc, const PosteriorSummary& summary,
                                const FoldInConfig& config, std::uint32_t doc_index);

// Fraction of held-out documents whose predicted slice equals their actual
// slice.
double timestamp_accuracy(const SlicedCorpus& heldout, const PosteriorSummary& summary,
                          const FoldInConfig& config, std::uint32_t workers = 1);

// Indices of the n largest entries of a topic row, descending (ties by
// lower word index).
std::vector<std::uint32_t> top_words(const std::vector<double>& phi, std::uint32_t K,
                                     std::uint32_t V, std::uint32_t k, std::uint32_t n);

}  // namespace rctm
