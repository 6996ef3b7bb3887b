#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rctm/corpus.hpp"
#include "rctm/model.hpp"

namespace rctm {

// Ground truth behind a generated corpus: topics per slice, coupling
// matrices per transition, proportions per document.
struct GroundTruth {
  std::uint32_t V = 0;
  std::uint32_t K = 0;
  std::uint32_t T = 0;
  std::uint32_t doc_length = 0;
  std::vector<std::vector<double>> phi;    // per slice: K x V
  std::vector<std::vector<double>> b;      // per slice t>=1: K x K (index 0 empty)
  std::vector<std::vector<double>> theta;  // per slice: D x K
};

struct SynthConfig {
  std::uint32_t docs_per_slice = 1000;
  std::uint32_t vocab = 1000;
  std::uint32_t topics = 10;
  std::uint32_t slices = 3;
  std::uint32_t doc_length = 100;
  double eta = 0.1;
  double alpha = 0.1;
  std::uint64_t seed = 1;
  // Coupling matrices, one K x K row-major matrix per transition (size
  // slices-1). Drawn from the model's Gamma priors when absent.
  std::optional<std::vector<std::vector<double>>> coupling;
};

struct SynthResult {
  SlicedCorpus corpus;
  GroundTruth truth;
};

// Slice-1 topics from Dir(eta); later slices evolve through the coupled
// Dirichlet chain; documents draw theta from Dir(alpha 1_K) and tokens from
// the mixture. Deterministic per seed.
SynthResult generate(const SynthConfig& config);

struct RecoveryScore {
  std::vector<std::vector<int>> alignment;       // per slice: true k -> estimated k (or -1)
  std::vector<std::vector<double>> topic_cosine; // per slice: cosine of each aligned pair
  double correlation = 0.0;      // Pearson over column-normalized coupling entries
  double correlation_raw = 0.0;  // Pearson over raw coupling entries
  double l1_error = 0.0;         // sum |true - est| over column-normalized entries
};

// Aligns estimated topics to the truth per slice by maximum-weight matching
// on Phi-row cosine similarity, permutes the coupling matrices accordingly
// and compares them column-normalized (and raw) across all transitions.
// Extra estimated topics are matched to none.
RecoveryScore score_recovery(const GroundTruth& truth, const PosteriorSummary& summary);

void save_truth_json(const GroundTruth& truth, const std::string& path);
GroundTruth load_truth_json(const std::string& path);

}  // namespace rctm
