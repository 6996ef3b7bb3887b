#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rctm/corpus.hpp"
#include "rctm/rng.hpp"

namespace rctm {

enum class Mode : std::uint32_t { kRctm = 0, kRctmD = 1, kRctmF = 2 };

const char* mode_name(Mode m);
std::optional<Mode> mode_from_name(const std::string& name);

struct HyperParams {
  double eta0 = 0.1;   // IBP mass
  double alpha = 0.1;  // Dirichlet proportion weight
  double eta = 0.1;    // slice-1 topic smoothing
  double a0 = 1.0;     // c0 ~ Gam(a0, 1/b0)
  double b0 = 1.0;
  double e0 = 1.0;     // c_t ~ Gam(e0, 1/d0)
  double d0 = 10.0;
  double r0 = 1.0;     // r_k ~ Gam(r0/K, 1/c0)
  double rho = 0.0;    // dropout probability (rctm_d)
  Mode mode = Mode::kRctm;
  std::uint32_t k_fixed = 10;  // rctm_f
  std::uint32_t k_init = 20;   // starting K for the nonparametric modes

  void validate() const;  // throws std::invalid_argument
};

// Per-slice latent block. Matrices are stored flat, row-major:
//   phi[k*V + w], theta[d*K + k], theta_bar[d*K + k], b_prev[kp*K + k].
struct SliceState {
  std::uint32_t K = 0;
  std::vector<double> phi;           // K x V, rows on the simplex
  std::vector<std::uint8_t> theta_bar;  // D x K
  std::vector<double> theta;         // D x K, zero off the theta_bar support
  std::vector<double> r;             // K
  double c = 1.0;                    // c_t (used for t >= 2)
  std::vector<double> b_prev;        // K_prev x K coupling matrix; empty at t = 1
  std::vector<std::uint8_t> dropout_mask;  // K_prev; rctm_d only, empty otherwise
};

// Token-to-topic assignment counts for one document: words/counts mirror the
// corpus document; x holds the per-topic split of each word's count
// (x[i*K + k], aligned with words[i]).
struct DocAssign {
  std::vector<std::uint32_t> words;
  std::vector<std::uint32_t> counts;
  std::vector<std::uint32_t> x;
};

struct SliceAssign {
  std::vector<DocAssign> docs;
  std::vector<std::uint32_t> x_dk;  // D x K
  std::vector<std::uint32_t> x_wk;  // V x K
  std::vector<std::uint64_t> x_k;   // K

  std::uint32_t D() const { return static_cast<std::uint32_t>(docs.size()); }
};

// Backward-filter output, 0-based slice indices. trans[t] (for t = 1..T-1)
// carries the auxiliaries of the step propagating slice t's counts back into
// slice t-1; z[t] is the count matrix propagated into slice t from slice
// t+1 (z[T-1] stays all-zero: no counts arrive at the last slice).
struct TransitionCache {
  std::vector<double> xi;              // K_t
  std::vector<std::uint32_t> y_wk;     // V x K_t
  std::vector<std::uint32_t> y_split;  // V x K_t x K_prev; [w][k][kp]
  std::vector<std::uint64_t> y_agg;    // K_t x K_prev
  std::vector<std::uint8_t> fallback;  // K_t; psi mass was zero, topic skipped
};

struct FilterCache {
  std::vector<TransitionCache> trans;         // index t in 1..T-1 (0 unused)
  std::vector<std::vector<std::uint32_t>> z;  // per slice 0..T-1: V x K_t

  bool empty() const { return trans.size() <= 1; }
};

struct Streams {
  RngStream init;
  RngStream proportions;
  RngStream birth;
  RngStream filter;
  RngStream forward;
  RngStream dropout;
};

struct ModelState {
  HyperParams hyper;
  std::uint64_t seed = 0;
  std::uint32_t iteration = 0;
  std::uint32_t V = 0;
  std::uint32_t T = 0;
  double c0 = 1.0;
  std::vector<std::string> vocab;
  std::vector<std::int64_t> boundaries;
  std::vector<SliceState> slices;   // size T
  std::vector<SliceAssign> assign;  // size T
  Streams streams;

  std::uint32_t K(std::uint32_t t) const { return slices[t].K; }
};

// Summary of the retained post-burn-in samples.
struct PosteriorSummary {
  std::uint32_t V = 0;
  std::uint32_t T = 0;
  std::vector<std::vector<double>> mean_phi;    // per slice: K x V
  std::vector<std::vector<double>> mean_b;      // per slice t>=2: K_prev x K (index 0 empty)
  std::vector<std::vector<double>> mean_theta;  // per slice: D x K
  std::vector<std::uint32_t> slice_K;           // K per slice at summary time
  std::vector<std::vector<std::uint32_t>> k_trace;  // per iteration: K_1..K_T
  std::vector<double> loglik_trace;
  std::uint32_t retained = 0;
};

// Random assignment of every token among K_init topics, priors for Phi / B /
// r / c, theta_bar from realized counts. Throws on an empty training slice.
ModelState init_model(const SlicedCorpus& corpus, const HyperParams& hyper, std::uint64_t seed);

// Checks every structural invariant (simplex rows, support consistency,
// marginal/tensor agreement, dimension matching, positivity). Throws
// std::logic_error naming the first violation.
void validate(const ModelState& state);

// Single binary checkpoint, versioned header "RCTM1", little-endian scalars;
// embeds hyperparameters, seed, vocabulary and RNG positions so that
// evaluation is self-contained. A human-readable state.json lands next to
// it. `summary` is optional.
void save_checkpoint(const ModelState& state, const PosteriorSummary* summary,
                     const std::string& path);
ModelState load_checkpoint(const std::string& path, PosteriorSummary* summary = nullptr);

void write_state_json(const ModelState& state, const std::string& path);

bool states_equal_core(const ModelState& a, const ModelState& b);  // latents only, ignores mode/rng

}  // namespace rctm
