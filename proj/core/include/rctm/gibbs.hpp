#pragma once

#include <stdexcept>
#include <string>

#include "rctm/model.hpp"

namespace rctm {

// Raised when a latent variable turns NaN/Inf; carries the iteration and the
// offending variable in the message. The CLI maps this to exit code 3.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  std::uint32_t max_iterations = 1000;
  std::uint32_t burn_in = 500;
  std::uint32_t thin = 2;
  std::uint64_t seed = 1;
  std::uint32_t checkpoint_every = 0;     // 0 = only at the end (if path set)
  std::uint32_t validate_every = 0;       // 0 = never
  std::string checkpoint_path;            // empty = no checkpoints
  std::string trace_path;                 // per-iteration CSV; empty = none
  bool quiet = true;

  void validate() const;
};

struct TrainResult {
  ModelState state;
  PosteriorSummary summary;
};

// Algorithm loop: init -> { slice sweeps (theta_bar, theta, x, births) ->
// dropout masks -> backward filter -> forward sampling -> prune ->
// diagnostics }. Samples after burn-in are retained every `thin` iterations;
// topic structure is frozen once burn-in ends so retained samples share
// positional topic identity. Deterministic given (corpus, hyper, config).
TrainResult train(const SlicedCorpus& corpus, const HyperParams& hyper, const TrainConfig& config);

// Joint data log-likelihood sum_{t,d,w} x_{tdw} * log sum_k theta_{dk} phi_{kw}.
double loglik(const ModelState& state);

}  // namespace rctm
