#include "rctm/gibbs.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "rctm/chain.hpp"
#include "rctm/proportions.hpp"

namespace rctm {

void TrainConfig::validate() const {
  if (max_iterations < 1) throw std::invalid_argument("config: max_iterations must be >= 1");
  if (burn_in >= max_iterations) throw std::invalid_argument("config: burn_in < max_iterations required");
  if (thin < 1) throw std::invalid_argument("config: thin must be >= 1");
}

double loglik(const ModelState& s) {
  double ll = 0.0;
  for (std::uint32_t t = 0; t < s.T; ++t) {
    const SliceState& sl = s.slices[t];
    const SliceAssign& as = s.assign[t];
    const std::uint32_t K = sl.K;
    for (std::uint32_t d = 0; d < as.D(); ++d) {
      const DocAssign& da = as.docs[d];
      const double* theta = sl.theta.data() + static_cast<std::size_t>(d) * K;
      for (std::size_t i = 0; i < da.words.size(); ++i) {
        const std::uint32_t w = da.words[i];
        double p = 0.0;
        for (std::uint32_t k = 0; k < K; ++k)
          p += theta[k] * sl.phi[static_cast<std::size_t>(k) * s.V + w];
        ll += static_cast<double>(da.counts[i]) * std::log(p);
      }
    }
  }
  return ll;
}

namespace {

void check_finite(const ModelState& s, double ll, std::uint32_t iter) {
  auto bad = [&](const char* what) {
    throw NumericError("non-finite " + std::string(what) + " at iteration " +
                       std::to_string(iter));
  };
  if (!std::isfinite(ll)) bad("log-likelihood");
  if (!std::isfinite(s.c0) || s.c0 <= 0.0) bad("c0");
  for (std::uint32_t t = 0; t < s.T; ++t) {
    const SliceState& sl = s.slices[t];
    if (!std::isfinite(sl.c) || sl.c <= 0.0) bad("c_t");
    double rs = 0.0, bs = 0.0;
    for (double r : sl.r) rs += r;
    for (double b : sl.b_prev) bs += b;
    if (!std::isfinite(rs)) bad("r");
    if (!std::isfinite(bs)) bad("beta");
  }
}

struct Accumulator {
  std::vector<std::vector<double>> phi, b, theta;
  std::uint32_t n = 0;

  void add(const ModelState& s) {
    if (n == 0) {
      phi.resize(s.T);
      b.resize(s.T);
      theta.resize(s.T);
      for (std::uint32_t t = 0; t < s.T; ++t) {
        phi[t].assign(s.slices[t].phi.size(), 0.0);
        b[t].assign(s.slices[t].b_prev.size(), 0.0);
        theta[t].assign(s.slices[t].theta.size(), 0.0);
      }
    }
    for (std::uint32_t t = 0; t < s.T; ++t) {
      if (phi[t].size() != s.slices[t].phi.size())
        throw std::logic_error("posterior averaging requires a frozen topic structure");
      for (std::size_t i = 0; i < phi[t].size(); ++i) phi[t][i] += s.slices[t].phi[i];
      for (std::size_t i = 0; i < b[t].size(); ++i) b[t][i] += s.slices[t].b_prev[i];
      for (std::size_t i = 0; i < theta[t].size(); ++i) theta[t][i] += s.slices[t].theta[i];
    }
    ++n;
  }

  void finalize(PosteriorSummary& out) const {
    out.retained = n;
    out.mean_phi = phi;
    out.mean_b = b;
    out.mean_theta = theta;
    if (n == 0) return;
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& m : out.mean_phi)
      for (auto& v : m) v *= inv;
    for (auto& m : out.mean_b)
      for (auto& v : m) v *= inv;
    for (auto& m : out.mean_theta)
      for (auto& v : m) v *= inv;
  }
};

}  // namespace

TrainResult train(const SlicedCorpus& corpus, const HyperParams& hyper,
                  const TrainConfig& config) {
  config.validate();
  TrainResult result;
  result.state = init_model(corpus, hyper, config.seed);
  ModelState& s = result.state;

  std::ofstream trace;
  if (!config.trace_path.empty()) {
    trace.open(config.trace_path);
    if (!trace) throw std::runtime_error("cannot open trace file: " + config.trace_path);
    trace << "iter,loglik";
    for (std::uint32_t t = 0; t < s.T; ++t) trace << ",K_" << (t + 1);
    trace << ",elapsed_ms\n";
  }

  Accumulator acc;
  PosteriorSummary& sum = result.summary;
  sum.V = s.V;
  sum.T = s.T;

  const auto t0 = std::chrono::steady_clock::now();
  for (std::uint32_t iter = 1; iter <= config.max_iterations; ++iter) {
    // births happen while burning in; afterwards the structure is frozen so
    // retained samples keep positional topic identity
    const bool structural = iter <= config.burn_in;
    for (std::uint32_t t = 0; t < s.T; ++t) sweep_slice(s, t, structural);
    resample_dropout_masks(s);
    const FilterCache cache = backward_filter(s);
    forward_sample(s, cache);
    if (structural) prune_dead_topics(s, cache);
    s.iteration = iter;

    const double ll = loglik(s);
    check_finite(s, ll, iter);
    sum.loglik_trace.push_back(ll);
    std::vector<std::uint32_t> ks(s.T);
    for (std::uint32_t t = 0; t < s.T; ++t) ks[t] = s.K(t);
    sum.k_trace.push_back(ks);

    if (iter > config.burn_in && (iter - config.burn_in) % config.thin == 0) acc.add(s);

    if (config.validate_every && iter % config.validate_every == 0) validate(s);

    if (trace.is_open()) {
      const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
      trace << iter << ',' << ll;
      for (std::uint32_t t = 0; t < s.T; ++t) trace << ',' << s.K(t);
      trace << ',' << ms << '\n';
    }
    if (!config.quiet && (iter % 100 == 0 || iter == config.max_iterations)) {
      double bsum = 0.0;
      std::size_t bn = 0;
      for (std::uint32_t t = 1; t < s.T; ++t) {
        for (double b : s.slices[t].b_prev) bsum += b;
        bn += s.slices[t].b_prev.size();
      }
      std::fprintf(stderr, "iter %u  loglik %.3f  K", iter, ll);
      for (std::uint32_t t = 0; t < s.T; ++t) std::fprintf(stderr, " %u", s.K(t));
      std::fprintf(stderr, "  mean_beta %.4f  c_T %.4f\n", bn ? bsum / static_cast<double>(bn) : 0.0,
                   s.slices[s.T - 1].c);
    }
    if (config.checkpoint_every && !config.checkpoint_path.empty() &&
        iter % config.checkpoint_every == 0 && iter != config.max_iterations) {
      save_checkpoint(s, nullptr, config.checkpoint_path);
    }
  }

  sum.slice_K.resize(s.T);
  for (std::uint32_t t = 0; t < s.T; ++t) sum.slice_K[t] = s.K(t);
  acc.finalize(sum);
  if (sum.retained == 0) {
    // degenerate configs (tiny runs) fall back to the final state
    sum.retained = 1;
    sum.mean_phi.resize(s.T);
    sum.mean_b.resize(s.T);
    sum.mean_theta.resize(s.T);
    for (std::uint32_t t = 0; t < s.T; ++t) {
      sum.mean_phi[t] = s.slices[t].phi;
      sum.mean_b[t] = s.slices[t].b_prev;
      sum.mean_theta[t] = s.slices[t].theta;
    }
  }

  if (!config.checkpoint_path.empty()) save_checkpoint(s, &sum, config.checkpoint_path);
  return result;
}

}  // namespace rctm
