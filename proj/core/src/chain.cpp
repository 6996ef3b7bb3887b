#include "rctm/chain.hpp"

#include <cmath>
#include <vector>

#include "rctm/distrib.hpp"

namespace rctm {

void resample_dropout_masks(ModelState& state) {
  if (state.hyper.mode != Mode::kRctmD) return;
  RngStream& rng = state.streams.dropout;
  for (std::uint32_t t = 1; t < state.T; ++t) {
    SliceState& sl = state.slices[t];
    const std::uint32_t Kp = state.slices[t - 1].K;
    sl.dropout_mask.resize(Kp);
    for (std::uint32_t kp = 0; kp < Kp; ++kp)
      sl.dropout_mask[kp] = static_cast<std::uint8_t>(bernoulli(state.hyper.rho, rng));
  }
}

namespace {

inline double masked_beta(const SliceState& sl, std::uint32_t kp, std::uint32_t k) {
  const double b = sl.b_prev[static_cast<std::size_t>(kp) * sl.K + k];
  if (!sl.dropout_mask.empty() && sl.dropout_mask[kp]) return 0.0;
  return b;
}

}  // namespace

FilterCache backward_filter(ModelState& state) {
  const std::uint32_t T = state.T;
  const std::uint32_t V = state.V;
  FilterCache cache;
  cache.z.resize(T);
  cache.trans.resize(T);
  for (std::uint32_t t = 0; t < T; ++t)
    cache.z[t].assign(static_cast<std::size_t>(V) * state.K(t), 0);
  if (T < 2) return cache;

  RngStream& rng = state.streams.filter;
  for (std::uint32_t t = T - 1; t >= 1; --t) {
    SliceState& sl = state.slices[t];
    const SliceState& prev = state.slices[t - 1];
    const SliceAssign& as = state.assign[t];
    const std::uint32_t K = sl.K;
    const std::uint32_t Kp = prev.K;
    TransitionCache& tc = cache.trans[t];
    tc.xi.assign(K, 0.0);
    tc.y_wk.assign(static_cast<std::size_t>(V) * K, 0);
    tc.y_split.assign(static_cast<std::size_t>(V) * K * Kp, 0);
    tc.y_agg.assign(static_cast<std::size_t>(K) * Kp, 0);
    tc.fallback.assign(K, 0);

    std::vector<double> psi_w(V);
    std::vector<double> split_w(Kp);
    std::vector<std::uint32_t> split_c(Kp);
    const std::vector<std::uint32_t>& z_in = cache.z[t];  // from slice t+1 (zeros at t = T-1)
    std::vector<std::uint32_t>& z_out = cache.z[t - 1];

    for (std::uint32_t k = 0; k < K; ++k) {
      double psi_total = 0.0;
      for (std::uint32_t kp = 0; kp < Kp; ++kp) psi_total += masked_beta(sl, kp, k);
      if (psi_total <= 0.0) {
        tc.fallback[k] = 1;  // all couplings dropped; nothing can propagate
        continue;
      }
      for (std::uint32_t w = 0; w < V; ++w) {
        double p = 0.0;
        for (std::uint32_t kp = 0; kp < Kp; ++kp)
          p += masked_beta(sl, kp, k) * prev.phi[static_cast<std::size_t>(kp) * V + w];
        psi_w[w] = p;
      }

      // evidence at slice t is the document counts plus the propagated ones
      std::uint64_t xtilde_total = as.x_k[k];
      for (std::uint32_t w = 0; w < V; ++w)
        xtilde_total += z_in[static_cast<std::size_t>(w) * K + k];

      const double shape = xtilde_total > 0 ? static_cast<double>(xtilde_total) : kXiShapeFloor;
      tc.xi[k] = beta(shape, psi_total, rng);
      if (xtilde_total == 0) continue;

      for (std::uint32_t w = 0; w < V; ++w) {
        const std::uint64_t xtilde = as.x_wk[static_cast<std::size_t>(w) * K + k] +
                                     z_in[static_cast<std::size_t>(w) * K + k];
        if (xtilde == 0 || psi_w[w] <= 0.0) continue;
        const std::uint32_t y = crt(xtilde, psi_w[w], rng);
        tc.y_wk[static_cast<std::size_t>(w) * K + k] = y;
        if (y == 0) continue;
        for (std::uint32_t kp = 0; kp < Kp; ++kp)
          split_w[kp] = masked_beta(sl, kp, k) * prev.phi[static_cast<std::size_t>(kp) * V + w];
        multinomial_weights_into(y, split_w, rng, split_c);
        for (std::uint32_t kp = 0; kp < Kp; ++kp) {
          const std::uint32_t c = split_c[kp];
          if (!c) continue;
          tc.y_split[(static_cast<std::size_t>(w) * K + k) * Kp + kp] = c;
          tc.y_agg[static_cast<std::size_t>(k) * Kp + kp] += c;
          z_out[static_cast<std::size_t>(w) * Kp + kp] += c;
        }
      }
    }
  }
  return cache;
}

void forward_sample(ModelState& state, const FilterCache& cache) {
  const std::uint32_t T = state.T;
  const std::uint32_t V = state.V;
  const HyperParams& h = state.hyper;
  RngStream& rng = state.streams.forward;

  static const std::vector<std::uint32_t> kNoZ;
  static const TransitionCache kNoTrans;

  std::vector<double> conc(V);
  for (std::uint32_t t = 0; t < T; ++t) {
    SliceState& sl = state.slices[t];
    const SliceAssign& as = state.assign[t];
    const std::uint32_t K = sl.K;
    const std::vector<std::uint32_t>& z = t < cache.z.size() ? cache.z[t] : kNoZ;
    const bool has_z = !z.empty();

    // Phi
    for (std::uint32_t k = 0; k < K; ++k) {
      bool fallback = t == 0;
      if (t > 0) {
        const SliceState& prev = state.slices[t - 1];
        const std::uint32_t Kp = prev.K;
        double psi_total = 0.0;
        for (std::uint32_t kp = 0; kp < Kp; ++kp) psi_total += masked_beta(sl, kp, k);
        if (psi_total > 0.0) {
          for (std::uint32_t w = 0; w < V; ++w) conc[w] = 0.0;
          for (std::uint32_t kp = 0; kp < Kp; ++kp) {
            const double b = masked_beta(sl, kp, k);
            if (b <= 0.0) continue;
            const double* prow = prev.phi.data() + static_cast<std::size_t>(kp) * V;
            for (std::uint32_t w = 0; w < V; ++w) conc[w] += b * prow[w];
          }
        } else {
          fallback = true;
        }
      }
      if (fallback)
        for (std::uint32_t w = 0; w < V; ++w) conc[w] = h.eta;
      for (std::uint32_t w = 0; w < V; ++w) {
        conc[w] += as.x_wk[static_cast<std::size_t>(w) * K + k];
        if (has_z) conc[w] += z[static_cast<std::size_t>(w) * K + k];
      }
      dirichlet_into(conc, rng,
                     std::span<double>(sl.phi.data() + static_cast<std::size_t>(k) * V, V));
    }

    if (t == 0) continue;

    const SliceState& prev = state.slices[t - 1];
    const std::uint32_t Kp = prev.K;
    const TransitionCache& tc = t < cache.trans.size() ? cache.trans[t] : kNoTrans;
    const bool have_aux = !tc.xi.empty();

    // B
    for (std::uint32_t k = 0; k < K; ++k) {
      const bool dropped_all = have_aux && tc.fallback[k];
      if (dropped_all) continue;  // likelihood absent; keep the column this iteration
      const double xi = have_aux ? tc.xi[k] : 0.0;
      const double rate = sl.c - std::log1p(-xi);
      for (std::uint32_t kp = 0; kp < Kp; ++kp) {
        const bool dropped = !sl.dropout_mask.empty() && sl.dropout_mask[kp];
        double& b = sl.b_prev[static_cast<std::size_t>(kp) * K + k];
        if (dropped) {
          b = gamma(state.slices[t - 1].r[kp], 1.0 / sl.c, rng);  // prior refresh
        } else {
          const double y = have_aux ? static_cast<double>(tc.y_agg[static_cast<std::size_t>(k) * Kp + kp]) : 0.0;
          b = gamma(y + prev.r[kp], 1.0 / rate, rng);
        }
      }
    }

    // r at slice t-1 (Lemma-4 update, as printed)
    double M = 0.0;
    if (have_aux)
      for (std::uint32_t k = 0; k < K; ++k) M += -std::log1p(-tc.xi[k]);
    const double p = M / (M + state.c0);
    const double r_rate = state.c0 - std::log1p(-p);
    for (std::uint32_t kp = 0; kp < Kp; ++kp) {
      std::uint64_t ysum = 0;
      if (have_aux)
        for (std::uint32_t k = 0; k < K; ++k) ysum += tc.y_agg[static_cast<std::size_t>(k) * Kp + kp];
      const std::uint32_t ell = ysum > 0 ? crt(ysum, state.slices[t - 1].r[kp], rng) : 0;
      state.slices[t - 1].r[kp] = gamma(h.r0 / Kp + ell, 1.0 / r_rate, rng);
    }

    // c_t
    double r_sum = 0.0;
    for (std::uint32_t kp = 0; kp < Kp; ++kp) r_sum += state.slices[t - 1].r[kp];
    double b_sum = 0.0;
    for (double b : sl.b_prev) b_sum += b;
    sl.c = gamma(h.e0 + r_sum, 1.0 / (b_sum + h.d0), rng);
  }

  // c0, once per iteration, conditioning on every r that feeds a transition
  double shape = h.a0;
  double rate = h.b0;
  for (std::uint32_t t = 0; t + 1 < T; ++t) {
    const std::uint32_t K = state.K(t);
    shape += h.r0;  // K_t * (r0 / K_t)
    for (std::uint32_t k = 0; k < K; ++k) rate += state.slices[t].r[k];
  }
  state.c0 = gamma(shape, 1.0 / rate, rng);
}

}  // namespace rctm
