#include "rctm/proportions.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "rctm/distrib.hpp"

namespace rctm {

double affinity_prob(std::uint32_t row_zeros, std::uint32_t col_zeros, std::uint32_t num_docs,
                     double alpha, double eta0) {
  double log_p = 0.0;
  if (row_zeros > 0) {
    const double a = alpha * row_zeros;
    const double n = static_cast<double>(row_zeros);
    // log B(a+n, alpha) - log B(a, alpha)
    log_p += std::lgamma(a + n) - std::lgamma(a + n + alpha) - std::lgamma(a) +
             std::lgamma(a + alpha);
  }
  log_p += std::log(static_cast<double>(col_zeros) + eta0) -
           std::log(static_cast<double>(num_docs) - static_cast<double>(col_zeros) + eta0);
  return std::clamp(std::exp(log_p), 0.0, 1.0);
}

std::uint32_t sample_affinity(ModelState& state, std::uint32_t t, std::uint32_t d,
                              std::uint32_t k, RngStream& rng) {
  SliceState& sl = state.slices[t];
  const SliceAssign& as = state.assign[t];
  const std::uint32_t K = sl.K;
  const std::uint32_t D = as.D();
  if (as.x_dk[static_cast<std::size_t>(d) * K + k] > 0) return 1;

  std::uint32_t row_zeros = 0;
  for (std::uint32_t kk = 0; kk < K; ++kk)
    if (kk != k && !sl.theta_bar[static_cast<std::size_t>(d) * K + kk]) ++row_zeros;
  std::uint32_t col_zeros = 0;
  for (std::uint32_t dd = 0; dd < D; ++dd)
    if (dd != d && !sl.theta_bar[static_cast<std::size_t>(dd) * K + k]) ++col_zeros;

  const double p = affinity_prob(row_zeros, col_zeros, D, state.hyper.alpha, state.hyper.eta0);
  return bernoulli(p, rng);
}

void sample_theta(ModelState& state, std::uint32_t t, std::uint32_t d, RngStream& rng) {
  SliceState& sl = state.slices[t];
  const SliceAssign& as = state.assign[t];
  const std::uint32_t K = sl.K;
  std::vector<double> conc(K);
  bool any = false;
  for (std::uint32_t k = 0; k < K; ++k) {
    const std::size_t dk = static_cast<std::size_t>(d) * K + k;
    if (sl.theta_bar[dk]) {
      conc[k] = state.hyper.alpha + as.x_dk[dk];
      any = true;
    } else {
      conc[k] = 0.0;
    }
  }
  if (!any) throw std::logic_error("sample_theta: document has no active topic");
  dirichlet_into(conc, rng,
                 std::span<double>(sl.theta.data() + static_cast<std::size_t>(d) * K, K));
}

void sample_assignments(ModelState& state, std::uint32_t t, std::uint32_t d, RngStream& rng) {
  SliceState& sl = state.slices[t];
  SliceAssign& as = state.assign[t];
  DocAssign& da = as.docs[d];
  const std::uint32_t K = sl.K;
  const std::uint32_t V = state.V;

  std::vector<double> weights(K);
  std::vector<std::uint32_t> fresh(K);
  for (std::size_t i = 0; i < da.words.size(); ++i) {
    const std::uint32_t w = da.words[i];
    const std::uint32_t n = da.counts[i];
    std::uint32_t* row = da.x.data() + i * K;
    for (std::uint32_t k = 0; k < K; ++k) {
      const std::uint32_t c = row[k];
      if (c) {
        as.x_dk[static_cast<std::size_t>(d) * K + k] -= c;
        as.x_wk[static_cast<std::size_t>(w) * K + k] -= c;
        as.x_k[k] -= c;
      }
    }
    double total = 0.0;
    for (std::uint32_t k = 0; k < K; ++k) {
      const double wgt =
          sl.theta[static_cast<std::size_t>(d) * K + k] * sl.phi[static_cast<std::size_t>(k) * V + w];
      weights[k] = wgt;
      total += wgt;
    }
    if (total <= 0.0) {
      // unreachable while theta has an active topic and phi stays positive
      for (std::uint32_t k = 0; k < K; ++k)
        weights[k] = sl.theta_bar[static_cast<std::size_t>(d) * K + k] ? 1.0 : 0.0;
    }
    multinomial_weights_into(n, weights, rng, fresh);
    for (std::uint32_t k = 0; k < K; ++k) {
      row[k] = fresh[k];
      if (fresh[k]) {
        as.x_dk[static_cast<std::size_t>(d) * K + k] += fresh[k];
        as.x_wk[static_cast<std::size_t>(w) * K + k] += fresh[k];
        as.x_k[k] += fresh[k];
      }
    }
  }
}

namespace {

// Append one prior-initialized topic to slice t; the proposing document is
// its only activation.
void birth_topic(ModelState& state, std::uint32_t t, std::uint32_t proposer, RngStream& rng) {
  SliceState& sl = state.slices[t];
  SliceAssign& as = state.assign[t];
  const std::uint32_t V = state.V;
  const std::uint32_t Kold = sl.K;
  const std::uint32_t Knew = Kold + 1;
  const std::uint32_t D = as.D();

  // Phi row from the prior
  std::vector<double> row(V);
  if (t == 0) {
    std::vector<double> conc(V, state.hyper.eta);
    dirichlet_into(conc, rng, row);
    sl.phi.insert(sl.phi.end(), row.begin(), row.end());
  } else {
    const SliceState& prev = state.slices[t - 1];
    const std::uint32_t Kp = prev.K;
    std::vector<double> beta_col(Kp);
    for (std::uint32_t kp = 0; kp < Kp; ++kp)
      beta_col[kp] = gamma(prev.r[kp], 1.0 / sl.c, rng);
    std::vector<double> conc(V, 0.0);
    for (std::uint32_t kp = 0; kp < Kp; ++kp) {
      const double b = beta_col[kp];
      const double* prow = prev.phi.data() + static_cast<std::size_t>(kp) * V;
      for (std::uint32_t w = 0; w < V; ++w) conc[w] += b * prow[w];
    }
    dirichlet_into(conc, rng, row);
    sl.phi.insert(sl.phi.end(), row.begin(), row.end());
    // widen B_{t-1,t} from Kp x Kold to Kp x Knew
    std::vector<double> b2(static_cast<std::size_t>(Kp) * Knew);
    for (std::uint32_t kp = 0; kp < Kp; ++kp) {
      for (std::uint32_t k = 0; k < Kold; ++k)
        b2[static_cast<std::size_t>(kp) * Knew + k] = sl.b_prev[static_cast<std::size_t>(kp) * Kold + k];
      b2[static_cast<std::size_t>(kp) * Knew + Kold] = beta_col[kp];
    }
    sl.b_prev = std::move(b2);
  }

  const double r_new = gamma(state.hyper.r0 / Knew, 1.0 / state.c0, rng);
  sl.r.push_back(r_new);

  // outgoing coupling row and mask slot at slice t+1
  if (t + 1 < state.T) {
    SliceState& next = state.slices[t + 1];
    const std::uint32_t Kn = next.K;
    std::vector<double> b2(static_cast<std::size_t>(Knew) * Kn);
    for (std::uint32_t kp = 0; kp < Kold; ++kp)
      for (std::uint32_t k = 0; k < Kn; ++k)
        b2[static_cast<std::size_t>(kp) * Kn + k] = next.b_prev[static_cast<std::size_t>(kp) * Kn + k];
    for (std::uint32_t k = 0; k < Kn; ++k)
      b2[static_cast<std::size_t>(Kold) * Kn + k] = gamma(r_new, 1.0 / next.c, rng);
    next.b_prev = std::move(b2);
    if (state.hyper.mode == Mode::kRctmD)
      next.dropout_mask.push_back(
          static_cast<std::uint8_t>(bernoulli(state.hyper.rho, state.streams.dropout)));
  }

  // widen theta/theta_bar/assignment buffers
  auto widen_u8 = [&](std::vector<std::uint8_t>& m) {
    std::vector<std::uint8_t> m2(static_cast<std::size_t>(D) * Knew, 0);
    for (std::uint32_t d = 0; d < D; ++d)
      for (std::uint32_t k = 0; k < Kold; ++k)
        m2[static_cast<std::size_t>(d) * Knew + k] = m[static_cast<std::size_t>(d) * Kold + k];
    m = std::move(m2);
  };
  auto widen_f64 = [&](std::vector<double>& m) {
    std::vector<double> m2(static_cast<std::size_t>(D) * Knew, 0.0);
    for (std::uint32_t d = 0; d < D; ++d)
      for (std::uint32_t k = 0; k < Kold; ++k)
        m2[static_cast<std::size_t>(d) * Knew + k] = m[static_cast<std::size_t>(d) * Kold + k];
    m = std::move(m2);
  };
  widen_u8(sl.theta_bar);
  widen_f64(sl.theta);
  sl.theta_bar[static_cast<std::size_t>(proposer) * Knew + Kold] = 1;

  std::vector<std::uint32_t> xdk2(static_cast<std::size_t>(D) * Knew, 0);
  for (std::uint32_t d = 0; d < D; ++d)
    for (std::uint32_t k = 0; k < Kold; ++k)
      xdk2[static_cast<std::size_t>(d) * Knew + k] = as.x_dk[static_cast<std::size_t>(d) * Kold + k];
  as.x_dk = std::move(xdk2);
  std::vector<std::uint32_t> xwk2(static_cast<std::size_t>(V) * Knew, 0);
  for (std::uint32_t w = 0; w < V; ++w)
    for (std::uint32_t k = 0; k < Kold; ++k)
      xwk2[static_cast<std::size_t>(w) * Knew + k] = as.x_wk[static_cast<std::size_t>(w) * Kold + k];
  as.x_wk = std::move(xwk2);
  as.x_k.push_back(0);

  for (auto& da : as.docs) {
    const std::size_t nnz = da.words.size();
    std::vector<std::uint32_t> x2(nnz * Knew, 0);
    for (std::size_t i = 0; i < nnz; ++i)
      for (std::uint32_t k = 0; k < Kold; ++k) x2[i * Knew + k] = da.x[i * Kold + k];
    da.x = std::move(x2);
  }

  sl.K = Knew;

  // the proposer's theta gains the new support
  sample_theta(state, t, proposer, rng);
}

}  // namespace

void sweep_slice(ModelState& state, std::uint32_t t, bool allow_birth) {
  SliceState& sl = state.slices[t];
  SliceAssign& as = state.assign[t];
  const std::uint32_t D = as.D();
  RngStream& rng = state.streams.proportions;

  for (std::uint32_t d = 0; d < D; ++d) {
    const std::uint32_t K = sl.K;
    if (state.hyper.mode != Mode::kRctmF) {
      for (std::uint32_t k = 0; k < K; ++k) {
        const std::size_t dk = static_cast<std::size_t>(d) * K + k;
        sl.theta_bar[dk] = static_cast<std::uint8_t>(sample_affinity(state, t, d, k, rng));
      }
      // a document may never lose its last active topic (Eq. 5 needs support)
      bool any = false;
      for (std::uint32_t k = 0; k < K; ++k)
        if (sl.theta_bar[static_cast<std::size_t>(d) * K + k]) {
          any = true;
          break;
        }
      if (!any) {
        std::uint32_t best = 0;
        double best_p = -1.0;
        for (std::uint32_t k = 0; k < K; ++k) {
          std::uint32_t row_zeros = 0;
          for (std::uint32_t kk = 0; kk < K; ++kk)
            if (kk != k) ++row_zeros;
          std::uint32_t col_zeros = 0;
          for (std::uint32_t dd = 0; dd < D; ++dd)
            if (dd != d && !sl.theta_bar[static_cast<std::size_t>(dd) * K + k]) ++col_zeros;
          const double p = affinity_prob(row_zeros, col_zeros, D, state.hyper.alpha, state.hyper.eta0);
          if (p > best_p) {
            best_p = p;
            best = k;
          }
        }
        sl.theta_bar[static_cast<std::size_t>(d) * K + best] = 1;
      }
    }
    sample_theta(state, t, d, rng);
    sample_assignments(state, t, d, rng);
  }

  if (allow_birth && state.hyper.mode != Mode::kRctmF && state.hyper.eta0 > 0.0) {
    RngStream& brng = state.streams.birth;
    for (std::uint32_t d = 0; d < D; ++d) {
      const std::uint32_t births = poisson(state.hyper.eta0 / static_cast<double>(D), brng);
      for (std::uint32_t j = 0; j < births; ++j) birth_topic(state, t, d, brng);
    }
  }
}

void remove_topic(ModelState& state, std::uint32_t t, std::uint32_t k) {
  SliceState& sl = state.slices[t];
  SliceAssign& as = state.assign[t];
  const std::uint32_t Kold = sl.K;
  if (Kold <= 1) throw std::logic_error("remove_topic: cannot remove the last topic");
  const std::uint32_t Knew = Kold - 1;
  const std::uint32_t D = as.D();
  const std::uint32_t V = state.V;

  auto drop_col_f64 = [&](std::vector<double>& m, std::uint32_t rows) {
    std::vector<double> m2(static_cast<std::size_t>(rows) * Knew);
    for (std::uint32_t i = 0; i < rows; ++i)
      for (std::uint32_t kk = 0, j = 0; kk < Kold; ++kk)
        if (kk != k) m2[static_cast<std::size_t>(i) * Knew + j++] = m[static_cast<std::size_t>(i) * Kold + kk];
    m = std::move(m2);
  };
  auto drop_col_u8 = [&](std::vector<std::uint8_t>& m, std::uint32_t rows) {
    std::vector<std::uint8_t> m2(static_cast<std::size_t>(rows) * Knew);
    for (std::uint32_t i = 0; i < rows; ++i)
      for (std::uint32_t kk = 0, j = 0; kk < Kold; ++kk)
        if (kk != k) m2[static_cast<std::size_t>(i) * Knew + j++] = m[static_cast<std::size_t>(i) * Kold + kk];
    m = std::move(m2);
  };
  auto drop_col_u32 = [&](std::vector<std::uint32_t>& m, std::uint32_t rows) {
    std::vector<std::uint32_t> m2(static_cast<std::size_t>(rows) * Knew);
    for (std::uint32_t i = 0; i < rows; ++i)
      for (std::uint32_t kk = 0, j = 0; kk < Kold; ++kk)
        if (kk != k) m2[static_cast<std::size_t>(i) * Knew + j++] = m[static_cast<std::size_t>(i) * Kold + kk];
    m = std::move(m2);
  };

  sl.phi.erase(sl.phi.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(k) * V),
               sl.phi.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(k + 1) * V));
  sl.r.erase(sl.r.begin() + k);
  drop_col_u8(sl.theta_bar, D);
  drop_col_f64(sl.theta, D);
  drop_col_u32(as.x_dk, D);
  drop_col_u32(as.x_wk, V);
  as.x_k.erase(as.x_k.begin() + k);
  for (auto& da : as.docs) drop_col_u32(da.x, static_cast<std::uint32_t>(da.words.size()));

  if (t > 0 && !sl.b_prev.empty()) {
    const std::uint32_t Kp = state.slices[t - 1].K;
    drop_col_f64(sl.b_prev, Kp);  // incoming column
  }
  if (t + 1 < state.T) {
    SliceState& next = state.slices[t + 1];
    const std::uint32_t Kn = next.K;
    // outgoing row k of B_{t,t+1}
    next.b_prev.erase(
        next.b_prev.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(k) * Kn),
        next.b_prev.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(k + 1) * Kn));
    if (!next.dropout_mask.empty()) next.dropout_mask.erase(next.dropout_mask.begin() + k);
  }
  sl.K = Knew;

  // Dropping a Dirichlet coordinate and renormalizing leaves a Dirichlet on
  // the remaining support, so theta rows can be rescaled in place. Documents
  // whose only active topic was removed get re-anchored (defensive; a doc's
  // token-bearing topics are never pruned).
  for (std::uint32_t d = 0; d < D; ++d) {
    double sum = 0.0;
    for (std::uint32_t kk = 0; kk < Knew; ++kk)
      sum += sl.theta[static_cast<std::size_t>(d) * Knew + kk];
    if (sum > 0.0) {
      for (std::uint32_t kk = 0; kk < Knew; ++kk)
        sl.theta[static_cast<std::size_t>(d) * Knew + kk] /= sum;
    } else {
      std::uint32_t best = 0;
      std::uint32_t best_x = 0;
      for (std::uint32_t kk = 0; kk < Knew; ++kk) {
        const std::uint32_t c = as.x_dk[static_cast<std::size_t>(d) * Knew + kk];
        if (c >= best_x) {
          best_x = c;
          best = kk;
        }
      }
      sl.theta_bar[static_cast<std::size_t>(d) * Knew + best] = 1;
      sample_theta(state, t, d, state.streams.proportions);
    }
  }
}

void prune_dead_topics(ModelState& state, const FilterCache& cache) {
  if (state.hyper.mode == Mode::kRctmF) return;
  for (std::uint32_t t = 0; t < state.T; ++t) {
    const std::uint32_t K0 = state.slices[t].K;  // stride of cache.z[t]
    const SliceAssign& as = state.assign[t];
    std::vector<std::uint32_t> dead;
    for (std::uint32_t k = 0; k < K0; ++k) {
      if (as.x_k[k] != 0) continue;
      std::uint64_t zmass = 0;
      if (t + 1 < state.T && t < cache.z.size() && !cache.z[t].empty()) {
        for (std::uint32_t w = 0; w < state.V; ++w)
          zmass += cache.z[t][static_cast<std::size_t>(w) * K0 + k];
      }
      if (zmass == 0) dead.push_back(k);
    }
    for (auto it = dead.rbegin(); it != dead.rend(); ++it) {
      if (state.slices[t].K <= 1) break;
      remove_topic(state, t, *it);
    }
  }
}

}  // namespace rctm
