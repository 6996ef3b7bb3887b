#pragma once

#include <cstdint>

#include "rctm/model.hpp"

namespace rctm {

// IBP-compound topic-proportion component: affinity matrix theta_bar, topic
// proportions theta, token-topic assignments, and topic birth.

// Activation probability for theta_bar_{dk} when x_{d.k} = 0, marginalizing
// theta and pi_k. Evaluated in log space from the beta-function ratio
//   B(alpha*n0 + n0, alpha) / B(alpha*n0, alpha) * (z_k + eta0) / (D - z_k + eta0)
// with n0 the zero count of d's row and z_k the zero count of k's column,
// both leave-one-out (entry (d,k) set aside). Clamped to [0,1].
double affinity_prob(std::uint32_t row_zeros, std::uint32_t col_zeros, std::uint32_t num_docs,
                     double alpha, double eta0);

// One Gibbs draw of theta_bar_{dk}. Returns 1 unconditionally when
// x_{d.k} > 0.
std::uint32_t sample_affinity(ModelState& state, std::uint32_t t, std::uint32_t d,
                              std::uint32_t k, RngStream& rng);

// theta_d ~ Dir over the active support with concentration alpha + x_{d.k}.
void sample_theta(ModelState& state, std::uint32_t t, std::uint32_t d, RngStream& rng);

// Redistributes every word count of document d across topics with
// probabilities proportional to theta_{dk} * phi_{kw}; marginals updated
// incrementally. Token totals are conserved exactly.
void sample_assignments(ModelState& state, std::uint32_t t, std::uint32_t d, RngStream& rng);

// Full slice sweep: per document theta_bar row -> theta row -> assignments,
// then the per-document IBP birth pass (J ~ Pois(eta0/|d_t|) new topics,
// prior-initialized rows). `allow_birth` is ignored in rctm_f mode, where
// this is structurally a no-op for K.
void sweep_slice(ModelState& state, std::uint32_t t, bool allow_birth);

// Removes topic k from slice t, resizing Phi, theta, theta_bar, assignments,
// r, the incoming coupling column of B_{t-1,t} and the outgoing row of
// B_{t,t+1} (and the slice-(t+1) dropout mask entry).
void remove_topic(ModelState& state, std::uint32_t t, std::uint32_t k);

// End-of-iteration death step: prunes topics with x_{..k} = 0 and zero
// propagated coupling mass (z column sum). No-op in rctm_f mode.
void prune_dead_topics(ModelState& state, const FilterCache& cache);

}  // namespace rctm
