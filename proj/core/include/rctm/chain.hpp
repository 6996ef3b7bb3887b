#pragma once

#include "rctm/model.hpp"

namespace rctm {

// Multi-topic-thread evolution core: the backward filter propagating latent
// word counts from the last slice to the first, and closed-form forward
// sampling of Phi, B, r and c.

// Backward pass, t = T-1 down to 1 (0-based). Per topic k at slice t:
//   1. xi_k ~ Beta(xtilde_{..k}, psi_{.k}), psi_k = sum_kp btilde[kp][k] phi_{t-1,kp}
//      where btilde applies the dropout mask and xtilde folds in the counts
//      already propagated from slice t+1 (xtilde = x + z);
//   2. per word w: y_wk ~ CRT(xtilde_{.wk}, psi_wk);
//   3. y_wk split over predecessors ~ Mult(y_wk, btilde*phi / psi);
//   4. z_{w,kp} and y_agg[k][kp] accumulate the splits.
// Topics whose coupling mass psi_{.k} is zero (all connections dropped) are
// flagged `fallback` and propagate nothing. Topics with xtilde = 0 draw xi
// with the epsilon shape floor and propagate nothing.
FilterCache backward_filter(ModelState& state);

// Forward pass, t = 0..T-1, per Algorithm order phi -> B -> r -> c_t, then
// c0 once at the end:
//   phi_{0,k}  ~ Dir(eta + x_k + z_k)
//   phi_{t,k}  ~ Dir(psi_k + x_k + z_k)           (Dir(eta + x + z) on fallback)
//   beta[kp][k] ~ Gam(y_agg[k][kp] + r_kp, 1/(c_t - ln(1-xi_k)))
//                 (prior Gam(r_kp, 1/c_t) for dropped connections; fallback
//                  topics keep their column)
//   r_kp ~ Gam(r0/K_prev + l_kp, 1/(c0 - log(1-p))),
//          l_kp ~ CRT(sum_k y_agg[k][kp], r_kp), p = M/(M + c0),
//          M = sum_k -ln(1-xi_k)
//   c_t ~ Gam(e0 + sum_kp r_kp, 1/(sum B + d0))
//   c0  ~ Gam(a0 + sum_t sum_k r0/K_t, 1/(b0 + sum_t sum_k r_{k_t}))
void forward_sample(ModelState& state, const FilterCache& cache);

// Per-iteration Bernoulli(rho) masks over the predecessor topics of every
// slice t >= 1; rctm_d only. Consumes the dedicated dropout stream, so
// rho = 0 runs are bit-identical to plain rctm.
void resample_dropout_masks(ModelState& state);

// Shape floor used for the Beta draw of a topic with zero evidence.
inline constexpr double kXiShapeFloor = 1e-3;

}  // namespace rctm
