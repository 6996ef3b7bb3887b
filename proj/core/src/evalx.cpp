#include "rctm/evalx.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include "rctm/distrib.hpp"

namespace rctm {

namespace {

std::uint64_t doc_stream_id(std::uint32_t t, std::uint32_t doc_index) {
  return stream::kFoldIn + (static_cast<std::uint64_t>(t) << 40) +
         (static_cast<std::uint64_t>(doc_index) << 8);
}

double doc_loglik(const Document& doc, const std::vector<double>& theta,
                  const std::vector<double>& phi, std::uint32_t K, std::uint32_t V) {
  double ll = 0.0;
  for (const auto& [w, c] : doc.counts) {
    double p = 0.0;
    for (std::uint32_t k = 0; k < K; ++k)
      p += theta[k] * phi[static_cast<std::size_t>(k) * V + w];
    ll += static_cast<double>(c) * std::log(p);
  }
  return ll;
}

// chunked parallel-for; per-item work must be independent
void parallel_for(std::size_t n, std::uint32_t workers, const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::uint32_t nthreads = std::min<std::uint32_t>(workers, static_cast<std::uint32_t>(n));
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  std::atomic<std::size_t> next{0};
  for (std::uint32_t w = 0; w < nthreads; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

std::vector<double> fold_in(const Document& doc, std::uint32_t t, const PosteriorSummary& summary,
                            const FoldInConfig& config, std::uint32_t doc_index) {
  if (doc.counts.empty()) throw std::invalid_argument("fold_in: empty document");
  if (t >= summary.T) throw std::invalid_argument("fold_in: slice out of range");
  const std::uint32_t K = summary.slice_K[t];
  const std::uint32_t V = summary.V;
  const std::vector<double>& phi = summary.mean_phi[t];
  RngStream rng(config.seed, doc_stream_id(t, doc_index));

  const std::size_t nnz = doc.counts.size();
  std::vector<std::uint32_t> x(nnz * K, 0);
  std::vector<std::uint32_t> x_k(K, 0);
  // start from a uniform-responsibility assignment
  std::vector<double> uniform(K, 1.0);
  std::vector<std::uint32_t> buf(K);
  for (std::size_t i = 0; i < nnz; ++i) {
    multinomial_weights_into(doc.counts[i].second, uniform, rng, buf);
    for (std::uint32_t k = 0; k < K; ++k) {
      x[i * K + k] = buf[k];
      x_k[k] += buf[k];
    }
  }

  std::vector<double> theta(K), conc(K), weights(K);
  std::vector<double> avg(K, 0.0);
  const std::uint32_t keep_from = config.sweeps - config.sweeps / 2;  // last half
  std::uint32_t kept = 0;
  for (std::uint32_t sweep = 1; sweep <= config.sweeps; ++sweep) {
    for (std::uint32_t k = 0; k < K; ++k) conc[k] = config.alpha + x_k[k];
    dirichlet_into(conc, rng, theta);
    for (std::size_t i = 0; i < nnz; ++i) {
      const std::uint32_t w = doc.counts[i].first;
      double total = 0.0;
      for (std::uint32_t k = 0; k < K; ++k) {
        weights[k] = theta[k] * phi[static_cast<std::size_t>(k) * V + w];
        total += weights[k];
      }
      if (total <= 0.0) std::fill(weights.begin(), weights.end(), 1.0);
      for (std::uint32_t k = 0; k < K; ++k) x_k[k] -= x[i * K + k];
      multinomial_weights_into(doc.counts[i].second, weights, rng, buf);
      for (std::uint32_t k = 0; k < K; ++k) {
        x[i * K + k] = buf[k];
        x_k[k] += buf[k];
      }
    }
    if (sweep > keep_from) {
      for (std::uint32_t k = 0; k < K; ++k) avg[k] += theta[k];
      ++kept;
    }
  }
  if (kept == 0) kept = 1;
  for (auto& v : avg) v /= static_cast<double>(kept);
  return avg;
}

double perplexity(const SlicedCorpus& heldout, const PosteriorSummary& summary,
                  const FoldInConfig& config, std::uint32_t workers) {
  if (heldout.vocab_size() != summary.V)
    throw std::invalid_argument("perplexity: vocabulary mismatch");
  if (heldout.num_slices() != summary.T)
    throw std::invalid_argument("perplexity: slice count mismatch");

  double ll_total = 0.0;
  std::uint64_t n_total = 0;
  for (std::uint32_t t = 0; t < summary.T; ++t) {
    const auto& docs = heldout.slices[t];
    std::vector<double> ll(docs.size(), 0.0);
    parallel_for(docs.size(), workers, [&](std::size_t d) {
      const auto theta = fold_in(docs[d], t, summary, config, static_cast<std::uint32_t>(d));
      ll[d] = doc_loglik(docs[d], theta, summary.mean_phi[t], summary.slice_K[t], summary.V);
    });
    for (std::size_t d = 0; d < docs.size(); ++d) {
      ll_total += ll[d];
      n_total += docs[d].token_total();
    }
  }
  if (n_total == 0) throw std::invalid_argument("perplexity: no held-out tokens");
  return std::exp(-ll_total / static_cast<double>(n_total));
}

CoherenceResult coherence_npmi(const PosteriorSummary& summary, const SlicedCorpus& reference,
                               std::uint32_t top_k, double epsilon) {
  // document frequencies over the pooled reference
  const std::size_t ndocs = reference.doc_total();
  if (ndocs == 0) throw std::invalid_argument("coherence: empty reference corpus");

  // collect the words we need probabilities for
  std::vector<std::vector<std::uint32_t>> topics;
  for (std::uint32_t t = 0; t < summary.T; ++t) {
    const std::uint32_t K = summary.slice_K[t];
    for (std::uint32_t k = 0; k < K; ++k)
      topics.push_back(top_words(summary.mean_phi[t], K, summary.V, k, top_k));
  }
  std::unordered_map<std::uint32_t, std::uint32_t> word_slot;
  for (const auto& words : topics)
    for (std::uint32_t w : words)
      if (!word_slot.count(w)) {
        const std::uint32_t slot = static_cast<std::uint32_t>(word_slot.size());
        word_slot[w] = slot;
      }
  const std::uint32_t nw = static_cast<std::uint32_t>(word_slot.size());

  std::vector<std::uint32_t> df(nw, 0);
  std::vector<std::uint64_t> co(static_cast<std::size_t>(nw) * nw, 0);
  std::vector<std::uint32_t> present;
  for (const auto& slice_docs : reference.slices) {
    for (const auto& doc : slice_docs) {
      present.clear();
      for (const auto& [w, c] : doc.counts) {
        auto it = word_slot.find(w);
        if (it != word_slot.end() && c > 0) present.push_back(it->second);
      }
      std::sort(present.begin(), present.end());
      present.erase(std::unique(present.begin(), present.end()), present.end());
      for (std::size_t a = 0; a < present.size(); ++a) {
        ++df[present[a]];
        for (std::size_t b = a + 1; b < present.size(); ++b)
          ++co[static_cast<std::size_t>(present[a]) * nw + present[b]];
      }
    }
  }

  const double n = static_cast<double>(ndocs);
  CoherenceResult res;
  double total = 0.0;
  std::uint32_t scored_topics = 0;
  for (const auto& words : topics) {
    double sum = 0.0;
    std::uint32_t pairs = 0;
    for (std::size_t a = 0; a < words.size(); ++a) {
      for (std::size_t b = a + 1; b < words.size(); ++b) {
        const std::uint32_t ia = word_slot.at(words[a]);
        const std::uint32_t ib = word_slot.at(words[b]);
        if (df[ia] == 0 || df[ib] == 0) {
          ++res.skipped_pairs;
          continue;
        }
        const std::uint32_t lo = std::min(ia, ib), hi = std::max(ia, ib);
        const double p_ij = static_cast<double>(co[static_cast<std::size_t>(lo) * nw + hi]) / n;
        const double p_i = static_cast<double>(df[ia]) / n;
        const double p_j = static_cast<double>(df[ib]) / n;
        const double npmi =
            std::log((p_ij + epsilon) / (p_i * p_j)) / (-std::log(p_ij + epsilon));
        sum += npmi;
        ++pairs;
      }
    }
    const double score = pairs > 0 ? sum / static_cast<double>(pairs) : 0.0;
    res.per_topic.push_back(score);
    if (pairs > 0) {
      total += score;
      ++scored_topics;
    }
  }
  res.average = scored_topics > 0 ? total / static_cast<double>(scored_topics) : 0.0;
  return res;
}

std::uint32_t predict_timestamp(const Document& doc, const PosteriorSummary& summary,
                                const FoldInConfig& config, std::uint32_t doc_index) {
  std::uint32_t best_t = 0;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (std::uint32_t t = 0; t < summary.T; ++t) {
    const auto theta = fold_in(doc, t, summary, config, doc_index);
    const double ll = doc_loglik(doc, theta, summary.mean_phi[t], summary.slice_K[t], summary.V);
    if (ll > best_ll) {  // ties keep the earliest slice
      best_ll = ll;
      best_t = t;
    }
  }
  return best_t;
}

double timestamp_accuracy(const SlicedCorpus& heldout, const PosteriorSummary& summary,
                          const FoldInConfig& config, std::uint32_t workers) {
  std::uint64_t hits = 0, total = 0;
  for (std::uint32_t t = 0; t < heldout.num_slices(); ++t) {
    const auto& docs = heldout.slices[t];
    std::vector<std::uint32_t> pred(docs.size(), 0);
    parallel_for(docs.size(), workers, [&](std::size_t d) {
      pred[d] = predict_timestamp(docs[d], summary, config, static_cast<std::uint32_t>(d));
    });
    for (std::size_t d = 0; d < docs.size(); ++d) hits += (pred[d] == t);
    total += docs.size();
  }
  if (total == 0) throw std::invalid_argument("timestamp_accuracy: no held-out documents");
  return static_cast<double>(hits) / static_cast<double>(total);
}

std::vector<std::uint32_t> top_words(const std::vector<double>& phi, std::uint32_t K,
                                     std::uint32_t V, std::uint32_t k, std::uint32_t n) {
  if (k >= K || phi.size() != static_cast<std::size_t>(K) * V)
    throw std::invalid_argument("top_words: bad topic index or dims");
  std::vector<std::uint32_t> idx(V);
  std::iota(idx.begin(), idx.end(), 0u);
  const double* row = phi.data() + static_cast<std::size_t>(k) * V;
  const std::uint32_t m = std::min(n, V);
  std::partial_sort(idx.begin(), idx.begin() + m, idx.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (row[a] != row[b]) return row[a] > row[b];
    return a < b;
  });
  idx.resize(m);
  return idx;
}

}  // namespace rctm
