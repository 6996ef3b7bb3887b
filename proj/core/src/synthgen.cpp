#include "rctm/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "rctm/distrib.hpp"
#include "rctm/matching.hpp"

namespace rctm {

using nlohmann::json;

SynthResult generate(const SynthConfig& cfg) {
  const std::uint32_t D = cfg.docs_per_slice;
  const std::uint32_t V = cfg.vocab;
  const std::uint32_t K = cfg.topics;
  const std::uint32_t T = cfg.slices;
  if (D < 1 || V < 1 || K < 1 || T < 1 || cfg.doc_length < 1)
    throw std::invalid_argument("generate: all dimensions must be >= 1");
  if (cfg.coupling) {
    if (cfg.coupling->size() != T - 1)
      throw std::invalid_argument("generate: need one coupling matrix per transition");
    for (const auto& m : *cfg.coupling)
      if (m.size() != static_cast<std::size_t>(K) * K)
        throw std::invalid_argument("generate: coupling matrix must be K x K");
  }

  RngStream rng(cfg.seed, stream::kSynth);
  SynthResult out;
  GroundTruth& gt = out.truth;
  gt.V = V;
  gt.K = K;
  gt.T = T;
  gt.doc_length = cfg.doc_length;
  gt.phi.resize(T);
  gt.b.resize(T);
  gt.theta.resize(T);

  // coupling matrices, given or drawn from the hierarchical Gamma priors
  const HyperParams defaults;
  const double c0 = cfg.coupling ? 1.0 : gamma(defaults.a0, 1.0 / defaults.b0, rng);
  for (std::uint32_t t = 1; t < T; ++t) {
    gt.b[t].resize(static_cast<std::size_t>(K) * K);
    if (cfg.coupling) {
      gt.b[t] = (*cfg.coupling)[t - 1];
    } else {
      const double ct = gamma(defaults.e0, 1.0 / defaults.d0, rng);
      for (std::uint32_t kp = 0; kp < K; ++kp) {
        const double r = gamma(defaults.r0 / K, 1.0 / c0, rng);
        for (std::uint32_t k = 0; k < K; ++k)
          gt.b[t][static_cast<std::size_t>(kp) * K + k] = gamma(r, 1.0 / ct, rng);
      }
    }
  }

  // topic chain
  std::vector<double> conc(V);
  for (std::uint32_t t = 0; t < T; ++t) {
    gt.phi[t].resize(static_cast<std::size_t>(K) * V);
    for (std::uint32_t k = 0; k < K; ++k) {
      if (t == 0) {
        std::fill(conc.begin(), conc.end(), cfg.eta);
      } else {
        std::fill(conc.begin(), conc.end(), 0.0);
        for (std::uint32_t kp = 0; kp < K; ++kp) {
          const double b = gt.b[t][static_cast<std::size_t>(kp) * K + k];
          const double* prow = gt.phi[t - 1].data() + static_cast<std::size_t>(kp) * V;
          for (std::uint32_t w = 0; w < V; ++w) conc[w] += b * prow[w];
        }
      }
      dirichlet_into(conc, rng,
                     std::span<double>(gt.phi[t].data() + static_cast<std::size_t>(k) * V, V));
    }
  }

  // documents
  SlicedCorpus& corpus = out.corpus;
  corpus.vocabulary.resize(V);
  for (std::uint32_t w = 0; w < V; ++w) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "w%04u", w);
    corpus.vocabulary[w] = buf;
  }
  corpus.slices.resize(T);
  corpus.slice_boundaries.resize(T + 1);
  for (std::uint32_t t = 0; t <= T; ++t) corpus.slice_boundaries[t] = t;

  std::vector<double> theta(K);
  std::vector<double> alpha_conc(K, cfg.alpha);
  std::vector<std::vector<double>> word_cdf(K, std::vector<double>(V));
  for (std::uint32_t t = 0; t < T; ++t) {
    for (std::uint32_t k = 0; k < K; ++k) {
      double acc = 0.0;
      for (std::uint32_t w = 0; w < V; ++w) {
        acc += gt.phi[t][static_cast<std::size_t>(k) * V + w];
        word_cdf[k][w] = acc;
      }
      word_cdf[k][V - 1] = 1.0;
    }
    gt.theta[t].resize(static_cast<std::size_t>(D) * K);
    corpus.slices[t].reserve(D);
    for (std::uint32_t d = 0; d < D; ++d) {
      dirichlet_into(alpha_conc, rng, theta);
      std::copy(theta.begin(), theta.end(),
                gt.theta[t].begin() + static_cast<std::size_t>(d) * K);
      std::map<std::uint32_t, std::uint32_t> counts;
      for (std::uint32_t n = 0; n < cfg.doc_length; ++n) {
        const std::uint32_t k = static_cast<std::uint32_t>(categorical(theta, rng));
        const double u = rng.uniform();
        const auto it = std::upper_bound(word_cdf[k].begin(), word_cdf[k].end(), u);
        const std::uint32_t w = static_cast<std::uint32_t>(
            std::min<std::ptrdiff_t>(it - word_cdf[k].begin(), V - 1));
        ++counts[w];
      }
      Document doc;
      doc.id = "t" + std::to_string(t) + "_d" + std::to_string(d);
      doc.timestamp = t;
      doc.counts.assign(counts.begin(), counts.end());
      corpus.slices[t].push_back(std::move(doc));
    }
  }
  return out;
}

namespace {

double cosine(const double* a, const double* b, std::size_t n) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa <= 0.0 || bb <= 0.0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> column_normalized(const std::vector<double>& m, std::uint32_t rows,
                                      std::uint32_t cols) {
  std::vector<double> out(m.size(), 0.0);
  for (std::uint32_t j = 0; j < cols; ++j) {
    double s = 0.0;
    for (std::uint32_t i = 0; i < rows; ++i) s += m[static_cast<std::size_t>(i) * cols + j];
    if (s <= 0.0) continue;
    for (std::uint32_t i = 0; i < rows; ++i)
      out[static_cast<std::size_t>(i) * cols + j] = m[static_cast<std::size_t>(i) * cols + j] / s;
  }
  return out;
}

}  // namespace

RecoveryScore score_recovery(const GroundTruth& truth, const PosteriorSummary& summary) {
  if (summary.T != truth.T || summary.V != truth.V)
    throw std::invalid_argument("score_recovery: dimension mismatch");
  const std::uint32_t T = truth.T;
  const std::uint32_t V = truth.V;
  const std::uint32_t Kt = truth.K;

  RecoveryScore score;
  score.alignment.resize(T);
  score.topic_cosine.resize(T);
  for (std::uint32_t t = 0; t < T; ++t) {
    const std::uint32_t Ke = summary.slice_K[t];
    std::vector<double> sim(static_cast<std::size_t>(Kt) * Ke);
    for (std::uint32_t i = 0; i < Kt; ++i)
      for (std::uint32_t j = 0; j < Ke; ++j)
        sim[static_cast<std::size_t>(i) * Ke + j] =
            cosine(truth.phi[t].data() + static_cast<std::size_t>(i) * V,
                   summary.mean_phi[t].data() + static_cast<std::size_t>(j) * V, V);
    score.alignment[t] = max_weight_assignment(sim, Kt, Ke);
    score.topic_cosine[t].resize(Kt, 0.0);
    for (std::uint32_t i = 0; i < Kt; ++i) {
      const int j = score.alignment[t][i];
      if (j >= 0) score.topic_cosine[t][i] = sim[static_cast<std::size_t>(i) * Ke + j];
    }
  }

  std::vector<double> tv, ev, tv_raw, ev_raw;
  double l1 = 0.0;
  for (std::uint32_t t = 1; t < T; ++t) {
    const std::uint32_t Ke = summary.slice_K[t];
    const std::uint32_t Kp = summary.slice_K[t - 1];
    // aligned estimate, Kt x Kt over the true grid
    std::vector<double> est(static_cast<std::size_t>(Kt) * Kt, 0.0);
    std::vector<std::uint8_t> have(static_cast<std::size_t>(Kt) * Kt, 0);
    for (std::uint32_t i = 0; i < Kt; ++i) {
      const int pi = score.alignment[t - 1][i];
      if (pi < 0) continue;
      for (std::uint32_t j = 0; j < Kt; ++j) {
        const int pj = score.alignment[t][j];
        if (pj < 0) continue;
        est[static_cast<std::size_t>(i) * Kt + j] =
            summary.mean_b[t][static_cast<std::size_t>(pi) * Ke + pj];
        have[static_cast<std::size_t>(i) * Kt + j] = 1;
      }
    }
    (void)Kp;
    const std::vector<double> tn = column_normalized(truth.b[t], Kt, Kt);
    const std::vector<double> en = column_normalized(est, Kt, Kt);
    for (std::size_t i = 0; i < est.size(); ++i) {
      if (!have[i]) continue;
      tv.push_back(tn[i]);
      ev.push_back(en[i]);
      tv_raw.push_back(truth.b[t][i]);
      ev_raw.push_back(est[i]);
      l1 += std::abs(tn[i] - en[i]);
    }
  }
  score.correlation = pearson(tv, ev);
  score.correlation_raw = pearson(tv_raw, ev_raw);
  score.l1_error = l1;
  return score;
}

void save_truth_json(const GroundTruth& gt, const std::string& path) {
  json j;
  j["V"] = gt.V;
  j["K"] = gt.K;
  j["T"] = gt.T;
  j["doc_length"] = gt.doc_length;
  j["phi"] = gt.phi;
  j["b"] = gt.b;
  j["theta"] = gt.theta;
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << j.dump() << '\n';
}

GroundTruth load_truth_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  json j;
  is >> j;
  GroundTruth gt;
  gt.V = j.at("V").get<std::uint32_t>();
  gt.K = j.at("K").get<std::uint32_t>();
  gt.T = j.at("T").get<std::uint32_t>();
  gt.doc_length = j.at("doc_length").get<std::uint32_t>();
  gt.phi = j.at("phi").get<std::vector<std::vector<double>>>();
  gt.b = j.at("b").get<std::vector<std::vector<double>>>();
  gt.theta = j.at("theta").get<std::vector<std::vector<double>>>();
  return gt;
}

}  // namespace rctm
