#include "rctm/model.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "rctm/distrib.hpp"

namespace rctm {

namespace fs = std::filesystem;
using nlohmann::json;

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::kRctm: return "rctm";
    case Mode::kRctmD: return "rctm-d";
    case Mode::kRctmF: return "rctm-f";
  }
  return "?";
}

std::optional<Mode> mode_from_name(const std::string& name) {
  if (name == "rctm") return Mode::kRctm;
  if (name == "rctm-d" || name == "rctm_d") return Mode::kRctmD;
  if (name == "rctm-f" || name == "rctm_f") return Mode::kRctmF;
  return std::nullopt;
}

void HyperParams::validate() const {
  auto pos = [](double v, const char* n) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string("hyper: ") + n + " must be positive");
  };
  pos(eta0, "eta0");
  pos(alpha, "alpha");
  pos(eta, "eta");
  pos(a0, "a0");
  pos(b0, "b0");
  pos(e0, "e0");
  pos(d0, "d0");
  pos(r0, "r0");
  if (rho < 0.0 || rho >= 1.0 + 1e-12) {
    if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("hyper: rho must be in [0,1]");
  }
  if (k_fixed < 1) throw std::invalid_argument("hyper: k_fixed must be >= 1");
  if (k_init < 1) throw std::invalid_argument("hyper: k_init must be >= 1");
}

ModelState init_model(const SlicedCorpus& corpus, const HyperParams& hyper, std::uint64_t seed) {
  hyper.validate();
  const std::uint32_t T = corpus.num_slices();
  const std::uint32_t V = corpus.vocab_size();
  if (T == 0 || V == 0) throw std::runtime_error("init: empty corpus");
  for (std::uint32_t t = 0; t < T; ++t)
    if (corpus.slices[t].empty())
      throw std::runtime_error("init: training slice " + std::to_string(t) +
                               " is empty; the chain needs data at every slice");

  ModelState s;
  s.hyper = hyper;
  s.seed = seed;
  s.V = V;
  s.T = T;
  s.vocab = corpus.vocabulary;
  s.boundaries = corpus.slice_boundaries;
  s.streams.init = RngStream(seed, stream::kInit);
  s.streams.proportions = RngStream(seed, stream::kProportions);
  s.streams.birth = RngStream(seed, stream::kBirth);
  s.streams.filter = RngStream(seed, stream::kFilter);
  s.streams.forward = RngStream(seed, stream::kForward);
  s.streams.dropout = RngStream(seed, stream::kDropout);

  RngStream& rng = s.streams.init;
  const std::uint32_t K0 = hyper.mode == Mode::kRctmF ? hyper.k_fixed : hyper.k_init;

  s.c0 = gamma(hyper.a0, 1.0 / hyper.b0, rng);
  s.slices.resize(T);
  s.assign.resize(T);
  for (std::uint32_t t = 0; t < T; ++t) {
    SliceState& sl = s.slices[t];
    SliceAssign& as = s.assign[t];
    const auto& docs = corpus.slices[t];
    const std::uint32_t D = static_cast<std::uint32_t>(docs.size());
    sl.K = K0;
    sl.c = gamma(hyper.e0, 1.0 / hyper.d0, rng);
    sl.r.resize(K0);
    for (auto& rv : sl.r) rv = gamma(hyper.r0 / K0, 1.0 / s.c0, rng);
    sl.phi.resize(static_cast<std::size_t>(K0) * V);
    std::vector<double> conc(V, hyper.eta);
    for (std::uint32_t k = 0; k < K0; ++k)
      dirichlet_into(conc, rng, std::span<double>(sl.phi.data() + static_cast<std::size_t>(k) * V, V));
    if (t > 0) {
      const std::uint32_t Kp = s.slices[t - 1].K;
      sl.b_prev.resize(static_cast<std::size_t>(Kp) * K0);
      for (auto& b : sl.b_prev) b = gamma(hyper.r0 / Kp, 1.0 / sl.c, rng);
      if (hyper.mode == Mode::kRctmD) sl.dropout_mask.assign(Kp, 0);
    }

    as.docs.resize(D);
    as.x_dk.assign(static_cast<std::size_t>(D) * K0, 0);
    as.x_wk.assign(static_cast<std::size_t>(V) * K0, 0);
    as.x_k.assign(K0, 0);
    for (std::uint32_t d = 0; d < D; ++d) {
      DocAssign& da = as.docs[d];
      const auto& doc = docs[d];
      if (doc.counts.empty())
        throw std::runtime_error("init: document with no tokens in slice " + std::to_string(t));
      da.words.reserve(doc.counts.size());
      da.counts.reserve(doc.counts.size());
      for (const auto& [w, c] : doc.counts) {
        if (w >= V) throw std::runtime_error("init: token index out of range");
        da.words.push_back(w);
        da.counts.push_back(c);
      }
      da.x.assign(da.words.size() * K0, 0);
      for (std::size_t i = 0; i < da.words.size(); ++i) {
        const std::uint32_t w = da.words[i];
        for (std::uint32_t n = 0; n < da.counts[i]; ++n) {
          const std::uint32_t k = static_cast<std::uint32_t>(rng.next_u64() % K0);
          ++da.x[i * K0 + k];
          ++as.x_dk[static_cast<std::size_t>(d) * K0 + k];
          ++as.x_wk[static_cast<std::size_t>(w) * K0 + k];
          ++as.x_k[k];
        }
      }
    }

    sl.theta_bar.assign(static_cast<std::size_t>(D) * K0, 0);
    sl.theta.assign(static_cast<std::size_t>(D) * K0, 0.0);
    std::vector<double> tconc(K0);
    for (std::uint32_t d = 0; d < D; ++d) {
      const bool all_active = hyper.mode == Mode::kRctmF;
      for (std::uint32_t k = 0; k < K0; ++k) {
        const bool on = all_active || as.x_dk[static_cast<std::size_t>(d) * K0 + k] > 0;
        sl.theta_bar[static_cast<std::size_t>(d) * K0 + k] = on ? 1 : 0;
        tconc[k] = on ? hyper.alpha + as.x_dk[static_cast<std::size_t>(d) * K0 + k] : 0.0;
      }
      dirichlet_into(tconc, rng,
                     std::span<double>(sl.theta.data() + static_cast<std::size_t>(d) * K0, K0));
    }
  }
  return s;
}

namespace {

[[noreturn]] void fail(const std::string& what) { throw std::logic_error("validate: " + what); }

}  // namespace

void validate(const ModelState& s) {
  if (s.slices.size() != s.T || s.assign.size() != s.T) fail("slice count mismatch");
  for (std::uint32_t t = 0; t < s.T; ++t) {
    const SliceState& sl = s.slices[t];
    const SliceAssign& as = s.assign[t];
    const std::uint32_t K = sl.K;
    const std::uint32_t D = as.D();
    if (K < 1) fail("K < 1 at slice " + std::to_string(t));
    if (sl.phi.size() != static_cast<std::size_t>(K) * s.V) fail("phi dims");
    if (sl.r.size() != K) fail("r dims");
    if (!(sl.c > 0.0) || !std::isfinite(sl.c)) fail("c_t not positive/finite");
    for (double rv : sl.r)
      if (!(rv > 0.0) || !std::isfinite(rv)) fail("r not positive/finite");
    for (std::uint32_t k = 0; k < K; ++k) {
      double sum = 0.0;
      for (std::uint32_t w = 0; w < s.V; ++w) {
        const double p = sl.phi[static_cast<std::size_t>(k) * s.V + w];
        if (p < 0.0 || !std::isfinite(p)) fail("phi entry negative or non-finite");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9) fail("phi row off the simplex at slice " + std::to_string(t));
    }
    if (t > 0) {
      const std::uint32_t Kp = s.slices[t - 1].K;
      if (sl.b_prev.size() != static_cast<std::size_t>(Kp) * K) fail("B dims");
      for (double b : sl.b_prev)
        if (!(b >= 0.0) || !std::isfinite(b)) fail("B entry negative or non-finite");
      if (s.hyper.mode == Mode::kRctmD && sl.dropout_mask.size() != Kp) fail("mask dims");
    } else if (!sl.b_prev.empty()) {
      fail("B present at slice 1");
    }
    if (sl.theta_bar.size() != static_cast<std::size_t>(D) * K) fail("theta_bar dims");
    if (sl.theta.size() != static_cast<std::size_t>(D) * K) fail("theta dims");
    if (as.x_dk.size() != static_cast<std::size_t>(D) * K) fail("x_dk dims");
    if (as.x_wk.size() != static_cast<std::size_t>(s.V) * K) fail("x_wk dims");
    if (as.x_k.size() != K) fail("x_k dims");

    std::vector<std::uint32_t> x_dk(static_cast<std::size_t>(D) * K, 0);
    std::vector<std::uint32_t> x_wk(static_cast<std::size_t>(s.V) * K, 0);
    std::vector<std::uint64_t> x_k(K, 0);
    for (std::uint32_t d = 0; d < D; ++d) {
      const DocAssign& da = as.docs[d];
      if (da.x.size() != da.words.size() * K) fail("doc assign dims");
      bool active = false;
      for (std::size_t i = 0; i < da.words.size(); ++i) {
        std::uint32_t tot = 0;
        for (std::uint32_t k = 0; k < K; ++k) {
          const std::uint32_t c = da.x[i * K + k];
          tot += c;
          x_dk[static_cast<std::size_t>(d) * K + k] += c;
          x_wk[static_cast<std::size_t>(da.words[i]) * K + k] += c;
          x_k[k] += c;
        }
        if (tot != da.counts[i]) fail("token count not conserved by assignments");
      }
      double tsum = 0.0;
      for (std::uint32_t k = 0; k < K; ++k) {
        const std::size_t dk = static_cast<std::size_t>(d) * K + k;
        const double th = sl.theta[dk];
        if (th < 0.0 || !std::isfinite(th)) fail("theta entry negative or non-finite");
        if (th > 0.0 && !sl.theta_bar[dk]) fail("theta positive off the affinity support");
        if (!sl.theta_bar[dk] && x_dk[dk] > 0) fail("counts on an inactive topic");
        if (sl.theta_bar[dk]) active = true;
        tsum += th;
      }
      if (std::abs(tsum - 1.0) > 1e-9) fail("theta row off the simplex");
      if (!active) fail("document with no active topic");
    }
    if (x_dk != as.x_dk) fail("x_dk marginal inconsistent");
    if (x_wk != as.x_wk) fail("x_wk marginal inconsistent");
    if (x_k != as.x_k) fail("x_k marginal inconsistent");
  }
  if (!(s.c0 > 0.0) || !std::isfinite(s.c0)) fail("c0 not positive/finite");
}

namespace {

constexpr char kMagic[6] = {'R', 'C', 'T', 'M', '1', '\0'};
constexpr std::uint32_t kVersion = 1;

struct Writer {
  std::ofstream os;
  explicit Writer(const std::string& path) : os(path, std::ios::binary) {
    if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  }
  template <typename T>
  void pod(const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void str(const std::string& s) {
    const std::uint64_t n = s.size();
    pod(n);
    os.write(s.data(), static_cast<std::streamsize>(n));
  }
  template <typename T>
  void vec(const std::vector<T>& v) {
    const std::uint64_t n = v.size();
    pod(n);
    if (n) os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
  }
};

struct Reader {
  std::ifstream is;
  explicit Reader(const std::string& path) : is(path, std::ios::binary) {
    if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
  }
  template <typename T>
  void pod(T& v) {
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("checkpoint truncated");
  }
  void str(std::string& s) {
    std::uint64_t n = 0;
    pod(n);
    if (n > (1ull << 32)) throw std::runtime_error("checkpoint corrupt (string size)");
    s.resize(n);
    if (n) {
      is.read(s.data(), static_cast<std::streamsize>(n));
      if (!is) throw std::runtime_error("checkpoint truncated");
    }
  }
  template <typename T>
  void vec(std::vector<T>& v) {
    std::uint64_t n = 0;
    pod(n);
    if (n > (1ull << 36)) throw std::runtime_error("checkpoint corrupt (vector size)");
    v.resize(n);
    if (n) {
      is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
      if (!is) throw std::runtime_error("checkpoint truncated");
    }
  }
};

void write_summary(Writer& w, const PosteriorSummary& sum) {
  w.pod(sum.V);
  w.pod(sum.T);
  w.pod(sum.retained);
  auto mat = [&](const std::vector<std::vector<double>>& m) {
    const std::uint64_t n = m.size();
    w.pod(n);
    for (const auto& row : m) w.vec(row);
  };
  mat(sum.mean_phi);
  mat(sum.mean_b);
  mat(sum.mean_theta);
  w.vec(sum.slice_K);
  const std::uint64_t nk = sum.k_trace.size();
  w.pod(nk);
  for (const auto& row : sum.k_trace) w.vec(row);
  w.vec(sum.loglik_trace);
}

void read_summary(Reader& r, PosteriorSummary& sum) {
  r.pod(sum.V);
  r.pod(sum.T);
  r.pod(sum.retained);
  auto mat = [&](std::vector<std::vector<double>>& m) {
    std::uint64_t n = 0;
    r.pod(n);
    m.resize(n);
    for (auto& row : m) r.vec(row);
  };
  mat(sum.mean_phi);
  mat(sum.mean_b);
  mat(sum.mean_theta);
  r.vec(sum.slice_K);
  std::uint64_t nk = 0;
  r.pod(nk);
  sum.k_trace.resize(nk);
  for (auto& row : sum.k_trace) r.vec(row);
  r.vec(sum.loglik_trace);
}

}  // namespace

void save_checkpoint(const ModelState& s, const PosteriorSummary* summary,
                     const std::string& path) {
  Writer w(path);
  w.os.write(kMagic, sizeof(kMagic));
  w.pod(kVersion);

  w.pod(s.hyper.eta0);
  w.pod(s.hyper.alpha);
  w.pod(s.hyper.eta);
  w.pod(s.hyper.a0);
  w.pod(s.hyper.b0);
  w.pod(s.hyper.e0);
  w.pod(s.hyper.d0);
  w.pod(s.hyper.r0);
  w.pod(s.hyper.rho);
  w.pod(static_cast<std::uint32_t>(s.hyper.mode));
  w.pod(s.hyper.k_fixed);
  w.pod(s.hyper.k_init);

  w.pod(s.seed);
  w.pod(s.iteration);
  w.pod(s.V);
  w.pod(s.T);
  w.pod(s.c0);
  const std::uint64_t nv = s.vocab.size();
  w.pod(nv);
  for (const auto& term : s.vocab) w.str(term);
  w.vec(s.boundaries);

  for (std::uint32_t t = 0; t < s.T; ++t) {
    const SliceState& sl = s.slices[t];
    const SliceAssign& as = s.assign[t];
    w.pod(sl.K);
    w.pod(as.D());
    w.pod(sl.c);
    w.vec(sl.phi);
    w.vec(sl.theta_bar);
    w.vec(sl.theta);
    w.vec(sl.r);
    w.vec(sl.b_prev);
    w.vec(sl.dropout_mask);
    for (const auto& da : as.docs) {
      w.vec(da.words);
      w.vec(da.counts);
      w.vec(da.x);
    }
  }

  std::ostringstream rngs;
  s.streams.init.save(rngs);
  s.streams.proportions.save(rngs);
  s.streams.birth.save(rngs);
  s.streams.filter.save(rngs);
  s.streams.forward.save(rngs);
  s.streams.dropout.save(rngs);
  w.str(rngs.str());

  const std::uint8_t has_summary = summary ? 1 : 0;
  w.pod(has_summary);
  if (summary) write_summary(w, *summary);

  if (!w.os) throw std::runtime_error("checkpoint write failed: " + path);
  w.os.close();

  const fs::path dir = fs::path(path).parent_path();
  write_state_json(s, (dir.empty() ? fs::path(".") : dir) / "state.json");
}

ModelState load_checkpoint(const std::string& path, PosteriorSummary* summary) {
  Reader r(path);
  char magic[6];
  r.is.read(magic, sizeof(magic));
  if (!r.is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic (not an RCTM1 file)");
  std::uint32_t version = 0;
  r.pod(version);
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));

  ModelState s;
  std::uint32_t mode_raw = 0;
  r.pod(s.hyper.eta0);
  r.pod(s.hyper.alpha);
  r.pod(s.hyper.eta);
  r.pod(s.hyper.a0);
  r.pod(s.hyper.b0);
  r.pod(s.hyper.e0);
  r.pod(s.hyper.d0);
  r.pod(s.hyper.r0);
  r.pod(s.hyper.rho);
  r.pod(mode_raw);
  r.pod(s.hyper.k_fixed);
  r.pod(s.hyper.k_init);
  if (mode_raw > 2) throw std::runtime_error("checkpoint: corrupt mode field");
  s.hyper.mode = static_cast<Mode>(mode_raw);

  r.pod(s.seed);
  r.pod(s.iteration);
  r.pod(s.V);
  r.pod(s.T);
  r.pod(s.c0);
  std::uint64_t nv = 0;
  r.pod(nv);
  if (nv != s.V) throw std::runtime_error("checkpoint: vocab size mismatch");
  s.vocab.resize(nv);
  for (auto& term : s.vocab) r.str(term);
  r.vec(s.boundaries);

  s.slices.resize(s.T);
  s.assign.resize(s.T);
  for (std::uint32_t t = 0; t < s.T; ++t) {
    SliceState& sl = s.slices[t];
    SliceAssign& as = s.assign[t];
    std::uint32_t D = 0;
    r.pod(sl.K);
    r.pod(D);
    r.pod(sl.c);
    r.vec(sl.phi);
    r.vec(sl.theta_bar);
    r.vec(sl.theta);
    r.vec(sl.r);
    r.vec(sl.b_prev);
    r.vec(sl.dropout_mask);
    as.docs.resize(D);
    as.x_dk.assign(static_cast<std::size_t>(D) * sl.K, 0);
    as.x_wk.assign(static_cast<std::size_t>(s.V) * sl.K, 0);
    as.x_k.assign(sl.K, 0);
    for (std::uint32_t d = 0; d < D; ++d) {
      DocAssign& da = as.docs[d];
      r.vec(da.words);
      r.vec(da.counts);
      r.vec(da.x);
      if (da.x.size() != da.words.size() * sl.K)
        throw std::runtime_error("checkpoint: assignment dims corrupt");
      for (std::size_t i = 0; i < da.words.size(); ++i)
        for (std::uint32_t k = 0; k < sl.K; ++k) {
          const std::uint32_t c = da.x[i * sl.K + k];
          as.x_dk[static_cast<std::size_t>(d) * sl.K + k] += c;
          as.x_wk[static_cast<std::size_t>(da.words[i]) * sl.K + k] += c;
          as.x_k[k] += c;
        }
    }
  }

  std::string rng_blob;
  r.str(rng_blob);
  std::istringstream rngs(rng_blob);
  s.streams.init.load(rngs);
  s.streams.proportions.load(rngs);
  s.streams.birth.load(rngs);
  s.streams.filter.load(rngs);
  s.streams.forward.load(rngs);
  s.streams.dropout.load(rngs);

  std::uint8_t has_summary = 0;
  r.pod(has_summary);
  if (has_summary) {
    PosteriorSummary tmp;
    read_summary(r, tmp);
    if (summary) *summary = std::move(tmp);
  } else if (summary) {
    *summary = PosteriorSummary{};
  }
  return s;
}

void write_state_json(const ModelState& s, const std::string& path) {
  json j;
  j["mode"] = mode_name(s.hyper.mode);
  j["seed"] = s.seed;
  j["iteration"] = s.iteration;
  j["V"] = s.V;
  j["T"] = s.T;
  j["c0"] = s.c0;
  auto& ks = j["K"] = json::array();
  auto& cs = j["c_t"] = json::array();
  auto& mb = j["mean_beta"] = json::array();
  for (std::uint32_t t = 0; t < s.T; ++t) {
    ks.push_back(s.slices[t].K);
    cs.push_back(s.slices[t].c);
    if (t > 0 && !s.slices[t].b_prev.empty()) {
      double m = 0.0;
      for (double b : s.slices[t].b_prev) m += b;
      mb.push_back(m / static_cast<double>(s.slices[t].b_prev.size()));
    } else {
      mb.push_back(0.0);
    }
  }
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write state json: " + path);
  os << j.dump(2) << '\n';
}

bool states_equal_core(const ModelState& a, const ModelState& b) {
  if (a.T != b.T || a.V != b.V) return false;
  if (a.c0 != b.c0) return false;
  for (std::uint32_t t = 0; t < a.T; ++t) {
    const SliceState& x = a.slices[t];
    const SliceState& y = b.slices[t];
    if (x.K != y.K || x.c != y.c) return false;
    if (x.phi != y.phi || x.theta != y.theta || x.theta_bar != y.theta_bar) return false;
    if (x.r != y.r || x.b_prev != y.b_prev) return false;
    const SliceAssign& p = a.assign[t];
    const SliceAssign& q = b.assign[t];
    if (p.x_dk != q.x_dk || p.x_wk != q.x_wk || p.x_k != q.x_k) return false;
    if (p.docs.size() != q.docs.size()) return false;
    for (std::size_t d = 0; d < p.docs.size(); ++d)
      if (p.docs[d].x != q.docs[d].x) return false;
  }
  return true;
}

}  // namespace rctm
