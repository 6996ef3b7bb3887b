// rctm command line: ingest, synth, train, eval, export.
//
// Exit codes: 0 success, 2 usage/input error, 3 numeric failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "rctm/corpus.hpp"
#include "rctm/evalx.hpp"
#include "rctm/gibbs.hpp"
#include "rctm/synthgen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct HyperFlags {
  rctm::HyperParams hyper;
  std::string mode = "rctm";

  void attach(CLI::App* cmd) {
    cmd->add_option("--mode", mode, "rctm | rctm-d | rctm-f")->default_val("rctm");
    cmd->add_option("--rho", hyper.rho, "dropout probability (rctm-d)")->default_val(0.2);
    cmd->add_option("--k-fixed", hyper.k_fixed, "topic count (rctm-f)")->default_val(10);
    cmd->add_option("--k-init", hyper.k_init, "initial K for the nonparametric modes")
        ->default_val(20);
    cmd->add_option("--eta0", hyper.eta0)->default_val(0.1);
    cmd->add_option("--alpha", hyper.alpha)->default_val(0.1);
    cmd->add_option("--eta", hyper.eta)->default_val(0.1);
    cmd->add_option("--a0", hyper.a0)->default_val(1.0);
    cmd->add_option("--b0", hyper.b0)->default_val(1.0);
    cmd->add_option("--e0", hyper.e0)->default_val(1.0);
    cmd->add_option("--d0", hyper.d0)->default_val(10.0);
    cmd->add_option("--r0", hyper.r0)->default_val(1.0);
  }

  rctm::HyperParams resolve() const {
    rctm::HyperParams h = hyper;
    const auto m = rctm::mode_from_name(mode);
    if (!m) throw CLI::ValidationError("--mode", "unknown mode: " + mode);
    h.mode = *m;
    if (h.mode != rctm::Mode::kRctmD) h.rho = 0.0;
    return h;
  }
};

int run_ingest(const std::string& input, const std::string& format_name, std::uint32_t slices,
               std::int64_t duration, const std::string& out,
               const rctm::PreprocessOptions& pre) {
  rctm::IngestFormat fmt;
  if (format_name == "jsonl")
    fmt = rctm::IngestFormat::kJsonl;
  else if (format_name == "tsv")
    fmt = rctm::IngestFormat::kTsv;
  else
    throw std::runtime_error("unknown format: " + format_name);

  rctm::IngestReport report;
  rctm::SlicedCorpus corpus = rctm::ingest(input, fmt, pre, &report);
  corpus = duration > 0 ? rctm::slice_by_duration(corpus, duration) : rctm::slice(corpus, slices);
  rctm::save_corpus_dir(corpus, out);

  std::uint32_t empty_slices = 0;
  for (const auto& s : corpus.slices) empty_slices += s.empty();
  std::printf("ingested %zu documents, V=%u, T=%u", corpus.doc_total(), corpus.vocab_size(),
              corpus.num_slices());
  if (report.dropped_empty_docs) std::printf(", dropped %u emptied docs", report.dropped_empty_docs);
  if (empty_slices) std::printf(", %u empty slices", empty_slices);
  std::printf(" -> %s\n", out.c_str());
  return 0;
}

int run_synth(const rctm::SynthConfig& cfg, const std::string& out) {
  const rctm::SynthResult res = rctm::generate(cfg);
  rctm::save_corpus_dir(res.corpus, out);
  rctm::save_truth_json(res.truth, (fs::path(out) / "truth.json").string());
  std::printf("synthetic corpus: D=%u/slice, V=%u, K=%u, T=%u -> %s\n", cfg.docs_per_slice,
              cfg.vocab, cfg.topics, cfg.slices, out.c_str());
  return 0;
}

int run_train(const std::string& corpus_dir, const std::string& out, const HyperFlags& hf,
              rctm::TrainConfig cfg) {
  const rctm::SlicedCorpus corpus = rctm::load_corpus_dir(corpus_dir);
  fs::create_directories(out);
  cfg.checkpoint_path = (fs::path(out) / "checkpoint.bin").string();
  if (cfg.trace_path.empty()) cfg.trace_path = (fs::path(out) / "trace.csv").string();
  const rctm::TrainResult res = rctm::train(corpus, hf.resolve(), cfg);
  std::printf("trained %u iterations, retained %u samples, K =", res.state.iteration,
              res.summary.retained);
  for (std::uint32_t t = 0; t < res.state.T; ++t) std::printf(" %u", res.state.K(t));
  std::printf(" -> %s\n", out.c_str());
  return 0;
}

int run_eval(const std::string& checkpoint, const std::string& heldout_dir,
             const std::string& reference_dir, const std::string& metric, const std::string& out,
             rctm::FoldInConfig fic, std::uint32_t top_k, std::uint32_t workers) {
  rctm::PosteriorSummary summary;
  (void)rctm::load_checkpoint(checkpoint, &summary);
  if (summary.retained == 0) throw std::runtime_error("checkpoint has no posterior summary");
  const rctm::SlicedCorpus heldout = rctm::load_corpus_dir(heldout_dir);

  json results;
  const bool all = metric == "all";
  if (all || metric == "perplexity")
    results["perplexity"] = rctm::perplexity(heldout, summary, fic, workers);
  if (all || metric == "coherence") {
    const rctm::SlicedCorpus reference =
        reference_dir.empty() ? heldout : rctm::load_corpus_dir(reference_dir);
    const auto coh = rctm::coherence_npmi(summary, reference, top_k);
    results["coherence"]["per_topic"] = coh.per_topic;
    results["coherence"]["average"] = coh.average;
    results["coherence"]["skipped_pairs"] = coh.skipped_pairs;
  }
  if (all || metric == "timestamp")
    results["time_accuracy"] = rctm::timestamp_accuracy(heldout, summary, fic, workers);

  if (out.empty()) {
    std::cout << results.dump(2) << '\n';
  } else {
    std::ofstream os(out);
    if (!os) throw std::runtime_error("cannot write " + out);
    os << results.dump(2) << '\n';
    std::printf("results -> %s\n", out.c_str());
  }
  return 0;
}

int run_export(const std::string& checkpoint, const std::string& out, std::uint32_t top_n) {
  rctm::PosteriorSummary summary;
  const rctm::ModelState state = rctm::load_checkpoint(checkpoint, &summary);
  const bool use_summary = summary.retained > 0;
  fs::create_directories(fs::path(out) / "plotdata");

  json topics = json::array();
  for (std::uint32_t t = 0; t < state.T; ++t) {
    const std::uint32_t K = use_summary ? summary.slice_K[t] : state.K(t);
    const auto& phi = use_summary ? summary.mean_phi[t] : state.slices[t].phi;
    json slice_topics = json::array();
    for (std::uint32_t k = 0; k < K; ++k) {
      const auto idx = rctm::top_words(phi, K, state.V, k, top_n);
      json topic;
      topic["slice"] = t;
      topic["topic"] = k;
      auto& words = topic["words"] = json::array();
      auto& probs = topic["probs"] = json::array();
      for (std::uint32_t w : idx) {
        words.push_back(state.vocab[w]);
        probs.push_back(phi[static_cast<std::size_t>(k) * state.V + w]);
      }
      slice_topics.push_back(std::move(topic));
    }
    topics.push_back(std::move(slice_topics));
  }
  {
    std::ofstream os(fs::path(out) / "topics.json");
    os << topics.dump(2) << '\n';
  }
  {
    std::ofstream os(fs::path(out) / "couplings.csv");
    os << "transition,from_topic,to_topic,weight\n";
    for (std::uint32_t t = 1; t < state.T; ++t) {
      const auto& b = use_summary ? summary.mean_b[t] : state.slices[t].b_prev;
      const std::uint32_t K = use_summary ? summary.slice_K[t] : state.K(t);
      const std::uint32_t Kp = use_summary ? summary.slice_K[t - 1] : state.K(t - 1);
      char buf[64];
      for (std::uint32_t kp = 0; kp < Kp; ++kp)
        for (std::uint32_t k = 0; k < K; ++k) {
          std::snprintf(buf, sizeof(buf), "%.17g", b[static_cast<std::size_t>(kp) * K + k]);
          os << t << ',' << kp << ',' << k << ',' << buf << '\n';
        }
    }
  }
  for (std::uint32_t t = 1; t < state.T; ++t) {
    const auto& b = use_summary ? summary.mean_b[t] : state.slices[t].b_prev;
    const std::uint32_t K = use_summary ? summary.slice_K[t] : state.K(t);
    const std::uint32_t Kp = use_summary ? summary.slice_K[t - 1] : state.K(t - 1);
    std::ofstream os(fs::path(out) / "plotdata" / ("B_" + std::to_string(t) + ".csv"));
    char buf[64];
    for (std::uint32_t kp = 0; kp < Kp; ++kp) {
      for (std::uint32_t k = 0; k < K; ++k) {
        std::snprintf(buf, sizeof(buf), "%.17g", b[static_cast<std::size_t>(kp) * K + k]);
        os << (k ? "," : "") << buf;
      }
      os << '\n';
    }
  }
  if (use_summary) {
    std::ofstream os(fs::path(out) / "plotdata" / "loglik.csv");
    os << "iter,loglik\n";
    char buf[64];
    for (std::size_t i = 0; i < summary.loglik_trace.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", summary.loglik_trace[i]);
      os << (i + 1) << ',' << buf << '\n';
    }
    std::ofstream ks(fs::path(out) / "plotdata" / "k_trace.csv");
    ks << "iter";
    for (std::uint32_t t = 0; t < state.T; ++t) ks << ",K_" << (t + 1);
    ks << '\n';
    for (std::size_t i = 0; i < summary.k_trace.size(); ++i) {
      ks << (i + 1);
      for (std::uint32_t v : summary.k_trace[i]) ks << ',' << v;
      ks << '\n';
    }
  }
  std::printf("export -> %s\n", out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"recurrent coupled topic modeling over sequential documents"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file; flags take precedence");

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "build a sliced corpus from jsonl/tsv");
  std::string in_path, in_format = "jsonl", in_out = "corpus";
  std::uint32_t in_slices = 1;
  std::int64_t in_duration = 0;
  rctm::PreprocessOptions pre;
  ingest_cmd->add_option("--input", in_path, "jsonl or tsv input")->required();
  ingest_cmd->add_option("--format", in_format, "jsonl | tsv")->default_val("jsonl");
  ingest_cmd->add_option("--slices", in_slices, "number of equidistant time slices")
      ->default_val(1);
  ingest_cmd->add_option("--slice-duration", in_duration, "slice span in seconds (overrides --slices)");
  ingest_cmd->add_option("--out", in_out, "output corpus directory")->default_val("corpus");
  ingest_cmd->add_option("--stopwords", pre.stopword_path, "stopword file, one term per line");
  ingest_cmd->add_option("--min-df", pre.min_df, "minimum document frequency")->default_val(1);
  ingest_cmd->add_option("--max-df", pre.max_df, "maximum document-frequency fraction")
      ->default_val(1.0);

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic coupled-chain corpus");
  rctm::SynthConfig scfg;
  std::string synth_out = "synth";
  synth_cmd->add_option("--docs", scfg.docs_per_slice)->default_val(1000);
  synth_cmd->add_option("--vocab", scfg.vocab)->default_val(1000);
  synth_cmd->add_option("--topics", scfg.topics)->default_val(10);
  synth_cmd->add_option("--slices", scfg.slices)->default_val(3);
  synth_cmd->add_option("--doc-length", scfg.doc_length)->default_val(100);
  synth_cmd->add_option("--eta", scfg.eta)->default_val(0.1);
  synth_cmd->add_option("--alpha", scfg.alpha)->default_val(0.1);
  synth_cmd->add_option("--seed", scfg.seed)->default_val(1);
  synth_cmd->add_option("--out", synth_out)->default_val("synth");

  // train
  auto* train_cmd = app.add_subcommand("train", "run the Gibbs sampler");
  std::string train_corpus, train_out = "model";
  HyperFlags hf;
  rctm::TrainConfig tcfg;
  train_cmd->add_option("--corpus", train_corpus, "corpus directory")->required();
  train_cmd->add_option("--out", train_out, "output directory")->default_val("model");
  hf.attach(train_cmd);
  train_cmd->add_option("--iterations", tcfg.max_iterations)->default_val(1000);
  train_cmd->add_option("--burn-in", tcfg.burn_in)->default_val(500);
  train_cmd->add_option("--thin", tcfg.thin)->default_val(2);
  train_cmd->add_option("--seed", tcfg.seed)->default_val(1);
  train_cmd->add_option("--checkpoint-every", tcfg.checkpoint_every)->default_val(0);
  train_cmd->add_option("--validate-every", tcfg.validate_every)->default_val(0);
  train_cmd->add_option("--trace", tcfg.trace_path, "per-iteration CSV path");
  bool verbose = false;
  train_cmd->add_flag("--verbose", verbose, "progress to stderr every 100 iterations");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "held-out evaluation of a trained model");
  std::string ev_ckpt, ev_heldout, ev_reference, ev_metric = "all", ev_out;
  rctm::FoldInConfig fic;
  std::uint32_t ev_topk = 10;
  std::uint32_t ev_workers = std::max(1u, std::thread::hardware_concurrency());
  eval_cmd->add_option("--checkpoint", ev_ckpt)->required();
  eval_cmd->add_option("--heldout", ev_heldout, "held-out corpus directory")->required();
  eval_cmd->add_option("--reference", ev_reference, "coherence reference corpus (default: held-out)");
  eval_cmd->add_option("--metric", ev_metric, "perplexity | coherence | timestamp | all")
      ->default_val("all");
  eval_cmd->add_option("--out", ev_out, "results JSON path (default: stdout)");
  eval_cmd->add_option("--sweeps", fic.sweeps, "fold-in sweeps")->default_val(50);
  eval_cmd->add_option("--alpha", fic.alpha, "fold-in Dirichlet weight")->default_val(0.1);
  eval_cmd->add_option("--seed", fic.seed)->default_val(1);
  eval_cmd->add_option("--topk", ev_topk, "coherence top-k")->default_val(10);
  eval_cmd->add_option("--workers", ev_workers, "parallel fold-in workers");

  // export
  auto* export_cmd = app.add_subcommand("export", "topics.json, couplings.csv, plotdata/");
  std::string ex_ckpt, ex_out = "export";
  std::uint32_t ex_topn = 8;
  export_cmd->add_option("--checkpoint", ex_ckpt)->required();
  export_cmd->add_option("--out", ex_out)->default_val("export");
  export_cmd->add_option("--top-n", ex_topn, "words per topic")->default_val(8);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (*ingest_cmd)
      return run_ingest(in_path, in_format, in_slices, in_duration, in_out, pre);
    if (*synth_cmd) return run_synth(scfg, synth_out);
    if (*train_cmd) {
      tcfg.quiet = !verbose;
      if (tcfg.burn_in >= tcfg.max_iterations) tcfg.burn_in = tcfg.max_iterations / 2;
      return run_train(train_corpus, train_out, hf, tcfg);
    }
    if (*eval_cmd)
      return run_eval(ev_ckpt, ev_heldout, ev_reference, ev_metric, ev_out, fic, ev_topk,
                      ev_workers);
    if (*export_cmd) return run_export(ex_ckpt, ex_out, ex_topn);
  } catch (const rctm::NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
