#include "rctm/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "rctm/rng.hpp"

namespace rctm {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t Document::token_total() const {
  std::uint64_t n = 0;
  for (const auto& [w, c] : counts) n += c;
  return n;
}

std::uint64_t SlicedCorpus::token_total() const {
  std::uint64_t n = 0;
  for (const auto& s : slices)
    for (const auto& d : s) n += d.token_total();
  return n;
}

std::size_t SlicedCorpus::doc_total() const {
  std::size_t n = 0;
  for (const auto& s : slices) n += s.size();
  return n;
}

namespace {

struct RawDoc {
  std::string id;
  std::int64_t timestamp;
  std::vector<std::string> tokens;
};

std::vector<std::string> tokenize(const std::string& text, bool lowercase) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const unsigned char u = static_cast<unsigned char>(ch);
    if (std::isalnum(u)) {
      cur.push_back(lowercase ? static_cast<char>(std::tolower(u)) : ch);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::set<std::string> load_stopwords(const std::string& path) {
  std::set<std::string> stop;
  if (path.empty()) return stop;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open stopword file: " + path);
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (!line.empty()) stop.insert(line);
  }
  return stop;
}

RawDoc parse_jsonl_line(const std::string& line, std::size_t lineno) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("line " + std::to_string(lineno) + ": invalid JSON: " + e.what());
  }
  RawDoc d;
  try {
    if (j.at("id").is_string())
      d.id = j["id"].get<std::string>();
    else
      d.id = j["id"].dump();
    d.timestamp = j.at("timestamp").get<std::int64_t>();
    d.tokens = {j.at("text").get<std::string>()};
  } catch (const json::exception& e) {
    throw std::runtime_error("line " + std::to_string(lineno) +
                             ": missing or malformed field: " + e.what());
  }
  return d;
}

RawDoc parse_tsv_line(const std::string& line, std::size_t lineno) {
  const auto tab1 = line.find('\t');
  const auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
  if (tab1 == std::string::npos || tab2 == std::string::npos)
    throw std::runtime_error("line " + std::to_string(lineno) + ": expected id\\tts\\ttext");
  RawDoc d;
  d.id = line.substr(0, tab1);
  try {
    d.timestamp = std::stoll(line.substr(tab1 + 1, tab2 - tab1 - 1));
  } catch (const std::exception&) {
    throw std::runtime_error("line " + std::to_string(lineno) + ": bad timestamp");
  }
  d.tokens = {line.substr(tab2 + 1)};
  return d;
}

}  // namespace

SlicedCorpus ingest(const std::string& path, IngestFormat format,
                    const PreprocessOptions& options, IngestReport* report) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open input file: " + path);
  const auto stop = load_stopwords(options.stopword_path);

  std::vector<RawDoc> raw;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    while (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    RawDoc d = format == IngestFormat::kJsonl ? parse_jsonl_line(line, lineno)
                                              : parse_tsv_line(line, lineno);
    auto toks = tokenize(d.tokens[0], options.lowercase);
    d.tokens.clear();
    for (auto& t : toks)
      if (!stop.count(t)) d.tokens.push_back(std::move(t));
    raw.push_back(std::move(d));
  }

  // document frequency over stopword-filtered tokens
  std::map<std::string, std::uint32_t> df;
  for (const auto& d : raw) {
    std::set<std::string> uniq(d.tokens.begin(), d.tokens.end());
    for (const auto& t : uniq) ++df[t];
  }
  if (report) report->raw_terms = static_cast<std::uint32_t>(df.size());

  const double ndocs = static_cast<double>(raw.size());
  std::vector<std::string> vocab;
  for (const auto& [term, f] : df) {
    if (f >= options.min_df && static_cast<double>(f) <= options.max_df * ndocs)
      vocab.push_back(term);
  }
  std::map<std::string, std::uint32_t> index;
  for (std::uint32_t i = 0; i < vocab.size(); ++i) index[vocab[i]] = i;

  std::vector<Document> docs;
  std::uint32_t dropped = 0;
  for (auto& d : raw) {
    std::map<std::uint32_t, std::uint32_t> counts;
    for (const auto& t : d.tokens) {
      auto it = index.find(t);
      if (it != index.end()) ++counts[it->second];
    }
    if (counts.empty()) {
      ++dropped;
      continue;
    }
    Document doc;
    doc.id = std::move(d.id);
    doc.timestamp = d.timestamp;
    doc.counts.assign(counts.begin(), counts.end());
    docs.push_back(std::move(doc));
  }
  if (report) report->dropped_empty_docs = dropped;
  if (docs.empty()) throw std::runtime_error("ingest: no documents survived preprocessing");

  std::int64_t lo = std::numeric_limits<std::int64_t>::max();
  std::int64_t hi = std::numeric_limits<std::int64_t>::min();
  for (const auto& d : docs) {
    lo = std::min(lo, d.timestamp);
    hi = std::max(hi, d.timestamp);
  }
  SlicedCorpus corpus;
  corpus.vocabulary = std::move(vocab);
  corpus.slice_boundaries = {lo, hi + 1};
  corpus.slices.push_back(std::move(docs));
  return corpus;
}

namespace {

SlicedCorpus repartition(const SlicedCorpus& corpus, std::uint32_t T, std::int64_t lo,
                         std::int64_t hi) {
  SlicedCorpus out;
  out.vocabulary = corpus.vocabulary;
  out.slices.resize(T);
  out.slice_boundaries.resize(T + 1);
  const double span = static_cast<double>(hi - lo);
  for (std::uint32_t t = 0; t <= T; ++t) {
    out.slice_boundaries[t] =
        lo + static_cast<std::int64_t>(std::llround(span * t / static_cast<double>(T)));
  }
  out.slice_boundaries[T] = hi;  // exactness at the top edge
  for (const auto& s : corpus.slices) {
    for (const auto& d : s) {
      std::uint32_t t = 0;
      while (t + 1 < T && d.timestamp >= out.slice_boundaries[t + 1]) ++t;
      out.slices[t].push_back(d);
    }
  }
  for (auto& s : out.slices) {
    std::stable_sort(s.begin(), s.end(), [](const Document& a, const Document& b) {
      return a.timestamp < b.timestamp;
    });
  }
  return out;
}

}  // namespace

SlicedCorpus slice(const SlicedCorpus& corpus, std::uint32_t T) {
  if (T < 1) throw std::runtime_error("slice: T must be >= 1");
  if (corpus.doc_total() == 0) throw std::runtime_error("slice: empty corpus");
  std::int64_t lo = std::numeric_limits<std::int64_t>::max();
  std::int64_t hi = std::numeric_limits<std::int64_t>::min();
  for (const auto& s : corpus.slices)
    for (const auto& d : s) {
      lo = std::min(lo, d.timestamp);
      hi = std::max(hi, d.timestamp);
    }
  if (lo == hi && T > 1)
    throw std::runtime_error("slice: zero-width time range cannot be cut into T > 1 slices");
  return repartition(corpus, T, lo, lo == hi ? hi + 1 : hi);
}

SlicedCorpus slice_by_duration(const SlicedCorpus& corpus, std::int64_t duration) {
  if (duration <= 0) throw std::runtime_error("slice: duration must be positive");
  if (corpus.doc_total() == 0) throw std::runtime_error("slice: empty corpus");
  std::int64_t lo = std::numeric_limits<std::int64_t>::max();
  std::int64_t hi = std::numeric_limits<std::int64_t>::min();
  for (const auto& s : corpus.slices)
    for (const auto& d : s) {
      lo = std::min(lo, d.timestamp);
      hi = std::max(hi, d.timestamp);
    }
  const std::int64_t span = hi - lo;
  const std::uint32_t T = static_cast<std::uint32_t>(span / duration) + 1;
  return repartition(corpus, T, lo, lo + static_cast<std::int64_t>(T) * duration);
}

SplitCorpus split(const SlicedCorpus& corpus, double p, std::uint64_t seed) {
  if (!(p > 0.0 && p < 1.0)) throw std::runtime_error("split: p must be in (0,1)");
  SplitCorpus out;
  out.ratio = p;
  out.train.vocabulary = corpus.vocabulary;
  out.train.slice_boundaries = corpus.slice_boundaries;
  out.heldout.vocabulary = corpus.vocabulary;
  out.heldout.slice_boundaries = corpus.slice_boundaries;
  out.train.slices.resize(corpus.slices.size());
  out.heldout.slices.resize(corpus.slices.size());
  RngStream rng(seed, stream::kSplit);
  for (std::size_t t = 0; t < corpus.slices.size(); ++t) {
    const auto& docs = corpus.slices[t];
    const std::size_t n = docs.size();
    if (n < 2) {
      out.train.slices[t] = docs;
      if (n > 0) ++out.unsplit_slices;
      continue;
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = n - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(rng.next_u64() % (i + 1));
      std::swap(order[i], order[j]);
    }
    std::size_t n_train = static_cast<std::size_t>(std::llround(p * static_cast<double>(n)));
    n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    std::vector<std::size_t> train_idx(order.begin(), order.begin() + n_train);
    std::vector<std::size_t> held_idx(order.begin() + n_train, order.end());
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(held_idx.begin(), held_idx.end());
    for (std::size_t i : train_idx) out.train.slices[t].push_back(docs[i]);
    for (std::size_t i : held_idx) out.heldout.slices[t].push_back(docs[i]);
  }
  return out;
}

void save_corpus_dir(const SlicedCorpus& corpus, const std::string& dir) {
  fs::create_directories(fs::path(dir) / "slices");
  {
    std::ofstream v(fs::path(dir) / "vocab.txt");
    if (!v) throw std::runtime_error("cannot write vocab.txt under " + dir);
    for (const auto& term : corpus.vocabulary) v << term << '\n';
  }
  {
    json meta;
    meta["slice_boundaries"] = corpus.slice_boundaries;
    meta["num_slices"] = corpus.num_slices();
    meta["vocab_size"] = corpus.vocab_size();
    std::ofstream m(fs::path(dir) / "meta.json");
    m << meta.dump(2) << '\n';
  }
  for (std::uint32_t t = 0; t < corpus.num_slices(); ++t) {
    std::ofstream s(fs::path(dir) / "slices" / (std::to_string(t) + ".jsonl"));
    for (const auto& d : corpus.slices[t]) {
      json j;
      j["id"] = d.id;
      auto& arr = j["counts"] = json::array();
      for (const auto& [w, c] : d.counts) arr.push_back({w, c});
      s << j.dump() << '\n';
    }
  }
}

SlicedCorpus load_corpus_dir(const std::string& dir) {
  SlicedCorpus corpus;
  {
    std::ifstream v(fs::path(dir) / "vocab.txt");
    if (!v) throw std::runtime_error("cannot open vocab.txt under " + dir);
    std::string line;
    while (std::getline(v, line)) {
      while (!line.empty() && line.back() == '\r') line.pop_back();
      corpus.vocabulary.push_back(line);
    }
    while (!corpus.vocabulary.empty() && corpus.vocabulary.back().empty())
      corpus.vocabulary.pop_back();
  }
  json meta;
  {
    std::ifstream m(fs::path(dir) / "meta.json");
    if (!m) throw std::runtime_error("cannot open meta.json under " + dir);
    m >> meta;
  }
  corpus.slice_boundaries = meta.at("slice_boundaries").get<std::vector<std::int64_t>>();
  const std::uint32_t T = meta.at("num_slices").get<std::uint32_t>();
  corpus.slices.resize(T);
  for (std::uint32_t t = 0; t < T; ++t) {
    std::ifstream s(fs::path(dir) / "slices" / (std::to_string(t) + ".jsonl"));
    if (!s) throw std::runtime_error("cannot open slice file " + std::to_string(t));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(s, line)) {
      ++lineno;
      if (line.empty()) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        throw std::runtime_error("slice " + std::to_string(t) + " line " +
                                 std::to_string(lineno) + ": " + e.what());
      }
      Document d;
      d.id = j.at("id").get<std::string>();
      d.timestamp = corpus.slice_boundaries[t];
      for (const auto& pair : j.at("counts")) {
        const std::uint32_t w = pair.at(0).get<std::uint32_t>();
        const std::uint32_t c = pair.at(1).get<std::uint32_t>();
        if (w >= corpus.vocabulary.size())
          throw std::runtime_error("slice " + std::to_string(t) + " line " +
                                   std::to_string(lineno) + ": word index out of range");
        d.counts.emplace_back(w, c);
      }
      corpus.slices[t].push_back(std::move(d));
    }
  }
  return corpus;
}

}  // namespace rctm
