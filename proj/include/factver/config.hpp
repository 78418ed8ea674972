#pragma once
// Training and pipeline configuration files: plain `key = value` lines,
// '#' comments, blank lines ignored. Each consumer validates its key set
// strictly in both directions (unknown keys rejected, required keys must
// be present) so a typo cannot silently fall back to a default.

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "factver/errors.hpp"

namespace factver {

inline std::map<std::string, std::string> parse_kv_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  long line_no = 0;
  auto trim = [](std::string s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(is, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw InputError(path + " line " + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    if (key.empty())
      throw InputError(path + " line " + std::to_string(line_no) + ": empty key");
    if (!kv.emplace(key, val).second)
      throw InputError(path + " line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
  }
  return kv;
}

// The key set must match `required` ∪ (whatever subset of `optional` appears).
inline void check_keys(const std::map<std::string, std::string>& kv,
                       const std::set<std::string>& required,
                       const std::set<std::string>& optional, const std::string& path) {
  for (const auto& [k, v] : kv)
    if (!required.count(k) && !optional.count(k))
      throw InputError(path + ": unknown config key '" + k + "'");
  for (const std::string& k : required)
    if (!kv.count(k)) throw InputError(path + ": missing config key '" + k + "'");
}

inline double kv_double(const std::map<std::string, std::string>& kv, const std::string& key) {
  const std::string& s = kv.at(key);
  try {
    size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InputError("config key '" + key + "' is not a number: '" + s + "'");
  }
}

inline long kv_long(const std::map<std::string, std::string>& kv, const std::string& key) {
  const std::string& s = kv.at(key);
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw InputError("config key '" + key + "' is not an integer: '" + s + "'");
  return v;
}

// Sentence retriever training configuration (defaults follow the training
// recipe: lr 1e-5, warmup 0.1, batch 4 with 8-step accumulation, 2 epochs,
// top 5 sentences kept, at most 8 candidate documents per claim).
struct RetrieverConfig {
  double learning_rate = 1e-5;
  double warmup_ratio = 0.1;
  long batch_size = 4;
  long grad_accum = 8;
  long epochs = 2;
  long seed = 0;
  long top_k = 5;
  long doc_cap = 8;

  static RetrieverConfig from_file(const std::string& path) {
    auto kv = parse_kv_file(path);
    check_keys(kv,
               {"learning_rate", "warmup_ratio", "batch_size", "grad_accum", "epochs", "seed",
                "top_k", "doc_cap"},
               {}, path);
    RetrieverConfig c;
    c.learning_rate = kv_double(kv, "learning_rate");
    c.warmup_ratio = kv_double(kv, "warmup_ratio");
    c.batch_size = kv_long(kv, "batch_size");
    c.grad_accum = kv_long(kv, "grad_accum");
    c.epochs = kv_long(kv, "epochs");
    c.seed = kv_long(kv, "seed");
    c.top_k = kv_long(kv, "top_k");
    c.doc_cap = kv_long(kv, "doc_cap");
    c.validate();
    return c;
  }

  void validate() const {
    if (learning_rate <= 0) throw InputError("learning_rate must be positive");
    if (warmup_ratio < 0 || warmup_ratio > 1) throw InputError("warmup_ratio must be in [0,1]");
    if (batch_size < 1 || grad_accum < 1 || epochs < 1 || top_k < 1 || doc_cap < 1)
      throw InputError("batch_size, grad_accum, epochs, top_k, doc_cap must be >= 1");
  }
};

// Claim verifier training configuration (defaults: batch 1 with 32-step
// accumulation, 4 epochs, 4 restarts, 3 graph layers).
struct VerifierConfig {
  double learning_rate = 1e-5;
  double warmup_ratio = 0.1;
  long batch_size = 1;
  long grad_accum = 32;
  long epochs = 4;
  long seed = 0;
  long restarts = 4;
  long graph_layers = 3;

  static VerifierConfig from_file(const std::string& path) {
    auto kv = parse_kv_file(path);
    check_keys(kv,
               {"learning_rate", "warmup_ratio", "batch_size", "grad_accum", "epochs", "seed",
                "restarts", "graph_layers"},
               {}, path);
    VerifierConfig c;
    c.learning_rate = kv_double(kv, "learning_rate");
    c.warmup_ratio = kv_double(kv, "warmup_ratio");
    c.batch_size = kv_long(kv, "batch_size");
    c.grad_accum = kv_long(kv, "grad_accum");
    c.epochs = kv_long(kv, "epochs");
    c.seed = kv_long(kv, "seed");
    c.restarts = kv_long(kv, "restarts");
    c.graph_layers = kv_long(kv, "graph_layers");
    c.validate();
    return c;
  }

  void validate() const {
    if (learning_rate <= 0) throw InputError("learning_rate must be positive");
    if (warmup_ratio < 0 || warmup_ratio > 1) throw InputError("warmup_ratio must be in [0,1]");
    if (batch_size < 1 || grad_accum < 1 || epochs < 1 || restarts < 1 || graph_layers < 1)
      throw InputError("batch_size, grad_accum, epochs, restarts, graph_layers must be >= 1");
  }
};

// End-to-end pipeline run configuration: file locations plus retrieval
// breadth knobs.
struct PipelineConfig {
  std::string index;
  std::string claims;
  std::string retriever1;
  std::string retriever2;
  std::string verifier;
  std::string out_dir;
  long k_tfidf = 5;
  long top_k = 5;

  static PipelineConfig from_file(const std::string& path) {
    auto kv = parse_kv_file(path);
    check_keys(kv, {"index", "claims", "retriever1", "retriever2", "verifier", "out_dir"},
               {"k_tfidf", "top_k"}, path);
    PipelineConfig c;
    c.index = kv.at("index");
    c.claims = kv.at("claims");
    c.retriever1 = kv.at("retriever1");
    c.retriever2 = kv.at("retriever2");
    c.verifier = kv.at("verifier");
    c.out_dir = kv.at("out_dir");
    if (kv.count("k_tfidf")) c.k_tfidf = kv_long(kv, "k_tfidf");
    if (kv.count("top_k")) c.top_k = kv_long(kv, "top_k");
    if (c.k_tfidf < 1 || c.top_k < 1) throw InputError("k_tfidf and top_k must be >= 1");
    return c;
  }
};

}  // namespace factver
