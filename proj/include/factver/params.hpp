#pragma once
// Named parameter storage, the Adam optimizer, and checkpoint files.
//
// Parameters live in a std::map keyed by name so iteration order (and hence
// update order, serialization order, and initialization order) is stable
// across runs. Checkpoints are a small binary format:
//
//   magic "FVCKPT01"
//   u32 meta_count, then meta entries (name, i64 value)
//   u32 vocab_count, then vocab tokens in id order
//   u32 tensor_count, then tensors (name, rows, cols, doubles)
//
// Strings are u32 length + bytes. All integers little-endian (we only target
// little-endian hosts; the header asserts this at load time via the magic).

#include <cstdint>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "factver/binio.hpp"
#include "factver/errors.hpp"
#include "factver/mat.hpp"

namespace factver {

struct Param {
  Mat value;
  Mat grad;
  Mat m;  // Adam first moment
  Mat v;  // Adam second moment
};

class ParamStore {
 public:
  std::map<std::string, Param> params;

  Param& create(const std::string& name, int rows, int cols) {
    auto [it, inserted] = params.emplace(name, Param{});
    if (!inserted) throw std::logic_error("duplicate parameter name: " + name);
    Param& p = it->second;
    p.value = Mat(rows, cols);
    p.grad = Mat(rows, cols);
    p.m = Mat(rows, cols);
    p.v = Mat(rows, cols);
    return p;
  }

  Param& get(const std::string& name) {
    auto it = params.find(name);
    if (it == params.end()) throw std::logic_error("unknown parameter: " + name);
    return it->second;
  }

  const Param& get(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end()) throw std::logic_error("unknown parameter: " + name);
    return it->second;
  }

  bool has(const std::string& name) const { return params.count(name) != 0; }

  void zero_grads() {
    for (auto& [name, p] : params) p.grad.zero();
  }

  size_t scalar_count() const {
    size_t n = 0;
    for (const auto& [name, p] : params) n += p.value.size();
    return n;
  }
};

// Adam with linear warmup followed by linear decay to zero. step() is called
// once per optimizer update; the learning-rate schedule runs over
// total_steps updates.
class AdamOptimizer {
 public:
  AdamOptimizer(double lr, double warmup_ratio, long total_steps)
      : base_lr_(lr),
        warmup_steps_(static_cast<long>(warmup_ratio * static_cast<double>(total_steps))),
        total_steps_(total_steps) {}

  double current_lr() const {
    long s = t_ + 1;
    if (warmup_steps_ > 0 && s <= warmup_steps_)
      return base_lr_ * static_cast<double>(s) / static_cast<double>(warmup_steps_);
    if (total_steps_ <= warmup_steps_) return base_lr_;
    double frac = static_cast<double>(total_steps_ - s) /
                  static_cast<double>(total_steps_ - warmup_steps_);
    return base_lr_ * std::max(0.0, frac);
  }

  void step(ParamStore& store) {
    const double lr = current_lr();
    ++t_;
    const double b1c = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double b2c = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (auto& [name, p] : store.params) {
      for (size_t i = 0; i < p.value.size(); ++i) {
        double g = p.grad.a[i];
        p.m.a[i] = beta1_ * p.m.a[i] + (1.0 - beta1_) * g;
        p.v.a[i] = beta2_ * p.v.a[i] + (1.0 - beta2_) * g * g;
        double mhat = p.m.a[i] / b1c;
        double vhat = p.v.a[i] / b2c;
        p.value.a[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
      }
    }
    store.zero_grads();
  }

  long steps_taken() const { return t_; }

 private:
  double base_lr_;
  long warmup_steps_;
  long total_steps_;
  long t_ = 0;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
};

struct Checkpoint {
  std::map<std::string, int64_t> meta;   // model shape: hidden_dim, layers, heads, ...
  std::vector<std::string> vocab;        // token strings in id order
  std::map<std::string, Mat> tensors;
};

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot open checkpoint for writing: " + path);
  static const char magic[8] = {'F', 'V', 'C', 'K', 'P', 'T', '0', '1'};
  os.write(magic, 8);
  binio::write_u32(os, static_cast<uint32_t>(ck.meta.size()));
  for (const auto& [k, v] : ck.meta) {
    binio::write_str(os, k);
    binio::write_i64(os, v);
  }
  binio::write_u32(os, static_cast<uint32_t>(ck.vocab.size()));
  for (const auto& tok : ck.vocab) binio::write_str(os, tok);
  binio::write_u32(os, static_cast<uint32_t>(ck.tensors.size()));
  for (const auto& [name, t] : ck.tensors) {
    binio::write_str(os, name);
    binio::write_u32(os, static_cast<uint32_t>(t.rows));
    binio::write_u32(os, static_cast<uint32_t>(t.cols));
    os.write(reinterpret_cast<const char*>(t.a.data()),
             static_cast<std::streamsize>(t.a.size() * sizeof(double)));
  }
  if (!os) throw InputError("write failed for checkpoint: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open checkpoint: " + path);
  char magic[8] = {};
  is.read(magic, 8);
  if (!is || std::string(magic, 8) != "FVCKPT01")
    throw InputError("not a model checkpoint (bad magic): " + path);
  Checkpoint ck;
  uint32_t metas = binio::read_u32(is);
  for (uint32_t i = 0; i < metas; ++i) {
    std::string k = binio::read_str(is);
    ck.meta[k] = binio::read_i64(is);
  }
  uint32_t vocabs = binio::read_u32(is);
  ck.vocab.reserve(vocabs);
  for (uint32_t i = 0; i < vocabs; ++i) ck.vocab.push_back(binio::read_str(is));
  uint32_t tensors = binio::read_u32(is);
  for (uint32_t i = 0; i < tensors; ++i) {
    std::string name = binio::read_str(is);
    uint32_t r = binio::read_u32(is);
    uint32_t c = binio::read_u32(is);
    Mat t(static_cast<int>(r), static_cast<int>(c));
    is.read(reinterpret_cast<char*>(t.a.data()),
            static_cast<std::streamsize>(t.a.size() * sizeof(double)));
    ck.tensors.emplace(std::move(name), std::move(t));
  }
  if (!is) throw InputError("truncated checkpoint: " + path);
  return ck;
}

// Copies checkpoint tensors into a freshly built store, demanding an exact
// match of names and shapes (a checkpoint from a model with a different
// hidden size fails loudly here).
inline void adopt_checkpoint_tensors(ParamStore& store, const Checkpoint& ck,
                                     const std::string& path) {
  for (const auto& [name, p] : store.params)
    if (!ck.tensors.count(name))
      throw InputError(path + ": checkpoint lacks tensor '" + name + "'");
  for (const auto& [name, value] : ck.tensors) {
    if (!store.has(name)) throw InputError(path + ": unexpected tensor '" + name + "'");
    Param& p = store.get(name);
    if (!p.value.same_shape(value))
      throw InputError(path + ": tensor '" + name + "' has shape " + std::to_string(value.rows) +
                       "x" + std::to_string(value.cols) +
                       " but the model shape metadata implies " + std::to_string(p.value.rows) +
                       "x" + std::to_string(p.value.cols) +
                       " (hidden dimension mismatch or corrupt checkpoint)");
    p.value = value;
  }
}

}  // namespace factver
