#pragma once
// Token-level plumbing for the encoders: vocabulary with reserved marker
// ids, sequences that remember which token span came from which logical
// unit (claim, inter-document context sentence, title, sentence k), and
// sliding-window splitting for long documents.

#include <map>
#include <string>
#include <vector>

#include "factver/errors.hpp"
#include "factver/text.hpp"

namespace factver {

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kStart = 1;   // sequence-start marker
  static constexpr int kSep = 2;     // separator marker
  static constexpr int kUnk = 3;

  Vocabulary() : tokens_{"<pad>", "<start>", "<sep>", "<unk>"} {
    for (size_t i = 0; i < tokens_.size(); ++i) ids_[tokens_[i]] = static_cast<int>(i);
  }

  void add_text(const std::string& text) {
    for (const std::string& tok : tokenize_terms(text))
      if (ids_.find(tok) == ids_.end()) {
        ids_[tok] = static_cast<int>(tokens_.size());
        tokens_.push_back(tok);
      }
  }

  int id_of(const std::string& tok) const {
    auto it = ids_.find(tok);
    return it == ids_.end() ? kUnk : it->second;
  }

  // Term ids for a text; max_tokens < 0 means unlimited.
  std::vector<int> encode(const std::string& text, int max_tokens = -1) const {
    std::vector<int> out;
    for (const std::string& tok : tokenize_terms(text)) {
      if (max_tokens >= 0 && static_cast<int>(out.size()) >= max_tokens) break;
      out.push_back(id_of(tok));
    }
    return out;
  }

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& token_list() const { return tokens_; }

  static Vocabulary from_token_list(const std::vector<std::string>& list) {
    if (list.size() < 4) throw InputError("vocabulary list lacks the reserved tokens");
    Vocabulary v;
    v.tokens_ = list;
    v.ids_.clear();
    for (size_t i = 0; i < list.size(); ++i) v.ids_[list[i]] = static_cast<int>(i);
    return v;
  }

 private:
  std::map<std::string, int> ids_;
  std::vector<std::string> tokens_;
};

// Logical unit a token span originated from.
struct UnitKey {
  enum class Kind { Claim = 0, Top1 = 1, Title = 2, Sentence = 3 };
  Kind kind = Kind::Claim;
  int index = 0;  // sentence position for Kind::Sentence, entry position for Kind::Title

  static UnitKey claim() { return {Kind::Claim, 0}; }
  static UnitKey top1() { return {Kind::Top1, 0}; }
  static UnitKey title(int i = 0) { return {Kind::Title, i}; }
  static UnitKey sentence(int i) { return {Kind::Sentence, i}; }

  bool operator<(const UnitKey& o) const {
    if (kind != o.kind) return static_cast<int>(kind) < static_cast<int>(o.kind);
    return index < o.index;
  }
  bool operator==(const UnitKey& o) const { return kind == o.kind && index == o.index; }
};

struct Span {
  int begin = 0;
  int len = 0;
};

// A marker-delimited token sequence. Everything before prefix_len is the
// fixed context (start marker, claim, optional inter-document sentence,
// whatever the layout pins); windowing slides only over the payload after
// it. origin_spans locate each logical unit inside this sequence.
struct TokenSequence {
  std::vector<int> tokens;
  std::vector<int> segment_marks;          // positions of start/separator markers
  std::map<UnitKey, Span> origin_spans;
  int prefix_len = 0;

  int length() const { return static_cast<int>(tokens.size()); }
};

// Incremental sequence assembly; keeps spans and marker positions honest.
class SequenceBuilder {
 public:
  SequenceBuilder() { push_marker(Vocabulary::kStart); }

  void sep() { push_marker(Vocabulary::kSep); }

  void unit(UnitKey key, const std::vector<int>& ids) {
    Span span{seq_.length(), static_cast<int>(ids.size())};
    seq_.tokens.insert(seq_.tokens.end(), ids.begin(), ids.end());
    seq_.origin_spans[key] = span;
  }

  // Everything appended so far becomes the fixed window prefix.
  void end_prefix() { seq_.prefix_len = seq_.length(); }

  TokenSequence take() { return std::move(seq_); }

 private:
  void push_marker(int id) {
    seq_.segment_marks.push_back(seq_.length());
    seq_.tokens.push_back(id);
  }

  TokenSequence seq_;
};

// Splits a sequence into overlapping windows of at most max_len tokens.
// Every window repeats the prefix; the payload slice advances by `stride`
// tokens per window (less if the payload room is smaller, so nothing is
// skipped). Every payload token lands in at least one window.
inline std::vector<TokenSequence> split_windows(const TokenSequence& seq, int max_len = 512,
                                                int stride = 128) {
  if (max_len < 1 || stride < 1) throw InputError("split_windows: max_len and stride must be >= 1");
  const int total = seq.length();
  const int prefix = seq.prefix_len;
  const int payload = total - prefix;
  if (total <= max_len) return {seq};
  const int room = max_len - prefix;
  if (room <= 0)
    throw InputError("split_windows: prefix of " + std::to_string(prefix) +
                     " tokens leaves no payload room at max_len " + std::to_string(max_len));
  const int advance = std::min(stride, room);

  std::vector<TokenSequence> windows;
  for (int start = 0;; start += advance) {
    const int take = std::min(room, payload - start);
    TokenSequence w;
    w.prefix_len = prefix;
    w.tokens.assign(seq.tokens.begin(), seq.tokens.begin() + prefix);
    w.tokens.insert(w.tokens.end(), seq.tokens.begin() + prefix + start,
                    seq.tokens.begin() + prefix + start + take);
    for (int m : seq.segment_marks) {
      if (m < prefix) {
        w.segment_marks.push_back(m);
      } else {
        int rel = m - prefix - start;
        if (rel >= 0 && rel < take) w.segment_marks.push_back(prefix + rel);
      }
    }
    // A unit belongs to the windows that contain its first token; readers
    // take the first such window. Spans are clipped to the window edge.
    for (const auto& [key, span] : seq.origin_spans) {
      if (span.begin < prefix) {
        w.origin_spans[key] = span;
        continue;
      }
      int rel = span.begin - prefix - start;
      if (rel >= 0 && rel < take)
        w.origin_spans[key] = Span{prefix + rel, std::min(span.len, take - rel)};
    }
    windows.push_back(std::move(w));
    if (start + take >= payload) break;
  }
  return windows;
}

// Position of a unit's first token inside a window, for first-token
// representation reads.
inline int unit_first_pos(const TokenSequence& window, UnitKey key) {
  auto it = window.origin_spans.find(key);
  if (it == window.origin_spans.end())
    throw InputError("sequence window has no span for the requested unit");
  return it->second.begin;
}

// Index of the first window whose spans include the unit.
inline int window_of_unit(const std::vector<TokenSequence>& windows, UnitKey key) {
  for (size_t i = 0; i < windows.size(); ++i)
    if (windows[i].origin_spans.count(key)) return static_cast<int>(i);
  throw InputError("no window contains the requested unit");
}

}  // namespace factver
