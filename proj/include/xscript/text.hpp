#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace xscript {

// Sentiment classes; integer values double as class indices everywhere.
enum class Label : int { negative = 0, neutral = 1, positive = 2 };

constexpr int kNumClasses = 3;

Label parse_label(const std::string& text);  // DataError on unknown strings
const std::string& label_name(Label label);
const std::string& label_name(int label);

// One sentence in both scripts. The two word sequences are aligned word by
// word; the explainer's paired masking depends on equal word counts.
struct ScriptPairExample {
  std::vector<std::string> roman_words;
  std::vector<std::string> deva_words;
  Label label = Label::neutral;

  std::string roman_text() const;
  std::string deva_text() const;
};

std::vector<std::string> split_words(const std::string& text);
std::string join_words(const std::vector<std::string>& words);

// TSV: roman<TAB>deva<TAB>label, UTF-8, LF. Parse errors carry 1-based line
// numbers; unequal word counts between the scripts are rejected.
std::vector<ScriptPairExample> load_examples_tsv(const std::string& path);
void save_examples_tsv(const std::string& path,
                       const std::vector<ScriptPairExample>& examples);

struct Dataset {
  std::vector<ScriptPairExample> train;
  std::vector<ScriptPairExample> validation;
  std::vector<ScriptPairExample> test;
};

// Reads <dir>/train.tsv, <dir>/validation.tsv, <dir>/test.tsv.
Dataset load_dataset(const std::string& dir);

// Token ids with three reserved slots. Ids are dense: specials 0..2, then one
// id per kept token in (count desc, token asc) order.
class Vocabulary {
 public:
  static constexpr int kCls = 0;
  static constexpr int kPad = 1;
  static constexpr int kUnk = 2;
  static constexpr int kNumSpecials = 3;

  Vocabulary() = default;

  // Builds from whitespace tokens; tokens seen fewer than min_frequency times
  // are dropped (they encode as UNK later).
  static Vocabulary build(const std::vector<std::vector<std::string>>& sentences,
                          int min_frequency);

  int id_of(const std::string& token) const;  // kUnk when absent
  const std::string& token_of(int id) const;  // DataError out of range
  bool contains(const std::string& token) const;
  int size() const;  // includes the three specials

  // One token per line; id = line index + 3. Specials are implicit.
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

// One vocabulary per script, built from the training split only.
std::pair<Vocabulary, Vocabulary> build_vocabs(
    const std::vector<ScriptPairExample>& train, int min_frequency = 1);

struct Encoded {
  std::vector<int> ids;      // [CLS] + word ids, truncated, padded to max_len
  std::vector<double> mask;  // 1.0 exactly at non-PAD positions
};

Encoded encode_words(const std::vector<std::string>& words,
                     const Vocabulary& vocab, int max_len);

// Inverse of encode_words up to truncation and UNK; drops CLS and PAD.
std::vector<std::string> decode_ids(const std::vector<int>& ids,
                                    const Vocabulary& vocab);

struct Batch {
  int size = 0;
  int max_len = 0;
  std::vector<int> roman_ids;       // [size * max_len]
  std::vector<int> deva_ids;        // [size * max_len]
  std::vector<double> roman_mask;   // [size * max_len], 1.0 at non-PAD
  std::vector<double> deva_mask;    // [size * max_len]
  std::vector<int> labels;          // [size]
};

Batch make_batch(const std::vector<ScriptPairExample>& examples,
                 const std::vector<int>& indices, const Vocabulary& roman_vocab,
                 const Vocabulary& deva_vocab, int max_len);
Batch make_batch(const std::vector<ScriptPairExample>& examples,
                 const Vocabulary& roman_vocab, const Vocabulary& deva_vocab,
                 int max_len);

}  // namespace xscript
