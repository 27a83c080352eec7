#include "xscript/text.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "xscript/errors.hpp"

namespace xscript {

namespace {

const std::string kLabelNames[kNumClasses] = {"negative", "neutral",
                                              "positive"};
const std::string kClsToken = "<cls>";
const std::string kPadToken = "<pad>";
const std::string kUnkToken = "<unk>";

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

}  // namespace

Label parse_label(const std::string& text) {
  for (int c = 0; c < kNumClasses; ++c)
    if (text == kLabelNames[c]) return static_cast<Label>(c);
  throw DataError("unknown label '" + text +
                  "' (expected negative, neutral or positive)");
}

const std::string& label_name(Label label) {
  return label_name(static_cast<int>(label));
}

const std::string& label_name(int label) {
  if (label < 0 || label >= kNumClasses)
    throw DataError("label index " + std::to_string(label) +
                    " outside the 3 classes");
  return kLabelNames[label];
}

std::string ScriptPairExample::roman_text() const {
  return join_words(roman_words);
}

std::string ScriptPairExample::deva_text() const {
  return join_words(deva_words);
}

std::vector<std::string> split_words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> words;
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

std::vector<ScriptPairExample> load_examples_tsv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset file " + path);
  std::vector<ScriptPairExample> examples;
  std::string line;
  for (int line_no = 1; std::getline(in, line); ++line_no) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no) + ": ";
    auto fields = split_fields(line);
    if (fields.size() != 3)
      throw DataError(where + "expected 3 tab-separated fields, got " +
                      std::to_string(fields.size()));
    ScriptPairExample ex;
    ex.roman_words = split_words(fields[0]);
    ex.deva_words = split_words(fields[1]);
    if (ex.roman_words.size() != ex.deva_words.size())
      throw DataError(where + "roman and devanagari word counts differ (" +
                      std::to_string(ex.roman_words.size()) + " vs " +
                      std::to_string(ex.deva_words.size()) + ")");
    try {
      ex.label = parse_label(fields[2]);
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
    examples.push_back(std::move(ex));
  }
  return examples;
}

void save_examples_tsv(const std::string& path,
                       const std::vector<ScriptPairExample>& examples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write dataset file " + path);
  for (const auto& ex : examples) {
    out << ex.roman_text() << '\t' << ex.deva_text() << '\t'
        << label_name(ex.label) << '\n';
  }
  if (!out) throw DataError("write failed for dataset file " + path);
}

Dataset load_dataset(const std::string& dir) {
  Dataset d;
  d.train = load_examples_tsv(dir + "/train.tsv");
  d.validation = load_examples_tsv(dir + "/validation.tsv");
  d.test = load_examples_tsv(dir + "/test.tsv");
  return d;
}

Vocabulary Vocabulary::build(
    const std::vector<std::vector<std::string>>& sentences, int min_frequency) {
  if (min_frequency < 1)
    throw ConfigError("min_frequency must be >= 1, got " +
                      std::to_string(min_frequency));
  if (sentences.empty()) throw DataError("cannot build a vocabulary from an empty corpus");
  std::unordered_map<std::string, long long> counts;
  for (const auto& sent : sentences)
    for (const auto& w : sent) ++counts[w];
  std::vector<std::pair<std::string, long long>> kept;
  for (const auto& [token, count] : counts)
    if (count >= min_frequency) kept.emplace_back(token, count);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary v;
  v.tokens_.reserve(kept.size());
  for (const auto& [token, count] : kept) {
    (void)count;
    v.ids_.emplace(token, kNumSpecials + static_cast<int>(v.tokens_.size()));
    v.tokens_.push_back(token);
  }
  return v;
}

int Vocabulary::id_of(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token_of(int id) const {
  switch (id) {
    case kCls: return kClsToken;
    case kPad: return kPadToken;
    case kUnk: return kUnkToken;
    default: break;
  }
  const int index = id - kNumSpecials;
  if (index < 0 || index >= static_cast<int>(tokens_.size()))
    throw DataError("token id " + std::to_string(id) +
                    " outside vocabulary of size " + std::to_string(size()));
  return tokens_[index];
}

bool Vocabulary::contains(const std::string& token) const {
  return ids_.count(token) != 0;
}

int Vocabulary::size() const {
  return kNumSpecials + static_cast<int>(tokens_.size());
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write vocabulary file " + path);
  for (const auto& t : tokens_) out << t << '\n';
  if (!out) throw DataError("write failed for vocabulary file " + path);
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open vocabulary file " + path);
  Vocabulary v;
  std::string line;
  for (int line_no = 1; std::getline(in, line); ++line_no) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty())
      throw DataError(path + ":" + std::to_string(line_no) + ": empty token");
    if (!v.ids_.emplace(line, kNumSpecials + static_cast<int>(v.tokens_.size()))
             .second)
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": duplicate token '" + line + "'");
    v.tokens_.push_back(line);
  }
  return v;
}

std::pair<Vocabulary, Vocabulary> build_vocabs(
    const std::vector<ScriptPairExample>& train, int min_frequency) {
  std::vector<std::vector<std::string>> roman, deva;
  roman.reserve(train.size());
  deva.reserve(train.size());
  for (const auto& ex : train) {
    roman.push_back(ex.roman_words);
    deva.push_back(ex.deva_words);
  }
  return {Vocabulary::build(roman, min_frequency),
          Vocabulary::build(deva, min_frequency)};
}

Encoded encode_words(const std::vector<std::string>& words,
                     const Vocabulary& vocab, int max_len) {
  if (max_len < 1)
    throw ConfigError("max_len must be >= 1, got " + std::to_string(max_len));
  Encoded e;
  e.ids.assign(max_len, Vocabulary::kPad);
  e.mask.assign(max_len, 0.0);
  e.ids[0] = Vocabulary::kCls;
  e.mask[0] = 1.0;
  const int keep = std::min<int>(static_cast<int>(words.size()), max_len - 1);
  for (int k = 0; k < keep; ++k) {
    e.ids[1 + k] = vocab.id_of(words[k]);
    e.mask[1 + k] = 1.0;
  }
  return e;
}

std::vector<std::string> decode_ids(const std::vector<int>& ids,
                                    const Vocabulary& vocab) {
  std::vector<std::string> words;
  for (int id : ids) {
    if (id == Vocabulary::kCls || id == Vocabulary::kPad) continue;
    words.push_back(vocab.token_of(id));
  }
  return words;
}

Batch make_batch(const std::vector<ScriptPairExample>& examples,
                 const std::vector<int>& indices, const Vocabulary& roman_vocab,
                 const Vocabulary& deva_vocab, int max_len) {
  Batch b;
  b.size = static_cast<int>(indices.size());
  b.max_len = max_len;
  b.roman_ids.reserve(indices.size() * max_len);
  b.deva_ids.reserve(indices.size() * max_len);
  b.roman_mask.reserve(indices.size() * max_len);
  b.deva_mask.reserve(indices.size() * max_len);
  for (int idx : indices) {
    if (idx < 0 || idx >= static_cast<int>(examples.size()))
      throw DataError("batch index " + std::to_string(idx) +
                      " outside dataset of size " +
                      std::to_string(examples.size()));
    const auto& ex = examples[idx];
    Encoded r = encode_words(ex.roman_words, roman_vocab, max_len);
    Encoded d = encode_words(ex.deva_words, deva_vocab, max_len);
    b.roman_ids.insert(b.roman_ids.end(), r.ids.begin(), r.ids.end());
    b.deva_ids.insert(b.deva_ids.end(), d.ids.begin(), d.ids.end());
    b.roman_mask.insert(b.roman_mask.end(), r.mask.begin(), r.mask.end());
    b.deva_mask.insert(b.deva_mask.end(), d.mask.begin(), d.mask.end());
    b.labels.push_back(static_cast<int>(ex.label));
  }
  return b;
}

Batch make_batch(const std::vector<ScriptPairExample>& examples,
                 const Vocabulary& roman_vocab, const Vocabulary& deva_vocab,
                 int max_len) {
  std::vector<int> indices(examples.size());
  for (std::size_t i = 0; i < indices.size(); ++i)
    indices[i] = static_cast<int>(i);
  return make_batch(examples, indices, roman_vocab, deva_vocab, max_len);
}

}  // namespace xscript
