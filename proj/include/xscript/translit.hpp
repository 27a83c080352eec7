#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace xscript {

// Pluggable roman-to-Devanagari word transliteration. Real systems can be
// swapped in by preprocessing the dataset TSV offline; the shipped table
// implementation exists so synthetic corpora are self-contained.
class Transliterator {
 public:
  virtual ~Transliterator() = default;
  virtual std::string transliterate(const std::string& word) const = 0;
};

// Longest-match greedy substitution over a latin-sequence -> devanagari table.
// Unknown characters pass through unchanged. Deterministic by construction.
class TableTransliterator : public Transliterator {
 public:
  using Entries = std::vector<std::pair<std::string, std::string>>;

  explicit TableTransliterator(Entries entries);

  static const TableTransliterator& builtin();
  // Two-column TSV: latin<TAB>devanagari. DataError with 1-based line number
  // on malformed lines or duplicate keys.
  static TableTransliterator from_tsv(const std::string& path);

  std::string transliterate(const std::string& word) const override;
  const Entries& entries() const { return entries_; }

 private:
  Entries entries_;  // sorted by key for stable equality checks
  std::unordered_map<std::string, std::string> map_;
  std::size_t max_key_len_ = 1;
};

// Shorthand for builtin().transliterate(word).
std::string toy_transliterate(const std::string& word);

}  // namespace xscript
