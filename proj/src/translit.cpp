#include "xscript/translit.hpp"

#include <algorithm>
#include <fstream>

#include "xscript/errors.hpp"

namespace xscript {

TableTransliterator::TableTransliterator(Entries entries)
    : entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end());
  for (const auto& [key, value] : entries_) {
    if (key.empty())
      throw ConfigError("transliteration table contains an empty key");
    if (!map_.emplace(key, value).second)
      throw ConfigError("duplicate transliteration key '" + key + "'");
    max_key_len_ = std::max(max_key_len_, key.size());
  }
}

std::string TableTransliterator::transliterate(const std::string& word) const {
  std::string out;
  std::size_t i = 0;
  while (i < word.size()) {
    bool matched = false;
    const std::size_t longest = std::min(max_key_len_, word.size() - i);
    for (std::size_t len = longest; len >= 1; --len) {
      auto it = map_.find(word.substr(i, len));
      if (it != map_.end()) {
        out += it->second;
        i += len;
        matched = true;
        break;
      }
    }
    if (!matched) {
      out += word[i];
      ++i;
    }
  }
  return out;
}

const TableTransliterator& TableTransliterator::builtin() {
  static const TableTransliterator instance(Entries{
      {"chh", "छ"},  // छ
      {"aa", "आ"},   // आ
      {"ii", "ई"},   // ई
      {"uu", "ऊ"},   // ऊ
      {"ai", "ऐ"},   // ऐ
      {"au", "औ"},   // औ
      {"kh", "ख"},   // ख
      {"gh", "घ"},   // घ
      {"ch", "च"},   // च
      {"jh", "झ"},   // झ
      {"th", "थ"},   // थ
      {"dh", "ध"},   // ध
      {"ph", "फ"},   // फ
      {"bh", "भ"},   // भ
      {"sh", "श"},   // श
      {"a", "अ"},    // अ
      {"b", "ब"},    // ब
      {"c", "ट"},    // ट
      {"d", "द"},    // द
      {"e", "ए"},    // ए
      {"f", "फ़"},    // फ़
      {"g", "ग"},    // ग
      {"h", "ह"},    // ह
      {"i", "इ"},    // इ
      {"j", "ज"},    // ज
      {"k", "क"},    // क
      {"l", "ल"},    // ल
      {"m", "म"},    // म
      {"n", "न"},    // न
      {"o", "ओ"},    // ओ
      {"p", "प"},    // प
      {"q", "क़"},    // क़
      {"r", "र"},    // र
      {"s", "स"},    // स
      {"t", "त"},    // त
      {"u", "उ"},    // उ
      {"v", "व"},    // व
      {"w", "ङ"},    // ङ
      {"x", "ष"},    // ष
      {"y", "य"},    // य
      {"z", "ज़"},    // ज़
  });
  return instance;
}

TableTransliterator TableTransliterator::from_tsv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open transliteration table " + path);
  Entries entries;
  std::string line;
  for (int line_no = 1; std::getline(in, line); ++line_no) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no) + ": ";
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
      throw DataError(where + "expected exactly 2 tab-separated fields");
    std::string key = line.substr(0, tab);
    std::string value = line.substr(tab + 1);
    if (key.empty() || value.empty())
      throw DataError(where + "empty transliteration field");
    entries.emplace_back(std::move(key), std::move(value));
  }
  try {
    return TableTransliterator(std::move(entries));
  } catch (const ConfigError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::string toy_transliterate(const std::string& word) {
  return TableTransliterator::builtin().transliterate(word);
}

}  // namespace xscript
