#include "xscript/synthetic.hpp"

#include <algorithm>
#include <array>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include "xscript/errors.hpp"
#include "xscript/translit.hpp"

namespace xscript {

namespace {

const std::string kPlacementNames[] = {"roman_only", "deva_advantaged",
                                       "mixed"};

SyntheticLexicon build_lexicon() {
  SyntheticLexicon lex;
  lex.fillers = {"ani", "ta",  "ke",   "po",  "ni",  "hai",
                 "re",  "la",  "kina", "tyo", "yo",  "pani"};

  auto clear = [&](const std::string& roman, Label label) {
    lex.clear_cues.push_back({roman, toy_transliterate(roman), label});
  };
  clear("ramro", Label::positive);
  clear("mitho", Label::positive);
  clear("tito", Label::negative);
  clear("dukha", Label::negative);
  clear("thik", Label::neutral);
  clear("samanya", Label::neutral);

  // One roman form, two devanagari senses with different labels. The second
  // sense appends a vowel sign absent from the transliteration targets, so
  // the two devanagari forms can never collide with anything else.
  auto deva_pair = [&](const std::string& roman, Label plain, Label marked) {
    const std::string base = toy_transliterate(roman);
    lex.deva_advantaged.push_back({roman, base, plain});
    lex.deva_advantaged.push_back({roman, base + "ी", marked});
  };
  deva_pair("maya", Label::positive, Label::negative);
  deva_pair("jhan", Label::negative, Label::neutral);
  deva_pair("kasto", Label::neutral, Label::positive);
  deva_pair("sasto", Label::positive, Label::negative);

  // Two roman forms with different labels sharing one devanagari form.
  auto roman_pair = [&](const std::string& r1, Label l1, const std::string& r2,
                        Label l2) {
    const std::string shared = toy_transliterate(r1);
    lex.roman_advantaged.push_back({r1, shared, l1});
    lex.roman_advantaged.push_back({r2, shared, l2});
  };
  roman_pair("babaal", Label::positive, "bekar", Label::negative);
  roman_pair("jhur", Label::negative, "jhakas", Label::positive);
  roman_pair("thikai", Label::neutral, "osom", Label::positive);
  roman_pair("naramailo", Label::negative, "ramailo", Label::neutral);
  return lex;
}

struct CategoryMix {
  double clear = 0.0;
  double deva_advantaged = 0.0;  // remainder goes to roman_advantaged
};

CategoryMix mix_for(CuePlacement placement) {
  switch (placement) {
    case CuePlacement::roman_only: return {0.0, 0.0};
    case CuePlacement::deva_advantaged: return {0.35, 0.45};
    case CuePlacement::mixed: return {0.30, 0.35};
  }
  throw ConfigError("unknown cue placement");
}

const std::vector<SyntheticCue>& pool_for(const SyntheticLexicon& lex,
                                          double u, const CategoryMix& mix) {
  if (u < mix.clear) return lex.clear_cues;
  if (u < mix.clear + mix.deva_advantaged) return lex.deva_advantaged;
  return lex.roman_advantaged;
}

}  // namespace

CuePlacement parse_cue_placement(const std::string& text) {
  for (int i = 0; i < 3; ++i)
    if (text == kPlacementNames[i]) return static_cast<CuePlacement>(i);
  throw ConfigError("unknown cue placement '" + text +
                    "' (expected roman_only, deva_advantaged or mixed)");
}

const std::string& cue_placement_name(CuePlacement placement) {
  return kPlacementNames[static_cast<int>(placement)];
}

std::vector<std::string> SyntheticLexicon::all_roman_forms() const {
  std::vector<std::string> forms = fillers;
  for (const auto* pool : {&clear_cues, &deva_advantaged, &roman_advantaged})
    for (const auto& cue : *pool) forms.push_back(cue.roman);
  std::sort(forms.begin(), forms.end());
  forms.erase(std::unique(forms.begin(), forms.end()), forms.end());
  return forms;
}

const SyntheticLexicon& synthetic_lexicon() {
  static const SyntheticLexicon lex = build_lexicon();
  return lex;
}

void SyntheticSpec::validate() const {
  for (int size : {train_size, validation_size, test_size})
    if (size < 30)
      throw ConfigError("each split needs at least 30 examples, got " +
                        std::to_string(size));
  if (min_words < 3)
    throw ConfigError("min_words must be >= 3, got " +
                      std::to_string(min_words));
  if (max_words < min_words)
    throw ConfigError("max_words must be >= min_words");
}

SyntheticResult gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const SyntheticLexicon& lex = synthetic_lexicon();
  const CategoryMix mix = mix_for(spec.cue_placement);
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> filler_pick(
      0, static_cast<int>(lex.fillers.size()) - 1);
  std::uniform_int_distribution<int> length_pick(spec.min_words,
                                                 spec.max_words);

  std::unordered_set<std::string> seen;
  const int num_fillers = static_cast<int>(lex.fillers.size());

  // forced_label < 0 leaves the label to the sampled cue. inject >= 0 pins
  // two filler slots so every filler occurs under at least two labels in the
  // training split (consecutive inject values cycle through the classes).
  auto make_sentence = [&](int forced_label, int inject) {
    for (int attempt = 0; attempt < 10000; ++attempt) {
      const auto& pool = pool_for(lex, unit(rng), mix);
      std::vector<const SyntheticCue*> candidates;
      for (const auto& cue : pool)
        if (forced_label < 0 || static_cast<int>(cue.label) == forced_label)
          candidates.push_back(&cue);
      std::uniform_int_distribution<int> cue_pick(
          0, static_cast<int>(candidates.size()) - 1);
      const SyntheticCue& cue = *candidates[cue_pick(rng)];
      const int n = length_pick(rng);
      std::uniform_int_distribution<int> pos_pick(0, n - 1);
      const int cue_pos = pos_pick(rng);
      ScriptPairExample ex;
      ex.label = cue.label;
      ex.roman_words.resize(n);
      ex.deva_words.resize(n);
      int filler_slot = 0;
      for (int k = 0; k < n; ++k) {
        if (k == cue_pos) {
          ex.roman_words[k] = cue.roman;
          ex.deva_words[k] = cue.deva;
          continue;
        }
        int f = filler_pick(rng);
        if (inject >= 0 && filler_slot < 2)
          f = (inject + filler_slot) % num_fillers;
        ++filler_slot;
        ex.roman_words[k] = lex.fillers[f];
        ex.deva_words[k] = toy_transliterate(lex.fillers[f]);
      }
      const std::string key = ex.roman_text() + "\t" + ex.deva_text();
      if (seen.insert(key).second) return ex;
    }
    throw ConfigError(
        "could not generate enough unique sentences; increase max_words or "
        "reduce the split sizes");
  };

  SyntheticResult result;
  for (int s = 0; s < spec.train_size; ++s) {
    const bool inject = s < num_fillers;
    result.data.train.push_back(
        make_sentence(inject ? s % kNumClasses : -1, inject ? s : -1));
  }
  for (int s = 0; s < spec.validation_size; ++s)
    result.data.validation.push_back(make_sentence(-1, -1));
  for (int s = 0; s < spec.test_size; ++s)
    result.data.test.push_back(make_sentence(-1, -1));

  result.roman_oracle_accuracy =
      bow_oracle_accuracy(result.data.train, result.data.test, false);
  result.deva_oracle_accuracy =
      bow_oracle_accuracy(result.data.train, result.data.test, true);
  return result;
}

double bow_oracle_accuracy(const std::vector<ScriptPairExample>& train,
                           const std::vector<ScriptPairExample>& eval,
                           bool use_deva) {
  if (train.empty() || eval.empty())
    throw DataError("bow oracle needs non-empty train and eval sets");
  std::unordered_map<std::string, std::array<long long, kNumClasses>> counts;
  std::array<long long, kNumClasses> global{};
  for (const auto& ex : train) {
    const auto& words = use_deva ? ex.deva_words : ex.roman_words;
    const int c = static_cast<int>(ex.label);
    ++global[c];
    for (const auto& w : words) ++counts[w][c];
  }
  auto argmax_lowest = [](const std::array<long long, kNumClasses>& a) {
    int best = 0;
    for (int c = 1; c < kNumClasses; ++c)
      if (a[c] > a[best]) best = c;
    return best;
  };
  const int majority = argmax_lowest(global);

  long long correct = 0;
  for (const auto& ex : eval) {
    const auto& words = use_deva ? ex.deva_words : ex.roman_words;
    std::array<long long, kNumClasses> votes{};
    bool any = false;
    for (const auto& w : words) {
      auto it = counts.find(w);
      if (it == counts.end()) continue;
      int nonzero = 0, cls = 0;
      for (int c = 0; c < kNumClasses; ++c)
        if (it->second[c] > 0) {
          ++nonzero;
          cls = c;
        }
      if (nonzero == 1) {
        ++votes[cls];
        any = true;
      }
    }
    const int pred = any ? argmax_lowest(votes) : majority;
    if (pred == static_cast<int>(ex.label)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(eval.size());
}

}  // namespace xscript
