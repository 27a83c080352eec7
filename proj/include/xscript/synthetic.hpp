#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xscript/text.hpp"

namespace xscript {

// Which scripts carry disambiguating sentiment cues in generated sentences.
//  roman_only:      every cue is unambiguous in roman, ambiguous in devanagari
//  deva_advantaged: most cues need the devanagari side to disambiguate
//  mixed:           both scripts are needed about equally often
enum class CuePlacement { roman_only, deva_advantaged, mixed };

CuePlacement parse_cue_placement(const std::string& text);  // ConfigError
const std::string& cue_placement_name(CuePlacement placement);

struct SyntheticCue {
  std::string roman;
  std::string deva;
  Label label;
};

// Fixed bilingual lexicon the generator draws from. Fillers carry no class
// signal. deva_advantaged cues share a roman form within each pair but have
// distinct devanagari forms; roman_advantaged cues are the reverse.
struct SyntheticLexicon {
  std::vector<std::string> fillers;
  std::vector<SyntheticCue> clear_cues;
  std::vector<SyntheticCue> deva_advantaged;
  std::vector<SyntheticCue> roman_advantaged;

  std::vector<std::string> all_roman_forms() const;
};

const SyntheticLexicon& synthetic_lexicon();

struct SyntheticSpec {
  int train_size = 300;
  int validation_size = 60;
  int test_size = 60;
  std::uint64_t seed = 7;
  CuePlacement cue_placement = CuePlacement::mixed;
  int min_words = 4;
  int max_words = 9;

  void validate() const;  // ConfigError
};

struct SyntheticResult {
  Dataset data;
  // Reference-classifier report: accuracy of the bag-of-words oracle on the
  // test split when reading only one script. The gap quantifies how much
  // signal each script carries alone.
  double roman_oracle_accuracy = 0.0;
  double deva_oracle_accuracy = 0.0;
};

SyntheticResult gen_synthetic(const SyntheticSpec& spec);

// Majority-vote reference classifier: tokens whose training occurrences all
// share one label vote for it; a sentence with no votes falls back to the
// global majority class. Ties break toward the lowest class index.
double bow_oracle_accuracy(const std::vector<ScriptPairExample>& train,
                           const std::vector<ScriptPairExample>& eval,
                           bool use_deva);

}  // namespace xscript
