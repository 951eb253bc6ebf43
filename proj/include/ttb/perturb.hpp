#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "ttb/prompt.hpp"
#include "ttb/rng.hpp"
#include "ttb/sim.hpp"
#include "ttb/vocab.hpp"

namespace ttb {

enum class PerturbKind {
  None,
  GdgWords,
  GdgTokens,
  Paraphrase,
  ReferentToText,
  MaskLanguage,
  MaskVisual,
  NoInstruction,
  ShuffleObjects,
};

const char* perturb_name(PerturbKind k);
PerturbKind perturb_from_name(const std::string& name);
std::vector<PerturbKind> all_perturbations();

struct PerturbationSpec {
  PerturbKind kind = PerturbKind::None;
  uint64_t seed = 0;
};

// The 52 upper+lowercase English letters used for character resampling.
std::string gdg_alphabet();

// Resamples every character of every word from the alphabet (preserving each
// word's length), then permutes the words among word positions. Referents
// keep their absolute indices.
MultimodalPrompt gdg_words(const MultimodalPrompt& prompt, Rng& rng);

// Replaces every token id with a uniformly drawn different content token.
// Referent slots and the unit count are untouched.
TokenizedPrompt gdg_tokens(const TokenizedPrompt& tp, const Vocabulary& vocab, Rng& rng);

// Substitutes each object referent with its "<texture> <shape>" descriptor
// words. Frame referents make the prompt ineligible.
MultimodalPrompt referent_to_text(const MultimodalPrompt& prompt,
                                  const std::map<std::string, ObjectSpec>& scene);

enum class Modality { Language, Visual };

// Language: every token becomes MASK. Visual: every referent slot becomes a
// MASK token. Sequence length is unchanged either way.
TokenizedPrompt mask_modality(const TokenizedPrompt& tp, Modality which);

MultimodalPrompt no_instruction(const MultimodalPrompt& prompt);

// Uniformly permutes the object tokens of an object-centric observation.
ObjectCentricObs shuffle_objects(const ObjectCentricObs& obs, Rng& rng);

}  // namespace ttb
