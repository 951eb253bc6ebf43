#include "ttb/perturb.hpp"

#include <stdexcept>

namespace ttb {

namespace {
const std::pair<PerturbKind, const char*> kPerturbNames[] = {
    {PerturbKind::None, "none"},
    {PerturbKind::GdgWords, "gdg_words"},
    {PerturbKind::GdgTokens, "gdg_tokens"},
    {PerturbKind::Paraphrase, "paraphrase"},
    {PerturbKind::ReferentToText, "referent_to_text"},
    {PerturbKind::MaskLanguage, "mask_language"},
    {PerturbKind::MaskVisual, "mask_visual"},
    {PerturbKind::NoInstruction, "no_instruction"},
    {PerturbKind::ShuffleObjects, "shuffle_objects"},
};
}  // namespace

const char* perturb_name(PerturbKind k) {
  for (auto& [kind, name] : kPerturbNames)
    if (kind == k) return name;
  throw std::logic_error("bad PerturbKind");
}

PerturbKind perturb_from_name(const std::string& name) {
  for (auto& [kind, n] : kPerturbNames)
    if (name == n) return kind;
  throw std::runtime_error("unknown perturbation: " + name);
}

std::vector<PerturbKind> all_perturbations() {
  std::vector<PerturbKind> out;
  for (auto& [kind, name] : kPerturbNames) out.push_back(kind);
  return out;
}

std::string gdg_alphabet() {
  std::string a;
  for (char c = 'a'; c <= 'z'; ++c) a += c;
  for (char c = 'A'; c <= 'Z'; ++c) a += c;
  return a;
}

MultimodalPrompt gdg_words(const MultimodalPrompt& prompt, Rng& rng) {
  static const std::string alphabet = gdg_alphabet();

  // Pass 1: resample characters word by word, in element order.
  std::vector<std::string> words;
  std::vector<size_t> word_positions;
  for (size_t i = 0; i < prompt.elements.size(); ++i) {
    const auto& e = prompt.elements[i];
    if (!e.is_word()) continue;
    std::string w(e.word().size(), ' ');
    for (size_t c = 0; c < w.size(); ++c)
      w[c] = alphabet[rng.uniform_u64(alphabet.size())];
    words.push_back(std::move(w));
    word_positions.push_back(i);
  }

  // Pass 2: permute words among word positions only.
  rng.shuffle(words);

  MultimodalPrompt out = prompt;
  for (size_t k = 0; k < words.size(); ++k)
    out.elements[word_positions[k]] = PromptElement::make_word(words[k]);
  return out;
}

TokenizedPrompt gdg_tokens(const TokenizedPrompt& tp, const Vocabulary& vocab, Rng& rng) {
  const int content = vocab.content_count();
  if (content < 2) throw std::runtime_error("gdg_tokens needs at least 2 content tokens");

  TokenizedPrompt out = tp;
  for (auto& unit : out.units) {
    if (!unit.is_token()) continue;
    int original = unit.token_id();
    // Uniform over content ids excluding the original; reserved ids are
    // below the content range and never drawn.
    int draw;
    if (original >= Vocabulary::kNumReserved) {
      draw = Vocabulary::kNumReserved + rng.uniform_int(content - 1);
      if (draw >= original) draw += 1;
    } else {
      draw = Vocabulary::kNumReserved + rng.uniform_int(content);
    }
    unit = TokenUnit::token(draw);
  }
  return out;
}

MultimodalPrompt referent_to_text(const MultimodalPrompt& prompt,
                                  const std::map<std::string, ObjectSpec>& scene) {
  for (const auto& e : prompt.elements) {
    if (e.is_referent() && e.referent().kind == Referent::Kind::Frame)
      throw std::runtime_error("frame referent not substitutable: " + e.referent().id);
  }

  MultimodalPrompt out;
  for (const auto& e : prompt.elements) {
    if (e.is_word()) {
      out.elements.push_back(e);
      continue;
    }
    auto it = scene.find(e.referent().id);
    if (it == scene.end())
      throw std::runtime_error("referent not in scene table: " + e.referent().id);
    out.elements.push_back(PromptElement::make_word(texture_word(it->second.texture)));
    out.elements.push_back(PromptElement::make_word(shape_word(it->second.shape)));
  }
  return out;
}

TokenizedPrompt mask_modality(const TokenizedPrompt& tp, Modality which) {
  TokenizedPrompt out = tp;
  for (auto& unit : out.units) {
    if (which == Modality::Language && unit.is_token())
      unit = TokenUnit::token(Vocabulary::kMaskId);
    else if (which == Modality::Visual && unit.is_slot())
      unit = TokenUnit::token(Vocabulary::kMaskId);
  }
  return out;
}

MultimodalPrompt no_instruction(const MultimodalPrompt&) { return MultimodalPrompt{}; }

ObjectCentricObs shuffle_objects(const ObjectCentricObs& obs, Rng& rng) {
  ObjectCentricObs out = obs;
  rng.shuffle(out.tokens);
  return out;
}

}  // namespace ttb
