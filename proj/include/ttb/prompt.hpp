#pragma once

#include <cctype>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace ttb {

// A visual element of a multimodal prompt: stands for either a single
// object or a rendered frame of a scene.
struct Referent {
  enum class Kind { Object, Frame };
  std::string id;
  Kind kind = Kind::Object;

  bool operator==(const Referent&) const = default;
};

// One element of a multimodal prompt: a word or a visual referent.
struct PromptElement {
  std::variant<std::string, Referent> value;

  bool is_word() const { return std::holds_alternative<std::string>(value); }
  bool is_referent() const { return std::holds_alternative<Referent>(value); }
  const std::string& word() const { return std::get<std::string>(value); }
  const Referent& referent() const { return std::get<Referent>(value); }

  static PromptElement make_word(std::string text) {
    if (text.empty()) throw std::invalid_argument("prompt word must be non-empty");
    for (unsigned char c : text) {
      if (std::isspace(c) || !std::isprint(c))
        throw std::invalid_argument("prompt word contains whitespace or unprintable character: '" +
                                    text + "'");
    }
    return PromptElement{std::move(text)};
  }

  static PromptElement make_referent(std::string id, Referent::Kind kind) {
    return PromptElement{Referent{std::move(id), kind}};
  }

  bool operator==(const PromptElement&) const = default;
};

// An instruction as an ordered sequence of words and visual referents.
// Length zero only occurs after the no-instruction perturbation.
struct MultimodalPrompt {
  std::vector<PromptElement> elements;

  size_t size() const { return elements.size(); }
  bool empty() const { return elements.empty(); }

  size_t word_count() const {
    size_t n = 0;
    for (const auto& e : elements) n += e.is_word() ? 1 : 0;
    return n;
  }

  size_t referent_count() const { return elements.size() - word_count(); }

  std::vector<Referent> referents() const {
    std::vector<Referent> out;
    for (const auto& e : elements)
      if (e.is_referent()) out.push_back(e.referent());
    return out;
  }

  // Referent ids unique; training-time prompts start with a word.
  void validate(bool require_leading_word = true) const {
    if (require_leading_word && !elements.empty() && !elements.front().is_word())
      throw std::runtime_error("prompt must start with a word");
    auto refs = referents();
    for (size_t i = 0; i < refs.size(); ++i)
      for (size_t j = i + 1; j < refs.size(); ++j)
        if (refs[i].id == refs[j].id)
          throw std::runtime_error("duplicate referent id in prompt: " + refs[i].id);
  }

  // Human-readable single line, referents shown as <id>.
  std::string to_string() const {
    std::string out;
    for (const auto& e : elements) {
      if (!out.empty()) out += ' ';
      if (e.is_word())
        out += e.word();
      else
        out += "<" + e.referent().id + ">";
    }
    return out;
  }

  bool operator==(const MultimodalPrompt&) const = default;
};

// A prompt after tokenization: word tokens interleaved with referent slots.
struct TokenUnit {
  std::variant<int, Referent> value;

  bool is_token() const { return std::holds_alternative<int>(value); }
  bool is_slot() const { return std::holds_alternative<Referent>(value); }
  int token_id() const { return std::get<int>(value); }
  const Referent& slot() const { return std::get<Referent>(value); }

  static TokenUnit token(int id) { return TokenUnit{id}; }
  static TokenUnit referent_slot(Referent r) { return TokenUnit{std::move(r)}; }

  bool operator==(const TokenUnit&) const = default;
};

struct TokenizedPrompt {
  std::vector<TokenUnit> units;

  size_t size() const { return units.size(); }
  bool empty() const { return units.empty(); }

  size_t token_count() const {
    size_t n = 0;
    for (const auto& u : units) n += u.is_token() ? 1 : 0;
    return n;
  }

  size_t slot_count() const { return units.size() - token_count(); }

  std::vector<Referent> slots() const {
    std::vector<Referent> out;
    for (const auto& u : units)
      if (u.is_slot()) out.push_back(u.slot());
    return out;
  }

  bool operator==(const TokenizedPrompt&) const = default;
};

}  // namespace ttb
