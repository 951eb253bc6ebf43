#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ttb/prompt.hpp"

namespace ttb {

// Corpus-derived vocabulary with reserved control tokens. Content token ids
// follow the reserved ids in lexicographic order of the token strings, so
// the id assignment is reproducible from the corpus alone.
class Vocabulary {
 public:
  static constexpr int kPadId = 0;
  static constexpr int kMaskId = 1;
  static constexpr int kRefSlotId = 2;
  static constexpr int kNumReserved = 3;

  // Every whitespace-delimited word of the corpus plus the 52-letter
  // fallback alphabet becomes a token.
  static Vocabulary build(const std::vector<std::string>& corpus);

  int size() const { return static_cast<int>(id_to_token_.size()); }
  int content_count() const { return size() - kNumReserved; }

  bool contains(const std::string& token) const { return token_to_id_.count(token) > 0; }
  int id_of(const std::string& token) const;
  const std::string& token_of(int id) const;
  bool is_reserved(int id) const { return id >= 0 && id < kNumReserved; }

  // Greedy longest-match, left to right, single letters as fallback.
  std::vector<int> tokenize(const std::string& word) const;
  std::string detokenize(const std::vector<int>& ids) const;

  TokenizedPrompt tokenize_prompt(const MultimodalPrompt& prompt) const;

  // One token per line, id = line number (reserved tokens first).
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  Vocabulary() = default;
  void index_tokens();

  std::vector<std::string> id_to_token_;
  std::map<std::string, int> token_to_id_;
  size_t max_token_len_ = 0;
};

}  // namespace ttb
