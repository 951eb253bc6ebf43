#include "ttb/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ttb {

namespace {
const char* kReservedTokens[] = {"<pad>", "<mask>", "<ref>"};

std::vector<std::string> split_words(const std::string& text) {
  std::istringstream ss(text);
  std::vector<std::string> out;
  std::string w;
  while (ss >> w) out.push_back(w);
  return out;
}
}  // namespace

Vocabulary Vocabulary::build(const std::vector<std::string>& corpus) {
  if (corpus.empty()) throw std::invalid_argument("build_vocab: corpus is empty");

  std::set<std::string> tokens;
  for (const auto& entry : corpus)
    for (auto& w : split_words(entry)) tokens.insert(w);
  for (char c = 'a'; c <= 'z'; ++c) tokens.insert(std::string(1, c));
  for (char c = 'A'; c <= 'Z'; ++c) tokens.insert(std::string(1, c));

  Vocabulary v;
  for (const char* r : kReservedTokens) v.id_to_token_.emplace_back(r);
  // std::set iterates lexicographically, which fixes the content id order.
  for (const auto& t : tokens) v.id_to_token_.push_back(t);
  v.index_tokens();
  return v;
}

void Vocabulary::index_tokens() {
  token_to_id_.clear();
  max_token_len_ = 0;
  for (size_t i = 0; i < id_to_token_.size(); ++i) {
    if (i >= kNumReserved) {
      if (!token_to_id_.emplace(id_to_token_[i], static_cast<int>(i)).second)
        throw std::runtime_error("vocabulary has duplicate token: " + id_to_token_[i]);
      max_token_len_ = std::max(max_token_len_, id_to_token_[i].size());
    }
  }
}

int Vocabulary::id_of(const std::string& token) const {
  auto it = token_to_id_.find(token);
  if (it == token_to_id_.end()) throw std::out_of_range("token not in vocabulary: " + token);
  return it->second;
}

const std::string& Vocabulary::token_of(int id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("token id out of range: " + std::to_string(id));
  return id_to_token_[static_cast<size_t>(id)];
}

std::vector<int> Vocabulary::tokenize(const std::string& word) const {
  if (word.empty()) throw std::invalid_argument("tokenize: empty word");
  for (unsigned char c : word) {
    if (!std::isprint(c))
      throw std::runtime_error("untokenizable character in word: '" + word + "'");
  }

  std::vector<int> out;
  size_t pos = 0;
  while (pos < word.size()) {
    size_t longest = std::min(max_token_len_, word.size() - pos);
    int matched = -1;
    for (size_t len = longest; len >= 1; --len) {
      auto it = token_to_id_.find(word.substr(pos, len));
      if (it != token_to_id_.end()) {
        matched = it->second;
        pos += len;
        break;
      }
    }
    if (matched < 0)
      throw std::runtime_error(std::string("untokenizable character: '") + word[pos] + "'");
    out.push_back(matched);
  }
  return out;
}

std::string Vocabulary::detokenize(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) {
    if (is_reserved(id))
      throw std::invalid_argument("detokenize: reserved id " + std::to_string(id));
    out += token_of(id);
  }
  return out;
}

TokenizedPrompt Vocabulary::tokenize_prompt(const MultimodalPrompt& prompt) const {
  TokenizedPrompt tp;
  for (const auto& e : prompt.elements) {
    if (e.is_word()) {
      for (int id : tokenize(e.word())) tp.units.push_back(TokenUnit::token(id));
    } else {
      tp.units.push_back(TokenUnit::referent_slot(e.referent()));
    }
  }
  return tp;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write vocabulary file: " + path.string());
  for (const auto& t : id_to_token_) f << t << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read vocabulary file: " + path.string());
  Vocabulary v;
  std::string line;
  while (std::getline(f, line)) v.id_to_token_.push_back(line);
  if (v.id_to_token_.size() < kNumReserved)
    throw std::runtime_error("vocabulary file too short: " + path.string());
  for (int i = 0; i < kNumReserved; ++i) {
    if (v.id_to_token_[static_cast<size_t>(i)] != kReservedTokens[i])
      throw std::runtime_error("vocabulary file missing reserved token " +
                               std::string(kReservedTokens[i]));
  }
  v.index_tokens();
  return v;
}

}  // namespace ttb
