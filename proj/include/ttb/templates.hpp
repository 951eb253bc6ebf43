#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ttb/prompt.hpp"

namespace ttb {

enum class TaskId { T1, T2, T3, T4, T7, T14 };

const char* task_name(TaskId id);
TaskId task_from_name(const std::string& name);
std::vector<TaskId> all_tasks();
std::vector<TaskId> training_tasks();  // T14 is held out for L4

enum class PlaceholderKind { ObjectRef, FrameRef, Word };

// One token of a template pattern: a literal word or a placeholder,
// optionally followed by punctuation rendered as its own word.
struct PatternToken {
  std::string literal;       // set when placeholder is empty
  std::string placeholder;   // name without braces
  std::string trailing;      // "." or "," after a placeholder
};

struct PromptTemplate {
  TaskId task = TaskId::T1;
  std::map<std::string, PlaceholderKind> placeholders;
  std::vector<PatternToken> pattern;                 // original instruction
  std::vector<std::vector<PatternToken>> paraphrases;

  size_t paraphrase_count() const { return paraphrases.size(); }
};

// Original instruction or one of its paraphrase variants.
struct PromptVariant {
  std::optional<int> paraphrase;  // nullopt = original

  static PromptVariant original() { return {}; }
  static PromptVariant paraphrase_index(int i) { return {i}; }
};

struct Bindings {
  std::map<std::string, std::string> words;
  std::map<std::string, Referent> referents;
};

MultimodalPrompt render_prompt(const PromptTemplate& tmpl, const Bindings& bindings,
                               const PromptVariant& variant);

// Templates, paraphrases and bindable word pools loaded from the data file.
class TemplateLibrary {
 public:
  static TemplateLibrary load(const std::filesystem::path& json_path);
  // Resolves TTB_DATA_DIR (env) or the compiled-in source data directory.
  static TemplateLibrary load_default();
  static std::filesystem::path default_data_dir();

  const PromptTemplate& at(TaskId task) const;

  const std::vector<std::string>& angle_words() const { return angles_; }
  const std::vector<std::string>& texture_words() const { return textures_; }
  const std::vector<std::string>& shape_words() const { return shapes_; }
  const std::vector<std::string>& default_nouns() const { return nouns_default_; }
  const std::vector<std::string>& extreme_nouns() const { return nouns_extreme_; }

  // Every string the tokenizer vocabulary must cover.
  std::vector<std::string> vocab_corpus() const;

 private:
  std::map<TaskId, PromptTemplate> templates_;
  std::vector<std::string> angles_, textures_, shapes_, punctuation_;
  std::vector<std::string> nouns_default_, nouns_extreme_;
};

}  // namespace ttb
