#include "ttb/templates.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace ttb {

namespace {

const std::pair<TaskId, const char*> kTaskNames[] = {
    {TaskId::T1, "T1"}, {TaskId::T2, "T2"},  {TaskId::T3, "T3"},
    {TaskId::T4, "T4"}, {TaskId::T7, "T7"}, {TaskId::T14, "T14"},
};

PlaceholderKind kind_from_string(const std::string& s) {
  if (s == "object") return PlaceholderKind::ObjectRef;
  if (s == "frame") return PlaceholderKind::FrameRef;
  if (s == "word") return PlaceholderKind::Word;
  throw std::runtime_error("unknown placeholder kind: " + s);
}

std::vector<PatternToken> parse_pattern(const std::string& pattern,
                                        const std::map<std::string, PlaceholderKind>& decls) {
  std::istringstream ss(pattern);
  std::vector<PatternToken> out;
  std::string tok;
  while (ss >> tok) {
    PatternToken pt;
    if (tok.front() == '{') {
      auto close = tok.find('}');
      if (close == std::string::npos)
        throw std::runtime_error("unterminated placeholder in pattern token: " + tok);
      pt.placeholder = tok.substr(1, close - 1);
      pt.trailing = tok.substr(close + 1);
      if (!pt.trailing.empty() && pt.trailing != "." && pt.trailing != ",")
        throw std::runtime_error("unsupported placeholder suffix: " + tok);
      if (!decls.count(pt.placeholder))
        throw std::runtime_error("pattern uses undeclared placeholder: " + pt.placeholder);
    } else {
      pt.literal = tok;
    }
    out.push_back(std::move(pt));
  }
  return out;
}

std::set<std::string> placeholder_set(const std::vector<PatternToken>& pattern) {
  std::set<std::string> s;
  for (const auto& t : pattern)
    if (!t.placeholder.empty()) s.insert(t.placeholder);
  return s;
}

}  // namespace

const char* task_name(TaskId id) {
  for (auto& [t, n] : kTaskNames)
    if (t == id) return n;
  throw std::logic_error("bad TaskId");
}

TaskId task_from_name(const std::string& name) {
  for (auto& [t, n] : kTaskNames)
    if (name == n) return t;
  throw std::runtime_error("unknown task: " + name);
}

std::vector<TaskId> all_tasks() {
  return {TaskId::T1, TaskId::T2, TaskId::T3, TaskId::T4, TaskId::T7, TaskId::T14};
}

std::vector<TaskId> training_tasks() {
  return {TaskId::T1, TaskId::T2, TaskId::T3, TaskId::T4, TaskId::T7};
}

MultimodalPrompt render_prompt(const PromptTemplate& tmpl, const Bindings& bindings,
                               const PromptVariant& variant) {
  const std::vector<PatternToken>* pattern = &tmpl.pattern;
  if (variant.paraphrase) {
    int i = *variant.paraphrase;
    if (i < 0 || static_cast<size_t>(i) >= tmpl.paraphrases.size())
      throw std::out_of_range("paraphrase index out of range for " +
                              std::string(task_name(tmpl.task)) + ": " + std::to_string(i));
    pattern = &tmpl.paraphrases[static_cast<size_t>(i)];
  }

  // Every placeholder must be bound before substitution starts.
  std::vector<std::string> unbound;
  for (const auto& [name, kind] : tmpl.placeholders) {
    bool bound = kind == PlaceholderKind::Word ? bindings.words.count(name) > 0
                                               : bindings.referents.count(name) > 0;
    if (!bound) unbound.push_back(name);
  }
  if (!unbound.empty()) {
    std::string msg = "unbound placeholders:";
    for (const auto& n : unbound) msg += " " + n;
    throw std::runtime_error(msg);
  }

  MultimodalPrompt prompt;
  for (const auto& tok : *pattern) {
    if (tok.placeholder.empty()) {
      prompt.elements.push_back(PromptElement::make_word(tok.literal));
      continue;
    }
    auto kind = tmpl.placeholders.at(tok.placeholder);
    if (kind == PlaceholderKind::Word) {
      prompt.elements.push_back(PromptElement::make_word(bindings.words.at(tok.placeholder)));
    } else {
      const Referent& r = bindings.referents.at(tok.placeholder);
      prompt.elements.push_back(PromptElement::make_referent(r.id, r.kind));
    }
    if (!tok.trailing.empty()) prompt.elements.push_back(PromptElement::make_word(tok.trailing));
  }
  prompt.validate();
  return prompt;
}

TemplateLibrary TemplateLibrary::load(const std::filesystem::path& json_path) {
  std::ifstream f(json_path);
  if (!f) throw std::runtime_error("cannot read template file: " + json_path.string());
  nlohmann::json doc = nlohmann::json::parse(f);

  TemplateLibrary lib;
  for (const auto& entry : doc.at("tasks")) {
    PromptTemplate t;
    t.task = task_from_name(entry.at("task").get<std::string>());
    for (auto it = entry.at("placeholders").begin(); it != entry.at("placeholders").end(); ++it)
      t.placeholders[it.key()] = kind_from_string(it.value().get<std::string>());
    t.pattern = parse_pattern(entry.at("pattern").get<std::string>(), t.placeholders);
    auto original_set = placeholder_set(t.pattern);
    for (const auto& p : entry.at("paraphrases")) {
      auto parsed = parse_pattern(p.get<std::string>(), t.placeholders);
      if (placeholder_set(parsed) != original_set)
        throw std::runtime_error(std::string("paraphrase placeholder set differs from original in ") +
                                 task_name(t.task));
      t.paraphrases.push_back(std::move(parsed));
    }
    if (t.paraphrases.size() < 2)
      throw std::runtime_error(std::string("task needs at least two paraphrases: ") +
                               task_name(t.task));
    lib.templates_[t.task] = std::move(t);
  }

  const auto& pools = doc.at("word_pools");
  lib.angles_ = pools.at("angles").get<std::vector<std::string>>();
  lib.textures_ = pools.at("textures").get<std::vector<std::string>>();
  lib.shapes_ = pools.at("shapes").get<std::vector<std::string>>();
  lib.punctuation_ = pools.at("punctuation").get<std::vector<std::string>>();
  lib.nouns_default_ = doc.at("novel_nouns").at("default").get<std::vector<std::string>>();
  lib.nouns_extreme_ = doc.at("novel_nouns").at("extreme").get<std::vector<std::string>>();

  for (TaskId t : all_tasks())
    if (!lib.templates_.count(t))
      throw std::runtime_error(std::string("template file missing task ") + task_name(t));
  return lib;
}

std::filesystem::path TemplateLibrary::default_data_dir() {
  if (const char* env = std::getenv("TTB_DATA_DIR")) return env;
  return TTB_SOURCE_DATA_DIR;
}

TemplateLibrary TemplateLibrary::load_default() {
  return load(default_data_dir() / "templates.json");
}

const PromptTemplate& TemplateLibrary::at(TaskId task) const {
  return templates_.at(task);
}

std::vector<std::string> TemplateLibrary::vocab_corpus() const {
  std::vector<std::string> corpus;
  auto add_pattern = [&corpus](const std::vector<PatternToken>& pattern) {
    for (const auto& t : pattern) {
      if (!t.literal.empty()) corpus.push_back(t.literal);
      if (!t.trailing.empty()) corpus.push_back(t.trailing);
    }
  };
  for (const auto& [task, tmpl] : templates_) {
    add_pattern(tmpl.pattern);
    for (const auto& p : tmpl.paraphrases) add_pattern(p);
  }
  for (const auto* pool : {&angles_, &textures_, &shapes_, &punctuation_, &nouns_default_, &nouns_extreme_})
    corpus.insert(corpus.end(), pool->begin(), pool->end());
  return corpus;
}

}  // namespace ttb
