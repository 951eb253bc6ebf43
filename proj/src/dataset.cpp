#include "ttb/dataset.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "ttb/parallel.hpp"

namespace ttb {

Json pose_to_json(const Pose& p) { return Json::array({p.x, p.y, p.z, p.qw, p.qx, p.qy, p.qz}); }

Pose pose_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 7) throw std::runtime_error("pose must be a 7-element array");
  return {j[0], j[1], j[2], j[3], j[4], j[5], j[6]};
}

Json state_to_json(const WorkspaceState& s) {
  Json objects = Json::array();
  for (const auto& o : s.objects) {
    objects.push_back(Json{{"id", o.id},
                           {"shape", shape_word(o.spec.shape)},
                           {"texture", texture_word(o.spec.texture)},
                           {"container", o.spec.is_container},
                           {"scale", o.spec.scale},
                           {"pose", pose_to_json(o.pose)}});
  }
  return Json{{"objects", std::move(objects)}};
}

WorkspaceState state_from_json(const Json& j) {
  WorkspaceState s;
  for (const auto& oj : j.at("objects")) {
    ObjectSpec spec;
    spec.shape = shape_from_word(oj.at("shape").get<std::string>());
    spec.texture = texture_from_word(oj.at("texture").get<std::string>());
    spec.is_container = oj.at("container").get<bool>();
    spec.scale = oj.at("scale").get<double>();
    s.objects.push_back({oj.at("id").get<int>(), spec, pose_from_json(oj.at("pose"))});
  }
  s.validate();
  return s;
}

Json goal_to_json(const GoalSpec& g) {
  if (const auto* place = std::get_if<PlaceGoal>(&g))
    return Json{{"type", "place"}, {"required", place->required_ids}, {"container", place->container_id}};
  if (const auto* rot = std::get_if<RotateGoal>(&g))
    return Json{{"type", "rotate"},
                {"object", rot->object_id},
                {"target_yaw", rot->target_yaw_rad},
                {"tol", rot->tol_rad}};
  const auto& re = std::get<RearrangeGoal>(g);
  Json items = Json::array();
  for (const auto& item : re.items)
    items.push_back(Json{{"object", item.object_id}, {"x", item.goal_x}, {"y", item.goal_y}, {"yaw", item.goal_yaw_rad}});
  return Json{{"type", "rearrange"},
              {"items", std::move(items)},
              {"distractors", re.distractor_ids},
              {"eps", re.eps_pos}};
}

GoalSpec goal_from_json(const Json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "place") {
    PlaceGoal g;
    g.required_ids = j.at("required").get<std::vector<int>>();
    g.container_id = j.at("container").get<int>();
    return g;
  }
  if (type == "rotate") {
    RotateGoal g;
    g.object_id = j.at("object").get<int>();
    g.target_yaw_rad = j.at("target_yaw").get<double>();
    g.tol_rad = j.at("tol").get<double>();
    return g;
  }
  if (type == "rearrange") {
    RearrangeGoal g;
    for (const auto& item : j.at("items"))
      g.items.push_back({item.at("object").get<int>(), item.at("x").get<double>(),
                         item.at("y").get<double>(), item.at("yaw").get<double>()});
    g.distractor_ids = j.at("distractors").get<std::vector<int>>();
    g.eps_pos = j.at("eps").get<double>();
    return g;
  }
  throw std::runtime_error("unknown goal type: " + type);
}

Json instance_to_json(const TaskInstance& inst) {
  Json bindings_words = Json::object();
  for (const auto& [k, v] : inst.bindings.words) bindings_words[k] = v;
  Json bindings_refs = Json::object();
  for (const auto& [k, r] : inst.bindings.referents)
    bindings_refs[k] = Json{{"id", r.id}, {"kind", r.kind == Referent::Kind::Frame ? "frame" : "object"}};
  Json referents = Json::object();
  for (const auto& [rid, entry] : inst.referents) {
    if (entry.kind == Referent::Kind::Frame)
      referents[rid] = Json{{"kind", "frame"}, {"scene", state_to_json(entry.frame_scene)}};
    else
      referents[rid] = Json{{"kind", "object"}, {"object", entry.object_id}};
  }
  return Json{{"task", task_name(inst.task)},
              {"level", level_name(inst.level)},
              {"difficulty", difficulty_name(inst.difficulty)},
              {"seed", inst.seed},
              {"workspace_distractors", inst.workspace_distractors},
              {"frame_distractors", inst.frame_distractors},
              {"state", state_to_json(inst.initial)},
              {"goal", goal_to_json(inst.goal)},
              {"bindings", Json{{"words", bindings_words}, {"referents", bindings_refs}}},
              {"referents", referents}};
}

TaskInstance instance_from_json(const Json& j) {
  TaskInstance inst;
  inst.task = task_from_name(j.at("task").get<std::string>());
  inst.level = level_from_name(j.at("level").get<std::string>());
  inst.difficulty = difficulty_from_name(j.at("difficulty").get<std::string>());
  inst.seed = j.at("seed").get<uint64_t>();
  inst.workspace_distractors = j.at("workspace_distractors").get<int>();
  inst.frame_distractors = j.at("frame_distractors").get<int>();
  inst.initial = state_from_json(j.at("state"));
  inst.goal = goal_from_json(j.at("goal"));
  for (auto it = j.at("bindings").at("words").begin(); it != j.at("bindings").at("words").end(); ++it)
    inst.bindings.words[it.key()] = it.value().get<std::string>();
  for (auto it = j.at("bindings").at("referents").begin();
       it != j.at("bindings").at("referents").end(); ++it) {
    auto kind = it.value().at("kind").get<std::string>() == "frame" ? Referent::Kind::Frame
                                                                    : Referent::Kind::Object;
    inst.bindings.referents[it.key()] = Referent{it.value().at("id").get<std::string>(), kind};
  }
  for (auto it = j.at("referents").begin(); it != j.at("referents").end(); ++it) {
    ReferentEntry entry;
    if (it.value().at("kind").get<std::string>() == "frame") {
      entry.kind = Referent::Kind::Frame;
      entry.frame_scene = state_from_json(it.value().at("scene"));
    } else {
      entry.kind = Referent::Kind::Object;
      entry.object_id = it.value().at("object").get<int>();
    }
    inst.referents[it.key()] = std::move(entry);
  }
  return inst;
}

Json record_to_json(const Record& r) {
  Json actions = Json::array();
  for (const auto& a : r.actions) {
    auto vals = action_values(a);
    actions.push_back(Json(std::vector<double>(vals.begin(), vals.end())));
  }
  return Json{{"instance", instance_to_json(r.instance)},
              {"actions", std::move(actions)},
              {"success", r.success}};
}

Record record_from_json(const Json& j) {
  Record r;
  r.instance = instance_from_json(j.at("instance"));
  for (const auto& aj : j.at("actions")) {
    auto vals = aj.get<std::vector<double>>();
    if (vals.size() != 14) throw std::runtime_error("action must have 14 values");
    std::array<double, 14> arr;
    std::copy(vals.begin(), vals.end(), arr.begin());
    r.actions.push_back(action_from_values(arr));
  }
  r.success = j.at("success").get<bool>();
  return r;
}

Json partition_to_json(const AssetPartition& p) {
  auto shapes = [](const std::vector<Shape>& v) {
    Json out = Json::array();
    for (Shape s : v) out.push_back(shape_word(s));
    return out;
  };
  auto textures = [](const std::vector<Texture>& v) {
    Json out = Json::array();
    for (Texture t : v) out.push_back(texture_word(t));
    return out;
  };
  auto combos = [](const std::vector<std::pair<Shape, Texture>>& v) {
    Json out = Json::array();
    for (auto& [s, t] : v) out.push_back(Json::array({shape_word(s), texture_word(t)}));
    return out;
  };
  return Json{{"train_shapes", shapes(p.train_shapes)},
              {"holdout_shapes", shapes(p.holdout_shapes)},
              {"train_textures", textures(p.train_textures)},
              {"holdout_textures", textures(p.holdout_textures)},
              {"seen_combos", combos(p.seen_combos)},
              {"unseen_combos", combos(p.unseen_combos)}};
}

AssetPartition partition_from_json(const Json& j) {
  AssetPartition p;
  for (const auto& s : j.at("train_shapes")) p.train_shapes.push_back(shape_from_word(s));
  for (const auto& s : j.at("holdout_shapes")) p.holdout_shapes.push_back(shape_from_word(s));
  for (const auto& t : j.at("train_textures")) p.train_textures.push_back(texture_from_word(t));
  for (const auto& t : j.at("holdout_textures")) p.holdout_textures.push_back(texture_from_word(t));
  for (const auto& c : j.at("seen_combos"))
    p.seen_combos.push_back({shape_from_word(c[0]), texture_from_word(c[1])});
  for (const auto& c : j.at("unseen_combos"))
    p.unseen_combos.push_back({shape_from_word(c[0]), texture_from_word(c[1])});
  return p;
}

std::vector<int> split_valid_indices(int n, double fraction, uint64_t seed, TaskId task) {
  if (fraction <= 0.0 || fraction >= 0.5)
    throw std::invalid_argument("holdout fraction must be in (0, 0.5)");
  std::vector<int> idx(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
  Rng rng(Rng::derive(seed, Rng::hash_label(std::string("split|") + task_name(task))));
  rng.shuffle(idx);
  int holdout = static_cast<int>(std::lround(n * fraction));
  idx.resize(static_cast<size_t>(holdout));
  std::sort(idx.begin(), idx.end());
  return idx;
}

namespace {

uint64_t instance_seed_for(uint64_t master, TaskId task, int index) {
  return Rng::derive(master, Rng::hash_label(std::string("gen|") + task_name(task)) +
                                 static_cast<uint64_t>(index));
}

void verify_replay(const Record& r) {
  Episode ep(r.instance.initial, r.instance.goal, kDefaultBudget);
  for (const auto& a : r.actions) ep.step(a);
  if (ep.status().outcome != EpisodeStatus::Outcome::Success)
    throw std::runtime_error("record replay failed for instance seed " +
                             std::to_string(r.instance.seed));
}

constexpr char kBinMagic[8] = {'T', 'T', 'B', 'D', 'A', 'T', 'A', '1'};

}  // namespace

DatasetManifest generate_dataset(const GenConfig& config, const std::filesystem::path& out_dir,
                                 int jobs) {
  if (config.per_task < 10) throw std::invalid_argument("per_task must be >= 10");
  std::filesystem::create_directories(out_dir);

  AssetPartition partition = partition_assets(config.seed);

  std::vector<Record> records(static_cast<size_t>(config.per_task) * config.tasks.size());
  for (size_t t = 0; t < config.tasks.size(); ++t) {
    TaskId task = config.tasks[t];
    parallel_for(config.per_task, jobs, [&, task, t](int i) {
      uint64_t seed = instance_seed_for(config.seed, task, i);
      Record rec;
      rec.instance = sample_instance(task, config.level, config.difficulty, partition, seed);
      rec.actions = oracle_actions(rec.instance);
      rec.success = true;
      verify_replay(rec);
      records[t * static_cast<size_t>(config.per_task) + static_cast<size_t>(i)] = std::move(rec);
    });
  }

  // Single writer; records are already in deterministic order.
  std::ofstream bin(out_dir / "records.bin", std::ios::binary);
  std::ofstream jsonl(out_dir / "records.jsonl");
  if (!bin || !jsonl) throw std::runtime_error("cannot write dataset files in " + out_dir.string());
  bin.write(kBinMagic, sizeof(kBinMagic));
  uint64_t count = records.size();
  bin.write(reinterpret_cast<const char*>(&count), sizeof(count));
  for (const auto& rec : records) {
    std::string line = record_to_json(rec).dump();
    uint32_t len = static_cast<uint32_t>(line.size());
    bin.write(reinterpret_cast<const char*>(&len), sizeof(len));
    bin.write(line.data(), static_cast<std::streamsize>(line.size()));
    jsonl << line << '\n';
  }

  DatasetManifest manifest;
  manifest.config = config;
  manifest.partition = partition;
  for (TaskId task : config.tasks)
    manifest.valid_indices[task] =
        split_valid_indices(config.per_task, config.holdout_fraction, config.seed, task);

  Json tasks = Json::array();
  for (TaskId t : config.tasks) tasks.push_back(task_name(t));
  Json valid = Json::object();
  for (const auto& [task, idx] : manifest.valid_indices) valid[task_name(task)] = idx;
  Json doc{{"seed", config.seed},
           {"per_task", config.per_task},
           {"holdout_fraction", config.holdout_fraction},
           {"tasks", tasks},
           {"level", level_name(config.level)},
           {"difficulty", difficulty_name(config.difficulty)},
           {"partition", partition_to_json(partition)},
           {"valid_indices", valid}};
  std::ofstream mf(out_dir / "manifest.json");
  mf << doc.dump(2) << '\n';

  TemplateLibrary library = TemplateLibrary::load_default();
  Vocabulary::build(library.vocab_corpus()).save(out_dir / "vocab.txt");
  return manifest;
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  std::ifstream bin(dir / "records.bin", std::ios::binary);
  if (!bin) throw std::runtime_error("cannot open " + (dir / "records.bin").string());
  char magic[8];
  bin.read(magic, sizeof(magic));
  if (std::memcmp(magic, kBinMagic, sizeof(magic)) != 0)
    throw std::runtime_error("bad dataset magic in " + (dir / "records.bin").string());
  uint64_t count = 0;
  bin.read(reinterpret_cast<char*>(&count), sizeof(count));
  ds.records.reserve(count);
  for (uint64_t i = 0; i < count; ++i) {
    uint32_t len = 0;
    bin.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string buf(len, '\0');
    bin.read(buf.data(), len);
    if (!bin) throw std::runtime_error("truncated dataset file");
    ds.records.push_back(record_from_json(Json::parse(buf)));
  }

  std::ifstream mf(dir / "manifest.json");
  if (!mf) throw std::runtime_error("cannot open " + (dir / "manifest.json").string());
  Json doc = Json::parse(mf);
  ds.manifest.config.seed = doc.at("seed").get<uint64_t>();
  ds.manifest.config.per_task = doc.at("per_task").get<int>();
  ds.manifest.config.holdout_fraction = doc.at("holdout_fraction").get<double>();
  ds.manifest.config.tasks.clear();
  for (const auto& t : doc.at("tasks"))
    ds.manifest.config.tasks.push_back(task_from_name(t.get<std::string>()));
  ds.manifest.config.level = level_from_name(doc.at("level").get<std::string>());
  ds.manifest.config.difficulty = difficulty_from_name(doc.at("difficulty").get<std::string>());
  ds.manifest.partition = partition_from_json(doc.at("partition"));
  for (auto it = doc.at("valid_indices").begin(); it != doc.at("valid_indices").end(); ++it)
    ds.manifest.valid_indices[task_from_name(it.key())] = it.value().get<std::vector<int>>();
  return ds;
}

std::pair<std::vector<const Record*>, std::vector<const Record*>> split_records(const Dataset& ds) {
  std::vector<const Record*> train, valid;
  const int per_task = ds.manifest.config.per_task;
  for (size_t t = 0; t < ds.manifest.config.tasks.size(); ++t) {
    TaskId task = ds.manifest.config.tasks[t];
    const auto& holdout = ds.manifest.valid_indices.at(task);
    size_t h = 0;
    for (int i = 0; i < per_task; ++i) {
      const Record* rec = &ds.records[t * static_cast<size_t>(per_task) + static_cast<size_t>(i)];
      if (h < holdout.size() && holdout[h] == i) {
        valid.push_back(rec);
        ++h;
      } else {
        train.push_back(rec);
      }
    }
  }
  return {train, valid};
}

std::vector<ReferentFeature> referent_features(const TokenizedPrompt& tp,
                                               const TaskInstance& instance) {
  std::vector<ReferentFeature> out;
  ObjectCentricObs initial_tokens = object_tokens(instance.initial);
  for (const auto& slot : tp.slots()) {
    auto it = instance.referents.find(slot.id);
    if (it == instance.referents.end())
      throw std::runtime_error("unbound referent slot: " + slot.id);
    ReferentFeature f;
    if (it->second.kind == Referent::Kind::Frame) {
      f.is_frame = true;
      f.frame = instance.frame_image(slot.id);
    } else {
      f.is_frame = false;
      f.object = initial_tokens.tokens.at(static_cast<size_t>(it->second.object_id));
    }
    out.push_back(std::move(f));
  }
  return out;
}

PreppedTrajectory preprocess(const Record& record, const Vocabulary& vocab,
                             const TemplateLibrary& library) {
  PreppedTrajectory pt;
  pt.task = record.instance.task;
  pt.instance_seed = record.instance.seed;
  MultimodalPrompt prompt = instance_prompt(record.instance, library, PromptVariant::original());
  pt.tp = vocab.tokenize_prompt(prompt);
  pt.slots = referent_features(pt.tp, record.instance);

  const auto& bins_cfg = ActionBinsConfig::standard();
  Episode ep(record.instance.initial, record.instance.goal, kDefaultBudget);
  for (const auto& action : record.actions) {
    PreppedStep step;
    step.obs = object_tokens(ep.state());
    step.image = render_topdown(ep.state(), kObsHeight, kObsWidth);
    step.bins = bins_cfg.discretize(action);
    ep.step(action);
    pt.steps.push_back(std::move(step));
  }
  if (ep.status().outcome != EpisodeStatus::Outcome::Success)
    throw std::runtime_error("preprocess: replay did not succeed for instance seed " +
                             std::to_string(record.instance.seed));
  return pt;
}

Json prepped_to_json(const PreppedTrajectory& pt) {
  Json units = Json::array();
  for (const auto& u : pt.tp.units) {
    if (u.is_token())
      units.push_back(u.token_id());
    else
      units.push_back(Json{{"slot", u.slot().id}});
  }
  Json slots = Json::array();
  for (const auto& s : pt.slots) {
    if (s.is_frame)
      slots.push_back(Json{{"kind", "frame"}, {"h", s.frame.height}, {"w", s.frame.width}});
    else
      slots.push_back(Json{{"kind", "object"},
                           {"bbox", std::vector<double>(s.object.bbox.begin(), s.object.bbox.end())},
                           {"shape", shape_word(s.object.shape)},
                           {"texture", texture_word(s.object.texture)}});
  }
  Json steps = Json::array();
  for (const auto& st : pt.steps) {
    Json tokens = Json::array();
    for (const auto& tok : st.obs.tokens)
      tokens.push_back(Json{{"id", tok.object_id},
                            {"bbox", std::vector<double>(tok.bbox.begin(), tok.bbox.end())},
                            {"shape", shape_word(tok.shape)},
                            {"texture", texture_word(tok.texture)}});
    steps.push_back(Json{{"obs", std::move(tokens)},
                         {"bins", std::vector<int>(st.bins.bins.begin(), st.bins.bins.end())}});
  }
  return Json{{"task", task_name(pt.task)},
              {"seed", pt.instance_seed},
              {"units", std::move(units)},
              {"slots", std::move(slots)},
              {"steps", std::move(steps)}};
}

}  // namespace ttb
