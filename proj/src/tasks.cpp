#include "ttb/tasks.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>

namespace ttb {

namespace {

constexpr double kMargin = 0.10;         // keeps footprints inside the table
constexpr double kMinSpawnDist = 0.02;   // one x bin width
constexpr int kMaxAttempts = 100;

const std::pair<Level, const char*> kLevelNames[] = {
    {Level::L1, "L1"}, {Level::L2, "L2"}, {Level::L3, "L3"}, {Level::L4, "L4"}};
const std::pair<Difficulty, const char*> kDifficultyNames[] = {
    {Difficulty::Default, "default"},
    {Difficulty::Distracting, "distracting"},
    {Difficulty::Extreme, "extreme"},
    {Difficulty::ExtremelyDistracting, "extremely_distracting"}};

bool has_distracting(Difficulty d) {
  return d == Difficulty::Distracting || d == Difficulty::ExtremelyDistracting;
}
bool has_extreme(Difficulty d) {
  return d == Difficulty::Extreme || d == Difficulty::ExtremelyDistracting;
}

// Draws object specs appropriate to a generalisation level.
struct SpecSampler {
  const AssetPartition& part;
  Level level;
  Rng& rng;

  std::pair<Shape, Texture> draggable_combo() {
    if (level == Level::L3)
      return {part.holdout_shapes[rng.uniform_u64(part.holdout_shapes.size())],
              part.holdout_textures[rng.uniform_u64(part.holdout_textures.size())]};
    const auto& pool = level == Level::L2 ? part.unseen_combos : part.seen_combos;
    return pool[rng.uniform_u64(pool.size())];
  }

  std::pair<Shape, Texture> draggable_combo_with_texture(Texture t) {
    if (level == Level::L3)
      return {part.holdout_shapes[rng.uniform_u64(part.holdout_shapes.size())], t};
    auto pool = level == Level::L2 ? part.unseen_combos_with_texture(t)
                                   : part.seen_combos_with_texture(t);
    if (pool.empty()) throw std::runtime_error("no combos available for texture");
    return pool[rng.uniform_u64(pool.size())];
  }

  Texture texture() {
    const auto& pool = level == Level::L3 ? part.holdout_textures : part.train_textures;
    return pool[rng.uniform_u64(pool.size())];
  }

  Texture texture_other_than(Texture avoid) {
    for (int i = 0; i < kMaxAttempts; ++i) {
      Texture t = texture();
      if (t != avoid) return t;
    }
    throw std::runtime_error("texture pool too small");
  }

  ObjectSpec draggable() {
    auto [s, t] = draggable_combo();
    return ObjectSpec::make(s, t);
  }

  ObjectSpec draggable_with_texture(Texture t) {
    auto [s, tex] = draggable_combo_with_texture(t);
    return ObjectSpec::make(s, tex);
  }

  ObjectSpec distractor_avoiding_texture(Texture avoid) {
    for (int i = 0; i < kMaxAttempts; ++i) {
      ObjectSpec spec = draggable();
      if (spec.texture != avoid) return spec;
    }
    throw std::runtime_error("cannot sample distractor avoiding texture");
  }

  // Destination object: a designated container shape, or any draggable shape
  // under the Extreme modification. Marked is_container either way.
  ObjectSpec container(bool extreme, Texture texture) {
    Shape shape;
    if (extreme) {
      const auto& pool = level == Level::L3 ? part.holdout_shapes : part.train_shapes;
      shape = pool[rng.uniform_u64(pool.size())];
    } else {
      auto pool = container_shapes();
      shape = pool[rng.uniform_u64(pool.size())];
    }
    ObjectSpec spec = ObjectSpec::make(shape, texture);
    spec.is_container = true;
    return spec;
  }
};

// Accumulates (role, spec, pose) triples, then inserts them into a workspace
// in shuffled order so object ids carry no role information.
struct SceneBuilder {
  Rng& rng;
  std::vector<std::string> roles;
  std::vector<ObjectSpec> specs;
  std::vector<Pose> poses;

  Vec2 sample_point() {
    return {rng.uniform_range(kMargin, 1.0 - kMargin), rng.uniform_range(kMargin, 1.0 - kMargin)};
  }

  bool clear_of_others(Vec2 p) const {
    for (const auto& pose : poses)
      if ((p - pose.xy()).norm() < kMinSpawnDist) return false;
    return true;
  }

  Vec2 place_point(const std::function<bool(Vec2)>& ok = nullptr) {
    for (int a = 0; a < kMaxAttempts; ++a) {
      Vec2 p = sample_point();
      if (!clear_of_others(p)) continue;
      if (ok && !ok(p)) continue;
      return p;
    }
    throw std::runtime_error("placement failed after 100 attempts");
  }

  void add(std::string role, ObjectSpec spec, Pose pose) {
    roles.push_back(std::move(role));
    specs.push_back(spec);
    poses.push_back(pose);
  }

  void add_at(std::string role, ObjectSpec spec, const std::function<bool(Vec2)>& ok = nullptr,
              bool random_yaw = true) {
    Vec2 p = place_point(ok);
    double yaw = random_yaw ? rng.uniform_range(-M_PI, M_PI) : 0.0;
    add(std::move(role), spec, Pose::with_yaw(p.x, p.y, yaw));
  }

  // Insert in shuffled order; returns role -> object id.
  std::map<std::string, int> build(WorkspaceState& state) {
    std::vector<size_t> order(roles.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    std::map<std::string, int> ids;
    for (size_t k : order) {
      ids[roles[k]] = static_cast<int>(state.objects.size());
      state.add(specs[k], poses[k]);
    }
    return ids;
  }
};

Referent object_ref(const std::string& id) { return Referent{id, Referent::Kind::Object}; }
Referent frame_ref(const std::string& id) { return Referent{id, Referent::Kind::Frame}; }

void build_t1_family(TaskInstance& inst, SpecSampler& sampler, SceneBuilder& scene, Rng& rng,
                     const TemplateLibrary* library_nouns) {
  const bool extreme = has_extreme(inst.difficulty);
  int distractors = 0;
  switch (inst.task) {
    case TaskId::T1: distractors = has_distracting(inst.difficulty) ? 6 : 1; break;
    case TaskId::T7: distractors = has_distracting(inst.difficulty) ? 3 : 1; break;
    case TaskId::T14: distractors = has_distracting(inst.difficulty) ? 5 : 1; break;
    default: throw std::logic_error("not a T1-family task");
  }
  inst.workspace_distractors = distractors;

  ObjectSpec container_spec;
  std::vector<ObjectSpec> required_specs;
  if (inst.task == TaskId::T14) {
    Texture tau = sampler.texture();
    container_spec = sampler.container(extreme, tau);
    int matching = 1 + rng.uniform_int(3);
    for (int i = 0; i < matching; ++i) required_specs.push_back(sampler.draggable_with_texture(tau));
    for (int i = 0; i < distractors; ++i) {
      ObjectSpec d = sampler.distractor_avoiding_texture(tau);
      scene.add_at("distractor" + std::to_string(i), d);
    }
  } else {
    container_spec = sampler.container(extreme, sampler.texture());
    required_specs.push_back(sampler.draggable());
    for (int i = 0; i < distractors; ++i)
      scene.add_at("distractor" + std::to_string(i), sampler.draggable());
  }

  scene.add_at("container", container_spec, nullptr, /*random_yaw=*/false);
  Vec2 c_center = scene.poses.back().xy();
  Footprint c_fp = container_spec.footprint();
  auto outside_container = [&](Vec2 p) { return !c_fp.contains(p, c_center, 0.0); };
  for (size_t i = 0; i < required_specs.size(); ++i)
    scene.add_at("required" + std::to_string(i), required_specs[i], outside_container);

  auto ids = scene.build(inst.initial);

  PlaceGoal goal;
  goal.container_id = ids.at("container");
  for (size_t i = 0; i < required_specs.size(); ++i)
    goal.required_ids.push_back(ids.at("required" + std::to_string(i)));
  std::sort(goal.required_ids.begin(), goal.required_ids.end());
  inst.goal = goal;

  if (inst.task == TaskId::T1) {
    inst.bindings.referents["dragged_obj"] = object_ref("r0");
    inst.bindings.referents["base_obj"] = object_ref("r1");
    inst.referents["r0"] = {Referent::Kind::Object, ids.at("required0"), {}};
    inst.referents["r1"] = {Referent::Kind::Object, ids.at("container"), {}};
  } else if (inst.task == TaskId::T7) {
    const auto& defaults = library_nouns->default_nouns();
    std::string noun_a = defaults[0], noun_b = defaults[1];
    if (extreme) {
      const auto& pool = library_nouns->extreme_nouns();
      size_t i = rng.uniform_u64(pool.size());
      size_t j = rng.uniform_u64(pool.size() - 1);
      if (j >= i) j += 1;
      noun_a = pool[i];
      noun_b = pool[j];
    }
    inst.bindings.words["noun_a"] = noun_a;
    inst.bindings.words["noun_b"] = noun_b;
    inst.bindings.referents["base_obj"] = object_ref("r0");
    inst.bindings.referents["dragged_obj"] = object_ref("r1");
    inst.referents["r0"] = {Referent::Kind::Object, ids.at("container"), {}};
    inst.referents["r1"] = {Referent::Kind::Object, ids.at("required0"), {}};
  } else {
    inst.bindings.referents["base_obj"] = object_ref("r0");
    inst.referents["r0"] = {Referent::Kind::Object, ids.at("container"), {}};
  }
}

void build_t2(TaskInstance& inst, SpecSampler& sampler, SceneBuilder& scene, Rng& rng) {
  const bool extreme = has_extreme(inst.difficulty);
  const int distractors = has_distracting(inst.difficulty) ? 3 : 1;
  inst.workspace_distractors = distractors;
  inst.frame_distractors = distractors;

  Texture tau = sampler.texture();
  Texture beta = sampler.texture_other_than(tau);
  ObjectSpec container_spec = sampler.container(extreme, beta);

  int matching = 1 + rng.uniform_int(3);
  std::vector<ObjectSpec> match_specs;
  for (int i = 0; i < matching; ++i) match_specs.push_back(sampler.draggable_with_texture(tau));
  for (int i = 0; i < distractors; ++i)
    scene.add_at("distractor" + std::to_string(i), sampler.distractor_avoiding_texture(tau));

  scene.add_at("container", container_spec, nullptr, /*random_yaw=*/false);
  Vec2 c_center = scene.poses.back().xy();
  Footprint c_fp = container_spec.footprint();
  auto outside_container = [&](Vec2 p) { return !c_fp.contains(p, c_center, 0.0); };
  for (int i = 0; i < matching; ++i)
    scene.add_at("required" + std::to_string(i), match_specs[static_cast<size_t>(i)],
                 outside_container);

  auto ids = scene.build(inst.initial);

  PlaceGoal goal;
  goal.container_id = ids.at("container");
  for (int i = 0; i < matching; ++i)
    goal.required_ids.push_back(ids.at("required" + std::to_string(i)));
  std::sort(goal.required_ids.begin(), goal.required_ids.end());
  inst.goal = goal;

  // The frame shows the matching objects plus frame-only distractors.
  SceneBuilder frame{rng, {}, {}, {}};
  for (int i = 0; i < matching; ++i)
    frame.add_at("match" + std::to_string(i), match_specs[static_cast<size_t>(i)]);
  for (int i = 0; i < distractors; ++i)
    frame.add_at("fd" + std::to_string(i), sampler.distractor_avoiding_texture(tau));
  WorkspaceState frame_scene;
  frame.build(frame_scene);

  inst.bindings.words["dragged_texture"] = texture_word(tau);
  inst.bindings.words["base_texture"] = texture_word(beta);
  inst.bindings.referents["scene"] = frame_ref("r0");
  inst.referents["r0"] = {Referent::Kind::Frame, -1, std::move(frame_scene)};
}

void build_t3(TaskInstance& inst, SpecSampler& sampler, SceneBuilder& scene, Rng& rng) {
  const int distractors = has_distracting(inst.difficulty) ? 8 : 1;
  inst.workspace_distractors = distractors;
  static const int kDefaultAngles[] = {30, 60, 90, 120, 150};
  static const int kExtremeAngles[] = {20, 40, 60, 80, 100, 120, 140, 160};

  scene.add_at("dragged", sampler.draggable());
  for (int i = 0; i < distractors; ++i)
    scene.add_at("distractor" + std::to_string(i), sampler.draggable());
  auto ids = scene.build(inst.initial);

  int angle;
  if (has_extreme(inst.difficulty))
    angle = kExtremeAngles[rng.uniform_u64(std::size(kExtremeAngles))];
  else
    angle = kDefaultAngles[rng.uniform_u64(std::size(kDefaultAngles))];

  int dragged_id = ids.at("dragged");
  double yaw0 = inst.initial.object(dragged_id).pose.yaw();
  RotateGoal goal;
  goal.object_id = dragged_id;
  goal.target_yaw_rad = wrap_angle(yaw0 + angle * M_PI / 180.0);
  inst.goal = goal;

  inst.bindings.words["angle_in_degree"] = std::to_string(angle);
  inst.bindings.referents["dragged_obj"] = object_ref("r0");
  inst.referents["r0"] = {Referent::Kind::Object, dragged_id, {}};
}

void build_t4(TaskInstance& inst, SpecSampler& sampler, SceneBuilder& scene, Rng& rng) {
  const bool always_block = has_extreme(inst.difficulty);
  const int distractors = has_distracting(inst.difficulty) ? 3 : 2;
  inst.workspace_distractors = distractors;
  const int goal_objects = 2;
  const double kGoalSeparation = 0.22;
  const double kMisplacedDist = 0.12;

  std::vector<ObjectSpec> goal_specs;
  std::vector<Vec2> goal_xy;
  std::vector<double> goal_yaw;
  for (int i = 0; i < goal_objects; ++i) {
    goal_specs.push_back(sampler.draggable());
    for (int a = 0;; ++a) {
      if (a >= kMaxAttempts) throw std::runtime_error("goal pose sampling failed");
      Vec2 p = scene.sample_point();
      bool ok = true;
      for (Vec2 q : goal_xy)
        if ((p - q).norm() < kGoalSeparation) ok = false;
      if (ok) {
        goal_xy.push_back(p);
        break;
      }
    }
    goal_yaw.push_back(rng.uniform_range(-M_PI, M_PI));
  }

  std::vector<Footprint> goal_fps;
  for (const auto& s : goal_specs) goal_fps.push_back(s.footprint());
  auto in_any_goal = [&](Vec2 p) {
    for (int i = 0; i < goal_objects; ++i)
      if (goal_fps[static_cast<size_t>(i)].contains(p, goal_xy[static_cast<size_t>(i)],
                                                    goal_yaw[static_cast<size_t>(i)]))
        return true;
    return false;
  };

  // At least one object starts away from its goal slot.
  int misplaced = 1 + rng.uniform_int(goal_objects);
  std::vector<int> order = {0, 1};
  rng.shuffle(order);
  std::vector<bool> is_misplaced(goal_objects, false);
  for (int k = 0; k < misplaced; ++k) is_misplaced[static_cast<size_t>(order[static_cast<size_t>(k)])] = true;

  std::vector<int> misplaced_idx;
  for (int i = 0; i < goal_objects; ++i) {
    if (is_misplaced[static_cast<size_t>(i)]) {
      misplaced_idx.push_back(i);
      auto away = [&](Vec2 p) {
        return (p - goal_xy[static_cast<size_t>(i)]).norm() >= kMisplacedDist && !in_any_goal(p);
      };
      scene.add_at("goal" + std::to_string(i), goal_specs[static_cast<size_t>(i)], away);
    } else {
      scene.add("goal" + std::to_string(i), goal_specs[static_cast<size_t>(i)],
                Pose::with_yaw(goal_xy[static_cast<size_t>(i)].x, goal_xy[static_cast<size_t>(i)].y,
                               goal_yaw[static_cast<size_t>(i)]));
    }
  }

  for (int d = 0; d < distractors; ++d) {
    bool block = always_block || rng.chance(0.25);
    ObjectSpec spec = sampler.draggable();
    if (block) {
      int gi = misplaced_idx[rng.uniform_u64(misplaced_idx.size())];
      const Footprint& fp = goal_fps[static_cast<size_t>(gi)];
      Vec2 center = goal_xy[static_cast<size_t>(gi)];
      for (int a = 0;; ++a) {
        if (a >= kMaxAttempts) throw std::runtime_error("blocking distractor placement failed");
        double r = fp.outer_radius() * 0.5 * rng.uniform_real();
        double th = rng.uniform_range(-M_PI, M_PI);
        Vec2 p = center + Vec2{r * std::cos(th), r * std::sin(th)};
        if (!fp.contains(p, center, goal_yaw[static_cast<size_t>(gi)])) continue;
        if (!scene.clear_of_others(p)) continue;
        scene.add("blocker" + std::to_string(d), spec,
                  Pose::with_yaw(p.x, p.y, rng.uniform_range(-M_PI, M_PI)));
        break;
      }
    } else {
      scene.add_at("blocker" + std::to_string(d), spec,
                   [&](Vec2 p) { return !in_any_goal(p); });
    }
  }

  auto ids = scene.build(inst.initial);

  RearrangeGoal goal;
  for (int i = 0; i < goal_objects; ++i)
    goal.items.push_back({ids.at("goal" + std::to_string(i)), goal_xy[static_cast<size_t>(i)].x,
                          goal_xy[static_cast<size_t>(i)].y, goal_yaw[static_cast<size_t>(i)]});
  for (int d = 0; d < distractors; ++d) goal.distractor_ids.push_back(ids.at("blocker" + std::to_string(d)));
  std::sort(goal.distractor_ids.begin(), goal.distractor_ids.end());
  inst.goal = goal;

  // The frame shows only the goal objects, at their goal poses.
  SceneBuilder frame{rng, {}, {}, {}};
  for (int i = 0; i < goal_objects; ++i)
    frame.add("goal" + std::to_string(i), goal_specs[static_cast<size_t>(i)],
              Pose::with_yaw(goal_xy[static_cast<size_t>(i)].x, goal_xy[static_cast<size_t>(i)].y,
                             goal_yaw[static_cast<size_t>(i)]));
  WorkspaceState frame_scene;
  frame.build(frame_scene);

  inst.bindings.referents["scene"] = frame_ref("r0");
  inst.referents["r0"] = {Referent::Kind::Frame, -1, std::move(frame_scene)};
}

}  // namespace

const char* level_name(Level l) {
  for (auto& [level, name] : kLevelNames)
    if (level == l) return name;
  throw std::logic_error("bad Level");
}

Level level_from_name(const std::string& s) {
  for (auto& [level, name] : kLevelNames)
    if (s == name) return level;
  throw std::runtime_error("unknown level: " + s);
}

const char* difficulty_name(Difficulty d) {
  for (auto& [diff, name] : kDifficultyNames)
    if (diff == d) return name;
  throw std::logic_error("bad Difficulty");
}

Difficulty difficulty_from_name(const std::string& s) {
  for (auto& [diff, name] : kDifficultyNames)
    if (s == name) return diff;
  throw std::runtime_error("unknown difficulty: " + s);
}

std::vector<Level> all_levels() { return {Level::L1, Level::L2, Level::L3, Level::L4}; }

std::vector<Difficulty> all_difficulties() {
  return {Difficulty::Default, Difficulty::Distracting, Difficulty::Extreme,
          Difficulty::ExtremelyDistracting};
}

bool task_admissible(TaskId task, Level level) {
  if (task == TaskId::T14) return level == Level::L4;
  return level != Level::L4;
}

std::vector<TaskId> tasks_for_level(Level level) {
  if (level == Level::L4) return {TaskId::T14};
  return training_tasks();
}

std::map<std::string, ObjectSpec> TaskInstance::scene_table() const {
  std::map<std::string, ObjectSpec> table;
  for (const auto& [rid, entry] : referents) {
    if (entry.kind == Referent::Kind::Object)
      table[rid] = initial.object(entry.object_id).spec;
  }
  return table;
}

Image TaskInstance::frame_image(const std::string& referent_id) const {
  const auto& entry = referents.at(referent_id);
  if (entry.kind != Referent::Kind::Frame)
    throw std::runtime_error("referent is not a frame: " + referent_id);
  return render_topdown(entry.frame_scene, kObsHeight, kObsWidth);
}

TaskInstance sample_instance(TaskId task, Level level, Difficulty difficulty,
                             const AssetPartition& partition, uint64_t seed) {
  if (!task_admissible(task, level))
    throw std::invalid_argument(std::string("task ") + task_name(task) +
                                " is not admissible at level " + level_name(level));

  // L4 probes a novel task composed of seen assets, so it draws from the
  // same pools as L1.
  Level asset_level = level == Level::L4 ? Level::L1 : level;

  TaskInstance inst;
  inst.task = task;
  inst.level = level;
  inst.difficulty = difficulty;
  inst.seed = seed;

  static const TemplateLibrary library = TemplateLibrary::load_default();

  Rng rng(Rng::derive(seed, Rng::hash_label("instance")));
  SpecSampler sampler{partition, asset_level, rng};
  SceneBuilder scene{rng, {}, {}, {}};

  switch (task) {
    case TaskId::T1:
    case TaskId::T7:
    case TaskId::T14:
      build_t1_family(inst, sampler, scene, rng, &library);
      break;
    case TaskId::T2:
      build_t2(inst, sampler, scene, rng);
      break;
    case TaskId::T3:
      build_t3(inst, sampler, scene, rng);
      break;
    case TaskId::T4:
      build_t4(inst, sampler, scene, rng);
      break;
  }

  inst.initial.validate();
  if (check_success(inst.goal, inst.initial))
    throw std::runtime_error("generator produced an already-solved start state");
  return inst;
}

namespace {

std::optional<Vec2> find_grasp_point(const WorkspaceState& state, int target_id) {
  const PlacedObject& obj = state.object(target_id);
  auto usable = [&](Vec2 p) {
    if (p.x < state.min_x || p.x > state.max_x || p.y < state.min_y || p.y > state.max_y)
      return false;
    if (!obj.contains(p)) return false;
    auto g = grasp_target(state, p);
    return g.has_value() && *g == target_id;
  };

  Vec2 center = obj.pose.xy();
  if (usable(center)) return center;
  Aabb box = obj.world_aabb();
  const int kGrid = 15;
  for (int i = 0; i < kGrid; ++i) {
    for (int j = 0; j < kGrid; ++j) {
      Vec2 p{box.min_x + (i + 0.5) / kGrid * (box.max_x - box.min_x),
             box.min_y + (j + 0.5) / kGrid * (box.max_y - box.min_y)};
      if (usable(p)) return p;
    }
  }
  return std::nullopt;
}

// Deterministic free spot for relocating an object: the grid point farthest
// from everything else that avoids the forbidden regions.
Vec2 relocation_spot(const WorkspaceState& state, const std::function<bool(Vec2)>& forbidden) {
  const int kGrid = 12;
  Vec2 best{0.5, 0.5};
  double best_score = -1.0;
  for (int i = 0; i < kGrid; ++i) {
    for (int j = 0; j < kGrid; ++j) {
      Vec2 p{kMargin + (1.0 - 2.0 * kMargin) * i / (kGrid - 1),
             kMargin + (1.0 - 2.0 * kMargin) * j / (kGrid - 1)};
      if (forbidden && forbidden(p)) continue;
      double score = 1e9;
      for (const auto& o : state.objects) score = std::min(score, (p - o.pose.xy()).norm());
      if (score > best_score) {
        best_score = score;
        best = p;
      }
    }
  }
  if (best_score < 0.0) throw std::runtime_error("oracle: no relocation spot available");
  return best;
}

struct OraclePlan {
  WorkspaceState state;
  std::vector<ContinuousAction> actions;
  std::function<bool(Vec2)> forbidden;  // regions relocated objects must avoid

  void apply(const ContinuousAction& a) {
    state = apply_action(state, a);
    actions.push_back(a);
  }

  Vec2 grasp_or_clear(int id) {
    auto g = find_grasp_point(state, id);
    if (!g) {
      // Something sits on top of the whole object; move the cover away first.
      auto cover = grasp_target(state, state.object(id).pose.xy());
      if (!cover || *cover == id) throw std::runtime_error("oracle: object unreachable");
      auto cg = find_grasp_point(state, *cover);
      if (!cg) throw std::runtime_error("oracle: cover unreachable");
      Vec2 spot = relocation_spot(state, forbidden);
      apply({Pose::at(cg->x, cg->y), Pose::at(spot.x, spot.y)});
      g = find_grasp_point(state, id);
      if (!g) throw std::runtime_error("oracle: object still unreachable");
    }
    return *g;
  }

  void pick_place(int id, Vec2 dest, double yaw_delta) {
    Vec2 g = grasp_or_clear(id);
    Pose end = yaw_delta == 0.0 ? Pose::at(dest.x, dest.y)
                                : Pose::with_yaw(dest.x, dest.y, yaw_delta);
    apply({Pose::at(g.x, g.y), end});
  }
};

}  // namespace

std::vector<ContinuousAction> oracle_actions(const TaskInstance& instance) {
  OraclePlan plan{instance.initial, {}, nullptr};

  if (const auto* goal = std::get_if<PlaceGoal>(&instance.goal)) {
    const PlacedObject& container = instance.initial.object(goal->container_id);
    Vec2 c_center = container.pose.xy();
    Footprint c_fp = container.spec.footprint();
    double c_yaw = container.pose.yaw();
    plan.forbidden = [c_fp, c_center, c_yaw](Vec2 p) { return c_fp.contains(p, c_center, c_yaw); };
    for (int id : goal->required_ids) {
      if (container.contains(plan.state.object(id).pose.xy())) continue;
      plan.pick_place(id, c_center, 0.0);
    }
  } else if (const auto* rot = std::get_if<RotateGoal>(&instance.goal)) {
    const PlacedObject& obj = plan.state.object(rot->object_id);
    double delta = wrap_angle(rot->target_yaw_rad - obj.pose.yaw());
    plan.pick_place(rot->object_id, obj.pose.xy(), delta);
  } else {
    const auto& goal = std::get<RearrangeGoal>(instance.goal);
    std::vector<std::pair<Footprint, std::pair<Vec2, double>>> goal_regions;
    for (const auto& item : goal.items)
      goal_regions.push_back({plan.state.object(item.object_id).spec.footprint(),
                              {{item.goal_x, item.goal_y}, item.goal_yaw_rad}});
    plan.forbidden = [goal_regions](Vec2 p) {
      for (const auto& [fp, place] : goal_regions)
        if (fp.contains(p, place.first, place.second)) return true;
      return false;
    };

    // Clear blocking distractors first, then move misplaced goal objects in.
    for (int did : goal.distractor_ids) {
      Vec2 p = plan.state.object(did).pose.xy();
      if (!plan.forbidden(p)) continue;
      Vec2 g = plan.grasp_or_clear(did);
      Vec2 spot = relocation_spot(plan.state, plan.forbidden);
      plan.apply({Pose::at(g.x, g.y), Pose::at(spot.x, spot.y)});
    }
    for (const auto& item : goal.items) {
      const Pose& p = plan.state.object(item.object_id).pose;
      if (std::hypot(p.x - item.goal_x, p.y - item.goal_y) <= goal.eps_pos) continue;
      double delta = wrap_angle(item.goal_yaw_rad - p.yaw());
      plan.pick_place(item.object_id, {item.goal_x, item.goal_y}, delta);
    }
  }

  if (!check_success(instance.goal, plan.state))
    throw std::runtime_error("oracle plan does not reach success (generator bug)");
  return plan.actions;
}

int min_actions(const TaskInstance& instance) {
  return static_cast<int>(oracle_actions(instance).size());
}

MultimodalPrompt instance_prompt(const TaskInstance& instance, const TemplateLibrary& library,
                                 const PromptVariant& variant) {
  return render_prompt(library.at(instance.task), instance.bindings, variant);
}

Trajectory oracle_solve(const TaskInstance& instance, const TemplateLibrary& library) {
  auto actions = oracle_actions(instance);
  Trajectory traj;
  traj.task = instance.task;
  traj.instance_seed = instance.seed;
  traj.prompt = instance_prompt(instance, library, PromptVariant::original());

  Episode episode(instance.initial, instance.goal, kDefaultBudget);
  for (const auto& action : actions) {
    TrajStep step;
    step.obs = object_tokens(episode.state());
    step.image = render_topdown(episode.state(), kObsHeight, kObsWidth);
    step.action = action;
    episode.step(action);
    traj.steps.push_back(std::move(step));
  }
  traj.success = episode.status().outcome == EpisodeStatus::Outcome::Success;
  if (!traj.success)
    throw std::runtime_error("oracle trajectory did not replay to success (generator bug)");
  return traj;
}

}  // namespace ttb
