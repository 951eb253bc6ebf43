#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ttb/assets.hpp"
#include "ttb/sim.hpp"
#include "ttb/templates.hpp"

namespace ttb {

enum class Level { L1, L2, L3, L4 };
enum class Difficulty { Default, Distracting, Extreme, ExtremelyDistracting };

const char* level_name(Level l);
Level level_from_name(const std::string& s);
const char* difficulty_name(Difficulty d);
Difficulty difficulty_from_name(const std::string& s);
std::vector<Level> all_levels();
std::vector<Difficulty> all_difficulties();

bool task_admissible(TaskId task, Level level);  // T14 only at L4, others L1-L3
std::vector<TaskId> tasks_for_level(Level level);

// What a prompt referent resolves to: a workspace object, or a scene that is
// rendered to a frame image on demand.
struct ReferentEntry {
  Referent::Kind kind = Referent::Kind::Object;
  int object_id = -1;
  WorkspaceState frame_scene;  // frame referents only
};

constexpr int kObsHeight = 32;
constexpr int kObsWidth = 64;

// A fully bound episode: everything needed to replay it exactly.
struct TaskInstance {
  TaskId task = TaskId::T1;
  Level level = Level::L1;
  Difficulty difficulty = Difficulty::Default;
  uint64_t seed = 0;
  WorkspaceState initial;
  GoalSpec goal;
  Bindings bindings;
  std::map<std::string, ReferentEntry> referents;
  int workspace_distractors = 0;
  int frame_distractors = 0;

  // Object specs for referent-to-text substitution (object referents only).
  std::map<std::string, ObjectSpec> scene_table() const;
  Image frame_image(const std::string& referent_id) const;
};

TaskInstance sample_instance(TaskId task, Level level, Difficulty difficulty,
                             const AssetPartition& partition, uint64_t seed);

// Optimal action sequence; replaying it through the simulator must succeed.
std::vector<ContinuousAction> oracle_actions(const TaskInstance& instance);

// Oracle length, used as the strict-mode episode budget.
int min_actions(const TaskInstance& instance);

struct TrajStep {
  ObjectCentricObs obs;
  Image image;
  ContinuousAction action;
};

struct Trajectory {
  TaskId task = TaskId::T1;
  uint64_t instance_seed = 0;
  MultimodalPrompt prompt;
  std::vector<TrajStep> steps;
  bool success = false;
};

Trajectory oracle_solve(const TaskInstance& instance, const TemplateLibrary& library);

MultimodalPrompt instance_prompt(const TaskInstance& instance, const TemplateLibrary& library,
                                 const PromptVariant& variant);

}  // namespace ttb
