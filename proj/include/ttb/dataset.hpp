#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ttb/tasks.hpp"
#include "ttb/vocab.hpp"

namespace ttb {

using Json = nlohmann::ordered_json;

// One stored demonstration: the bound instance plus the oracle's actions.
// Observations are not stored; the simulator re-derives them exactly.
struct Record {
  TaskInstance instance;
  std::vector<ContinuousAction> actions;
  bool success = false;
};

struct GenConfig {
  int per_task = 1000;
  uint64_t seed = 0;
  double holdout_fraction = 0.075;
  std::vector<TaskId> tasks = training_tasks();
  Level level = Level::L1;
  Difficulty difficulty = Difficulty::Default;
};

struct DatasetManifest {
  GenConfig config;
  AssetPartition partition;
  std::map<TaskId, std::vector<int>> valid_indices;  // per-task stratified holdout
};

struct Dataset {
  std::vector<Record> records;  // grouped by task in config order
  DatasetManifest manifest;
};

// JSON conversions (used for records.jsonl, goldens, and instance replay).
Json pose_to_json(const Pose& p);
Pose pose_from_json(const Json& j);
Json state_to_json(const WorkspaceState& s);
WorkspaceState state_from_json(const Json& j);
Json goal_to_json(const GoalSpec& g);
GoalSpec goal_from_json(const Json& j);
Json instance_to_json(const TaskInstance& inst);
TaskInstance instance_from_json(const Json& j);
Json record_to_json(const Record& r);
Record record_from_json(const Json& j);
Json partition_to_json(const AssetPartition& p);
AssetPartition partition_from_json(const Json& j);

// Deterministic per-task holdout assignment: seeded shuffle, round(n*fraction).
std::vector<int> split_valid_indices(int n, double fraction, uint64_t seed, TaskId task);

// Generates per_task oracle demonstrations per training task, replay-verifies
// every one, and writes records.bin, records.jsonl, manifest.json, vocab.txt.
DatasetManifest generate_dataset(const GenConfig& config, const std::filesystem::path& out_dir,
                                 int jobs = 1);

Dataset load_dataset(const std::filesystem::path& dir);

// Train/valid record views according to the manifest split.
std::pair<std::vector<const Record*>, std::vector<const Record*>> split_records(const Dataset& ds);

// Model-ready form of a prompt referent: either an object token or a frame.
struct ReferentFeature {
  bool is_frame = false;
  ObjectToken object;
  Image frame;
};

struct PreppedStep {
  ObjectCentricObs obs;
  Image image;
  DiscreteAction bins;
};

// A trajectory after preprocessing: tokenized prompt, bound referent
// features, and per-step observations in both visual modes plus the
// discretized target action.
struct PreppedTrajectory {
  TaskId task = TaskId::T1;
  uint64_t instance_seed = 0;
  TokenizedPrompt tp;
  std::vector<ReferentFeature> slots;
  std::vector<PreppedStep> steps;
};

PreppedTrajectory preprocess(const Record& record, const Vocabulary& vocab,
                             const TemplateLibrary& library);

Json prepped_to_json(const PreppedTrajectory& pt);  // golden-test form

// Builds the referent features for a tokenized prompt against an instance.
std::vector<ReferentFeature> referent_features(const TokenizedPrompt& tp,
                                               const TaskInstance& instance);

}  // namespace ttb
