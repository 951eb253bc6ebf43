#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ttb/geometry.hpp"

namespace ttb {

// End-effector pose: position plus orientation quaternion (w, x, y, z).
// The world is a top-down table plane in (x, y); z and the non-yaw
// quaternion components ride along so the 14-coordinate action interface
// keeps its full shape, but they have no dynamic effect.
struct Pose {
  double x = 0.0, y = 0.0, z = 0.0;
  double qw = 1.0, qx = 0.0, qy = 0.0, qz = 0.0;

  static Pose at(double x, double y) { return Pose{x, y, 0.0, 1.0, 0.0, 0.0, 0.0}; }
  static Pose with_yaw(double x, double y, double yaw_rad) {
    return Pose{x, y, 0.0, std::cos(yaw_rad / 2.0), 0.0, 0.0, std::sin(yaw_rad / 2.0)};
  }

  // Rotation about the vertical axis; well-defined for any (qw, qz) != 0.
  double yaw() const {
    if (qw == 0.0 && qz == 0.0) return 0.0;
    return wrap_angle(2.0 * std::atan2(qz, qw));
  }

  double quat_norm() const { return std::sqrt(qw * qw + qx * qx + qy * qy + qz * qz); }
  Vec2 xy() const { return {x, y}; }

  bool operator==(const Pose&) const = default;
};

struct ContinuousAction {
  Pose start;
  Pose end;
};

struct DiscreteAction {
  std::array<int, 14> bins{};

  bool operator==(const DiscreteAction&) const = default;
};

// Per-coordinate bin layout of the two-pose action space. Defaults: 50 bins
// per coordinate except 100 for each y, totalling 800 bins over 14 coords.
class ActionBinsConfig {
 public:
  struct Coord {
    const char* name;
    double lo;
    double hi;
    int bins;
    double width() const { return (hi - lo) / bins; }
  };

  static const ActionBinsConfig& standard();

  const std::array<Coord, 14>& coords() const { return coords_; }
  int total_bins() const;

  DiscreteAction discretize(const ContinuousAction& a) const;
  ContinuousAction undiscretize(const DiscreteAction& d) const;

  int bin_of(int coord, double value) const;       // floor((v-lo)/w), clamped
  double center_of(int coord, int bin) const;

 private:
  explicit ActionBinsConfig(std::array<Coord, 14> coords) : coords_(coords) {}
  std::array<Coord, 14> coords_;
};

// Flattens an action's 14 coordinates in config order.
std::array<double, 14> action_values(const ContinuousAction& a);
ContinuousAction action_from_values(const std::array<double, 14>& v);

enum class Shape {
  Circle, Square, Triangle, Star, Flower, Hexagon, LetterL, Cross,  // draggable
  Pan, Bowl, Frame, Container                                       // container class
};
enum class Texture {
  Red, Green, Blue, Yellow, Purple, Orange, Cyan, Magenta, Olive, Pink, Brown, Teal
};

constexpr int kShapeCount = 12;
constexpr int kTextureCount = 12;

const char* shape_word(Shape s);
const char* texture_word(Texture t);
Shape shape_from_word(const std::string& w);
Texture texture_from_word(const std::string& w);
bool is_container_shape(Shape s);
std::vector<Shape> draggable_shapes();
std::vector<Shape> container_shapes();
std::vector<Texture> all_textures();
std::array<uint8_t, 3> texture_rgb(Texture t);

struct ObjectSpec {
  Shape shape = Shape::Circle;
  Texture texture = Texture::Red;
  bool is_container = false;  // defaults from the shape; Extreme overrides
  double scale = 1.0;

  static ObjectSpec make(Shape s, Texture t, double scale = 1.0) {
    return {s, t, is_container_shape(s), scale};
  }

  Footprint footprint() const;

  bool operator==(const ObjectSpec&) const = default;
};

struct PlacedObject {
  int id = 0;
  ObjectSpec spec;
  Pose pose;

  bool contains(Vec2 p) const { return spec.footprint().contains(p, pose.xy(), pose.yaw()); }
  Aabb world_aabb() const { return spec.footprint().world_aabb(pose.xy(), pose.yaw()); }
};

struct WorkspaceState {
  std::vector<PlacedObject> objects;  // kept sorted by id; id order is draw order
  double min_x = 0.0, min_y = 0.0, max_x = 1.0, max_y = 1.0;

  const PlacedObject& object(int id) const;
  PlacedObject& object(int id);
  void add(ObjectSpec spec, Pose pose);  // id = next index, validates pose
  void validate() const;
};

// Task goals; check_success evaluates these against a state.
struct PlaceGoal {
  std::vector<int> required_ids;  // objects whose centers must be in the container
  int container_id = 0;
};
struct RotateGoal {
  int object_id = 0;
  double target_yaw_rad = 0.0;
  double tol_rad = 10.0 * M_PI / 180.0;
};
struct RearrangeGoal {
  struct Item {
    int object_id;
    double goal_x, goal_y, goal_yaw_rad;
  };
  std::vector<Item> items;
  std::vector<int> distractor_ids;  // must stay clear of every goal footprint
  double eps_pos = 0.02;            // one x bin width
};
using GoalSpec = std::variant<PlaceGoal, RotateGoal, RearrangeGoal>;

bool check_success(const GoalSpec& goal, const WorkspaceState& state);

// Highest-id non-container object strictly containing (x, y), if any.
std::optional<int> grasp_target(const WorkspaceState& state, Vec2 point);

// Pure suction-primitive transition: grasp at start, carry to end, rotate by
// the yaw delta between the two poses. A miss leaves the state unchanged.
WorkspaceState apply_action(const WorkspaceState& state, const ContinuousAction& action);

struct EpisodeStatus {
  enum class Outcome { Running, Success, Failure };
  int steps_taken = 0;
  Outcome outcome = Outcome::Running;

  bool terminal() const { return outcome != Outcome::Running; }
};

constexpr int kDefaultBudget = 10;

// Mutable episode wrapper enforcing the termination protocol: success after
// a move ends the episode; exhausting the budget without success fails it.
class Episode {
 public:
  Episode(WorkspaceState initial, GoalSpec goal, int budget = kDefaultBudget);

  const WorkspaceState& state() const { return state_; }
  const EpisodeStatus& status() const { return status_; }
  int budget() const { return budget_; }

  EpisodeStatus step(const ContinuousAction& action);

 private:
  WorkspaceState state_;
  GoalSpec goal_;
  int budget_;
  EpisodeStatus status_;
};

struct Image {
  int height = 0, width = 0;
  std::vector<uint8_t> rgb;  // height*width*3, row-major

  uint8_t* at(int row, int col) { return &rgb[static_cast<size_t>(row * width + col) * 3]; }
  const uint8_t* at(int row, int col) const {
    return &rgb[static_cast<size_t>(row * width + col) * 3];
  }
  bool operator==(const Image&) const = default;
};

// Deterministic rasterization: x maps to rows, y to columns, objects drawn
// back-to-front by id.
Image render_topdown(const WorkspaceState& state, int height, int width);

struct ObjectToken {
  int object_id = 0;
  std::array<double, 4> bbox{};  // min_x, min_y, max_x, max_y in world units
  Shape shape = Shape::Circle;
  Texture texture = Texture::Red;

  bool operator==(const ObjectToken&) const = default;
};

struct ObjectCentricObs {
  std::vector<ObjectToken> tokens;

  bool operator==(const ObjectCentricObs&) const = default;
};

ObjectCentricObs object_tokens(const WorkspaceState& state);

// Text snapshot for golden tests: one line per object, 9 decimal places.
std::string snapshot_text(const WorkspaceState& state);

}  // namespace ttb
