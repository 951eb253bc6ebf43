#include "ttb/sim.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

namespace ttb {

const ActionBinsConfig& ActionBinsConfig::standard() {
  static const ActionBinsConfig cfg({{
      {"start.x", 0.0, 1.0, 50},
      {"start.y", 0.0, 1.0, 100},
      {"start.z", 0.0, 1.0, 50},
      {"start.qw", -1.0, 1.0, 50},
      {"start.qx", -1.0, 1.0, 50},
      {"start.qy", -1.0, 1.0, 50},
      {"start.qz", -1.0, 1.0, 50},
      {"end.x", 0.0, 1.0, 50},
      {"end.y", 0.0, 1.0, 100},
      {"end.z", 0.0, 1.0, 50},
      {"end.qw", -1.0, 1.0, 50},
      {"end.qx", -1.0, 1.0, 50},
      {"end.qy", -1.0, 1.0, 50},
      {"end.qz", -1.0, 1.0, 50},
  }});
  return cfg;
}

int ActionBinsConfig::total_bins() const {
  int total = 0;
  for (const auto& c : coords_) total += c.bins;
  return total;
}

int ActionBinsConfig::bin_of(int coord, double value) const {
  const Coord& c = coords_[static_cast<size_t>(coord)];
  if (value < c.lo || value > c.hi)
    throw std::out_of_range(std::string("coordinate out of range: ") + c.name + " = " +
                            std::to_string(value));
  int bin = static_cast<int>(std::floor((value - c.lo) / c.width()));
  return std::clamp(bin, 0, c.bins - 1);
}

double ActionBinsConfig::center_of(int coord, int bin) const {
  const Coord& c = coords_[static_cast<size_t>(coord)];
  if (bin < 0 || bin >= c.bins)
    throw std::out_of_range(std::string("bin index out of range for ") + c.name + ": " +
                            std::to_string(bin));
  return c.lo + (bin + 0.5) * c.width();
}

std::array<double, 14> action_values(const ContinuousAction& a) {
  return {a.start.x, a.start.y, a.start.z, a.start.qw, a.start.qx, a.start.qy, a.start.qz,
          a.end.x,   a.end.y,   a.end.z,   a.end.qw,   a.end.qx,   a.end.qy,   a.end.qz};
}

ContinuousAction action_from_values(const std::array<double, 14>& v) {
  return {{v[0], v[1], v[2], v[3], v[4], v[5], v[6]},
          {v[7], v[8], v[9], v[10], v[11], v[12], v[13]}};
}

DiscreteAction ActionBinsConfig::discretize(const ContinuousAction& a) const {
  DiscreteAction d;
  auto vals = action_values(a);
  for (int i = 0; i < 14; ++i) d.bins[static_cast<size_t>(i)] = bin_of(i, vals[static_cast<size_t>(i)]);
  return d;
}

ContinuousAction ActionBinsConfig::undiscretize(const DiscreteAction& d) const {
  std::array<double, 14> vals;
  for (int i = 0; i < 14; ++i) vals[static_cast<size_t>(i)] = center_of(i, d.bins[static_cast<size_t>(i)]);
  return action_from_values(vals);
}

namespace {

struct ShapeInfo {
  Shape shape;
  const char* word;
  bool container;
};

const ShapeInfo kShapes[] = {
    {Shape::Circle, "circle", false},   {Shape::Square, "square", false},
    {Shape::Triangle, "triangle", false}, {Shape::Star, "star", false},
    {Shape::Flower, "flower", false},   {Shape::Hexagon, "hexagon", false},
    {Shape::LetterL, "letter-L", false}, {Shape::Cross, "cross", false},
    {Shape::Pan, "pan", true},          {Shape::Bowl, "bowl", true},
    {Shape::Frame, "frame", true},      {Shape::Container, "container", true},
};

struct TextureInfo {
  Texture texture;
  const char* word;
  std::array<uint8_t, 3> rgb;
};

const TextureInfo kTextures[] = {
    {Texture::Red, "red", {210, 50, 45}},       {Texture::Green, "green", {60, 160, 70}},
    {Texture::Blue, "blue", {50, 90, 200}},     {Texture::Yellow, "yellow", {230, 200, 50}},
    {Texture::Purple, "purple", {130, 60, 170}}, {Texture::Orange, "orange", {235, 140, 40}},
    {Texture::Cyan, "cyan", {60, 190, 200}},    {Texture::Magenta, "magenta", {200, 60, 160}},
    {Texture::Olive, "olive", {120, 125, 45}},  {Texture::Pink, "pink", {240, 150, 180}},
    {Texture::Brown, "brown", {130, 85, 50}},   {Texture::Teal, "teal", {40, 130, 130}},
};

std::vector<Vec2> regular_polygon(int n, double radius, double phase = 0.0) {
  std::vector<Vec2> v;
  v.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    double a = phase + 2.0 * M_PI * i / n;
    v.push_back({radius * std::cos(a), radius * std::sin(a)});
  }
  return v;
}

std::vector<Vec2> star_polygon(int points, double outer, double inner) {
  std::vector<Vec2> v;
  for (int i = 0; i < points * 2; ++i) {
    double r = (i % 2 == 0) ? outer : inner;
    double a = M_PI / 2.0 + M_PI * i / points;
    v.push_back({r * std::cos(a), r * std::sin(a)});
  }
  return v;
}

}  // namespace

const char* shape_word(Shape s) {
  for (const auto& info : kShapes)
    if (info.shape == s) return info.word;
  throw std::logic_error("bad Shape");
}

Shape shape_from_word(const std::string& w) {
  for (const auto& info : kShapes)
    if (w == info.word) return info.shape;
  throw std::runtime_error("unknown shape word: " + w);
}

bool is_container_shape(Shape s) {
  for (const auto& info : kShapes)
    if (info.shape == s) return info.container;
  throw std::logic_error("bad Shape");
}

std::vector<Shape> draggable_shapes() {
  std::vector<Shape> out;
  for (const auto& info : kShapes)
    if (!info.container) out.push_back(info.shape);
  return out;
}

std::vector<Shape> container_shapes() {
  std::vector<Shape> out;
  for (const auto& info : kShapes)
    if (info.container) out.push_back(info.shape);
  return out;
}

const char* texture_word(Texture t) {
  for (const auto& info : kTextures)
    if (info.texture == t) return info.word;
  throw std::logic_error("bad Texture");
}

Texture texture_from_word(const std::string& w) {
  for (const auto& info : kTextures)
    if (w == info.word) return info.texture;
  throw std::runtime_error("unknown texture word: " + w);
}

std::vector<Texture> all_textures() {
  std::vector<Texture> out;
  for (const auto& info : kTextures) out.push_back(info.texture);
  return out;
}

std::array<uint8_t, 3> texture_rgb(Texture t) {
  for (const auto& info : kTextures)
    if (info.texture == t) return info.rgb;
  throw std::logic_error("bad Texture");
}

Footprint ObjectSpec::footprint() const {
  const double k = scale;
  switch (shape) {
    case Shape::Circle:
      return Footprint::circle(0.050 * k);
    case Shape::Square:
      return Footprint::polygon({{-0.045 * k, -0.045 * k},
                                 {0.045 * k, -0.045 * k},
                                 {0.045 * k, 0.045 * k},
                                 {-0.045 * k, 0.045 * k}});
    case Shape::Triangle:
      return Footprint::polygon(regular_polygon(3, 0.055 * k, M_PI / 2.0));
    case Shape::Star:
      return Footprint::polygon(star_polygon(5, 0.060 * k, 0.027 * k));
    case Shape::Flower:
      return Footprint::polygon(star_polygon(6, 0.055 * k, 0.040 * k));
    case Shape::Hexagon:
      return Footprint::polygon(regular_polygon(6, 0.050 * k));
    case Shape::LetterL:
      // Centred so the origin falls inside the lower bar.
      return Footprint::polygon({{-0.050 * k, -0.022 * k},
                                 {0.042 * k, -0.022 * k},
                                 {0.042 * k, 0.014 * k},
                                 {-0.014 * k, 0.014 * k},
                                 {-0.014 * k, 0.050 * k},
                                 {-0.050 * k, 0.050 * k}});
    case Shape::Cross: {
      const double a = 0.018 * k, b = 0.055 * k;
      return Footprint::polygon({{-a, -b}, {a, -b}, {a, -a}, {b, -a}, {b, a}, {a, a},
                                 {a, b}, {-a, b}, {-a, a}, {-b, a}, {-b, -a}, {-a, -a}});
    }
    case Shape::Pan:
      return Footprint::circle(0.085 * k);
    case Shape::Bowl:
      return Footprint::circle(0.075 * k);
    case Shape::Frame:
      return Footprint::polygon({{-0.080 * k, -0.080 * k},
                                 {0.080 * k, -0.080 * k},
                                 {0.080 * k, 0.080 * k},
                                 {-0.080 * k, 0.080 * k}});
    case Shape::Container:
      return Footprint::polygon({{-0.090 * k, -0.070 * k},
                                 {0.090 * k, -0.070 * k},
                                 {0.090 * k, 0.070 * k},
                                 {-0.090 * k, 0.070 * k}});
  }
  throw std::logic_error("bad Shape");
}

const PlacedObject& WorkspaceState::object(int id) const {
  for (const auto& o : objects)
    if (o.id == id) return o;
  throw std::out_of_range("no object with id " + std::to_string(id));
}

PlacedObject& WorkspaceState::object(int id) {
  for (auto& o : objects)
    if (o.id == id) return o;
  throw std::out_of_range("no object with id " + std::to_string(id));
}

void WorkspaceState::add(ObjectSpec spec, Pose pose) {
  if (std::abs(pose.quat_norm() - 1.0) > 1e-9)
    throw std::invalid_argument("object pose quaternion is not unit norm");
  if (pose.x < min_x || pose.x > max_x || pose.y < min_y || pose.y > max_y)
    throw std::invalid_argument("object pose outside workspace bounds");
  objects.push_back({static_cast<int>(objects.size()), spec, pose});
}

void WorkspaceState::validate() const {
  for (size_t i = 0; i < objects.size(); ++i) {
    if (objects[i].id != static_cast<int>(i))
      throw std::runtime_error("object ids must be 0..n-1 in order");
    const Pose& p = objects[i].pose;
    if (std::abs(p.quat_norm() - 1.0) > 1e-9)
      throw std::runtime_error("object quaternion not unit norm");
    if (p.x < min_x || p.x > max_x || p.y < min_y || p.y > max_y)
      throw std::runtime_error("object pose outside workspace bounds");
  }
}

std::optional<int> grasp_target(const WorkspaceState& state, Vec2 point) {
  std::optional<int> best;
  for (const auto& o : state.objects) {
    if (o.spec.is_container) continue;
    if (o.contains(point)) best = o.id;  // ids ascend, so the last hit is topmost
  }
  return best;
}

WorkspaceState apply_action(const WorkspaceState& state, const ContinuousAction& action) {
  WorkspaceState next = state;
  auto target = grasp_target(state, action.start.xy());
  if (!target) return next;

  PlacedObject& obj = next.object(*target);
  double yaw_delta = wrap_angle(action.end.yaw() - action.start.yaw());
  double new_yaw = wrap_angle(obj.pose.yaw() + yaw_delta);
  double nx = std::clamp(action.end.x, next.min_x, next.max_x);
  double ny = std::clamp(action.end.y, next.min_y, next.max_y);
  obj.pose = Pose::with_yaw(nx, ny, new_yaw);
  return next;
}

bool check_success(const GoalSpec& goal, const WorkspaceState& state) {
  if (const auto* g = std::get_if<PlaceGoal>(&goal)) {
    const PlacedObject& container = state.object(g->container_id);
    for (int id : g->required_ids) {
      if (!container.contains(state.object(id).pose.xy())) return false;
    }
    return true;
  }
  if (const auto* g = std::get_if<RotateGoal>(&goal)) {
    double err = wrap_angle(state.object(g->object_id).pose.yaw() - g->target_yaw_rad);
    return std::abs(err) <= g->tol_rad;
  }
  const auto& g = std::get<RearrangeGoal>(goal);
  for (const auto& item : g.items) {
    const Pose& p = state.object(item.object_id).pose;
    if (std::hypot(p.x - item.goal_x, p.y - item.goal_y) > g.eps_pos) return false;
  }
  // Matching the goal frame also means no distractor sits on a goal slot.
  for (const auto& item : g.items) {
    const PlacedObject& obj = state.object(item.object_id);
    Footprint fp = obj.spec.footprint();
    for (int did : g.distractor_ids) {
      if (fp.contains(state.object(did).pose.xy(), {item.goal_x, item.goal_y}, item.goal_yaw_rad))
        return false;
    }
  }
  return true;
}

Episode::Episode(WorkspaceState initial, GoalSpec goal, int budget)
    : state_(std::move(initial)), goal_(std::move(goal)), budget_(budget) {
  if (budget_ < 1) throw std::invalid_argument("episode budget must be >= 1");
  state_.validate();
}

EpisodeStatus Episode::step(const ContinuousAction& action) {
  if (status_.terminal()) throw std::runtime_error("step on terminated episode");
  state_ = apply_action(state_, action);
  status_.steps_taken += 1;
  if (check_success(goal_, state_))
    status_.outcome = EpisodeStatus::Outcome::Success;
  else if (status_.steps_taken >= budget_)
    status_.outcome = EpisodeStatus::Outcome::Failure;
  return status_;
}

Image render_topdown(const WorkspaceState& state, int height, int width) {
  const std::array<uint8_t, 3> background = {225, 225, 225};
  Image img{height, width, std::vector<uint8_t>(static_cast<size_t>(height * width) * 3)};
  for (int i = 0; i < height; ++i) {
    double px = (i + 0.5) / height * (state.max_x - state.min_x) + state.min_x;
    for (int j = 0; j < width; ++j) {
      double py = (j + 0.5) / width * (state.max_y - state.min_y) + state.min_y;
      std::array<uint8_t, 3> color = background;
      for (const auto& o : state.objects) {
        if (o.contains({px, py})) color = texture_rgb(o.spec.texture);
      }
      uint8_t* dst = img.at(i, j);
      dst[0] = color[0];
      dst[1] = color[1];
      dst[2] = color[2];
    }
  }
  return img;
}

ObjectCentricObs object_tokens(const WorkspaceState& state) {
  ObjectCentricObs obs;
  for (const auto& o : state.objects) {
    Aabb box = o.world_aabb();
    obs.tokens.push_back(
        {o.id, {box.min_x, box.min_y, box.max_x, box.max_y}, o.spec.shape, o.spec.texture});
  }
  return obs;
}

std::string snapshot_text(const WorkspaceState& state) {
  std::string out;
  char buf[256];
  for (const auto& o : state.objects) {
    std::snprintf(buf, sizeof(buf), "%d %s %s %d %.9f %.9f %.9f %.9f %.9f %.9f %.9f\n", o.id,
                  shape_word(o.spec.shape), texture_word(o.spec.texture),
                  o.spec.is_container ? 1 : 0, o.pose.x, o.pose.y, o.pose.z, o.pose.qw, o.pose.qx,
                  o.pose.qy, o.pose.qz);
    out += buf;
  }
  return out;
}

}  // namespace ttb
