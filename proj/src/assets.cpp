#include "ttb/assets.hpp"

#include <algorithm>
#include <stdexcept>

namespace ttb {

bool AssetPartition::is_train_shape(Shape s) const {
  return std::find(train_shapes.begin(), train_shapes.end(), s) != train_shapes.end();
}

bool AssetPartition::is_train_texture(Texture t) const {
  return std::find(train_textures.begin(), train_textures.end(), t) != train_textures.end();
}

bool AssetPartition::is_seen_combo(Shape s, Texture t) const {
  return std::find(seen_combos.begin(), seen_combos.end(), std::make_pair(s, t)) !=
         seen_combos.end();
}

std::vector<std::pair<Shape, Texture>> AssetPartition::seen_combos_with_texture(Texture t) const {
  std::vector<std::pair<Shape, Texture>> out;
  for (auto& c : seen_combos)
    if (c.second == t) out.push_back(c);
  return out;
}

std::vector<std::pair<Shape, Texture>> AssetPartition::unseen_combos_with_texture(
    Texture t) const {
  std::vector<std::pair<Shape, Texture>> out;
  for (auto& c : unseen_combos)
    if (c.second == t) out.push_back(c);
  return out;
}

AssetPartition partition_assets(uint64_t seed) {
  auto shapes = draggable_shapes();
  auto textures = all_textures();
  if (shapes.size() < 4 || textures.size() < 4)
    throw std::runtime_error("asset catalogue too small to partition");

  Rng rng(Rng::derive(seed, 0xA55E75));
  rng.shuffle(shapes);
  rng.shuffle(textures);

  AssetPartition p;
  const size_t holdout_shapes = 2, holdout_textures = 3;
  p.train_shapes.assign(shapes.begin(), shapes.end() - holdout_shapes);
  p.holdout_shapes.assign(shapes.end() - holdout_shapes, shapes.end());
  p.train_textures.assign(textures.begin(), textures.end() - holdout_textures);
  p.holdout_textures.assign(textures.end() - holdout_textures, textures.end());

  // Mark ~74% of the train grid as seen. Each train texture keeps at least
  // one seen and one unseen combo so task samplers never dead-end on a
  // texture choice.
  std::vector<size_t> unseen_per_texture(p.train_textures.size(), 1);
  size_t extra = p.train_shapes.size() * p.train_textures.size() / 4 - p.train_textures.size();
  for (size_t i = 0; extra > 0; i = (i + 1) % unseen_per_texture.size()) {
    if (unseen_per_texture[i] < p.train_shapes.size() - 1) {
      unseen_per_texture[i] += 1;
      --extra;
    }
  }
  rng.shuffle(unseen_per_texture);

  for (size_t ti = 0; ti < p.train_textures.size(); ++ti) {
    Texture t = p.train_textures[ti];
    auto row = p.train_shapes;
    rng.shuffle(row);
    for (size_t si = 0; si < row.size(); ++si) {
      auto& dst = si < unseen_per_texture[ti] ? p.unseen_combos : p.seen_combos;
      dst.push_back({row[si], t});
    }
  }
  std::sort(p.seen_combos.begin(), p.seen_combos.end());
  std::sort(p.unseen_combos.begin(), p.unseen_combos.end());
  return p;
}

}  // namespace ttb
