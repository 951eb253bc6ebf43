#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ttb/rng.hpp"
#include "ttb/sim.hpp"

namespace ttb {

// Split of draggable shapes and textures into training and holdout pools.
// seen_combos is a strict subset of the train grid so that L2 (unseen
// combinations of seen assets) is non-empty; holdout pools drive L3.
struct AssetPartition {
  std::vector<Shape> train_shapes;
  std::vector<Shape> holdout_shapes;
  std::vector<Texture> train_textures;
  std::vector<Texture> holdout_textures;
  std::vector<std::pair<Shape, Texture>> seen_combos;
  std::vector<std::pair<Shape, Texture>> unseen_combos;  // train grid minus seen

  bool is_train_shape(Shape s) const;
  bool is_train_texture(Texture t) const;
  bool is_seen_combo(Shape s, Texture t) const;

  std::vector<std::pair<Shape, Texture>> seen_combos_with_texture(Texture t) const;
  std::vector<std::pair<Shape, Texture>> unseen_combos_with_texture(Texture t) const;
};

// Deterministic split: 6/2 draggable shapes, 9/3 textures, and roughly 75%
// of the train grid marked as seen during training.
AssetPartition partition_assets(uint64_t seed);

}  // namespace ttb
