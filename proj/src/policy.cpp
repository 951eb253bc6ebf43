#include "ttb/policy.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace ttb {

using nn::Tensor;

const char* visual_mode_name(VisualMode m) {
  return m == VisualMode::ObjectCentric ? "object_centric" : "patches";
}

VisualMode visual_mode_from_name(const std::string& s) {
  if (s == "object_centric") return VisualMode::ObjectCentric;
  if (s == "patches") return VisualMode::Patches;
  throw std::runtime_error("unknown visual mode: " + s);
}

const char* conditioning_name(Conditioning c) {
  return c == Conditioning::CrossAttention ? "cross_attention" : "concatenate";
}

Conditioning conditioning_from_name(const std::string& s) {
  if (s == "cross_attention") return Conditioning::CrossAttention;
  if (s == "concatenate") return Conditioning::Concatenate;
  throw std::runtime_error("unknown conditioning: " + s);
}

void PolicyConfig::validate() const {
  if (d_model <= 0 || heads <= 0 || d_model % heads != 0)
    throw std::invalid_argument("d_model must be a positive multiple of heads");
  if (vocab_size < Vocabulary::kNumReserved)
    throw std::invalid_argument("vocab_size not set on policy config");
  if (obs_h % patch != 0 || obs_w % patch != 0)
    throw std::invalid_argument("observation resolution not divisible by patch size");
  if (enc_layers < 1 || dec_layers < 1)
    throw std::invalid_argument("need at least one encoder and one decoder layer");
}

Policy::Policy(PolicyConfig cfg, uint64_t init_seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(Rng::derive(init_seed, Rng::hash_label("policy-init")));
  const int d = cfg_.d_model;
  const int hidden = d * cfg_.ffn_mult;

  tok_emb_ = params_.embedding("tok_emb", cfg_.vocab_size, d, rng);
  prompt_pos_ = params_.embedding("prompt_pos", cfg_.max_prompt, d, rng);
  dec_pos_ = params_.embedding("dec_pos", cfg_.max_seq, d, rng);

  obj_proj1_ = nn::Linear::create(params_, "obj_proj1", kObjectFeatureDim, d, rng);
  obj_proj2_ = nn::Linear::create(params_, "obj_proj2", d, d, rng);
  patch_proj_ = nn::Linear::create(params_, "patch_proj", cfg_.patch * cfg_.patch * 3, d, rng);
  patch_pos_ = params_.embedding("patch_pos", cfg_.patches_per_image(), d, rng);

  for (int l = 0; l < cfg_.enc_layers; ++l)
    encoder_.push_back(
        nn::EncoderLayer::create(params_, "enc" + std::to_string(l), d, cfg_.heads, hidden, rng));
  enc_ln_ = nn::LayerNorm::create(params_, "enc_ln", d);

  const bool cross = cfg_.conditioning == Conditioning::CrossAttention;
  for (int l = 0; l < cfg_.dec_layers; ++l)
    decoder_.push_back(nn::DecoderLayer::create(params_, "dec" + std::to_string(l), d, cfg_.heads,
                                                hidden, cross, rng));
  dec_ln_ = nn::LayerNorm::create(params_, "dec_ln", d);

  const auto& bins = ActionBinsConfig::standard().coords();
  for (int c = 0; c < 14; ++c) {
    act_emb_[static_cast<size_t>(c)] =
        params_.embedding("act_emb_c" + std::to_string(c), bins[static_cast<size_t>(c)].bins, d, rng);
    heads_[static_cast<size_t>(c)] = nn::Linear::create(params_, "head_c" + std::to_string(c), d,
                                                        bins[static_cast<size_t>(c)].bins, rng);
  }
}

Tensor Policy::object_features(const std::vector<ObjectToken>& tokens) const {
  std::vector<double> vals;
  vals.reserve(tokens.size() * kObjectFeatureDim);
  for (const auto& t : tokens) {
    for (double b : t.bbox) vals.push_back(b);
    double cx = (t.bbox[0] + t.bbox[2]) / 2.0, cy = (t.bbox[1] + t.bbox[3]) / 2.0;
    double hw = (t.bbox[2] - t.bbox[0]) / 2.0, hh = (t.bbox[3] - t.bbox[1]) / 2.0;
    vals.push_back(cx);
    vals.push_back(cy);
    vals.push_back(hw);
    vals.push_back(hh);
    for (int k = 0; k < kPositionOctaves; ++k) {
      double freq = 2.0 * M_PI * static_cast<double>(1 << k);
      vals.push_back(std::sin(freq * cx));
      vals.push_back(std::cos(freq * cx));
      vals.push_back(std::sin(freq * cy));
      vals.push_back(std::cos(freq * cy));
    }
    for (int s = 0; s < kShapeCount; ++s)
      vals.push_back(static_cast<int>(t.shape) == s ? 1.0 : 0.0);
    for (int x = 0; x < kTextureCount; ++x)
      vals.push_back(static_cast<int>(t.texture) == x ? 1.0 : 0.0);
  }
  return Tensor::from_values(static_cast<int>(tokens.size()), kObjectFeatureDim, std::move(vals));
}

Tensor Policy::project_objects(const Tensor& features) const {
  return obj_proj2_(nn::gelu(obj_proj1_(features)));
}

Tensor Policy::encode_object_obs(const ObjectCentricObs& obs) const {
  if (obs.tokens.empty()) throw std::invalid_argument("observation has no objects");
  return project_objects(object_features(obs.tokens));
}

Tensor Policy::encode_patch_obs(const Image& image) const {
  if (image.height != cfg_.obs_h || image.width != cfg_.obs_w)
    throw std::invalid_argument("image resolution does not match policy config");
  const int p = cfg_.patch;
  const int rows = image.height / p, cols = image.width / p;
  std::vector<double> vals;
  vals.reserve(static_cast<size_t>(rows * cols) * static_cast<size_t>(p * p * 3));
  for (int pr = 0; pr < rows; ++pr)
    for (int pc = 0; pc < cols; ++pc)
      for (int di = 0; di < p; ++di)
        for (int dj = 0; dj < p; ++dj) {
          const uint8_t* px = image.at(pr * p + di, pc * p + dj);
          vals.push_back(px[0] / 255.0);
          vals.push_back(px[1] / 255.0);
          vals.push_back(px[2] / 255.0);
        }
  Tensor features = Tensor::from_values(rows * cols, p * p * 3, std::move(vals));
  return nn::add(patch_proj_(features), patch_pos_);
}

Tensor Policy::referent_embedding(const ReferentFeature& f) const {
  if (f.is_frame) {
    // A frame is summarized as the mean of its projected patches.
    const int p = cfg_.patch;
    const int rows = f.frame.height / p, cols = f.frame.width / p;
    std::vector<double> vals;
    vals.reserve(static_cast<size_t>(rows * cols) * static_cast<size_t>(p * p * 3));
    for (int pr = 0; pr < rows; ++pr)
      for (int pc = 0; pc < cols; ++pc)
        for (int di = 0; di < p; ++di)
          for (int dj = 0; dj < p; ++dj) {
            const uint8_t* px = f.frame.at(pr * p + di, pc * p + dj);
            vals.push_back(px[0] / 255.0);
            vals.push_back(px[1] / 255.0);
            vals.push_back(px[2] / 255.0);
          }
    Tensor features = Tensor::from_values(rows * cols, p * p * 3, std::move(vals));
    return nn::mean_rows(patch_proj_(features));
  }
  return project_objects(object_features({f.object}));
}

Tensor Policy::encode_prompt(const TokenizedPrompt& tp, const std::vector<ReferentFeature>& slots,
                             const nn::ForwardCtx& ctx) const {
  if (tp.empty()) return Tensor::zeros(0, cfg_.d_model);
  if (tp.slot_count() != slots.size())
    throw std::invalid_argument("referent slot count " + std::to_string(tp.slot_count()) +
                                " does not match " + std::to_string(slots.size()) + " features");
  if (static_cast<int>(tp.size()) > cfg_.max_prompt)
    throw std::invalid_argument("prompt length " + std::to_string(tp.size()) +
                                " exceeds max_prompt " + std::to_string(cfg_.max_prompt));

  std::vector<Tensor> rows;
  std::vector<int> token_ids;
  size_t slot_index = 0;
  auto flush_tokens = [&]() {
    if (token_ids.empty()) return;
    rows.push_back(nn::embedding_rows(tok_emb_, token_ids));
    token_ids.clear();
  };
  for (const auto& unit : tp.units) {
    if (unit.is_token()) {
      token_ids.push_back(unit.token_id());
    } else {
      flush_tokens();
      rows.push_back(referent_embedding(slots[slot_index++]));
    }
  }
  flush_tokens();

  Tensor x = rows.size() == 1 ? rows.front() : nn::concat_rows(rows);
  x = nn::add(x, nn::slice_rows(prompt_pos_, 0, x.rows()));
  for (const auto& layer : encoder_) x = layer(x, ctx);
  return enc_ln_(x);
}

Tensor Policy::action_token(const DiscreteAction& bins) const {
  Tensor acc = nn::embedding_rows(act_emb_[0], {bins.bins[0]});
  for (int c = 1; c < 14; ++c)
    acc = nn::add(acc, nn::embedding_rows(act_emb_[static_cast<size_t>(c)],
                                          {bins.bins[static_cast<size_t>(c)]}));
  return acc;
}

Tensor Policy::decode(const Tensor& memory, const std::vector<Tensor>& rows,
                      const nn::ForwardCtx& ctx, int* prompt_offset) const {
  std::vector<Tensor> parts;
  *prompt_offset = 0;
  if (cfg_.conditioning == Conditioning::Concatenate && memory.rows() > 0) {
    parts.push_back(memory);
    *prompt_offset = memory.rows();
  }
  for (const auto& r : rows) parts.push_back(r);
  Tensor x = parts.size() == 1 ? parts.front() : nn::concat_rows(parts);
  if (x.rows() > cfg_.max_seq)
    throw std::runtime_error("history length " + std::to_string(x.rows()) + " exceeds max_seq " +
                             std::to_string(cfg_.max_seq));
  x = nn::add(x, nn::slice_rows(dec_pos_, 0, x.rows()));

  std::optional<Tensor> cross_memory;
  if (cfg_.conditioning == Conditioning::CrossAttention) cross_memory = memory;
  for (const auto& layer : decoder_) x = layer(x, cross_memory, ctx);
  return dec_ln_(x);
}

std::array<Tensor, 14> Policy::trajectory_logits(const PreppedTrajectory& pt,
                                                 const nn::ForwardCtx& ctx) const {
  if (pt.steps.empty()) throw std::invalid_argument("trajectory has no steps");
  Tensor memory = encode_prompt(pt.tp, pt.slots, ctx);

  std::vector<Tensor> rows;
  std::vector<int> readouts;
  int length = 0;
  for (size_t t = 0; t < pt.steps.size(); ++t) {
    Tensor obs = cfg_.visual == VisualMode::ObjectCentric ? encode_object_obs(pt.steps[t].obs)
                                                          : encode_patch_obs(pt.steps[t].image);
    rows.push_back(obs);
    length += obs.rows();
    readouts.push_back(length - 1);
    if (t + 1 < pt.steps.size()) {
      rows.push_back(action_token(pt.steps[t].bins));
      length += 1;
    }
  }

  int offset = 0;
  Tensor x = decode(memory, rows, ctx, &offset);
  std::vector<int> positions;
  positions.reserve(readouts.size());
  for (int r : readouts) positions.push_back(r + offset);
  Tensor picked = nn::gather_rows(x, positions);

  std::array<Tensor, 14> logits;
  for (int c = 0; c < 14; ++c) logits[static_cast<size_t>(c)] = heads_[static_cast<size_t>(c)](picked);
  return logits;
}

Tensor Policy::trajectory_loss(const PreppedTrajectory& pt, const nn::ForwardCtx& ctx,
                               const std::vector<int>& step_repeats) const {
  auto logits = trajectory_logits(pt, ctx);
  Tensor total;
  for (int c = 0; c < 14; ++c) {
    std::vector<int> targets;
    targets.reserve(pt.steps.size());
    for (const auto& step : pt.steps) targets.push_back(step.bins.bins[static_cast<size_t>(c)]);
    Tensor nll = nn::cross_entropy_mean(logits[static_cast<size_t>(c)], targets, step_repeats);
    total = c == 0 ? nll : nn::add(total, nll);
  }
  return nn::scale(total, 1.0 / 14.0);
}

namespace {

Json policy_config_to_json(const PolicyConfig& c) {
  return Json{{"visual", visual_mode_name(c.visual)},
              {"conditioning", conditioning_name(c.conditioning)},
              {"d_model", c.d_model},
              {"heads", c.heads},
              {"enc_layers", c.enc_layers},
              {"dec_layers", c.dec_layers},
              {"ffn_mult", c.ffn_mult},
              {"dropout", c.dropout},
              {"patch", c.patch},
              {"max_prompt", c.max_prompt},
              {"max_seq", c.max_seq},
              {"train_shuffle", c.train_shuffle},
              {"vocab_size", c.vocab_size},
              {"obs_h", c.obs_h},
              {"obs_w", c.obs_w}};
}

PolicyConfig policy_config_from_json(const Json& j) {
  PolicyConfig c;
  c.visual = visual_mode_from_name(j.at("visual").get<std::string>());
  c.conditioning = conditioning_from_name(j.at("conditioning").get<std::string>());
  c.d_model = j.at("d_model").get<int>();
  c.heads = j.at("heads").get<int>();
  c.enc_layers = j.at("enc_layers").get<int>();
  c.dec_layers = j.at("dec_layers").get<int>();
  c.ffn_mult = j.at("ffn_mult").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.patch = j.at("patch").get<int>();
  c.max_prompt = j.at("max_prompt").get<int>();
  c.max_seq = j.at("max_seq").get<int>();
  c.train_shuffle = j.at("train_shuffle").get<bool>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.obs_h = j.at("obs_h").get<int>();
  c.obs_w = j.at("obs_w").get<int>();
  return c;
}

constexpr char kCkptMagic[] = "TTBCKPT1\n";

}  // namespace

void Policy::save(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write checkpoint: " + path.string());
  f.write(kCkptMagic, sizeof(kCkptMagic) - 1);
  std::string header = policy_config_to_json(cfg_).dump();
  header += '\n';
  f.write(header.data(), static_cast<std::streamsize>(header.size()));
  uint64_t count = params_.all().size();
  f.write(reinterpret_cast<const char*>(&count), sizeof(count));
  for (const auto& [name, tensor] : params_.all()) {
    uint32_t name_len = static_cast<uint32_t>(name.size());
    int32_t rows = tensor.rows(), cols = tensor.cols();
    f.write(reinterpret_cast<const char*>(&name_len), sizeof(name_len));
    f.write(name.data(), name_len);
    f.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    f.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
    f.write(reinterpret_cast<const char*>(tensor.values().data()),
            static_cast<std::streamsize>(tensor.size() * sizeof(double)));
  }
}

Policy Policy::load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read checkpoint: " + path.string());
  char magic[sizeof(kCkptMagic) - 1];
  f.read(magic, sizeof(magic));
  if (std::memcmp(magic, kCkptMagic, sizeof(magic)) != 0)
    throw std::runtime_error("bad checkpoint magic in " + path.string());
  std::string header;
  std::getline(f, header);
  PolicyConfig cfg = policy_config_from_json(Json::parse(header));

  Policy policy(cfg, /*init_seed=*/0);
  uint64_t count = 0;
  f.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (count != policy.params_.all().size())
    throw std::runtime_error("checkpoint parameter count mismatch");
  for (uint64_t i = 0; i < count; ++i) {
    uint32_t name_len = 0;
    f.read(reinterpret_cast<char*>(&name_len), sizeof(name_len));
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    int32_t rows = 0, cols = 0;
    f.read(reinterpret_cast<char*>(&rows), sizeof(rows));
    f.read(reinterpret_cast<char*>(&cols), sizeof(cols));
    Tensor& t = policy.params_.at(name);
    if (t.rows() != rows || t.cols() != cols)
      throw std::runtime_error("checkpoint shape mismatch for " + name);
    f.read(reinterpret_cast<char*>(t.values().data()),
           static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!f) throw std::runtime_error("truncated checkpoint: " + path.string());
  }
  return policy;
}

PolicyRollout::PolicyRollout(const Policy& policy, const TokenizedPrompt& tp,
                             const std::vector<ReferentFeature>& slots)
    : policy_(policy) {
  nn::NoGradGuard guard;
  memory_ = policy_.encode_prompt(tp, slots, nn::ForwardCtx{});
}

DiscreteAction PolicyRollout::act(const ObjectCentricObs& obs) {
  nn::NoGradGuard guard;
  return act_encoded(policy_.encode_object_obs(obs));
}

DiscreteAction PolicyRollout::act(const Image& image) {
  nn::NoGradGuard guard;
  return act_encoded(policy_.encode_patch_obs(image));
}

DiscreteAction PolicyRollout::act_encoded(Tensor obs_rows) {
  nn::NoGradGuard guard;
  rows_.push_back(obs_rows);
  int length = 0;
  for (const auto& r : rows_) length += r.rows();
  last_readout_ = length - 1;

  int offset = 0;
  Tensor x = policy_.decode(memory_, rows_, nn::ForwardCtx{}, &offset);
  Tensor last = nn::slice_rows(x, offset + last_readout_, offset + last_readout_ + 1);

  DiscreteAction bins;
  for (int c = 0; c < 14; ++c) {
    Tensor logits = policy_.heads_[static_cast<size_t>(c)](last);
    int best = 0;
    for (int j = 1; j < logits.cols(); ++j)
      if (logits.at(0, j) > logits.at(0, best)) best = j;
    bins.bins[static_cast<size_t>(c)] = best;
  }
  rows_.push_back(policy_.action_token(bins));
  return bins;
}

}  // namespace ttb
