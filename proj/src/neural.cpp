// Copyright 2026 The Anchorcast Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "neural.hpp"

#include "error.hpp"
#include "gaussian.hpp"
#include "rng.hpp"

#include <algorithm>
#include <sstream>

namespace anchorcast
{

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void validate(const ModelConfig & cfg)
{
  validate(cfg.anchors);
  validate(cfg.dcm);
  if (cfg.embedding_dim == 0 || cfg.pooling_dim == 0 || cfg.hidden_dim == 0 || cfg.grid_size == 0) {
    fail(ErrorCode::kValidation, "model: layer sizes must be positive");
  }
  if (cfg.goal_conditioning && cfg.goal_dim == 0) fail(ErrorCode::kValidation, "model: goal_dim must be positive");
  if (!(cfg.grid_resolution > 0.0)) fail(ErrorCode::kValidation, "model: grid_resolution must be positive");
  if (!(cfg.heading_eps > 0.0)) fail(ErrorCode::kValidation, "model: heading_eps must be positive");
  if (!(cfg.sigma_min > 0.0 && cfg.sigma_min < cfg.sigma_max)) {
    fail(ErrorCode::kValidation, "model: need 0 < sigma_min < sigma_max");
  }
  if (!(cfg.rho_max > 0.0 && cfg.rho_max < 1.0)) fail(ErrorCode::kValidation, "model: rho_max must lie in (0, 1)");
}

const char * group_name(ParamGroup g)
{
  switch (g) {
    case ParamGroup::kEmbedding: return "embedding";
    case ParamGroup::kPooling: return "pooling";
    case ParamGroup::kRecurrent: return "recurrent";
    case ParamGroup::kDecoder: return "decoder";
    case ParamGroup::kHeads: return "heads";
    case ParamGroup::kBeta: return "beta";
  }
  return "unknown";
}

ParamLayout::ParamLayout(const ModelConfig & cfg)
{
  const auto E = static_cast<Index>(cfg.embedding_dim);
  const auto P = static_cast<Index>(cfg.pooling_dim);
  const auto H = static_cast<Index>(cfg.hidden_dim);
  const auto G = static_cast<Index>(cfg.goal_dim);
  const auto K = static_cast<Index>(cfg.num_anchors());
  const auto C = static_cast<Index>(cfg.grid_channels());
  const auto I = static_cast<Index>(cfg.recurrent_input_dim());
  const auto add = [this](std::string name, ParamGroup g, Index r, Index c) {
    blocks_.push_back(ParamBlock{std::move(name), g, r, c, total_});
    total_ += static_cast<std::size_t>(r * c);
  };
  add("embed.w", ParamGroup::kEmbedding, E, 2);
  add("embed.b", ParamGroup::kEmbedding, E, 1);
  if (cfg.goal_conditioning) {
    add("goal.w", ParamGroup::kEmbedding, G, 2);
    add("goal.b", ParamGroup::kEmbedding, G, 1);
  }
  add("pool.w", ParamGroup::kPooling, P, C);
  add("pool.b", ParamGroup::kPooling, P, 1);
  add("lstm.wx", ParamGroup::kRecurrent, 4 * H, I);
  add("lstm.wh", ParamGroup::kRecurrent, 4 * H, H);
  add("lstm.b", ParamGroup::kRecurrent, 4 * H, 1);
  add("decoder.w", ParamGroup::kDecoder, 5 * K, H);
  add("decoder.b", ParamGroup::kDecoder, 5 * K, 1);
  add("motion.w", ParamGroup::kHeads, K, H);
  add("motion.b", ParamGroup::kHeads, K, 1);
  add("interaction.w", ParamGroup::kHeads, K, P);
  add("interaction.b", ParamGroup::kHeads, K, 1);
  add("beta", ParamGroup::kBeta, static_cast<Index>(kNumFeatures), 1);
}

const ParamBlock & ParamLayout::block(const std::string & name) const
{
  for (const auto & b : blocks_) {
    if (b.name == name) return b;
  }
  fail(ErrorCode::kNotFound, "no parameter block named " + name);
}

std::string ParamLayout::manifest() const
{
  std::ostringstream os;
  for (const auto & b : blocks_) os << b.name << ' ' << b.rows << ' ' << b.cols << ' ' << b.offset << '\n';
  return os.str();
}

std::uint64_t ParamLayout::hash() const
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : manifest()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

MatrixMap block_view(std::vector<double> & flat, const ParamBlock & b)
{
  return MatrixMap(flat.data() + b.offset, b.rows, b.cols);
}

ConstMatrixMap block_view(const std::vector<double> & flat, const ParamBlock & b)
{
  return ConstMatrixMap(flat.data() + b.offset, b.rows, b.cols);
}

ModelParams::ModelParams(const ModelConfig & cfg) : config_(cfg), layout_(cfg), flat_(layout_.total(), 0.0)
{
  validate(cfg);
}

ModelParams ModelParams::random(const ModelConfig & cfg, std::uint64_t seed)
{
  ModelParams p(cfg);
  Rng rng(seed);
  const auto fan_in = [&](const std::string & name) -> double {
    if (name.rfind("embed", 0) == 0 || name.rfind("goal", 0) == 0) return 2.0;
    if (name.rfind("pool", 0) == 0) return static_cast<double>(cfg.grid_channels());
    if (name.rfind("lstm", 0) == 0) return static_cast<double>(cfg.recurrent_input_dim() + cfg.hidden_dim);
    if (name.rfind("interaction", 0) == 0) return static_cast<double>(cfg.pooling_dim);
    return static_cast<double>(cfg.hidden_dim);
  };
  for (const auto & b : p.layout_.blocks()) {
    if (b.group == ParamGroup::kBeta) continue;
    const double bound = 1.0 / std::sqrt(fan_in(b.name));
    for (std::size_t i = 0; i < b.size(); ++i) p.flat_[b.offset + i] = rng.uniform(-bound, bound);
  }
  return p;
}

MatrixMap ModelParams::matrix(const std::string & name) { return block_view(flat_, layout_.block(name)); }

ConstMatrixMap ModelParams::matrix(const std::string & name) const { return block_view(flat_, layout_.block(name)); }

BetaWeights ModelParams::beta() const
{
  BetaWeights b;
  const auto & blk = layout_.block("beta");
  for (std::size_t j = 0; j < kNumFeatures; ++j) b[j] = flat_[blk.offset + j];
  return b;
}

void ModelParams::set_beta(const BetaWeights & beta)
{
  const auto & blk = layout_.block("beta");
  for (std::size_t j = 0; j < kNumFeatures; ++j) flat_[blk.offset + j] = beta[j];
}

void ModelParams::zero_network()
{
  const BetaWeights b = beta();
  std::fill(flat_.begin(), flat_.end(), 0.0);
  set_beta(b);
}

PoolingGrid build_pooling_grid(const NormalizedState & state, const ModelConfig & cfg)
{
  const int G = static_cast<int>(cfg.grid_size);
  const double half = 0.5 * static_cast<double>(G) * cfg.grid_resolution;
  std::vector<std::pair<int, Vec2>> cells;  // (cell, summed velocity); tiny, linear scan
  std::vector<int> counts;
  for (const auto & n : state.neighbours) {
    const double fx = std::floor((n.position.x + half) / cfg.grid_resolution);
    const double fy = std::floor((n.position.y + half) / cfg.grid_resolution);
    if (fx < 0.0 || fy < 0.0 || fx >= G || fy >= G) continue;
    const int cell = static_cast<int>(fx) * G + static_cast<int>(fy);
    const Vec2 rel = n.velocity - state.velocity;
    auto it = std::find_if(cells.begin(), cells.end(), [&](const auto & c) { return c.first == cell; });
    if (it == cells.end()) {
      cells.emplace_back(cell, rel);
      counts.push_back(1);
    } else {
      it->second += rel;
      ++counts[static_cast<std::size_t>(it - cells.begin())];
    }
  }
  PoolingGrid grid;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Vec2 avg = cells[i].second / static_cast<double>(counts[i]);
    grid.emplace_back(2 * cells[i].first, avg.x);
    grid.emplace_back(2 * cells[i].first + 1, avg.y);
  }
  std::sort(grid.begin(), grid.end());
  return grid;
}

StepInput prepare_step(const Scene & scene, std::size_t focus, int t, const ModelConfig & cfg)
{
  StepInput in;
  in.state = normalize_scene_at(scene, focus, t, cfg.heading_eps);
  in.anchors = build_anchor_set(in.state.speed, cfg.anchors);
  in.features = compute_features(in.state, in.anchors, cfg.dcm);
  in.grid = build_pooling_grid(in.state, cfg);
  if (cfg.goal_conditioning) {
    const int id = scene.trajectories[focus].pedestrian_id;
    const auto it = scene.goals.find(id);
    if (it == scene.goals.end()) {
      fail(
        ErrorCode::kValidation,
        "scene " + std::to_string(scene.id) + ": goal conditioning needs a goal for pedestrian " + std::to_string(id));
    }
    in.goal = in.state.transform.to_local(it->second);
  }
  return in;
}

HiddenState HiddenState::zeros(const ModelConfig & cfg, Index columns)
{
  const auto H = static_cast<Index>(cfg.hidden_dim);
  return HiddenState{MatrixXd::Zero(H, columns), MatrixXd::Zero(H, columns)};
}

namespace
{

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Read-only views over all blocks.
struct Net
{
  const ModelConfig & cfg;
  ConstMatrixMap We, be, Wg, bg, Wp, bp, Wx, Wh, bl, Wd, bd, Wm, bm, Wi, bi;

  static ConstMatrixMap opt(const ModelParams & p, const char * name, bool present)
  {
    return present ? p.matrix(name) : ConstMatrixMap(nullptr, 0, 0);
  }

  explicit Net(const ModelParams & p)
  : cfg(p.config()),
    We(p.matrix("embed.w")),
    be(p.matrix("embed.b")),
    Wg(opt(p, "goal.w", p.config().goal_conditioning)),
    bg(opt(p, "goal.b", p.config().goal_conditioning)),
    Wp(p.matrix("pool.w")),
    bp(p.matrix("pool.b")),
    Wx(p.matrix("lstm.wx")),
    Wh(p.matrix("lstm.wh")),
    bl(p.matrix("lstm.b")),
    Wd(p.matrix("decoder.w")),
    bd(p.matrix("decoder.b")),
    Wm(p.matrix("motion.w")),
    bm(p.matrix("motion.b")),
    Wi(p.matrix("interaction.w")),
    bi(p.matrix("interaction.b"))
  {
  }
};

// Column-batched encoder inputs (embedding, pooling, goal).
struct Encoded
{
  MatrixXd V;     // 2 x N
  MatrixXd Epre;  // E x N
  MatrixXd Ppre;  // P x N
  MatrixXd Gin;   // 2 x N
  MatrixXd Gpre;  // Gd x N
  MatrixXd X;     // I x N, [relu(E); relu(P); relu(G)]
};

void encode(const Net & net, std::span<const StepInput * const> cols, Encoded & out)
{
  const auto N = static_cast<Index>(cols.size());
  const auto E = static_cast<Index>(net.cfg.embedding_dim);
  const auto P = static_cast<Index>(net.cfg.pooling_dim);
  const bool goal = net.cfg.goal_conditioning;
  const auto Gd = goal ? static_cast<Index>(net.cfg.goal_dim) : Index{0};

  out.V.resize(2, N);
  out.Gin.resize(2, goal ? N : 0);
  for (Index n = 0; n < N; ++n) {
    const auto & in = *cols[static_cast<std::size_t>(n)];
    out.V(0, n) = in.state.velocity.x;
    out.V(1, n) = in.state.velocity.y;
    if (goal) {
      out.Gin(0, n) = in.goal.x;
      out.Gin(1, n) = in.goal.y;
    }
  }
  out.Epre.noalias() = net.We * out.V;
  out.Epre.colwise() += net.be.col(0);

  out.Ppre.resize(P, N);
  for (Index n = 0; n < N; ++n) {
    auto col = out.Ppre.col(n);
    col = net.bp.col(0);
    for (const auto & [idx, val] : cols[static_cast<std::size_t>(n)]->grid) col.noalias() += val * net.Wp.col(idx);
  }

  if (goal) {
    out.Gpre.noalias() = net.Wg * out.Gin;
    out.Gpre.colwise() += net.bg.col(0);
  }

  out.X.resize(E + P + Gd, N);
  out.X.topRows(E) = out.Epre.cwiseMax(0.0);
  out.X.middleRows(E, P) = out.Ppre.cwiseMax(0.0);
  if (goal) out.X.bottomRows(Gd) = out.Gpre.cwiseMax(0.0);
}

// Applies gate nonlinearities to Z in place (i, f, o sigmoid; g tanh) and
// writes the new cell and hidden state.
void lstm_cell(
  Eigen::Ref<MatrixXd> Z, const Eigen::Ref<const MatrixXd> & c_prev, Eigen::Ref<MatrixXd> c_new,
  Eigen::Ref<MatrixXd> h_new, Index H)
{
  Z.topRows(2 * H) = Z.topRows(2 * H).unaryExpr([](double x) { return sigmoid(x); });
  Z.middleRows(2 * H, H) = Z.middleRows(2 * H, H).array().tanh();
  Z.bottomRows(H) = Z.bottomRows(H).unaryExpr([](double x) { return sigmoid(x); });
  c_new = Z.middleRows(H, H).cwiseProduct(c_prev) + Z.topRows(H).cwiseProduct(Z.middleRows(2 * H, H));
  h_new = Z.bottomRows(H).cwiseProduct(c_new.array().tanh().matrix());
}

struct Squashed
{
  double sx, sy, rho;
  double dsx, dsy, drho;  // d value / d raw
};

Squashed squash(const ModelConfig & cfg, double raw_sx, double raw_sy, double raw_rho)
{
  Squashed s{};
  const auto sig = [&](double raw, double & v, double & d) {
    const double e = std::exp(raw);
    if (e < cfg.sigma_min) {
      v = cfg.sigma_min;
      d = 0.0;
    } else if (e > cfg.sigma_max) {
      v = cfg.sigma_max;
      d = 0.0;
    } else {
      v = e;
      d = e;
    }
  };
  sig(raw_sx, s.sx, s.dsx);
  sig(raw_sy, s.sy, s.dsy);
  const double th = std::tanh(raw_rho);
  s.rho = cfg.rho_max * th;
  s.drho = cfg.rho_max * (1.0 - th * th);
  return s;
}

double utility_of(const DcmFeatures & f, std::size_t k, const BetaWeights & beta)
{
  double u = 0.0;
  for (std::size_t j = 0; j < kNumFeatures; ++j) u += beta[j] * f.rows[k][j];
  return u;
}

}  // namespace

VectorXd embed_velocity(const Vec2 & v, const ModelParams & params)
{
  const Net net(params);
  VectorXd x(2);
  x << v.x, v.y;
  return (net.We * x + net.be.col(0)).cwiseMax(0.0);
}

VectorXd directional_pooling(const NormalizedState & state, const ModelParams & params)
{
  const Net net(params);
  VectorXd out = net.bp.col(0);
  for (const auto & [idx, val] : build_pooling_grid(state, params.config())) out.noalias() += val * net.Wp.col(idx);
  return out.cwiseMax(0.0);
}

HiddenState recurrent_step(
  const HiddenState & state, const VectorXd & embedding, const VectorXd & interaction, const VectorXd & goal_embedding,
  const ModelParams & params)
{
  const Net net(params);
  const auto H = static_cast<Index>(params.config().hidden_dim);
  const Index I = net.Wx.cols();
  VectorXd x(I);
  x.head(embedding.size()) = embedding;
  x.segment(embedding.size(), interaction.size()) = interaction;
  if (params.config().goal_conditioning) x.tail(goal_embedding.size()) = goal_embedding;
  if (embedding.size() + interaction.size() + (params.config().goal_conditioning ? goal_embedding.size() : 0) != I) {
    fail(ErrorCode::kArgument, "recurrent_step: input dimensions do not match the model");
  }
  HiddenState next = HiddenState::zeros(params.config(), state.columns());
  for (Index c = 0; c < state.columns(); ++c) {
    MatrixXd Z = net.Wx * x + net.Wh * state.h.col(c) + net.bl.col(0);
    lstm_cell(Z, state.c.col(c), next.c.col(c), next.h.col(c), H);
  }
  return next;
}

std::vector<ResidualParams> decode_residuals(const VectorXd & hidden, const ModelParams & params)
{
  const Net net(params);
  const VectorXd raw = net.Wd * hidden + net.bd.col(0);
  const std::size_t K = params.config().num_anchors();
  std::vector<ResidualParams> out(K);
  for (std::size_t k = 0; k < K; ++k) {
    const auto r = static_cast<Index>(5 * k);
    const Squashed s = squash(params.config(), raw(r + 2), raw(r + 3), raw(r + 4));
    out[k] = ResidualParams{{raw(r), raw(r + 1)}, {s.sx, s.sy}, s.rho};
  }
  return out;
}

std::pair<std::vector<double>, std::vector<double>> anchor_logit_heads(
  const VectorXd & hidden, const VectorXd & interaction, const ModelParams & params)
{
  const Net net(params);
  const VectorXd h = net.Wm * hidden + net.bm.col(0);
  const VectorXd p = net.Wi * interaction + net.bi.col(0);
  return {std::vector<double>(h.data(), h.data() + h.size()), std::vector<double>(p.data(), p.data() + p.size())};
}

std::vector<StepOutput> forward_step(
  const ModelParams & params, std::span<const StepInput * const> inputs, HiddenState & state)
{
  const auto & cfg = params.config();
  const Net net(params);
  const auto B = static_cast<Index>(inputs.size());
  if (state.columns() != B) fail(ErrorCode::kArgument, "forward_step: hidden state width differs from batch");
  const auto H = static_cast<Index>(cfg.hidden_dim);
  const auto E = static_cast<Index>(cfg.embedding_dim);
  const auto P = static_cast<Index>(cfg.pooling_dim);
  const std::size_t K = cfg.num_anchors();
  const BetaWeights beta = params.beta();

  Encoded enc;
  encode(net, inputs, enc);
  MatrixXd Z = net.Wx * enc.X + net.Wh * state.h;
  Z.colwise() += net.bl.col(0);
  MatrixXd c_new(H, B), h_new(H, B);
  lstm_cell(Z, state.c, c_new, h_new, H);
  state.c = std::move(c_new);
  state.h = std::move(h_new);

  MatrixXd raw = net.Wd * state.h;
  raw.colwise() += net.bd.col(0);
  MatrixXd hm = net.Wm * state.h;
  hm.colwise() += net.bm.col(0);
  MatrixXd pm = net.Wi * enc.X.middleRows(E, P);
  pm.colwise() += net.bi.col(0);

  std::vector<StepOutput> outs(inputs.size());
  for (Index b = 0; b < B; ++b) {
    const auto & in = *inputs[static_cast<std::size_t>(b)];
    if (in.anchors.size() != K) fail(ErrorCode::kArgument, "forward_step: anchor count differs from model");
    auto & o = outs[static_cast<std::size_t>(b)];
    o.utility.resize(K);
    o.motion.resize(K);
    o.interaction.resize(K);
    o.score.resize(K);
    o.residuals.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
      const auto kk = static_cast<Index>(k);
      o.utility[k] = utility_of(in.features, k, beta);
      o.motion[k] = hm(kk, b);
      o.interaction[k] = pm(kk, b);
      o.score[k] = o.utility[k] + o.motion[k] + o.interaction[k];
      const Index r = 5 * kk;
      const Squashed s = squash(cfg, raw(r + 2, b), raw(r + 3, b), raw(r + 4, b));
      o.residuals[k] = ResidualParams{{raw(r, b), raw(r + 1, b)}, {s.sx, s.sy}, s.rho};
    }
    o.probability = mnl_probabilities(o.score);
  }
  return outs;
}

Sequence prepare_sequence(
  const Scene & inputs, std::size_t focus, const Trajectory & truth, int t_obs, const ModelConfig & cfg)
{
  Sequence seq;
  seq.scene_id = inputs.id;
  seq.pedestrian_id = inputs.trajectories[focus].pedestrian_id;
  const int n = inputs.n_steps();
  for (int t = 1; t + 1 < n; ++t) {
    StepInput in = prepare_step(inputs, focus, t, cfg);
    StepTarget target;
    if (t + 1 >= t_obs && truth.present(t + 1)) {
      const Vec2 here = inputs.trajectories[focus].at(t);
      target.active = true;
      target.displacement = in.state.transform.local_displacement(truth.at(t + 1) - here);
      target.anchor = closest_anchor(in.anchors, target.displacement);
    }
    seq.steps.push_back(std::move(in));
    seq.targets.push_back(target);
  }
  return seq;
}

namespace
{

LossResult dcm_only_loss(
  const ModelParams & params, std::span<const Sequence * const> batch, std::vector<double> * gradient)
{
  const BetaWeights beta = params.beta();
  const std::size_t beta_offset = params.layout().block("beta").offset;
  LossResult res;
  res.per_sequence.assign(batch.size(), 0.0);
  std::vector<double> u;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Sequence & seq = *batch[b];
    for (std::size_t t = 0; t < seq.steps.size(); ++t) {
      const StepTarget & tg = seq.targets[t];
      if (!tg.active) continue;
      const StepInput & in = seq.steps[t];
      const std::size_t K = in.anchors.size();
      u.resize(K);
      for (std::size_t k = 0; k < K; ++k) u[k] = utility_of(in.features, k, beta);
      const double lse = log_sum_exp(u);
      const GaussianNll g = bivariate_nll(tg.displacement, in.anchors[tg.anchor].displacement, {1.0, 1.0}, 0.0);
      res.per_sequence[b] += -(u[tg.anchor] - lse) + g.nll;
      res.terms += 1;
      if (preferred_argmax(in.anchors, u) == tg.anchor) res.correct += 1;
      if (gradient != nullptr) {
        for (std::size_t k = 0; k < K; ++k) {
          const double ds = std::exp(u[k] - lse) - (k == tg.anchor ? 1.0 : 0.0);
          for (std::size_t j = 0; j < kNumFeatures; ++j) (*gradient)[beta_offset + j] += ds * in.features.rows[k][j];
        }
      }
    }
  }
  return res;
}

}  // namespace

LossResult loss_and_gradient(
  const ModelParams & params, std::span<const Sequence * const> batch, std::vector<double> * gradient,
  const GradientOptions & opts)
{
  if (gradient != nullptr) gradient->assign(params.flat().size(), 0.0);
  LossResult res;
  if (batch.empty()) return res;

  if (opts.dcm_only) {
    res = dcm_only_loss(params, batch, gradient);
  } else {
    const auto & cfg = params.config();
    const Net net(params);
    const auto B = static_cast<Index>(batch.size());
    const auto T = static_cast<Index>(batch.front()->steps.size());
    for (const Sequence * s : batch) {
      if (static_cast<Index>(s->steps.size()) != T) {
        fail(ErrorCode::kArgument, "loss_and_gradient: sequences in a batch must share their length");
      }
    }
    const Index N = T * B;
    const auto H = static_cast<Index>(cfg.hidden_dim);
    const auto E = static_cast<Index>(cfg.embedding_dim);
    const auto P = static_cast<Index>(cfg.pooling_dim);
    const auto Gd = cfg.goal_conditioning ? static_cast<Index>(cfg.goal_dim) : Index{0};
    const auto K = static_cast<Index>(cfg.num_anchors());
    const BetaWeights beta = params.beta();

    // Column n = t * B + b.
    std::vector<const StepInput *> cols(static_cast<std::size_t>(N));
    for (Index t = 0; t < T; ++t) {
      for (Index b = 0; b < B; ++b) {
        cols[static_cast<std::size_t>(t * B + b)] = &batch[static_cast<std::size_t>(b)]->steps[static_cast<std::size_t>(t)];
      }
    }

    Encoded enc;
    encode(net, cols, enc);

    MatrixXd gates = net.Wx * enc.X;  // 4H x N, activated in place per step
    gates.colwise() += net.bl.col(0);
    MatrixXd Cs(H, N), Hs(H, N);
    for (Index t = 0; t < T; ++t) {
      auto Z = gates.middleCols(t * B, B);
      if (t > 0) Z.noalias() += net.Wh * Hs.middleCols((t - 1) * B, B);
      const MatrixXd c_prev = t > 0 ? MatrixXd(Cs.middleCols((t - 1) * B, B)) : MatrixXd::Zero(H, B);
      lstm_cell(Z, c_prev, Cs.middleCols(t * B, B), Hs.middleCols(t * B, B), H);
    }

    MatrixXd raw = net.Wd * Hs;
    raw.colwise() += net.bd.col(0);
    MatrixXd S = net.Wm * Hs;
    S.colwise() += net.bm.col(0);
    S.noalias() += net.Wi * enc.X.middleRows(E, P);
    S.colwise() += net.bi.col(0);

    MatrixXd dS = MatrixXd::Zero(K, N);
    MatrixXd dRaw = MatrixXd::Zero(5 * K, N);
    res.per_sequence.assign(batch.size(), 0.0);
    std::vector<double> s(static_cast<std::size_t>(K));
    for (Index t = 0; t < T; ++t) {
      for (Index b = 0; b < B; ++b) {
        const Index n = t * B + b;
        const Sequence & seq = *batch[static_cast<std::size_t>(b)];
        const StepTarget & tg = seq.targets[static_cast<std::size_t>(t)];
        if (!tg.active) continue;
        const StepInput & in = *cols[static_cast<std::size_t>(n)];
        for (Index k = 0; k < K; ++k) {
          s[static_cast<std::size_t>(k)] = S(k, n) + utility_of(in.features, static_cast<std::size_t>(k), beta);
        }
        const double lse = log_sum_exp(s);
        const auto kh = static_cast<Index>(tg.anchor);
        const Index r = 5 * kh;
        const Squashed sq = squash(cfg, raw(r + 2, n), raw(r + 3, n), raw(r + 4, n));
        const Vec2 mean = in.anchors[tg.anchor].displacement + Vec2{raw(r, n), raw(r + 1, n)};
        const GaussianNll g = bivariate_nll(tg.displacement, mean, {sq.sx, sq.sy}, sq.rho);
        res.per_sequence[static_cast<std::size_t>(b)] += -(s[tg.anchor] - lse) + g.nll;
        res.terms += 1;
        if (preferred_argmax(in.anchors, s) == tg.anchor) res.correct += 1;
        if (gradient == nullptr) continue;
        for (Index k = 0; k < K; ++k) dS(k, n) = std::exp(s[static_cast<std::size_t>(k)] - lse);
        dS(kh, n) -= 1.0;
        dRaw(r, n) = g.d_mean.x;
        dRaw(r + 1, n) = g.d_mean.y;
        dRaw(r + 2, n) = g.d_sigma.x * sq.dsx;
        dRaw(r + 3, n) = g.d_sigma.y * sq.dsy;
        dRaw(r + 4, n) = g.d_rho * sq.drho;
      }
    }

    if (gradient != nullptr) {
      auto & grad = *gradient;
      const auto & L = params.layout();
      const auto G = [&](const char * name) { return block_view(grad, L.block(name)); };

      // Beta.
      const std::size_t beta_offset = L.block("beta").offset;
      for (Index n = 0; n < N; ++n) {
        const StepInput & in = *cols[static_cast<std::size_t>(n)];
        for (Index k = 0; k < K; ++k) {
          const double d = dS(k, n);
          if (d == 0.0) continue;
          for (std::size_t j = 0; j < kNumFeatures; ++j) grad[beta_offset + j] += d * in.features.rows[static_cast<std::size_t>(k)][j];
        }
      }

      // Output layers.
      G("decoder.w").noalias() = dRaw * Hs.transpose();
      G("decoder.b") = dRaw.rowwise().sum();
      G("motion.w").noalias() = dS * Hs.transpose();
      G("motion.b") = dS.rowwise().sum();
      G("interaction.w").noalias() = dS * enc.X.middleRows(E, P).transpose();
      G("interaction.b") = dS.rowwise().sum();

      MatrixXd dHs = net.Wd.transpose() * dRaw;
      dHs.noalias() += net.Wm.transpose() * dS;

      // Backprop through time; gates hold activations, dZ their pre-activation grads.
      MatrixXd dZ(4 * H, N);
      MatrixXd dh_next = MatrixXd::Zero(H, B);
      MatrixXd dc_next = MatrixXd::Zero(H, B);
      for (Index t = T - 1; t >= 0; --t) {
        const auto Zt = gates.middleCols(t * B, B);
        const auto i_g = Zt.topRows(H).array();
        const auto f_g = Zt.middleRows(H, H).array();
        const auto g_g = Zt.middleRows(2 * H, H).array();
        const auto o_g = Zt.bottomRows(H).array();
        const Eigen::ArrayXXd tc = Cs.middleCols(t * B, B).array().tanh();
        const Eigen::ArrayXXd c_prev =
          t > 0 ? Eigen::ArrayXXd(Cs.middleCols((t - 1) * B, B).array()) : Eigen::ArrayXXd::Zero(H, B);

        const Eigen::ArrayXXd dh = dHs.middleCols(t * B, B).array() + dh_next.array();
        const Eigen::ArrayXXd dc = dc_next.array() + dh * o_g * (1.0 - tc * tc);
        auto dZt = dZ.middleCols(t * B, B);
        dZt.topRows(H) = (dc * g_g * i_g * (1.0 - i_g)).matrix();
        dZt.middleRows(H, H) = (dc * c_prev * f_g * (1.0 - f_g)).matrix();
        dZt.middleRows(2 * H, H) = (dc * i_g * (1.0 - g_g * g_g)).matrix();
        dZt.bottomRows(H) = (dh * tc * o_g * (1.0 - o_g)).matrix();
        dc_next = (dc * f_g).matrix();
        dh_next.noalias() = net.Wh.transpose() * dZt;
      }

      G("lstm.wx").noalias() = dZ * enc.X.transpose();
      if (T > 1) {
        G("lstm.wh").noalias() = dZ.rightCols(N - B) * Hs.leftCols(N - B).transpose();
      }
      G("lstm.b") = dZ.rowwise().sum();

      MatrixXd dX = net.Wx.transpose() * dZ;
      dX.middleRows(E, P).noalias() += net.Wi.transpose() * dS;

      // Through the rectifiers back to the encoders.
      const MatrixXd dEpre = dX.topRows(E).cwiseProduct((enc.Epre.array() > 0.0).cast<double>().matrix());
      G("embed.w").noalias() = dEpre * enc.V.transpose();
      G("embed.b") = dEpre.rowwise().sum();

      const MatrixXd dPpre = dX.middleRows(E, P).cwiseProduct((enc.Ppre.array() > 0.0).cast<double>().matrix());
      auto dWp = G("pool.w");
      for (Index n = 0; n < N; ++n) {
        for (const auto & [idx, val] : cols[static_cast<std::size_t>(n)]->grid) dWp.col(idx).noalias() += val * dPpre.col(n);
      }
      G("pool.b") = dPpre.rowwise().sum();

      if (Gd > 0) {
        const MatrixXd dGpre = dX.bottomRows(Gd).cwiseProduct((enc.Gpre.array() > 0.0).cast<double>().matrix());
        G("goal.w").noalias() = dGpre * enc.Gin.transpose();
        G("goal.b") = dGpre.rowwise().sum();
      }
    }
  }

  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (!std::isfinite(res.per_sequence[b])) {
      fail(ErrorCode::kNumeric, "non-finite loss in scene " + std::to_string(batch[b]->scene_id));
    }
    res.loss += res.per_sequence[b];
  }
  return res;
}

}  // namespace anchorcast
