// SPDX-License-Identifier: Apache-2.0
#include "latte/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "latte/geometry.hpp"

namespace latte::nn {

using namespace latte::ad;

Tensor uniform_init(Shape shape, double sigma, Rng& rng) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-sigma, sigma);
  return t;
}

Tensor normal_init(Shape shape, double std, Rng& rng) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.normal(0.0, std);
  return t;
}

double fan_in_sigma(int64_t fan_in) { return std::sqrt(1.0 / static_cast<double>(fan_in)); }

Var lorentz_fc(const Var& points, const Var& w, const Var& b, bool use_relu, double K) {
  Var s = hyp::space_part(points);
  if (w.dim(w.ndim() - 1) != s.dim(s.ndim() - 1))
    throw std::invalid_argument("lorentz_fc: weight columns must match the input space dimension");
  Var y = matmul(s, transpose_last2(w));
  if (b.defined()) y = y + b;
  if (use_relu) y = relu(y);
  return hyp::lift(y, K);
}

Var hcat(const std::vector<Var>& points, double K) {
  if (points.empty()) throw std::invalid_argument("hcat: no inputs");
  std::vector<Var> spaces;
  spaces.reserve(points.size());
  for (const Var& p : points) spaces.push_back(hyp::space_part(p));
  Var s = spaces.size() == 1 ? spaces[0] : concat(spaces, points[0].ndim() - 1);
  return hyp::lift(s, K);
}

Var apply_per_subject(const Var& x, const std::vector<int>& subjects,
                      const std::function<Var(const Var&, int)>& fn) {
  if (x.dim(0) != static_cast<int64_t>(subjects.size()))
    throw std::invalid_argument("apply_per_subject: one subject id per batch row required");
  bool uniform = std::all_of(subjects.begin(), subjects.end(),
                             [&](int s) { return s == subjects[0]; });
  if (uniform) return fn(x, subjects[0]);

  std::map<int, std::vector<int64_t>> groups;
  for (size_t i = 0; i < subjects.size(); ++i) groups[subjects[i]].push_back(static_cast<int64_t>(i));
  std::vector<Var> outs;
  std::vector<int64_t> order;
  for (auto& [id, rows] : groups) {
    outs.push_back(fn(take_rows(x, rows), id));
    order.insert(order.end(), rows.begin(), rows.end());
  }
  std::vector<int64_t> inv(order.size());
  for (size_t i = 0; i < order.size(); ++i) inv[static_cast<size_t>(order[i])] = static_cast<int64_t>(i);
  return take_rows(concat(outs, 0), inv);
}

// ---- LoraBank ----

LoraBank::LoraBank(const std::string& prefix, int64_t rows, int64_t cols, int64_t rank, int subjects,
                   LoraInit q_init, double q_spread, bool scaled, Rng& rng)
    : prefix_(prefix), rows_(rows), cols_(cols), rank_(rank), init_(q_init), spread_(q_spread),
      scaled_(scaled) {
  if (rank < 1) throw std::invalid_argument("LoRA rank must be >= 1");
  for (int s = 0; s < subjects; ++s) add_subject(rng);
}

int LoraBank::add_subject(Rng& rng) {
  int id = static_cast<int>(q_.size());
  std::string base = prefix_ + ".s" + std::to_string(id);
  Tensor qv = init_ == LoraInit::Gaussian ? normal_init({rows_, rank_}, spread_, rng)
                                          : uniform_init({rows_, rank_}, spread_, rng);
  q_.emplace_back(base + ".q", std::move(qv));
  r_.emplace_back(base + ".r", Tensor({cols_, rank_}));  // zero: adapter starts silent
  if (scaled_) alpha_.emplace_back(base + ".alpha", Tensor::full({}, 1.0));
  return id;
}

bool LoraBank::has_subject(int subject) const {
  return subject >= 0 && subject < static_cast<int>(q_.size());
}

Var LoraBank::delta(int subject) const {
  const Parameter& q = q_[static_cast<size_t>(subject)];
  const Parameter& r = r_[static_cast<size_t>(subject)];
  Var d = matmul(q.var(), transpose_last2(r.var()));
  if (scaled_) d = d * alpha_[static_cast<size_t>(subject)].var();
  return d;
}

Var LoraBank::effective(const Var& w_shared, int subject) const {
  if (!has_subject(subject)) return w_shared;
  return w_shared + delta(subject);
}

void LoraBank::collect(std::vector<Parameter*>& out) {
  for (auto& p : q_) out.push_back(&p);
  for (auto& p : r_) out.push_back(&p);
  for (auto& p : alpha_) out.push_back(&p);
}

void LoraBank::collect_subject(std::vector<Parameter*>& out, int subject) {
  if (!has_subject(subject)) return;
  out.push_back(&q_[static_cast<size_t>(subject)]);
  out.push_back(&r_[static_cast<size_t>(subject)]);
  if (scaled_) out.push_back(&alpha_[static_cast<size_t>(subject)]);
}

// ---- BoostBank ----

BoostBank::BoostBank(const std::string& prefix, int64_t space_dim, int64_t boosts, int subjects,
                     double alpha, Rng& rng)
    : prefix_(prefix), space_dim_(space_dim), boosts_(boosts), alpha_(alpha) {
  if (boosts < 1) throw std::invalid_argument("boost adapter needs >= 1 boost");
  for (int s = 0; s < subjects; ++s) add_subject(rng);
}

int BoostBank::add_subject(Rng& rng) {
  int id = static_cast<int>(dirs_.size());
  std::string base = prefix_ + ".s" + std::to_string(id);
  dirs_.emplace_back(base + ".dirs", normal_init({boosts_, space_dim_}, 1.0, rng));
  mags_.emplace_back(base + ".mags", Tensor({boosts_}));  // zero: identity adapter
  return id;
}

bool BoostBank::has_subject(int subject) const {
  return subject >= 0 && subject < static_cast<int>(dirs_.size());
}

Var BoostBank::apply(const Var& points, int subject, double K) const {
  if (!has_subject(subject)) return points;
  Var out = points;
  const Parameter& dirs = dirs_[static_cast<size_t>(subject)];
  const Parameter& mags = mags_[static_cast<size_t>(subject)];
  for (int64_t i = 0; i < boosts_; ++i) {
    Var dir = reshape(slice(dirs.var(), 0, i, 1), {space_dim_});
    Var xi = reshape(slice(mags.var(), 0, i, 1), {}) * alpha_;
    out = hyp::boost(out, dir, xi, K);
  }
  return out;
}

void BoostBank::collect(std::vector<Parameter*>& out) {
  for (auto& p : dirs_) out.push_back(&p);
  for (auto& p : mags_) out.push_back(&p);
}

void BoostBank::collect_subject(std::vector<Parameter*>& out, int subject) {
  if (!has_subject(subject)) return;
  out.push_back(&dirs_[static_cast<size_t>(subject)]);
  out.push_back(&mags_[static_cast<size_t>(subject)]);
}

// ---- LorentzLinear ----

LorentzLinear::LorentzLinear(const std::string& prefix, int64_t in_dim, int64_t out_dim,
                             bool use_relu, double K, Rng& rng)
    : relu_(use_relu), k_(K) {
  double sigma = fan_in_sigma(in_dim);
  w_ = Parameter(prefix + ".w", uniform_init({out_dim, in_dim}, sigma, rng));
  b_ = Parameter(prefix + ".b", Tensor({out_dim}));
}

Var LorentzLinear::forward(const Var& points) const {
  return lorentz_fc(points, w_.var(), b_.var(), relu_, k_);
}

void LorentzLinear::collect(std::vector<Parameter*>& out) {
  out.push_back(&w_);
  out.push_back(&b_);
}

// ---- BatchNorm1d ----

BatchNorm1d::BatchNorm1d(const std::string& prefix, int64_t channels, double momentum, double eps)
    : momentum_(momentum), eps_(eps) {
  gamma_ = Parameter(prefix + ".gamma", Tensor::full({channels}, 1.0));
  beta_ = Parameter(prefix + ".beta", Tensor({channels}));
  run_mean_ = Parameter(prefix + ".running_mean", Tensor({channels}), /*trainable=*/false);
  run_var_ = Parameter(prefix + ".running_var", Tensor::full({channels}, 1.0), /*trainable=*/false);
}

Var BatchNorm1d::forward(const Var& x, bool training) {
  if (x.ndim() != 3) throw std::invalid_argument("BatchNorm1d expects (B, C, L)");
  int64_t C = x.dim(1);
  Var g = reshape(gamma_.var(), {1, C, 1});
  Var b = reshape(beta_.var(), {1, C, 1});
  if (training) {
    Var mu = mean(x, {0, 2}, true);
    Var c = x - mu;
    Var var = mean(c * c, {0, 2}, true);
    Var xn = c / ad::sqrt(var + eps_);
    // update running stats outside the graph (unbiased variance, torch-style)
    double n = static_cast<double>(x.dim(0) * x.dim(2));
    double unbias = n > 1.0 ? n / (n - 1.0) : 1.0;
    for (int64_t i = 0; i < C; ++i) {
      run_mean_.value()[i] = (1.0 - momentum_) * run_mean_.value()[i] + momentum_ * mu.value()[i];
      run_var_.value()[i] =
          (1.0 - momentum_) * run_var_.value()[i] + momentum_ * unbias * var.value()[i];
    }
    return xn * g + b;
  }
  Var rm = Var::constant(run_mean_.value().reshaped({1, C, 1}));
  Var rv = Var::constant(run_var_.value().reshaped({1, C, 1}));
  return (x - rm) / ad::sqrt(rv + eps_) * g + b;
}

void BatchNorm1d::collect(std::vector<Parameter*>& out) {
  out.push_back(&gamma_);
  out.push_back(&beta_);
  out.push_back(&run_mean_);
  out.push_back(&run_var_);
}

// ---- pooling ----

std::vector<std::vector<int64_t>> pool_windows(int64_t length, const PoolSpec& spec) {
  if (spec.k < 1 || spec.stride < 1 || spec.dilation < 1 || spec.pad < 0)
    throw std::invalid_argument("invalid pooling window parameters");
  int64_t span = spec.dilation * (spec.k - 1) + 1;
  int64_t padded = length + 2 * spec.pad;
  if (span > padded) throw std::invalid_argument("pooling kernel larger than padded length");
  int64_t count = (padded - span) / spec.stride + 1;
  if (count < 1) throw std::invalid_argument("pooling parameters produce no windows");
  std::vector<std::vector<int64_t>> wins;
  wins.reserve(static_cast<size_t>(count));
  for (int64_t i = 0; i < count; ++i) {
    std::vector<int64_t> w;
    int64_t start = i * spec.stride - spec.pad;
    for (int64_t j = 0; j < spec.k; ++j) {
      int64_t p = start + j * spec.dilation;
      if (p >= 0 && p < length) w.push_back(p);
    }
    if (w.empty()) throw std::invalid_argument("empty effective pooling window");
    wins.push_back(std::move(w));
  }
  return wins;
}

Var hyper_pool(const Var& points, const PoolSpec& spec, double K) {
  if (points.ndim() != 3) throw std::invalid_argument("hyper_pool expects (B, L, 1+n)");
  int64_t B = points.dim(0), L = points.dim(1), A = points.dim(2);
  auto wins = pool_windows(L, spec);
  int64_t W = static_cast<int64_t>(wins.size());
  if (spec.mode == PoolMode::Avg) {
    return hyp::normalize_timelike(ad::window_sum_axis1(points, wins), K);
  }
  // max: the geodesic radius acosh(time/sqrt(K)) is monotone in the time
  // component, so per-window argmax over times selects the same point
  const Tensor& v = points.value();
  std::vector<int64_t> idx(static_cast<size_t>(B * W));
  for (int64_t b = 0; b < B; ++b) {
    for (int64_t wi = 0; wi < W; ++wi) {
      int64_t best = wins[static_cast<size_t>(wi)][0];
      double best_t = v[(b * L + best) * A];
      for (int64_t p : wins[static_cast<size_t>(wi)]) {
        double t = v[(b * L + p) * A];
        if (t > best_t) {
          best_t = t;
          best = p;
        }
      }
      idx[static_cast<size_t>(b * W + wi)] = best;
    }
  }
  return ad::gather_axis1(points, std::move(idx), W);
}

// ---- TangentLayerNorm ----

TangentLayerNorm::TangentLayerNorm(const std::string& prefix, int64_t dim, double K, double eps)
    : k_(K), eps_(eps) {
  gamma_ = Parameter(prefix + ".gamma", Tensor::full({dim}, 1.0));
  beta_ = Parameter(prefix + ".beta", Tensor({dim}));
}

Var TangentLayerNorm::forward(const Var& points) const {
  Var s = hyp::space_part(points);
  int last = s.ndim() - 1;
  Var mu = mean(s, {last}, true);
  Var c = s - mu;
  Var var = mean(c * c, {last}, true);
  Var sn = c / ad::sqrt(var + eps_);
  return hyp::lift(sn * gamma_.var() + beta_.var(), k_);
}

void TangentLayerNorm::collect(std::vector<Parameter*>& out) {
  out.push_back(&gamma_);
  out.push_back(&beta_);
}

// ---- HyperInceptionBlock ----

HyperInceptionBlock::HyperInceptionBlock(const std::string& prefix, const InceptionSpec& spec,
                                         double K, Rng& rng)
    : spec_(spec), k_(K) {
  auto make_branch = [&](const std::string& name, int64_t cin, int64_t cout, int64_t kernel) {
    Branch br;
    double sigma = fan_in_sigma(cin * kernel);
    br.w = Parameter(prefix + "." + name + ".w", uniform_init({cout, cin, kernel}, sigma, rng));
    br.b = Parameter(prefix + "." + name + ".b", Tensor({cout}));
    br.bn = BatchNorm1d(prefix + "." + name + ".bn", cout);
    return br;
  };
  bottleneck_ = make_branch("bottleneck", spec.in_dim, spec.bottleneck, 1);
  br1_ = make_branch("branch1", spec.bottleneck, spec.filters, spec.kernels[0]);
  br2_ = make_branch("branch2", spec.bottleneck, spec.filters, spec.kernels[1]);
  br3_ = make_branch("branch3", spec.bottleneck, spec.filters, spec.kernels[2]);
  pool_conv_ = make_branch("pool", spec.bottleneck, spec.filters, 1);
}

Var HyperInceptionBlock::phi(const Var& space_bcl, Branch& br, int64_t kernel, bool training) {
  int pad = static_cast<int>((kernel - 1) / 2);  // 'same' for odd kernels, stride 1
  Var y = ad::conv1d(space_bcl, br.w.var(), pad);
  y = y + reshape(br.b.var(), {br.b.value().dim(0), 1});
  y = br.bn.forward(y, training);
  return relu(y);
}

Var HyperInceptionBlock::forward(const Var& patches, bool training) {
  if (patches.ndim() != 3) throw std::invalid_argument("inception block expects (N, L, 1+d)");
  if (patches.dim(2) - 1 != spec_.in_dim)
    throw std::invalid_argument("inception block input dimension mismatch");
  if (spec_.bottleneck > spec_.in_dim)
    throw std::invalid_argument("bottleneck must not exceed the channel count");
  Var s_in = transpose_last2(hyp::space_part(patches));  // (N, d, L)
  Var z0s = phi(s_in, bottleneck_, 1, training);         // (N, C', L)
  Var z0 = hyp::lift(transpose_last2(z0s), k_);          // pooling branch needs points

  Var z1 = hyp::lift(transpose_last2(phi(z0s, br1_, spec_.kernels[0], training)), k_);
  Var z2 = hyp::lift(transpose_last2(phi(z0s, br2_, spec_.kernels[1], training)), k_);
  Var z3 = hyp::lift(transpose_last2(phi(z0s, br3_, spec_.kernels[2], training)), k_);

  PoolSpec ps;
  ps.k = spec_.pool_k;
  ps.stride = 1;
  ps.pad = (spec_.pool_k - 1) / 2;
  ps.dilation = 1;
  ps.mode = spec_.pool_mode;
  Var pooled = hyper_pool(z0, ps, k_);  // (N, L, 1+C')
  Var z4s = phi(transpose_last2(hyp::space_part(pooled)), pool_conv_, 1, training);
  Var z4 = hyp::lift(transpose_last2(z4s), k_);

  return hcat({z1, z2, z3, z4}, k_);
}

void HyperInceptionBlock::collect(std::vector<Parameter*>& out) {
  for (Branch* br : {&bottleneck_, &br1_, &br2_, &br3_, &pool_conv_}) {
    out.push_back(&br->w);
    out.push_back(&br->b);
    br->bn.collect(out);
  }
}

void HyperInceptionBlock::load_values_from(HyperInceptionBlock& other) {
  std::vector<Parameter*> mine, theirs;
  collect(mine);
  other.collect(theirs);
  if (mine.size() != theirs.size()) throw std::logic_error("inception block spec mismatch");
  for (size_t i = 0; i < mine.size(); ++i) {
    if (!mine[i]->value().same_shape(theirs[i]->value()))
      throw std::logic_error("inception block shape mismatch at " + mine[i]->name());
    mine[i]->value() = theirs[i]->value();
  }
}

// ---- LorentzAttention ----

LorentzAttention::LorentzAttention(const std::string& prefix, int64_t dim, int heads, double K,
                                   Rng& rng)
    : heads_(heads), dim_(dim), k_(K) {
  if (heads < 1 || dim % heads != 0)
    throw std::invalid_argument("attention heads must divide the space dimension");
  fc_q_ = LorentzLinear(prefix + ".q", dim, dim, false, K, rng);
  fc_k_ = LorentzLinear(prefix + ".k", dim, dim, false, K, rng);
  fc_v_ = LorentzLinear(prefix + ".v", dim, dim, false, K, rng);
  fc_o_ = LorentzLinear(prefix + ".o", dim, dim, false, K, rng);
  log_lambda_ = Parameter(prefix + ".log_lambda", Tensor(Shape{}));  // lambda starts at 1
  tau_ = std::sqrt(static_cast<double>(dim / heads));
}

double LorentzAttention::lambda_value() const { return std::exp(log_lambda_.value().item()); }

Var LorentzAttention::forward(const Var& tokens, std::vector<Var>* attention_out) const {
  if (tokens.ndim() != 3) throw std::invalid_argument("attention expects (B, w, 1+dim)");
  if (tokens.dim(2) - 1 != dim_) throw std::invalid_argument("attention dimension mismatch");
  Var q = fc_q_.forward(tokens);
  Var k = fc_k_.forward(tokens);
  Var v = fc_v_.forward(tokens);
  Var lambda = ad::exp(log_lambda_.var());
  int64_t dh = dim_ / heads_;

  std::vector<Var> head_out;
  head_out.reserve(static_cast<size_t>(heads_));
  Var qs = hyp::space_part(q), ks = hyp::space_part(k), vs = hyp::space_part(v);
  for (int h = 0; h < heads_; ++h) {
    Var qh = hyp::lift(slice(qs, 2, h * dh, dh), k_);
    Var kh = hyp::lift(slice(ks, 2, h * dh, dh), k_);
    Var vh = hyp::lift(slice(vs, 2, h * dh, dh), k_);
    Var d2 = hyp::sqdist_cross(qh, kh, k_);              // (B, w, w)
    Var alpha = softmax_lastdim(d2 * lambda * (-1.0 / tau_));
    if (attention_out) attention_out->push_back(alpha);
    Var agg = matmul(alpha, vh);                         // weighted point sums
    head_out.push_back(hyp::normalize_timelike(agg, k_));
  }
  return fc_o_.forward(hcat(head_out, k_));
}

void LorentzAttention::collect(std::vector<Parameter*>& out) {
  fc_q_.collect(out);
  fc_k_.collect(out);
  fc_v_.collect(out);
  fc_o_.collect(out);
  out.push_back(&log_lambda_);
}

// ---- RandomProjectionPredecoder ----

RandomProjectionPredecoder::RandomProjectionPredecoder(const std::string& prefix, int64_t in_dim,
                                                       int64_t out_dim, int64_t rank,
                                                       int64_t boosts, double boost_alpha,
                                                       int subjects, PredecoderKind kind, double K,
                                                       Rng& rng)
    : kind_(kind), k_(K) {
  double sigma = fan_in_sigma(in_dim);
  // frozen: acts as a fixed random projection throughout training
  w_ = Parameter(prefix + ".w", uniform_init({out_dim, in_dim}, sigma, rng), /*trainable=*/false);
  if (kind == PredecoderKind::MatrixLora) {
    lora_ = LoraBank(prefix + ".lora", out_dim, in_dim, rank, subjects, LoraInit::Uniform, sigma,
                     /*scaled=*/true, rng);
  } else {
    boosts_ = BoostBank(prefix + ".boost", out_dim, boosts, subjects, boost_alpha, rng);
  }
}

Var RandomProjectionPredecoder::forward(const Var& points, int subject) const {
  if (kind_ == PredecoderKind::MatrixLora) {
    Var w_eff = lora_.effective(w_.var(), subject);
    return lorentz_fc(points, w_eff, Var(), false, k_);
  }
  Var base = lorentz_fc(points, w_.var(), Var(), false, k_);
  return boosts_.apply(base, subject, k_);
}

void RandomProjectionPredecoder::collect(std::vector<Parameter*>& out) {
  out.push_back(&w_);
  if (kind_ == PredecoderKind::MatrixLora)
    lora_.collect(out);
  else
    boosts_.collect(out);
}

void RandomProjectionPredecoder::collect_subject(std::vector<Parameter*>& out, int subject) {
  if (kind_ == PredecoderKind::MatrixLora)
    lora_.collect_subject(out, subject);
  else
    boosts_.collect_subject(out, subject);
}

int RandomProjectionPredecoder::add_subject(Rng& rng) {
  return kind_ == PredecoderKind::MatrixLora ? lora_.add_subject(rng) : boosts_.add_subject(rng);
}

// ---- Prototypes ----

Prototypes::Prototypes(const std::string& prefix, int classes, int64_t space_dim, double std,
                       bool trainable, double K, Rng& rng)
    : classes_(classes), k_(K) {
  Tensor protos({classes, space_dim + 1});
  for (int c = 0; c < classes; ++c) {
    geo::LorentzPoint p =
        geo::wrapped_normal_sample(std, geo::Curvature(K), static_cast<int>(space_dim), rng);
    for (int64_t j = 0; j <= space_dim; ++j) protos[c * (space_dim + 1) + j] = p.ambient()[static_cast<size_t>(j)];
  }
  protos_ = Parameter(prefix + ".embeddings", std::move(protos), trainable);
}

Var Prototypes::decode(const Var& points) const {
  // logit_k = -d^2(z, p_k) = 2K + 2<z, p_k>_L
  int64_t a = points.dim(points.ndim() - 1);
  Tensor metric({a});
  metric.fill(1.0);
  metric[0] = -1.0;
  Var zm = points * Var::constant(std::move(metric));
  Var ip = matmul(zm, transpose_last2(protos_.var()));
  return ip * 2.0 + 2.0 * k_;
}

int Prototypes::argmax_logit(const Tensor& logits_row) {
  int best = 0;
  for (int64_t i = 1; i < logits_row.numel(); ++i)
    if (logits_row[i] > logits_row[best]) best = static_cast<int>(i);
  return best;
}

void Prototypes::collect(std::vector<Parameter*>& out) { out.push_back(&protos_); }

}  // namespace latte::nn
