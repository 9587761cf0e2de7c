// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "latte/hyperbolic.hpp"
#include "latte/optim.hpp"
#include "latte/rng.hpp"

namespace latte::nn {

using ad::Parameter;
using ad::Var;

// subject id for the shared-weights-only path (unseen subjects, LOSO test folds)
constexpr int kNoSubject = -1;

Tensor uniform_init(Shape shape, double sigma, Rng& rng);
Tensor normal_init(Shape shape, double std, Rng& rng);
// sigma = sqrt(1 / fan_in)
double fan_in_sigma(int64_t fan_in);

// space' = space W^T + b (optional ReLU), time re-lifted
Var lorentz_fc(const Var& points, const Var& w, const Var& b, bool use_relu, double K);

// HCat: concatenate space parts, recompute time from the manifold constraint
Var hcat(const std::vector<Var>& points, double K);

// Splits a batch by subject id, applies `fn` per group and restores row order.
// All rows sharing one id (common case) skip the regroup entirely.
Var apply_per_subject(const Var& x, const std::vector<int>& subjects,
                      const std::function<Var(const Var&, int)>& fn);

// ---- low-rank subject adapters (additive, Euclidean weights) ----

enum class LoraInit { Gaussian, Uniform };

// Per-subject factors (Q, R) for an I x J weight matrix. R starts at zero so
// the adapter contributes nothing until trained. With `scaled`, the delta is
// multiplied by a per-subject trainable scalar (init 1).
class LoraBank {
public:
  LoraBank() = default;
  LoraBank(const std::string& prefix, int64_t rows, int64_t cols, int64_t rank, int subjects,
           LoraInit q_init, double q_spread, bool scaled, Rng& rng);

  bool has_subject(int subject) const;
  // w_shared + Q_s R_s^T (times alpha_s when scaled); w_shared alone if the
  // subject is absent or disabled
  Var effective(const Var& w_shared, int subject) const;
  Var delta(int subject) const;  // adapter contribution alone

  void collect(std::vector<Parameter*>& out);
  void collect_subject(std::vector<Parameter*>& out, int subject);
  int subject_count() const { return static_cast<int>(q_.size()); }
  int64_t rank() const { return rank_; }
  Parameter& q(int s) { return q_[static_cast<size_t>(s)]; }
  Parameter& r(int s) { return r_[static_cast<size_t>(s)]; }
  Parameter& scale(int s) { return alpha_[static_cast<size_t>(s)]; }
  bool scaled() const { return scaled_; }
  // appends a zero-initialized adapter for a new subject; returns its id
  int add_subject(Rng& rng);

private:
  std::string prefix_;
  int64_t rows_ = 0, cols_ = 0, rank_ = 0;
  LoraInit init_ = LoraInit::Gaussian;
  double spread_ = 0.0;
  bool scaled_ = false;
  std::vector<Parameter> q_, r_, alpha_;
};

// ---- boost-based subject adapters (manifold-native) ----

// Per-subject sequence of Lorentz boosts: directions v_i (normalized at use)
// and magnitudes mu_i (init 0 -> identity), rapidity alpha * mu_i.
class BoostBank {
public:
  BoostBank() = default;
  BoostBank(const std::string& prefix, int64_t space_dim, int64_t boosts, int subjects,
            double alpha, Rng& rng);

  bool has_subject(int subject) const;
  Var apply(const Var& points, int subject, double K) const;  // identity if absent
  void collect(std::vector<Parameter*>& out);
  void collect_subject(std::vector<Parameter*>& out, int subject);
  int subject_count() const { return static_cast<int>(dirs_.size()); }
  int64_t boosts() const { return boosts_; }
  double alpha() const { return alpha_; }
  Parameter& directions(int s) { return dirs_[static_cast<size_t>(s)]; }
  Parameter& magnitudes(int s) { return mags_[static_cast<size_t>(s)]; }
  int add_subject(Rng& rng);

private:
  std::string prefix_;
  int64_t space_dim_ = 0, boosts_ = 0;
  double alpha_ = 0.1;
  std::vector<Parameter> dirs_, mags_;
};

// ---- plain layers ----

class LorentzLinear {
public:
  LorentzLinear() = default;
  LorentzLinear(const std::string& prefix, int64_t in_dim, int64_t out_dim, bool use_relu,
                double K, Rng& rng);
  Var forward(const Var& points) const;
  void collect(std::vector<Parameter*>& out);
  Parameter& weight() { return w_; }
  Parameter& bias() { return b_; }

private:
  Parameter w_, b_;
  bool relu_ = false;
  double k_ = 1.0;
};

class BatchNorm1d {
public:
  BatchNorm1d() = default;
  BatchNorm1d(const std::string& prefix, int64_t channels, double momentum = 0.1, double eps = 1e-5);
  // x: (B, C, L)
  Var forward(const Var& x, bool training);
  void collect(std::vector<Parameter*>& out);
  Parameter& gamma() { return gamma_; }
  Parameter& beta() { return beta_; }
  Parameter& running_mean() { return run_mean_; }
  Parameter& running_var() { return run_var_; }

private:
  Parameter gamma_, beta_;
  Parameter run_mean_, run_var_;  // buffers, never trainable
  double momentum_ = 0.1, eps_ = 1e-5;
};

enum class PoolMode { Max, Avg };

struct PoolSpec {
  int64_t k = 2;
  int64_t stride = 2;
  int64_t pad = 0;
  int64_t dilation = 1;
  PoolMode mode = PoolMode::Max;
};

// window index lists after clipping padded positions; throws when the spec
// yields no window or an empty one
std::vector<std::vector<int64_t>> pool_windows(int64_t length, const PoolSpec& spec);

// points (B, L, 1+n) -> (B, W, 1+n). Max mode selects, per window, the member
// with the largest geodesic radius acosh(time/sqrt(K)) (monotone in the time
// component); ties keep the earliest index. Avg mode takes the uniform
// Lorentzian centroid of the window.
Var hyper_pool(const Var& points, const PoolSpec& spec, double K);

class TangentLayerNorm {
public:
  TangentLayerNorm() = default;
  TangentLayerNorm(const std::string& prefix, int64_t dim, double K, double eps = 1e-5);
  Var forward(const Var& points) const;
  void collect(std::vector<Parameter*>& out);

private:
  Parameter gamma_, beta_;
  double k_ = 1.0, eps_ = 1e-5;
};

// ---- hyperbolic InceptionTime block ----

struct InceptionSpec {
  int64_t in_dim = 32;
  int64_t bottleneck = 32;
  int64_t filters = 32;
  std::array<int64_t, 3> kernels{9, 19, 39};
  int64_t pool_k = 3;
  PoolMode pool_mode = PoolMode::Max;
};

class HyperInceptionBlock {
public:
  HyperInceptionBlock() = default;
  HyperInceptionBlock(const std::string& prefix, const InceptionSpec& spec, double K, Rng& rng);
  // patches (N, L, 1+in_dim) -> (N, L, 1+4*filters)
  Var forward(const Var& patches, bool training);
  int64_t out_dim() const { return 4 * spec_.filters; }
  const InceptionSpec& spec() const { return spec_; }
  void collect(std::vector<Parameter*>& out);
  // copy every weight/buffer value from another block of identical spec
  void load_values_from(HyperInceptionBlock& other);

private:
  struct Branch {
    Parameter w, b;
    BatchNorm1d bn;
  };
  Var phi(const Var& space_bcl, Branch& br, int64_t kernel, bool training);

  InceptionSpec spec_;
  double k_ = 1.0;
  Branch bottleneck_, br1_, br2_, br3_, pool_conv_;
};

// ---- Lorentz multi-head attention ----

class LorentzAttention {
public:
  LorentzAttention() = default;
  LorentzAttention(const std::string& prefix, int64_t dim, int heads, double K, Rng& rng);
  // tokens (B, w, 1+dim) -> (B, w, 1+dim); per-head attention weights are a
  // softmax over -(lambda/tau) * squared Lorentz distance
  Var forward(const Var& tokens, std::vector<Var>* attention_out = nullptr) const;
  void collect(std::vector<Parameter*>& out);
  double tau() const { return tau_; }
  double lambda_value() const;
  Parameter& log_lambda() { return log_lambda_; }

private:
  LorentzLinear fc_q_, fc_k_, fc_v_, fc_o_;
  Parameter log_lambda_;  // lambda = exp(log_lambda) keeps the scale positive
  int heads_ = 1;
  int64_t dim_ = 0;
  double k_ = 1.0, tau_ = 1.0;
};

// ---- random-projection pre-decoder ----

enum class PredecoderKind { MatrixLora, BoostLora };

// Frozen uniform random projection on the manifold with a per-subject adapter
// to reintroduce adaptability (matrix LoRA by default, boosts as an option).
class RandomProjectionPredecoder {
public:
  RandomProjectionPredecoder() = default;
  RandomProjectionPredecoder(const std::string& prefix, int64_t in_dim, int64_t out_dim,
                             int64_t rank, int64_t boosts, double boost_alpha, int subjects,
                             PredecoderKind kind, double K, Rng& rng);
  Var forward(const Var& points, int subject) const;
  void collect(std::vector<Parameter*>& out);
  void collect_subject(std::vector<Parameter*>& out, int subject);
  Parameter& frozen_weight() { return w_; }
  LoraBank& lora() { return lora_; }
  BoostBank& boost_bank() { return boosts_; }
  PredecoderKind kind() const { return kind_; }
  int add_subject(Rng& rng);

private:
  Parameter w_;  // frozen
  LoraBank lora_;
  BoostBank boosts_;
  PredecoderKind kind_ = PredecoderKind::MatrixLora;
  double k_ = 1.0;
};

// ---- prototype decoder ----

// One class embedding per class; logit_k = -d^2_L(z, p_k), so the argmax is
// the nearest prototype. Ties resolve to the lowest class index.
class Prototypes {
public:
  Prototypes() = default;
  Prototypes(const std::string& prefix, int classes, int64_t space_dim, double std, bool trainable,
             double K, Rng& rng);
  Var decode(const Var& points) const;  // (B, 1+n) -> (B, classes)
  static int argmax_logit(const Tensor& logits_row);
  void collect(std::vector<Parameter*>& out);
  Parameter& embeddings() { return protos_; }
  int classes() const { return classes_; }

private:
  Parameter protos_;  // (classes, 1+n)
  int classes_ = 0;
  double k_ = 1.0;
};

}  // namespace latte::nn
