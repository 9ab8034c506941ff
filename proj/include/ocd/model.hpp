#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "ocd/types.hpp"

namespace ocd {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

/// Model sizes. vocab_size counts content tokens, eos and pad; the decoder
/// emits content + eos and reads pad as its begin-of-sequence input.
struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 32;
  std::size_t hidden_dim = 64;
  bool use_attention = false;
  std::uint64_t seed = 0;

  std::size_t outputs() const { return vocab_size - 1; }
  Token eos() const { return static_cast<Token>(vocab_size - 2); }
  Token bos() const { return static_cast<Token>(vocab_size - 1); }

  void validate() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
  bool operator==(const ModelConfig&) const = default;
};

/// Named parameter tensors. GRU weights stack the update, reset and
/// candidate gates row-wise ([z; r; n]). Biases are single-column matrices.
template <typename T>
struct Params {
  Matrix<T> embedding;  // vocab x embed
  Matrix<T> enc_w;      // 3H x E
  Matrix<T> enc_u;      // 3H x H
  Matrix<T> enc_b;      // 3H x 1
  Matrix<T> dec_w;
  Matrix<T> dec_u;
  Matrix<T> dec_b;
  Matrix<T> att_w;   // H x H query projection
  Matrix<T> out_w;   // O x H
  Matrix<T> out_wc;  // O x H, attention context
  Matrix<T> out_b;   // O x 1

  static Params zeros(const ModelConfig& config);

  template <typename F>
  void for_each(F&& f) {
    f("embedding", embedding);
    f("encoder.w", enc_w);
    f("encoder.u", enc_u);
    f("encoder.b", enc_b);
    f("decoder.w", dec_w);
    f("decoder.u", dec_u);
    f("decoder.b", dec_b);
    f("attention.w", att_w);
    f("output.w", out_w);
    f("output.wc", out_wc);
    f("output.b", out_b);
  }
  template <typename F>
  void for_each(F&& f) const {
    const_cast<Params*>(this)->for_each([&](const std::string& name, Matrix<T>& m) { f(name, std::as_const(m)); });
  }

  template <typename U>
  Params<U> cast() const {
    Params<U> out;
    out.embedding = embedding.template cast<U>();
    out.enc_w = enc_w.template cast<U>();
    out.enc_u = enc_u.template cast<U>();
    out.enc_b = enc_b.template cast<U>();
    out.dec_w = dec_w.template cast<U>();
    out.dec_u = dec_u.template cast<U>();
    out.dec_b = dec_b.template cast<U>();
    out.att_w = att_w.template cast<U>();
    out.out_w = out_w.template cast<U>();
    out.out_wc = out_wc.template cast<U>();
    out.out_b = out_b.template cast<U>();
    return out;
  }

  std::vector<Matrix<T>*> tensors();
  std::vector<const Matrix<T>*> tensors() const;
  std::vector<std::string> names() const;

  bool all_finite() const;
  void set_zero();
  Params& operator+=(const Params& other);
};

/// Xavier-uniform matrices (per gate block for GRU weights), zero biases.
/// Deterministic in config.seed.
template <typename T>
Params<T> init_params(const ModelConfig& config);

template <typename T>
struct Encoding {
  Matrix<T> states;  // H x |x|
  Vector<T> summary;
};

template <typename T>
struct DecodeStep {
  std::vector<double> logprobs;  // content + eos, log-softmax in double
  Vector<T> state;
};

/// Single-layer GRU encoder-decoder; the decoder starts from the encoder's
/// final state.
template <typename T>
class Seq2Seq {
 public:
  Seq2Seq(ModelConfig config, Params<T> params);
  static Seq2Seq initialized(const ModelConfig& config) { return Seq2Seq(config, init_params<T>(config)); }

  const ModelConfig& config() const { return config_; }
  const Params<T>& params() const { return params_; }
  Params<T>& params() { return params_; }

  Encoding<T> encode(std::span<const Token> x) const;
  DecodeStep<T> decode_step(const Vector<T>& state, Token prev, const Encoding<T>& enc) const;

 private:
  ModelConfig config_;
  Params<T> params_;
};

/// A recorded forward pass for one example. Decoder inputs are fed one at a
/// time, so teacher forcing, sampling and mixed prefixes share one code path;
/// the fed tokens are treated as data by backward().
template <typename T>
class ForwardPass {
 public:
  ForwardPass(const Seq2Seq<T>& model, std::span<const Token> x);
  ~ForwardPass();
  ForwardPass(ForwardPass&&) noexcept;
  ForwardPass& operator=(ForwardPass&&) noexcept;

  /// Feeds `prev` and returns the next-token log-probabilities.
  const std::vector<double>& step(Token prev);
  std::size_t steps() const;
  std::vector<std::vector<double>> logprobs() const;
  const ModelConfig& config() const;

  /// Accumulates the parameter gradient of sum_t <dlogits_t, logits_t> into
  /// `grads`. dlogits may cover fewer steps than were fed.
  void backward(std::span<const std::vector<double>> dlogits, Params<T>& grads) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Convenience wrapper: zero-initialized gradients for one pass.
template <typename T>
Params<T> gradients(const ForwardPass<T>& pass, std::span<const std::vector<double>> dlogits,
                    const ModelConfig& config);

template <typename T>
struct OptimizerState {
  Params<T> m;
  Params<T> v;
  std::int64_t step = 0;

  static OptimizerState zeros(const ModelConfig& config) { return {Params<T>::zeros(config), Params<T>::zeros(config), 0}; }
};

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 5.0;
};

/// Global-norm clipping followed by a bias-corrected Adam update, in place.
/// Returns the gradient norm before clipping.
template <typename T>
double adam_step(Params<T>& params, const Params<T>& grads, OptimizerState<T>& state, const AdamOptions& options);

}  // namespace ocd
