// Copyright 2026 The SDL Authors.
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

// Encoder-decoder LSTM response generator with an optional social fusion
// layer between encoder and decoder, trained with teacher-forced
// cross-entropy and hand-written backpropagation through time.
//
// Parameters, in checkpoint order (columns index tokens / batch items):
//   embedding  emb x V
//   enc_w      4h x (emb + h), gate rows ordered input, forget, cell, output
//   enc_b      4h x 1
//   dec_w      4h x (emb + h)
//   dec_b      4h x 1
//   out_w      V x h
//   out_b      V x 1
//   fuse_w     2h x (2h + 2)   lexical_social only
//   fuse_b     2h x 1          lexical_social only
// The lexical variant starts the decoder from the final encoder (h, c). The
// social variant maps [h; c; politeness; positivity] through tanh(W x + b)
// and splits the result into the decoder's (h, c).

#ifndef SDL_NEURAL_H_
#define SDL_NEURAL_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "sdl/social.h"
#include "sdl/text.h"

namespace sdl::neural {

using TokenIds = std::vector<int32_t>;

class Vocab {
 public:
  static constexpr int32_t kPad = 0;
  static constexpr int32_t kSos = 1;
  static constexpr int32_t kEos = 2;
  static constexpr int32_t kUnk = 3;
  static constexpr int32_t kNumReserved = 4;

  Vocab();

  // Tokens with count >= min_count, most frequent first, ties by byte order.
  static Vocab build(const std::vector<Tokens>& corpus, int min_count);

  // Appends a token; returns its id. Existing tokens keep their id.
  int32_t add(const std::string& token);
  int32_t id(const std::string& token) const;  // kUnk when absent
  bool contains(const std::string& token) const;
  const std::string& token(int32_t id) const;
  size_t size() const { return tokens_.size(); }

  TokenIds encode(const Tokens& tokens) const;
  // Drops reserved ids other than <unk>.
  Tokens decode(const TokenIds& ids) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int32_t> ids_;
};

enum class Variant { kLexical, kLexicalSocial };
const char* variant_name(Variant v);
Variant parse_variant(std::string_view name);

struct ModelDims {
  int embedding = 32;
  int hidden = 64;
};

inline constexpr int kSocialDim = 2;

enum ParamIndex {
  kEmbedding = 0,
  kEncW,
  kEncB,
  kDecW,
  kDecB,
  kOutW,
  kOutB,
  kFuseW,
  kFuseB,
};

template <typename Scalar>
class Seq2Seq {
 public:
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  // All parameters zero.
  Seq2Seq(Variant variant, Vocab vocab, ModelDims dims);

  // Uniform(-scale, scale) weights, zero biases except forget gates at 1.
  void init_uniform(double scale, uint64_t seed);

  Variant variant() const { return variant_; }
  const Vocab& vocab() const { return vocab_; }
  const ModelDims& dims() const { return dims_; }
  int vocab_size() const { return static_cast<int>(vocab_.size()); }

  std::vector<Mat>& params() { return params_; }
  const std::vector<Mat>& params() const { return params_; }
  Mat& param(ParamIndex k) { return params_[k]; }
  const Mat& param(ParamIndex k) const { return params_[k]; }
  static const char* param_name(size_t k);

  bool all_finite() const;
  size_t num_parameters() const;

 private:
  Variant variant_;
  Vocab vocab_;
  ModelDims dims_;
  std::vector<Mat> params_;
};

template <typename Scalar>
struct EncoderState {
  typename Seq2Seq<Scalar>::Vec h;
  typename Seq2Seq<Scalar>::Vec c;
};

// One training / evaluation item. source is the driver message followed by
// <eos>; target is <sos> reply <eos>.
struct Example {
  TokenIds source;
  TokenIds target;
  SocialVector social;
};

Example make_example(const Vocab& vocab, const Tokens& source,
                     const Tokens& target, SocialVector social,
                     size_t max_tokens = 48);

template <typename Scalar>
EncoderState<Scalar> encode(const Seq2Seq<Scalar>& model, const TokenIds& source);

template <typename Scalar>
EncoderState<Scalar> fuse_social(const Seq2Seq<Scalar>& model,
                                 const EncoderState<Scalar>& state,
                                 const SocialVector& social);

// Encoder state, fused when the model has the social variant.
template <typename Scalar>
EncoderState<Scalar> initial_decoder_state(const Seq2Seq<Scalar>& model,
                                           const TokenIds& source,
                                           const std::optional<SocialVector>& social);

// Mean token cross-entropy of target[1:] under teacher forcing from init.
template <typename Scalar>
double decode_loss(const Seq2Seq<Scalar>& model, const EncoderState<Scalar>& init,
                   const TokenIds& target);

// Summed token cross-entropy and token count of a batch.
struct BatchLoss {
  double sum = 0.0;
  size_t tokens = 0;
  std::vector<double> per_example;  // mean over each example's tokens
  double mean() const { return tokens ? sum / static_cast<double>(tokens) : 0.0; }
};

// Forward pass over a batch; when grads is non-null it receives the
// gradient of the batch mean token loss (shapes match params()).
template <typename Scalar>
BatchLoss batch_loss(const Seq2Seq<Scalar>& model,
                     const std::vector<const Example*>& batch,
                     std::vector<typename Seq2Seq<Scalar>::Mat>* grads = nullptr);

// Token-mean loss over a data set, evaluated in batches of batch_size.
template <typename Scalar>
double dataset_loss(const Seq2Seq<Scalar>& model, const std::vector<Example>& data,
                    int batch_size = 64);

struct TrainConfig {
  double learning_rate = 0.5;
  int batch_size = 16;
  int max_epochs = 30;
  int patience = 3;
  double clip_norm = 5.0;
  double init_scale = 0.1;
  uint64_t seed = 1;
  // Stop once the training loss falls below this value (0 disables).
  double target_train_loss = 0.0;

  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<double> train_curve;
  std::vector<double> val_curve;
  int best_epoch = 0;  // 1-based
  double best_val_loss = 0.0;
};

// Initializes the model from config.seed, then runs minibatch SGD with
// global-norm clipping. Keeps the parameters of the epoch with the lowest
// validation loss and stops after `patience` epochs without improvement.
template <typename Scalar>
TrainResult train(Seq2Seq<Scalar>& model, const std::vector<Example>& train_set,
                  const std::vector<Example>& validation_set,
                  const TrainConfig& config,
                  const std::function<void(const EpochLog&)>& log = nullptr);

struct GenerateOptions {
  int max_len = 40;
  int beam_width = 1;  // 1 is greedy
};

template <typename Scalar>
TokenIds generate(const Seq2Seq<Scalar>& model, const TokenIds& source,
                  const std::optional<SocialVector>& social,
                  const GenerateOptions& options = {});

struct GradientCheckOptions {
  double epsilon = 1e-3;
  int num_params = 240;
  uint64_t seed = 7;
};

// Largest |analytic - numeric| / max(|analytic|, |numeric|, 1e-6) over
// parameters sampled from every group. The numeric derivative is the
// five-point central difference; embedding entries are drawn from
// tokens present in the sample.
double gradient_check(const Seq2Seq<double>& model,
                      const std::vector<Example>& sample,
                      const GradientCheckOptions& options = {});

// Binary checkpoint: "SDLCKPT\0", u32 version, u32 scalar bytes, u32
// variant, u32 vocab size, u32 embedding, u32 hidden, u32 social dim,
// u64 split fingerprint, u64 seed, vocab (u32 length + bytes each), then
// each tensor as u32 rows, u32 cols, column-major little-endian values.
struct CheckpointInfo {
  uint64_t split_fingerprint = 0;
  uint64_t seed = 0;
};

template <typename Scalar>
void save_checkpoint(std::ostream& out, const Seq2Seq<Scalar>& model,
                     const CheckpointInfo& info);

template <typename Scalar>
Seq2Seq<Scalar> load_checkpoint(std::istream& in, CheckpointInfo* info = nullptr);

// Copy with parameters converted to another scalar type.
template <typename To, typename From>
Seq2Seq<To> convert_model(const Seq2Seq<From>& model);

}  // namespace sdl::neural

#endif  // SDL_NEURAL_H_
