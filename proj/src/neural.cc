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

#include "sdl/neural.h"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>

#include "sdl/error.h"
#include "sdl/random.h"

namespace sdl::neural {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

// ---- vocabulary ----------------------------------------------------------------

Vocab::Vocab() {
  for (const char* t : {"<pad>", "<sos>", "<eos>", "<unk>"}) add(t);
}

Vocab Vocab::build(const std::vector<Tokens>& corpus, int min_count) {
  if (min_count < 1) throw PreconditionError("vocab min_count must be >= 1");
  if (corpus.empty()) throw PreconditionError("cannot build a vocabulary from an empty corpus");
  std::map<std::string, int64_t> counts;
  for (const auto& seq : corpus) {
    for (const auto& t : seq) ++counts[t];
  }
  std::vector<std::pair<std::string, int64_t>> items(counts.begin(), counts.end());
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocab v;
  for (const auto& [tok, n] : items) {
    if (n >= min_count) v.add(tok);
  }
  return v;
}

int32_t Vocab::add(const std::string& token) {
  auto [it, inserted] = ids_.try_emplace(token, static_cast<int32_t>(tokens_.size()));
  if (inserted) tokens_.push_back(token);
  return it->second;
}

int32_t Vocab::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

bool Vocab::contains(const std::string& token) const { return ids_.count(token) > 0; }

const std::string& Vocab::token(int32_t id) const {
  if (id < 0 || static_cast<size_t>(id) >= tokens_.size()) {
    throw PreconditionError("token id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<size_t>(id)];
}

TokenIds Vocab::encode(const Tokens& tokens) const {
  TokenIds out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

Tokens Vocab::decode(const TokenIds& ids) const {
  Tokens out;
  for (int32_t i : ids) {
    if (i == kPad || i == kSos || i == kEos) continue;
    out.push_back(token(i));
  }
  return out;
}

const char* variant_name(Variant v) {
  return v == Variant::kLexical ? "lexical" : "lexical_social";
}

Variant parse_variant(std::string_view name) {
  if (name == "lexical") return Variant::kLexical;
  if (name == "lexical_social" || name == "social") return Variant::kLexicalSocial;
  throw FormatError("unknown model variant '" + std::string(name) + "'");
}

Example make_example(const Vocab& vocab, const Tokens& source, const Tokens& target,
                     SocialVector social, size_t max_tokens) {
  Example e;
  const size_t ns = std::min(source.size(), max_tokens);
  for (size_t i = 0; i < ns; ++i) e.source.push_back(vocab.id(source[i]));
  e.source.push_back(Vocab::kEos);
  e.target.push_back(Vocab::kSos);
  const size_t nt = std::min(target.size(), max_tokens);
  for (size_t i = 0; i < nt; ++i) e.target.push_back(vocab.id(target[i]));
  e.target.push_back(Vocab::kEos);
  e.social = social;
  return e;
}

// ---- model ---------------------------------------------------------------------

namespace {

constexpr const char* kParamNames[] = {"embedding", "enc_w",  "enc_b",
                                       "dec_w",     "dec_b",  "out_w",
                                       "out_b",     "fuse_w", "fuse_b"};

}  // namespace

template <typename Scalar>
Seq2Seq<Scalar>::Seq2Seq(Variant variant, Vocab vocab, ModelDims dims)
    : variant_(variant), vocab_(std::move(vocab)), dims_(dims) {
  if (dims.embedding < 1 || dims.hidden < 1) {
    throw PreconditionError("model dimensions must be positive");
  }
  const int v = vocab_size(), e = dims.embedding, h = dims.hidden;
  params_.push_back(Mat::Zero(e, v));
  params_.push_back(Mat::Zero(4 * h, e + h));
  params_.push_back(Mat::Zero(4 * h, 1));
  params_.push_back(Mat::Zero(4 * h, e + h));
  params_.push_back(Mat::Zero(4 * h, 1));
  params_.push_back(Mat::Zero(v, h));
  params_.push_back(Mat::Zero(v, 1));
  if (variant == Variant::kLexicalSocial) {
    params_.push_back(Mat::Zero(2 * h, 2 * h + kSocialDim));
    params_.push_back(Mat::Zero(2 * h, 1));
  }
}

template <typename Scalar>
void Seq2Seq<Scalar>::init_uniform(double scale, uint64_t seed) {
  Rng rng(seed);
  for (size_t k = 0; k < params_.size(); ++k) {
    Mat& p = params_[k];
    const bool bias = k == kEncB || k == kDecB || k == kOutB || k == kFuseB;
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      for (Eigen::Index i = 0; i < p.rows(); ++i) {
        p(i, j) = bias ? Scalar(0) : static_cast<Scalar>(rng.uniform(-scale, scale));
      }
    }
  }
  const int h = dims_.hidden;
  params_[kEncB].middleRows(h, h).setOnes();
  params_[kDecB].middleRows(h, h).setOnes();
}

template <typename Scalar>
const char* Seq2Seq<Scalar>::param_name(size_t k) {
  return kParamNames[k];
}

template <typename Scalar>
bool Seq2Seq<Scalar>::all_finite() const {
  for (const auto& p : params_) {
    if (!p.allFinite()) return false;
  }
  return true;
}

template <typename Scalar>
size_t Seq2Seq<Scalar>::num_parameters() const {
  size_t n = 0;
  for (const auto& p : params_) n += static_cast<size_t>(p.size());
  return n;
}

// ---- forward / backward ----------------------------------------------------------

namespace {

template <typename Scalar>
struct Kernels {
  using Mat = typename Seq2Seq<Scalar>::Mat;
  using Vec = typename Seq2Seq<Scalar>::Vec;
  using RowArr = Eigen::Array<Scalar, 1, Eigen::Dynamic>;

  struct StepCache {
    std::vector<int32_t> inputs;
    Mat xh;
    Mat i, f, g, o;
    Mat c_prev, tanh_c;
    RowArr mask;
    bool masked = false;
  };

  static Mat sigmoid(const Mat& z) {
    return (Scalar(1) / (Scalar(1) + (-z.array()).exp())).matrix();
  }

  // One LSTM step on a batch; h and c are updated in place. Columns whose
  // mask is 0 keep their previous state.
  static void lstm_step(const Mat& w, const Mat& b, const Mat& emb,
                        const std::vector<int32_t>& inputs, Mat& h, Mat& c,
                        const RowArr* mask, StepCache* cache) {
    const Eigen::Index e = emb.rows(), hd = h.rows(), bs = h.cols();
    Mat xh(e + hd, bs);
    for (Eigen::Index j = 0; j < bs; ++j) xh.col(j).head(e) = emb.col(inputs[j]);
    xh.bottomRows(hd) = h;
    Mat z = w * xh;
    z.colwise() += b.col(0);
    Mat i = sigmoid(z.topRows(hd));
    Mat f = sigmoid(z.middleRows(hd, hd));
    Mat g = z.middleRows(2 * hd, hd).array().tanh().matrix();
    Mat o = sigmoid(z.bottomRows(hd));
    Mat c_new = (f.array() * c.array() + i.array() * g.array()).matrix();
    Mat tanh_c = c_new.array().tanh().matrix();
    Mat h_new = (o.array() * tanh_c.array()).matrix();
    if (cache) {
      cache->inputs = inputs;
      cache->xh = std::move(xh);
      cache->c_prev = c;
      cache->masked = mask != nullptr;
      if (mask) cache->mask = *mask;
    }
    if (mask) {
      const RowArr keep = Scalar(1) - mask->array();
      h = (h_new.array().rowwise() * mask->array() + h.array().rowwise() * keep).matrix();
      c = (c_new.array().rowwise() * mask->array() + c.array().rowwise() * keep).matrix();
    } else {
      h = std::move(h_new);
      c = std::move(c_new);
    }
    if (cache) {
      cache->i = std::move(i);
      cache->f = std::move(f);
      cache->g = std::move(g);
      cache->o = std::move(o);
      cache->tanh_c = std::move(tanh_c);
    }
  }

  // Backward through one step. dh / dc hold the gradient w.r.t. the step's
  // output state and are replaced by the gradient w.r.t. its input state.
  static void lstm_step_backward(const Mat& w, const StepCache& s, Mat& dh, Mat& dc,
                                 Mat& dw, Mat& db, Mat& demb) {
    const Eigen::Index hd = dh.rows();
    const Eigen::Index e = s.xh.rows() - hd;
    Mat dh_new = dh, dc_new = dc;
    Mat dh_carry, dc_carry;
    if (s.masked) {
      const RowArr keep = Scalar(1) - s.mask;
      dh_carry = (dh.array().rowwise() * keep).matrix();
      dc_carry = (dc.array().rowwise() * keep).matrix();
      dh_new = (dh.array().rowwise() * s.mask).matrix();
      dc_new = (dc.array().rowwise() * s.mask).matrix();
    }
    const auto tc = s.tanh_c.array();
    const auto dct = (dc_new.array() +
                      dh_new.array() * s.o.array() * (Scalar(1) - tc * tc)).eval();
    Mat dz(4 * hd, dh.cols());
    dz.topRows(hd) = (dct * s.g.array() * s.i.array() * (Scalar(1) - s.i.array())).matrix();
    dz.middleRows(hd, hd) =
        (dct * s.c_prev.array() * s.f.array() * (Scalar(1) - s.f.array())).matrix();
    dz.middleRows(2 * hd, hd) =
        (dct * s.i.array() * (Scalar(1) - s.g.array() * s.g.array())).matrix();
    dz.bottomRows(hd) =
        (dh_new.array() * tc * s.o.array() * (Scalar(1) - s.o.array())).matrix();
    dw.noalias() += dz * s.xh.transpose();
    db.col(0) += dz.rowwise().sum();
    const Mat dxh = w.transpose() * dz;
    for (Eigen::Index j = 0; j < dz.cols(); ++j) {
      demb.col(s.inputs[j]) += dxh.col(j).head(e);
    }
    dh = dxh.bottomRows(hd);
    dc = (dct * s.f.array()).matrix();
    if (s.masked) {
      dh += dh_carry;
      dc += dc_carry;
    }
  }

  // Softmax cross-entropy on a column batch of logits. Adds each column's
  // loss to losses[j] for non-pad targets; fills dlogits scaled by weight.
  static void softmax_xent(Mat& logits, const std::vector<int32_t>& targets,
                           std::vector<double>& losses, Scalar weight, Mat* dlogits) {
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      auto col = logits.col(j);
      const Scalar mx = col.maxCoeff();
      col.array() -= mx;
      col = col.array().exp().matrix();
      const Scalar sum = col.sum();
      col /= sum;
      const int32_t y = targets[j];
      if (y == Vocab::kPad) {
        if (dlogits) dlogits->col(j).setZero();
        continue;
      }
      losses[j] -= std::log(static_cast<double>(col(y)));
      if (!std::isfinite(losses[j])) losses[j] = std::numeric_limits<double>::infinity();
      if (dlogits) {
        dlogits->col(j) = col * weight;
        (*dlogits)(y, j) -= weight;
      }
    }
  }
};

template <typename Scalar>
using Mat = typename Seq2Seq<Scalar>::Mat;

template <typename Scalar>
void fuse_batch(const Seq2Seq<Scalar>& model, const Mat<Scalar>& social, Mat<Scalar>& h,
                Mat<Scalar>& c, Mat<Scalar>* fuse_in, Mat<Scalar>* fuse_out) {
  const Eigen::Index hd = h.rows();
  Mat<Scalar> in(2 * hd + kSocialDim, h.cols());
  in.topRows(hd) = h;
  in.middleRows(hd, hd) = c;
  in.bottomRows(kSocialDim) = social;
  Mat<Scalar> a = model.param(kFuseW) * in;
  a.colwise() += model.param(kFuseB).col(0);
  Mat<Scalar> u = a.array().tanh().matrix();
  h = u.topRows(hd);
  c = u.bottomRows(hd);
  if (fuse_in) *fuse_in = std::move(in);
  if (fuse_out) *fuse_out = std::move(u);
}

}  // namespace

template <typename Scalar>
EncoderState<Scalar> encode(const Seq2Seq<Scalar>& model, const TokenIds& source) {
  if (source.empty()) throw PreconditionError("encode: empty source sequence");
  const int hd = model.dims().hidden;
  Mat<Scalar> h = Mat<Scalar>::Zero(hd, 1), c = Mat<Scalar>::Zero(hd, 1);
  std::vector<int32_t> in(1);
  for (int32_t id : source) {
    if (id < 0 || id >= model.vocab_size()) throw PreconditionError("encode: token id out of range");
    in[0] = id;
    Kernels<Scalar>::lstm_step(model.param(kEncW), model.param(kEncB),
                               model.param(kEmbedding), in, h, c, nullptr, nullptr);
  }
  return {h.col(0), c.col(0)};
}

template <typename Scalar>
EncoderState<Scalar> fuse_social(const Seq2Seq<Scalar>& model,
                                 const EncoderState<Scalar>& state,
                                 const SocialVector& social) {
  if (model.variant() != Variant::kLexicalSocial) {
    throw PreconditionError("fuse_social: model has no fusion layer");
  }
  Mat<Scalar> h = state.h, c = state.c;
  Mat<Scalar> s(kSocialDim, 1);
  s << static_cast<Scalar>(social.politeness), static_cast<Scalar>(social.positivity);
  fuse_batch(model, s, h, c, nullptr, nullptr);
  return {h.col(0), c.col(0)};
}

template <typename Scalar>
EncoderState<Scalar> initial_decoder_state(const Seq2Seq<Scalar>& model,
                                           const TokenIds& source,
                                           const std::optional<SocialVector>& social) {
  auto state = encode(model, source);
  if (model.variant() == Variant::kLexicalSocial) {
    if (!social) throw PreconditionError("social model needs a social vector");
    return fuse_social(model, state, *social);
  }
  if (social) throw PreconditionError("lexical model takes no social vector");
  return state;
}

template <typename Scalar>
double decode_loss(const Seq2Seq<Scalar>& model, const EncoderState<Scalar>& init,
                   const TokenIds& target) {
  if (target.size() < 2 || target.front() != Vocab::kSos || target.back() != Vocab::kEos) {
    throw PreconditionError("decode_loss: target must start with <sos> and end with <eos>");
  }
  Mat<Scalar> h = init.h, c = init.c;
  std::vector<int32_t> in(1), y(1);
  std::vector<double> loss(1, 0.0);
  size_t count = 0;
  for (size_t t = 0; t + 1 < target.size(); ++t) {
    in[0] = target[t];
    Kernels<Scalar>::lstm_step(model.param(kDecW), model.param(kDecB),
                               model.param(kEmbedding), in, h, c, nullptr, nullptr);
    Mat<Scalar> logits = model.param(kOutW) * h;
    logits += model.param(kOutB);
    y[0] = target[t + 1];
    if (y[0] != Vocab::kPad) ++count;
    Kernels<Scalar>::softmax_xent(logits, y, loss, Scalar(0), nullptr);
  }
  return count ? loss[0] / static_cast<double>(count) : 0.0;
}

template <typename Scalar>
BatchLoss batch_loss(const Seq2Seq<Scalar>& model, const std::vector<const Example*>& batch,
                     std::vector<Mat<Scalar>>* grads) {
  using K = Kernels<Scalar>;
  const Eigen::Index bs = static_cast<Eigen::Index>(batch.size());
  const int hd = model.dims().hidden;
  const bool social = model.variant() == Variant::kLexicalSocial;
  BatchLoss result;
  if (bs == 0) return result;
  size_t src_len = 0, tgt_len = 0;
  for (const Example* e : batch) {
    if (e->source.empty()) throw PreconditionError("batch_loss: empty source");
    if (e->target.size() < 2 || e->target.front() != Vocab::kSos ||
        e->target.back() != Vocab::kEos) {
      throw PreconditionError("batch_loss: target must start with <sos> and end with <eos>");
    }
    src_len = std::max(src_len, e->source.size());
    tgt_len = std::max(tgt_len, e->target.size());
    result.tokens += e->target.size() - 1;
  }
  const bool backward = grads != nullptr;
  const Scalar weight = Scalar(1) / static_cast<Scalar>(result.tokens);

  // Encoder.
  Mat<Scalar> h = Mat<Scalar>::Zero(hd, bs), c = Mat<Scalar>::Zero(hd, bs);
  std::vector<typename K::StepCache> enc_cache(backward ? src_len : 0);
  std::vector<int32_t> in(bs);
  typename K::RowArr mask(bs);
  for (size_t t = 0; t < src_len; ++t) {
    bool any_inactive = false;
    for (Eigen::Index j = 0; j < bs; ++j) {
      const bool active = t < batch[j]->source.size();
      in[j] = active ? batch[j]->source[t] : Vocab::kPad;
      mask(j) = active ? Scalar(1) : Scalar(0);
      any_inactive |= !active;
    }
    K::lstm_step(model.param(kEncW), model.param(kEncB), model.param(kEmbedding), in, h, c,
                 any_inactive ? &mask : nullptr, backward ? &enc_cache[t] : nullptr);
  }

  // Fusion.
  Mat<Scalar> fuse_in, fuse_out;
  if (social) {
    Mat<Scalar> s(kSocialDim, bs);
    for (Eigen::Index j = 0; j < bs; ++j) {
      s(0, j) = static_cast<Scalar>(batch[j]->social.politeness);
      s(1, j) = static_cast<Scalar>(batch[j]->social.positivity);
    }
    fuse_batch(model, s, h, c, backward ? &fuse_in : nullptr, backward ? &fuse_out : nullptr);
  }

  // Decoder.
  const size_t steps = tgt_len - 1;
  std::vector<typename K::StepCache> dec_cache(backward ? steps : 0);
  std::vector<Mat<Scalar>> dec_h(backward ? steps : 0), dlogits(backward ? steps : 0);
  std::vector<double> losses(bs, 0.0);
  std::vector<int32_t> y(bs);
  for (size_t t = 0; t < steps; ++t) {
    for (Eigen::Index j = 0; j < bs; ++j) {
      const auto& tg = batch[j]->target;
      in[j] = t + 1 < tg.size() ? tg[t] : Vocab::kPad;
      y[j] = t + 1 < tg.size() ? tg[t + 1] : Vocab::kPad;
    }
    K::lstm_step(model.param(kDecW), model.param(kDecB), model.param(kEmbedding), in, h, c,
                 nullptr, backward ? &dec_cache[t] : nullptr);
    Mat<Scalar> logits = model.param(kOutW) * h;
    logits.colwise() += model.param(kOutB).col(0);
    if (backward) {
      dlogits[t].resize(logits.rows(), logits.cols());
      dec_h[t] = h;
    }
    K::softmax_xent(logits, y, losses, weight, backward ? &dlogits[t] : nullptr);
  }
  for (Eigen::Index j = 0; j < bs; ++j) {
    result.sum += losses[j];
    result.per_example.push_back(losses[j] /
                                 static_cast<double>(batch[j]->target.size() - 1));
  }
  if (!backward) return result;

  auto& g = *grads;
  g.resize(model.params().size());
  for (size_t k = 0; k < g.size(); ++k) {
    g[k].setZero(model.params()[k].rows(), model.params()[k].cols());
  }
  Mat<Scalar> dh = Mat<Scalar>::Zero(hd, bs), dc = Mat<Scalar>::Zero(hd, bs);
  for (size_t t = steps; t-- > 0;) {
    g[kOutW].noalias() += dlogits[t] * dec_h[t].transpose();
    g[kOutB].col(0) += dlogits[t].rowwise().sum();
    dh.noalias() += model.param(kOutW).transpose() * dlogits[t];
    K::lstm_step_backward(model.param(kDecW), dec_cache[t], dh, dc, g[kDecW], g[kDecB],
                          g[kEmbedding]);
  }
  if (social) {
    Mat<Scalar> du(2 * hd, bs);
    du.topRows(hd) = dh;
    du.bottomRows(hd) = dc;
    const Mat<Scalar> da =
        (du.array() * (Scalar(1) - fuse_out.array() * fuse_out.array())).matrix();
    g[kFuseW].noalias() += da * fuse_in.transpose();
    g[kFuseB].col(0) += da.rowwise().sum();
    const Mat<Scalar> din = model.param(kFuseW).transpose() * da;
    dh = din.topRows(hd);
    dc = din.middleRows(hd, hd);
  }
  for (size_t t = src_len; t-- > 0;) {
    K::lstm_step_backward(model.param(kEncW), enc_cache[t], dh, dc, g[kEncW], g[kEncB],
                          g[kEmbedding]);
  }
  return result;
}

template <typename Scalar>
double dataset_loss(const Seq2Seq<Scalar>& model, const std::vector<Example>& data,
                    int batch_size) {
  if (data.empty()) throw PreconditionError("dataset_loss: empty data set");
  double sum = 0.0;
  size_t tokens = 0;
  std::vector<const Example*> batch;
  for (size_t i = 0; i < data.size(); i += static_cast<size_t>(batch_size)) {
    batch.clear();
    for (size_t j = i; j < std::min(data.size(), i + static_cast<size_t>(batch_size)); ++j) {
      batch.push_back(&data[j]);
    }
    const BatchLoss l = batch_loss(model, batch);
    sum += l.sum;
    tokens += l.tokens;
  }
  return sum / static_cast<double>(tokens);
}

// ---- training --------------------------------------------------------------------

void TrainConfig::validate() const {
  if (!(learning_rate > 0) || batch_size < 1 || max_epochs < 1 || patience < 1 ||
      !(clip_norm > 0) || !(init_scale > 0)) {
    throw PreconditionError(
        "train config: learning_rate, batch_size, max_epochs, clip_norm and "
        "init_scale must be positive and patience >= 1");
  }
}

template <typename Scalar>
TrainResult train(Seq2Seq<Scalar>& model, const std::vector<Example>& train_set,
                  const std::vector<Example>& validation_set, const TrainConfig& config,
                  const std::function<void(const EpochLog&)>& log) {
  config.validate();
  if (train_set.empty()) throw PreconditionError("train: training set is empty");
  if (validation_set.empty()) throw PreconditionError("train: validation set is empty");
  model.init_uniform(config.init_scale, config.seed);
  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<size_t> order(train_set.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result;
  std::vector<Mat<Scalar>> grads;
  std::vector<Mat<Scalar>> best = model.params();
  result.best_val_loss = std::numeric_limits<double>::infinity();
  int stale = 0;
  const Scalar lr = static_cast<Scalar>(config.learning_rate);
  std::vector<const Example*> batch;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    rng.shuffle(std::span<size_t>(order));
    double sum = 0.0;
    size_t tokens = 0;
    for (size_t i = 0, b = 0; i < order.size(); i += config.batch_size, ++b) {
      batch.clear();
      for (size_t j = i; j < std::min(order.size(), i + config.batch_size); ++j) {
        batch.push_back(&train_set[order[j]]);
      }
      const BatchLoss l = batch_loss(model, batch, &grads);
      if (!std::isfinite(l.sum)) {
        throw TrainingError("training diverged: non-finite loss at epoch " +
                            std::to_string(epoch) + ", batch " + std::to_string(b) +
                            " (learning rate " + std::to_string(config.learning_rate) + ")");
      }
      sum += l.sum;
      tokens += l.tokens;
      double norm2 = 0.0;
      for (const auto& g : grads) norm2 += static_cast<double>(g.squaredNorm());
      const double norm = std::sqrt(norm2);
      if (!std::isfinite(norm)) {
        throw TrainingError("training diverged: non-finite gradient at epoch " +
                            std::to_string(epoch) + ", batch " + std::to_string(b));
      }
      const Scalar scale =
          norm > config.clip_norm ? static_cast<Scalar>(config.clip_norm / norm) : Scalar(1);
      auto& params = model.params();
      for (size_t k = 0; k < params.size(); ++k) params[k] -= (lr * scale) * grads[k];
    }
    const double train_loss = sum / static_cast<double>(tokens);
    const double val_loss = dataset_loss(model, validation_set);
    if (!std::isfinite(val_loss)) {
      throw TrainingError("training diverged: non-finite validation loss at epoch " +
                          std::to_string(epoch));
    }
    result.train_curve.push_back(train_loss);
    result.val_curve.push_back(val_loss);
    if (val_loss < result.best_val_loss) {
      result.best_val_loss = val_loss;
      result.best_epoch = epoch;
      best = model.params();
      stale = 0;
    } else {
      ++stale;
    }
    if (log) {
      const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
      log({epoch, train_loss, val_loss, dt.count()});
    }
    if (stale >= config.patience) break;
    if (config.target_train_loss > 0 && train_loss < config.target_train_loss) break;
  }
  model.params() = std::move(best);
  return result;
}

// ---- generation ------------------------------------------------------------------

template <typename Scalar>
TokenIds generate(const Seq2Seq<Scalar>& model, const TokenIds& source,
                  const std::optional<SocialVector>& social, const GenerateOptions& options) {
  if (!model.all_finite()) throw PreconditionError("generate: model has non-finite parameters");
  if (options.max_len < 1 || options.beam_width < 1) {
    throw PreconditionError("generate: max_len and beam_width must be positive");
  }
  const auto init = initial_decoder_state(model, source, social);
  using K = Kernels<Scalar>;
  const Scalar neg_inf = -std::numeric_limits<Scalar>::infinity();

  auto step = [&](int32_t token, Mat<Scalar>& h, Mat<Scalar>& c) {
    std::vector<int32_t> in{token};
    K::lstm_step(model.param(kDecW), model.param(kDecB), model.param(kEmbedding), in, h, c,
                 nullptr, nullptr);
    Mat<Scalar> logits = model.param(kOutW) * h + model.param(kOutB);
    logits(Vocab::kPad, 0) = neg_inf;
    logits(Vocab::kSos, 0) = neg_inf;
    return logits;
  };

  if (options.beam_width == 1) {
    TokenIds out;
    Mat<Scalar> h = init.h, c = init.c;
    int32_t token = Vocab::kSos;
    for (int t = 0; t < options.max_len; ++t) {
      const Mat<Scalar> logits = step(token, h, c);
      Eigen::Index best = 0;
      logits.col(0).maxCoeff(&best);
      token = static_cast<int32_t>(best);
      if (token == Vocab::kEos) break;
      out.push_back(token);
    }
    return out;
  }

  struct Beam {
    TokenIds ids;
    double logp;
    Mat<Scalar> h, c;
  };
  std::vector<Beam> alive{{{}, 0.0, init.h, init.c}};
  std::vector<std::pair<double, TokenIds>> done;
  const size_t width = static_cast<size_t>(options.beam_width);
  for (int t = 0; t < options.max_len && !alive.empty(); ++t) {
    struct Cand {
      double logp;
      size_t beam;
      int32_t token;
    };
    std::vector<Cand> cands;
    std::vector<Mat<Scalar>> hs, cs;
    for (size_t b = 0; b < alive.size(); ++b) {
      Mat<Scalar> h = alive[b].h, c = alive[b].c;
      const int32_t prev = alive[b].ids.empty() ? Vocab::kSos : alive[b].ids.back();
      Mat<Scalar> logits = step(prev, h, c);
      const Scalar mx = logits.maxCoeff();
      const double lse = static_cast<double>(mx) +
                         std::log(static_cast<double>((logits.array() - mx).exp().sum()));
      for (Eigen::Index v = 0; v < logits.rows(); ++v) {
        if (v == Vocab::kPad || v == Vocab::kSos) continue;
        cands.push_back({alive[b].logp + static_cast<double>(logits(v, 0)) - lse, b,
                         static_cast<int32_t>(v)});
      }
      hs.push_back(std::move(h));
      cs.push_back(std::move(c));
    }
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Cand& a, const Cand& b) { return a.logp > b.logp; });
    std::vector<Beam> next;
    for (const Cand& cd : cands) {
      if (next.size() >= width) break;
      TokenIds ids = alive[cd.beam].ids;
      if (cd.token == Vocab::kEos) {
        done.emplace_back(cd.logp / static_cast<double>(ids.size() + 1), ids);
        continue;
      }
      ids.push_back(cd.token);
      next.push_back({std::move(ids), cd.logp, hs[cd.beam], cs[cd.beam]});
    }
    alive = std::move(next);
    if (done.size() >= width) break;
  }
  for (const auto& b : alive) {
    done.emplace_back(b.logp / static_cast<double>(b.ids.size() + 1), b.ids);
  }
  auto best = std::max_element(done.begin(), done.end(), [](const auto& a, const auto& b) {
    return a.first < b.first;
  });
  return best->second;
}

// ---- gradient check --------------------------------------------------------------

double gradient_check(const Seq2Seq<double>& model, const std::vector<Example>& sample,
                      const GradientCheckOptions& options) {
  if (sample.empty()) throw PreconditionError("gradient_check: empty sample");
  std::vector<const Example*> batch;
  std::set<int32_t> used;
  for (const auto& e : sample) {
    batch.push_back(&e);
    for (int32_t id : e.source) used.insert(id);
    for (size_t t = 0; t + 1 < e.target.size(); ++t) used.insert(e.target[t]);
  }
  used.erase(Vocab::kPad);
  const std::vector<int32_t> used_tokens(used.begin(), used.end());

  Seq2Seq<double> work = model;
  std::vector<Eigen::MatrixXd> grads;
  batch_loss(work, batch, &grads);

  Rng rng(options.seed);
  const size_t groups = work.params().size();
  const size_t per_group = (static_cast<size_t>(options.num_params) + groups - 1) / groups;
  double worst = 0.0;
  for (size_t k = 0; k < groups; ++k) {
    Eigen::MatrixXd& p = work.params()[k];
    for (size_t s = 0; s < per_group; ++s) {
      Eigen::Index r = static_cast<Eigen::Index>(rng.below(static_cast<uint64_t>(p.rows())));
      Eigen::Index col;
      if (k == kEmbedding) {
        col = used_tokens[rng.below(used_tokens.size())];
      } else {
        col = static_cast<Eigen::Index>(rng.below(static_cast<uint64_t>(p.cols())));
      }
      const double orig = p(r, col);
      const double h = options.epsilon;
      auto at = [&](double delta) {
        p(r, col) = orig + delta;
        return batch_loss(work, batch).mean();
      };
      const double numeric = (at(-2 * h) - 8 * at(-h) + 8 * at(h) - at(2 * h)) / (12 * h);
      p(r, col) = orig;
      const double analytic = grads[k](r, col);
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
      worst = std::max(worst, std::abs(analytic - numeric) / denom);
    }
  }
  return worst;
}

// ---- checkpoints -----------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'S', 'D', 'L', 'C', 'K', 'P', 'T', '\0'};
constexpr uint32_t kCheckpointVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw FormatError("checkpoint: truncated file");
  return v;
}

}  // namespace

template <typename Scalar>
void save_checkpoint(std::ostream& out, const Seq2Seq<Scalar>& model,
                     const CheckpointInfo& info) {
  out.write(kMagic, sizeof(kMagic));
  put<uint32_t>(out, kCheckpointVersion);
  put<uint32_t>(out, sizeof(Scalar));
  put<uint32_t>(out, model.variant() == Variant::kLexical ? 0 : 1);
  put<uint32_t>(out, static_cast<uint32_t>(model.vocab_size()));
  put<uint32_t>(out, static_cast<uint32_t>(model.dims().embedding));
  put<uint32_t>(out, static_cast<uint32_t>(model.dims().hidden));
  put<uint32_t>(out, kSocialDim);
  put<uint64_t>(out, info.split_fingerprint);
  put<uint64_t>(out, info.seed);
  for (size_t i = 0; i < model.vocab().size(); ++i) {
    const std::string& t = model.vocab().token(static_cast<int32_t>(i));
    put<uint32_t>(out, static_cast<uint32_t>(t.size()));
    out.write(t.data(), static_cast<std::streamsize>(t.size()));
  }
  for (const auto& p : model.params()) {
    put<uint32_t>(out, static_cast<uint32_t>(p.rows()));
    put<uint32_t>(out, static_cast<uint32_t>(p.cols()));
    out.write(reinterpret_cast<const char*>(p.data()),
              static_cast<std::streamsize>(sizeof(Scalar) * p.size()));
  }
  if (!out) throw Error("checkpoint: write failed");
}

template <typename Scalar>
Seq2Seq<Scalar> load_checkpoint(std::istream& in, CheckpointInfo* info) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("checkpoint: bad magic");
  }
  if (get<uint32_t>(in) != kCheckpointVersion) throw FormatError("checkpoint: unsupported version");
  if (get<uint32_t>(in) != sizeof(Scalar)) {
    throw FormatError("checkpoint: scalar width does not match the requested model type");
  }
  const uint32_t variant = get<uint32_t>(in);
  if (variant > 1) throw FormatError("checkpoint: bad variant tag");
  const uint32_t vsize = get<uint32_t>(in);
  ModelDims dims;
  dims.embedding = static_cast<int>(get<uint32_t>(in));
  dims.hidden = static_cast<int>(get<uint32_t>(in));
  if (get<uint32_t>(in) != kSocialDim) throw FormatError("checkpoint: bad social dimension");
  CheckpointInfo ci;
  ci.split_fingerprint = get<uint64_t>(in);
  ci.seed = get<uint64_t>(in);
  Vocab vocab;
  for (uint32_t i = 0; i < vsize; ++i) {
    const uint32_t len = get<uint32_t>(in);
    if (len > (1u << 20)) throw FormatError("checkpoint: implausible token length");
    std::string t(len, '\0');
    in.read(t.data(), len);
    if (!in) throw FormatError("checkpoint: truncated vocabulary");
    if (vocab.add(t) != static_cast<int32_t>(i)) {
      throw FormatError("checkpoint: vocabulary order does not match reserved ids");
    }
  }
  Seq2Seq<Scalar> model(variant == 0 ? Variant::kLexical : Variant::kLexicalSocial,
                        std::move(vocab), dims);
  for (auto& p : model.params()) {
    const uint32_t rows = get<uint32_t>(in);
    const uint32_t cols = get<uint32_t>(in);
    if (rows != p.rows() || cols != p.cols()) {
      throw FormatError("checkpoint: tensor shape mismatch");
    }
    in.read(reinterpret_cast<char*>(p.data()),
            static_cast<std::streamsize>(sizeof(Scalar) * p.size()));
    if (!in) throw FormatError("checkpoint: truncated tensor data");
  }
  if (info) *info = ci;
  return model;
}

template <typename To, typename From>
Seq2Seq<To> convert_model(const Seq2Seq<From>& model) {
  Seq2Seq<To> out(model.variant(), model.vocab(), model.dims());
  for (size_t k = 0; k < model.params().size(); ++k) {
    out.params()[k] = model.params()[k].template cast<To>();
  }
  return out;
}

#define SDL_INSTANTIATE(S)                                                              \
  template class Seq2Seq<S>;                                                            \
  template EncoderState<S> encode(const Seq2Seq<S>&, const TokenIds&);                  \
  template EncoderState<S> fuse_social(const Seq2Seq<S>&, const EncoderState<S>&,       \
                                       const SocialVector&);                            \
  template EncoderState<S> initial_decoder_state(const Seq2Seq<S>&, const TokenIds&,    \
                                                 const std::optional<SocialVector>&);   \
  template double decode_loss(const Seq2Seq<S>&, const EncoderState<S>&,                \
                              const TokenIds&);                                         \
  template BatchLoss batch_loss(const Seq2Seq<S>&, const std::vector<const Example*>&,  \
                                std::vector<Seq2Seq<S>::Mat>*);                         \
  template double dataset_loss(const Seq2Seq<S>&, const std::vector<Example>&, int);    \
  template TrainResult train(Seq2Seq<S>&, const std::vector<Example>&,                  \
                             const std::vector<Example>&, const TrainConfig&,           \
                             const std::function<void(const EpochLog&)>&);              \
  template TokenIds generate(const Seq2Seq<S>&, const TokenIds&,                        \
                             const std::optional<SocialVector>&, const GenerateOptions&); \
  template void save_checkpoint(std::ostream&, const Seq2Seq<S>&, const CheckpointInfo&); \
  template Seq2Seq<S> load_checkpoint(std::istream&, CheckpointInfo*);

SDL_INSTANTIATE(float)
SDL_INSTANTIATE(double)
#undef SDL_INSTANTIATE

template Seq2Seq<double> convert_model(const Seq2Seq<float>&);
template Seq2Seq<float> convert_model(const Seq2Seq<double>&);
template Seq2Seq<float> convert_model(const Seq2Seq<float>&);
template Seq2Seq<double> convert_model(const Seq2Seq<double>&);

}  // namespace sdl::neural
