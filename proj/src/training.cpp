#include "cctx/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "cctx/model_io.hpp"

namespace cctx {

namespace {

constexpr std::uint64_t kNoiseStream = 0x6e6f697365ULL;    // "noise"
constexpr std::uint64_t kShuffleStream = 0x73687566ULL;    // "shuf"

}  // namespace

void TrainConfig::validate() const {
  if (k_noise < 1) throw std::invalid_argument("TrainConfig: k_noise must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
  if (!(grad_clip > 0.0)) throw std::invalid_argument("TrainConfig: grad_clip must be > 0");
  if (batch_sentences < 1) throw std::invalid_argument("TrainConfig: batch_sentences must be >= 1");
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
}

std::vector<int> sample_noise(const NoiseDistribution& dist, std::size_t k, Rng& rng) {
  if (k < 1) throw std::invalid_argument("sample_noise: k must be >= 1");
  std::vector<int> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = dist.sample(rng);
  return out;
}

namespace {

Val score_taped(Tape& tape, Val out_weight, Val out_bias, Val ctx, int word) {
  Val row = tape.gather_row(out_weight, static_cast<std::size_t>(word));
  Val dot = tape.sum_all(tape.mul(ctx, row));
  Val bias = tape.gather_row(out_bias, static_cast<std::size_t>(word));
  return tape.add(dot, bias);
}

}  // namespace

Val nce_loss_taped(Tape& tape, Val out_weight, Val out_bias, Val context_emb, int target,
                   std::span<const int> noise_ids, const NoiseDistribution& dist) {
  const auto n = static_cast<int>(dist.size());
  if (target < 0 || target >= n) {
    throw std::out_of_range("nce_loss: target id " + std::to_string(target) + " out of range");
  }
  const double k = static_cast<double>(noise_ids.size());
  Val a = tape.add_scalar(score_taped(tape, out_weight, out_bias, context_emb, target),
                          -std::log(k * dist.prob(static_cast<std::size_t>(target))));
  Val loss = tape.scale(tape.log_sigmoid(a), -1.0);
  for (int w : noise_ids) {
    if (w < 0 || w >= n) {
      throw std::out_of_range("nce_loss: noise id " + std::to_string(w) + " out of range");
    }
    Val aw = tape.add_scalar(score_taped(tape, out_weight, out_bias, context_emb, w),
                             -std::log(k * dist.prob(static_cast<std::size_t>(w))));
    loss = tape.add(loss, tape.scale(tape.log_sigmoid(tape.scale(aw, -1.0)), -1.0));
  }
  return loss;
}

double nce_loss(std::span<const double> context_emb, int target, std::span<const int> noise_ids,
                const EncoderParams& params, const NoiseDistribution& dist) {
  if (!params.has_output()) throw std::invalid_argument("nce_loss: model has no output projection");
  Tape tape;
  Val ctx = tape.input(Tensor2(1, context_emb.size(),
                               std::vector<double>(context_emb.begin(), context_emb.end())));
  Val w = tape.param(params.out_weight);
  Val b = tape.param(params.out_bias);
  return tape.scalar(nce_loss_taped(tape, w, b, ctx, target, noise_ids, dist));
}

Val sentence_nce_loss_taped(Tape& tape, const EncoderVals& enc, const EncodedSentence& sent,
                            const std::vector<std::vector<int>>& noise_per_pos,
                            const NoiseDistribution& dist) {
  if (sent.size() == 0) throw std::invalid_argument("sentence_nce_loss: empty sentence");
  if (sent.targets.size() != sent.size() || noise_per_pos.size() != sent.size()) {
    throw std::invalid_argument("sentence_nce_loss: targets/noise do not cover the sentence");
  }
  std::vector<Val> words = encode_words_taped(tape, enc, sent);
  std::vector<Val> contexts = encode_contexts_taped(tape, enc, words);
  Val total;
  for (std::size_t i = 0; i < sent.size(); ++i) {
    Val li = nce_loss_taped(tape, enc.out_weight, enc.out_bias, contexts[i], sent.targets[i],
                            noise_per_pos[i], dist);
    total = i == 0 ? li : tape.add(total, li);
  }
  return total;
}

namespace {

struct SentencePass {
  std::vector<Tensor2> grads;
  double loss_sum = 0.0;
  std::size_t targets = 0;
};

SentencePass run_sentence(const EncodedSentence& sent, const EncoderParams& params,
                          const TrainConfig& cfg, const NoiseDistribution& dist,
                          std::uint64_t step_index, std::size_t slot) {
  Rng noise_rng(mix_seed(cfg.seed ^ kNoiseStream, step_index, slot));
  std::vector<std::vector<int>> noise(sent.size());
  for (auto& draws : noise) draws = sample_noise(dist, cfg.k_noise, noise_rng);

  Tape tape(cfg.precision);
  EncoderVals enc = lease_encoder(tape, params, LeaseParts::WithOutput);
  Val loss = sentence_nce_loss_taped(tape, enc, sent, noise, dist);

  SentencePass out;
  out.loss_sum = tape.scalar(loss);
  out.targets = sent.size();
  if (!std::isfinite(out.loss_sum)) return out;  // caller reports

  tape.backward(loss);
  const std::vector<Val> vals = leased_vals(enc, LeaseParts::WithOutput);
  out.grads.reserve(vals.size());
  for (Val v : vals) out.grads.push_back(tape.grad(v));
  return out;
}

}  // namespace

StepResult train_step(std::span<const EncodedSentence> batch, EncoderParams& params,
                      OptimizerState& opt, const TrainConfig& cfg, const NoiseDistribution& dist,
                      std::uint64_t step_index) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
  if (!params.has_output()) throw std::invalid_argument("train_step: model has no output projection");

  const std::size_t n_threads = std::max<std::size_t>(1, std::min(cfg.threads, batch.size()));
  std::vector<SentencePass> passes(batch.size());
  if (n_threads == 1) {
    for (std::size_t i = 0; i < batch.size(); ++i) {
      passes[i] = run_sentence(batch[i], params, cfg, dist, step_index, i);
    }
  } else {
    std::vector<std::thread> workers;
    workers.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) {
      workers.emplace_back([&, t]() {
        for (std::size_t i = t; i < batch.size(); i += n_threads) {
          passes[i] = run_sentence(batch[i], params, cfg, dist, step_index, i);
        }
      });
    }
    for (std::thread& w : workers) w.join();
  }

  std::vector<std::pair<std::string, Tensor2*>> named = params.named_params();
  std::vector<Tensor2*> param_ptrs;
  param_ptrs.reserve(named.size());
  for (auto& [name, t] : named) param_ptrs.push_back(t);

  // reduce in batch order so the result is independent of thread count
  std::vector<Tensor2> grads;
  grads.reserve(param_ptrs.size());
  for (Tensor2* p : param_ptrs) grads.emplace_back(p->rows, p->cols);
  double loss_sum = 0.0;
  std::size_t targets = 0;
  for (std::size_t i = 0; i < passes.size(); ++i) {
    const SentencePass& sp = passes[i];
    if (!std::isfinite(sp.loss_sum)) {
      throw std::runtime_error("train_step: non-finite loss at batch sentence " +
                               std::to_string(i) + " (step " + std::to_string(step_index) + ")");
    }
    loss_sum += sp.loss_sum;
    targets += sp.targets;
    for (std::size_t g = 0; g < grads.size(); ++g) {
      const Tensor2& src = sp.grads[g];
      Tensor2& dst = grads[g];
      for (std::size_t k = 0; k < dst.numel(); ++k) dst.data[k] += src.data[k];
    }
  }

  const double inv = 1.0 / static_cast<double>(targets);
  for (Tensor2& g : grads) {
    for (double& x : g.data) x *= inv;
  }

  StepResult res;
  res.targets = targets;
  res.mean_loss = loss_sum * inv;
  res.grad_norm = clip_grad_norm(grads, cfg.grad_clip);

  OptimizerConfig ocfg;
  ocfg.kind = cfg.optimizer;
  ocfg.learning_rate = cfg.learning_rate;
  optimizer_update(param_ptrs, grads, opt, ocfg);
  if (cfg.precision == Precision::F32) {
    for (Tensor2* p : param_ptrs) {
      for (double& x : p->data) x = static_cast<double>(static_cast<float>(x));
    }
  }
  return res;
}

namespace {

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint64_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(mix_seed(seed ^ kShuffleStream, epoch));
  rng.shuffle(order);
  return order;
}

Checkpoint run_training(Checkpoint ck, const std::vector<EncodedSentence>& corpus,
                        const std::string& checkpoint_path, std::ostream* log) {
  const TrainConfig& cfg = ck.config;
  cfg.validate();
  if (corpus.empty()) throw std::invalid_argument("train: empty corpus");

  // fail before training if the checkpoint path is unwritable
  {
    std::ofstream probe(checkpoint_path, std::ios::binary | std::ios::app);
    if (!probe) throw std::runtime_error("train: cannot write checkpoint path " + checkpoint_path);
  }

  NoiseDistribution dist = noise_distribution(ck.words, cfg.noise_power);

  using Clock = std::chrono::steady_clock;
  auto window_start = Clock::now();
  double window_loss = 0.0;
  std::size_t window_steps = 0;

  while (ck.epoch < cfg.epochs) {
    const std::vector<std::size_t> order = epoch_order(corpus.size(), cfg.seed, ck.epoch);
    while (ck.pos_in_epoch < corpus.size()) {
      const std::size_t take =
          std::min(cfg.batch_sentences, corpus.size() - static_cast<std::size_t>(ck.pos_in_epoch));
      std::vector<EncodedSentence> batch;
      batch.reserve(take);
      for (std::size_t i = 0; i < take; ++i) {
        batch.push_back(corpus[order[static_cast<std::size_t>(ck.pos_in_epoch) + i]]);
      }
      StepResult res = train_step(batch, ck.params, ck.opt, cfg, dist, ck.step);
      ck.pos_in_epoch += take;
      ++ck.step;

      window_loss += res.mean_loss;
      ++window_steps;
      if (log && cfg.log_every > 0 && ck.step % cfg.log_every == 0) {
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() -
                                                                              window_start);
        (*log) << ck.step << '\t' << window_loss / static_cast<double>(window_steps) << '\t'
               << ms.count() << '\n';
        log->flush();
        window_loss = 0.0;
        window_steps = 0;
        window_start = Clock::now();
      }
      if (cfg.checkpoint_every > 0 && ck.step % cfg.checkpoint_every == 0) {
        save_checkpoint(checkpoint_path + ".periodic", ck);
      }
    }
    ck.pos_in_epoch = 0;
    ++ck.epoch;
  }
  save_checkpoint(checkpoint_path, ck);
  return ck;
}

std::vector<EncodedSentence> encode_corpus(const std::vector<Sentence>& corpus,
                                           const CharVocab& chars, const TrainVocab& words) {
  std::vector<EncodedSentence> out;
  out.reserve(corpus.size());
  for (const Sentence& s : corpus) out.push_back(encode_for_training(s, chars, words));
  return out;
}

}  // namespace

Checkpoint train(const std::vector<Sentence>& corpus, const TrainConfig& cfg,
                 const EncoderConfig& enc_cfg, const std::string& checkpoint_path,
                 std::ostream* log) {
  cfg.validate();
  Vocabs vocabs = build_vocabs(corpus, cfg.min_count);

  Checkpoint ck;
  ck.config = cfg;
  ck.chars = std::move(vocabs.chars);
  ck.words = std::move(vocabs.words);
  Rng init_rng(mix_seed(cfg.seed, 0x696e6974ULL));  // "init"
  ck.params = EncoderParams::init(enc_cfg, static_cast<std::size_t>(ck.chars.size()),
                                  static_cast<std::size_t>(ck.words.size()), init_rng);

  std::vector<std::pair<std::string, Tensor2*>> named = ck.params.named_params();
  std::vector<Tensor2*> ptrs;
  for (auto& [name, t] : named) ptrs.push_back(t);
  ck.opt = OptimizerState::init(cfg.optimizer, ptrs);

  std::vector<EncodedSentence> encoded = encode_corpus(corpus, ck.chars, ck.words);
  return run_training(std::move(ck), encoded, checkpoint_path, log);
}

Checkpoint resume_train(Checkpoint ck, const std::vector<Sentence>& corpus,
                        const std::string& checkpoint_path, std::ostream* log) {
  std::vector<EncodedSentence> encoded = encode_corpus(corpus, ck.chars, ck.words);
  return run_training(std::move(ck), encoded, checkpoint_path, log);
}

}  // namespace cctx
