#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cctx/encoder.hpp"
#include "cctx/optimizer.hpp"
#include "cctx/tape.hpp"
#include "cctx/vocab.hpp"

namespace cctx {

struct TrainConfig {
  std::size_t k_noise = 10;
  double noise_power = 0.75;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::Adam;
  std::size_t batch_sentences = 16;
  std::size_t epochs = 1;
  double grad_clip = 5.0;
  std::uint64_t seed = 42;
  Precision precision = Precision::F64;
  std::size_t min_count = 5;
  std::size_t log_every = 100;
  std::size_t checkpoint_every = 0;  // steps; 0 writes only the final checkpoint
  std::size_t threads = 1;
  std::size_t max_word_len = 64;

  void validate() const;
};

// Everything needed to continue training exactly where it stopped. The
// per-step randomness (noise draws, epoch order) is derived from
// (config.seed, epoch, step, slot) counters, so the progress fields below are
// the complete rng state.
struct Checkpoint {
  EncoderParams params;  // includes the output projection
  OptimizerState opt;
  CharVocab chars;
  TrainVocab words;
  TrainConfig config;
  std::uint64_t step = 0;
  std::uint64_t epoch = 0;
  std::uint64_t pos_in_epoch = 0;  // sentences consumed in the current epoch
};

// k i.i.d. draws from the noise distribution. The true target is not
// excluded from the draw.
std::vector<int> sample_noise(const NoiseDistribution& dist, std::size_t k, Rng& rng);

// NCE loss on the tape:
//   s(w) = ctx . out_weight[w] + out_bias[w]
//   loss = -log sig(s(t) - log(k Pn(t))) - sum_w log sig(-(s(w) - log(k Pn(w))))
Val nce_loss_taped(Tape& tape, Val out_weight, Val out_bias, Val context_emb, int target,
                   std::span<const int> noise_ids, const NoiseDistribution& dist);

// Same loss evaluated against frozen parameters, for callers outside a
// training pass.
double nce_loss(std::span<const double> context_emb, int target, std::span<const int> noise_ids,
                const EncoderParams& params, const NoiseDistribution& dist);

// Sum of per-position NCE losses for one sentence; noise_per_pos holds the
// fixed draws, one vector of k ids per position.
Val sentence_nce_loss_taped(Tape& tape, const EncoderVals& enc, const EncodedSentence& sent,
                            const std::vector<std::vector<int>>& noise_per_pos,
                            const NoiseDistribution& dist);

struct StepResult {
  double mean_loss = 0.0;
  double grad_norm = 0.0;  // before clipping
  std::size_t targets = 0;
};

// One optimizer update on the mean NCE loss over all positions of the batch.
// Per-sentence passes run on independent tapes (optionally in parallel);
// gradients are reduced in batch order, so the result does not depend on the
// thread count. Noise draws come from mix_seed(seed, step_index, slot).
StepResult train_step(std::span<const EncodedSentence> batch, EncoderParams& params,
                      OptimizerState& opt, const TrainConfig& cfg, const NoiseDistribution& dist,
                      std::uint64_t step_index);

// Full training loop driving train_step over shuffled epochs. The final state
// goes to checkpoint_path; every checkpoint_every steps the current state is
// written to checkpoint_path + ".periodic" (possibly mid-epoch). Progress
// lines "step<TAB>mean_loss<TAB>wall_ms" go to *log.
Checkpoint train(const std::vector<Sentence>& corpus, const TrainConfig& cfg,
                 const EncoderConfig& enc_cfg, const std::string& checkpoint_path,
                 std::ostream* log = nullptr);

// Continues a loaded checkpoint over the same corpus. At equal precision the
// continuation matches the uninterrupted run step for step.
Checkpoint resume_train(Checkpoint ck, const std::vector<Sentence>& corpus,
                        const std::string& checkpoint_path, std::ostream* log = nullptr);

}  // namespace cctx
