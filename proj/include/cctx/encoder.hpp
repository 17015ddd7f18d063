#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cctx/lstm.hpp"
#include "cctx/rng.hpp"
#include "cctx/tape.hpp"
#include "cctx/vocab.hpp"

namespace cctx {

struct EncoderConfig {
  std::size_t d_char = 50;     // character embedding size
  std::size_t h_word = 500;    // char-level LSTM hidden, per direction; WE dim = 2*h_word
  std::size_t h_ctx = 300;     // context-level LSTM hidden, per direction
  std::size_t d_hidden = 1200; // MLP hidden layer
  std::size_t d_ctx = 600;     // context embedding size

  std::size_t word_dim() const { return 2 * h_word; }
};

// All learnable weights. The hierarchy: character rows from char_table feed
// the char-level Bi-LSTM (word embeddings); word embeddings feed the
// context-level Bi-LSTM whose two final states go through the MLP (context
// embeddings). The output projection exists only while training and scores
// context embeddings against the training vocabulary.
struct EncoderParams {
  EncoderConfig cfg;
  std::size_t char_count = 0;  // C
  std::size_t vocab_count = 0; // N, 0 when exported for inference

  Tensor2 char_table;  // C x d_char
  LstmCellParams char_fwd, char_bwd;
  LstmCellParams ctx_fwd, ctx_bwd;
  Tensor2 mlp_w1;  // 2*h_ctx x d_hidden
  Tensor2 mlp_b1;  // 1 x d_hidden
  Tensor2 mlp_w2;  // d_hidden x d_ctx
  Tensor2 mlp_b2;  // 1 x d_ctx
  Tensor2 out_weight;  // N x d_ctx
  Tensor2 out_bias;    // N x 1

  static EncoderParams init(const EncoderConfig& cfg, std::size_t char_count,
                            std::size_t vocab_count, Rng& rng);

  bool has_output() const { return out_weight.rows > 0; }
  void drop_output();
  std::size_t encoder_param_count() const;  // excludes output projection
  std::size_t output_param_count() const;

  // Deterministic (name, tensor) order shared by serialization, gradient
  // accumulation and optimizer state.
  std::vector<std::pair<std::string, Tensor2*>> named_params();
  std::vector<std::pair<std::string, const Tensor2*>> named_params() const;
};

// Parameters leased onto one tape for a pass.
struct EncoderVals {
  Val char_table;
  LstmCellVals char_fwd, char_bwd, ctx_fwd, ctx_bwd;
  Val mlp_w1, mlp_b1, mlp_w2, mlp_b2;
  Val out_weight, out_bias;  // invalid handles when not leased
  const EncoderConfig* cfg = nullptr;
};

enum class LeaseParts { WordOnly, Encoder, WithOutput };

EncoderVals lease_encoder(Tape& tape, const EncoderParams& p,
                          LeaseParts parts = LeaseParts::Encoder);

// The leased Vals in named_params() order (used to read gradients back).
std::vector<Val> leased_vals(const EncoderVals& v, LeaseParts parts);

// Character embedding rows for one word, one 1 x d_char row per character.
std::vector<Val> embed_char_rows(Tape& tape, const EncoderVals& enc, std::span<const int> chars);

// Same lookup as a single |word| x d_char matrix (the documented surface).
Tensor2 embed_chars(const EncoderParams& p, std::span<const int> chars);

// Word embedding: concatenated final states of the char-level Bi-LSTM.
Val encode_word_taped(Tape& tape, const EncoderVals& enc, std::span<const int> chars);

// Word embeddings for every word of a sentence.
std::vector<Val> encode_words_taped(Tape& tape, const EncoderVals& enc,
                                    const EncodedSentence& sent);

// Context embedding at `position` from precomputed word embeddings, running
// only the needed left prefix and right suffix.
Val encode_context_at_taped(Tape& tape, const EncoderVals& enc, std::span<const Val> word_embs,
                            std::size_t position);

// Context embeddings for all positions with one forward and one backward
// sweep (O(n) cell steps per direction).
std::vector<Val> encode_contexts_taped(Tape& tape, const EncoderVals& enc,
                                       std::span<const Val> word_embs);

struct EmbeddingPair {
  std::size_t position = 0;
  std::vector<double> word;     // 2*h_word
  std::vector<double> context;  // d_ctx
};

// Inference wrapper over frozen parameters. Methods are const and safe to
// call concurrently; each builds its own tape.
class Encoder {
 public:
  explicit Encoder(EncoderParams params) : params_(std::move(params)) {}

  const EncoderParams& params() const { return params_; }
  const EncoderConfig& config() const { return params_.cfg; }

  std::vector<double> encode_word(std::span<const int> chars) const;
  std::vector<double> encode_context(const EncodedSentence& sent, std::size_t position) const;
  std::vector<EmbeddingPair> encode_sentence(const EncodedSentence& sent) const;

  // Reusable batch for encoding many single words against one parameter
  // lease (nearest-neighbour queries over a lexicon).
  class WordBatch {
   public:
    explicit WordBatch(const EncoderParams& p);
    std::vector<double> encode(std::span<const int> chars);

   private:
    Tape tape_;
    EncoderVals vals_;
    std::size_t mark_;
  };
  WordBatch word_batch() const { return WordBatch(params_); }

 private:
  EncoderParams params_;
};

}  // namespace cctx
