#pragma once

#include <span>
#include <string>
#include <vector>

#include "cctx/encoder.hpp"
#include "cctx/training.hpp"

namespace cctx {

// u.v / (|u||v|); a zero-norm operand yields 0 (with a one-time warning on
// stderr) rather than NaN.
double cosine(std::span<const double> u, std::span<const double> v);

struct NeighborResult {
  std::string query;
  std::vector<std::pair<std::string, double>> neighbors;  // similarity descending
};

// Encodes the query and every lexicon word with the character-level encoder
// and ranks by cosine similarity. Exact string matches of the query are
// excluded; ties break lexicographically on the surface form.
NeighborResult nearest_words(const std::string& query_utf8,
                             std::span<const std::string> lexicon_utf8, std::size_t k,
                             const Encoder& encoder, const CharVocab& chars);

struct MarkedContext {
  Sentence sentence;
  std::size_t position = 0;
};

struct RankedContext {
  std::size_t index = 0;  // into the candidates list
  double similarity = 0.0;
};

// Ranks candidate contexts by cosine similarity of their context embeddings
// to the query's. The word at each marked position never influences its own
// context embedding, so ranking is invariant to it.
std::vector<RankedContext> rank_contexts(const MarkedContext& query,
                                         std::span<const MarkedContext> candidates,
                                         const Encoder& encoder, const CharVocab& chars);

// ---------------------------------------------------------------------------
// chunking probe

struct ChunkSpan {
  std::size_t begin = 0;  // token range [begin, end)
  std::size_t end = 0;
  std::string type;
  bool operator==(const ChunkSpan&) const = default;
};

// conlleval-style BIO chunk extraction: B-X always starts a chunk; I-X starts
// one when not preceded by a chunk of type X.
std::vector<ChunkSpan> extract_chunks(std::span<const std::string> tags);

struct F1Score {
  std::size_t correct = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;

  double precision() const;
  double recall() const;
  double f1_percent() const;  // 0 when undefined
};

struct ChunkProbeConfig {
  enum class Features { WordOnly, ContextOnly, Both, TaskTrained };
  Features features = Features::Both;
  std::size_t proj_dim = 600;
  std::size_t tagger_hidden = 250;  // per direction; tagger outputs 2x this
  double learning_rate = 1e-3;
  double weight_decay = 1e-3;
  double grad_clip = 5.0;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  EncoderConfig task_encoder;  // architecture for Features::TaskTrained
};

struct ChunkReport {
  F1Score chunks;
  double token_accuracy = 0.0;
  std::size_t classes = 0;
  std::vector<std::string> tag_set;
};

// Trains a Bi-LSTM tagger on frozen embedding features (or, in TaskTrained
// mode, on embeddings learned from scratch with the task) and reports
// chunk-level F1 on the test split. encoder may be null only for TaskTrained.
ChunkReport chunk_probe(std::span<const Sentence> train, std::span<const Sentence> test,
                        const Encoder* encoder, const CharVocab& chars,
                        const ChunkProbeConfig& cfg);

// ---------------------------------------------------------------------------
// typo robustness probe

// Classification task over context embeddings only: predict a label for the
// marked position of each sentence.
struct ContextClassifyTask {
  std::vector<MarkedContext> train, test;
  std::vector<int> train_labels, test_labels;
  std::size_t n_classes = 0;
};

struct TypoProbeConfig {
  double learning_rate = 0.05;
  std::size_t epochs = 100;
  double weight_decay = 0.0;
};

struct TypoPoint {
  double p = 0.0;
  double mean = 0.0;
  double std_error = 0.0;
  std::vector<double> per_seed;
};

struct TypoCurve {
  std::vector<TypoPoint> points;
};

// For each noise probability p, perturbs the test inputs with perturb_typos,
// evaluates a softmax classifier trained per seed on unperturbed features and
// averages accuracy over seeds. Training data is never perturbed; the p = 0
// point is the direct evaluation, bit for bit.
TypoCurve typo_eval(const ContextClassifyTask& task, const Encoder& encoder,
                    const CharVocab& chars, std::span<const double> p_grid,
                    std::span<const std::uint64_t> seeds, const TypoProbeConfig& cfg = {});

}  // namespace cctx
