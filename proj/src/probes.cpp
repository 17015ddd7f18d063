#include "cctx/probes.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <numeric>
#include <set>
#include <stdexcept>

#include "cctx/text.hpp"

namespace cctx {

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw std::invalid_argument("cosine: dimension mismatch, " + std::to_string(u.size()) +
                                " vs " + std::to_string(v.size()));
  }
  double uv = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uv += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) {
    static std::atomic<bool> warned{false};
    if (!warned.exchange(true)) {
      std::cerr << "warning: cosine of a zero vector, returning 0\n";
    }
    return 0.0;
  }
  return uv / (std::sqrt(uu) * std::sqrt(vv));
}

NeighborResult nearest_words(const std::string& query_utf8,
                             std::span<const std::string> lexicon_utf8, std::size_t k,
                             const Encoder& encoder, const CharVocab& chars) {
  if (lexicon_utf8.empty()) throw std::invalid_argument("nearest_words: empty lexicon");
  std::u32string query;
  if (!utf8_decode(query_utf8, query) || query.empty()) {
    throw std::invalid_argument("nearest_words: query is not valid non-empty UTF-8");
  }

  Encoder::WordBatch batch = encoder.word_batch();
  const std::vector<double> qvec = batch.encode(chars.encode(query));

  NeighborResult res;
  res.query = query_utf8;
  std::set<std::string> seen;
  for (const std::string& surface : lexicon_utf8) {
    if (surface == query_utf8 || surface.empty()) continue;
    if (!seen.insert(surface).second) continue;
    std::u32string w;
    if (!utf8_decode(surface, w) || w.empty()) continue;
    const std::vector<double> vec = batch.encode(chars.encode(w));
    res.neighbors.emplace_back(surface, cosine(qvec, vec));
  }
  std::sort(res.neighbors.begin(), res.neighbors.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (res.neighbors.size() > k) res.neighbors.resize(k);
  return res;
}

std::vector<RankedContext> rank_contexts(const MarkedContext& query,
                                         std::span<const MarkedContext> candidates,
                                         const Encoder& encoder, const CharVocab& chars) {
  auto context_of = [&](const MarkedContext& mc) {
    const EncodedSentence enc = encode_chars(mc.sentence, chars);
    return encoder.encode_context(enc, mc.position);
  };
  const std::vector<double> qvec = context_of(query);
  std::vector<RankedContext> out;
  out.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    out.push_back(RankedContext{i, cosine(qvec, context_of(candidates[i]))});
  }
  std::sort(out.begin(), out.end(), [](const RankedContext& a, const RankedContext& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.index < b.index;
  });
  return out;
}

// ---------------------------------------------------------------------------
// chunk extraction and F1

std::vector<ChunkSpan> extract_chunks(std::span<const std::string> tags) {
  std::vector<ChunkSpan> out;
  bool in_chunk = false;
  std::size_t begin = 0;
  std::string type;

  auto close = [&](std::size_t end) {
    if (in_chunk) {
      out.push_back(ChunkSpan{begin, end, type});
      in_chunk = false;
    }
  };

  for (std::size_t i = 0; i < tags.size(); ++i) {
    const std::string& tag = tags[i];
    if (tag.empty() || tag == "O") {
      close(i);
      continue;
    }
    std::string prefix, t;
    const std::size_t dash = tag.find('-');
    if (dash == std::string::npos) {
      prefix = "I";
      t = tag;
    } else {
      prefix = tag.substr(0, dash);
      t = tag.substr(dash + 1);
    }
    const bool starts = prefix == "B" || !in_chunk || t != type;
    if (starts) {
      close(i);
      in_chunk = true;
      begin = i;
      type = t;
    }
  }
  close(tags.size());
  return out;
}

double F1Score::precision() const {
  return predicted == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(predicted);
}

double F1Score::recall() const {
  return gold == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(gold);
}

double F1Score::f1_percent() const {
  const double p = precision();
  const double r = recall();
  if (p + r == 0.0) return 0.0;
  return 100.0 * 2.0 * p * r / (p + r);
}

// ---------------------------------------------------------------------------
// Bi-LSTM tagger over frozen (or task-trained) embedding features

namespace {

struct TaggerParams {
  Tensor2 proj_w, proj_b;
  LstmCellParams fwd, bwd;
  Tensor2 out_w, out_b;

  static TaggerParams init(std::size_t feat_dim, std::size_t proj_dim, std::size_t hidden,
                           std::size_t classes, Rng& rng) {
    TaggerParams t;
    auto affine = [&rng](std::size_t in, std::size_t out) {
      Tensor2 w(in, out);
      const double bound = 1.0 / std::sqrt(static_cast<double>(in));
      for (double& x : w.data) x = rng.uniform(-bound, bound);
      return w;
    };
    t.proj_w = affine(feat_dim, proj_dim);
    t.proj_b = Tensor2(1, proj_dim);
    t.fwd = LstmCellParams::init(proj_dim, hidden, rng);
    t.bwd = LstmCellParams::init(proj_dim, hidden, rng);
    t.out_w = affine(2 * hidden, classes);
    t.out_b = Tensor2(1, classes);
    return t;
  }

  std::vector<Tensor2*> all() {
    return {&proj_w,          &proj_b,          &fwd.w_input, &fwd.w_hidden, &fwd.bias,
            &bwd.w_input,     &bwd.w_hidden,    &bwd.bias,    &out_w,        &out_b};
  }
};

struct TaggerVals {
  Val proj_w, proj_b;
  LstmCellVals fwd, bwd;
  Val out_w, out_b;
};

TaggerVals lease_tagger(Tape& tape, const TaggerParams& p) {
  return TaggerVals{tape.param(p.proj_w), tape.param(p.proj_b), lease_lstm(tape, p.fwd),
                    lease_lstm(tape, p.bwd),  tape.param(p.out_w), tape.param(p.out_b)};
}

std::vector<Val> tagger_vals_list(const TaggerVals& v) {
  return {v.proj_w,        v.proj_b,        v.fwd.w_input, v.fwd.w_hidden, v.fwd.bias,
          v.bwd.w_input,   v.bwd.w_hidden,  v.bwd.bias,    v.out_w,        v.out_b};
}

// per-token class scores for one sentence of feature rows
std::vector<Val> tagger_scores(Tape& tape, const TaggerVals& tg, std::span<const Val> features) {
  std::vector<Val> proj;
  proj.reserve(features.size());
  for (Val f : features) {
    proj.push_back(tape.add(tape.matmul(f, tg.proj_w), tg.proj_b));
  }
  std::vector<Val> fstates = lstm_states(tape, tg.fwd, proj);
  std::vector<Val> rev(proj.rbegin(), proj.rend());
  std::vector<Val> bstates = lstm_states(tape, tg.bwd, rev);
  const std::size_t n = features.size();
  std::vector<Val> scores;
  scores.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Val h = tape.concat_cols(fstates[i], bstates[n - 1 - i]);
    scores.push_back(tape.add(tape.matmul(h, tg.out_w), tg.out_b));
  }
  return scores;
}

Val tagger_loss(Tape& tape, std::span<const Val> scores, std::span<const int> tag_ids) {
  Val total;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    Val lp = tape.log_softmax_row(scores[i]);
    Val picked = tape.slice_cols(lp, static_cast<std::size_t>(tag_ids[i]), 1);
    Val li = tape.scale(picked, -1.0);
    total = i == 0 ? li : tape.add(total, li);
  }
  return tape.scale(total, 1.0 / static_cast<double>(scores.size()));
}

// Frozen per-token features for one sentence under a feature mode.
std::vector<Tensor2> frozen_features(const Encoder& encoder, const CharVocab& chars,
                                     const Sentence& sent, ChunkProbeConfig::Features mode) {
  const EncodedSentence enc = encode_chars(sent, chars);
  const std::vector<EmbeddingPair> pairs = encoder.encode_sentence(enc);
  std::vector<Tensor2> rows;
  rows.reserve(pairs.size());
  for (const EmbeddingPair& pr : pairs) {
    std::vector<double> feat;
    if (mode == ChunkProbeConfig::Features::WordOnly) {
      feat = pr.word;
    } else if (mode == ChunkProbeConfig::Features::ContextOnly) {
      feat = pr.context;
    } else {
      feat = pr.word;
      feat.insert(feat.end(), pr.context.begin(), pr.context.end());
    }
    rows.push_back(Tensor2::row(std::move(feat)));
  }
  return rows;
}

}  // namespace

ChunkReport chunk_probe(std::span<const Sentence> train, std::span<const Sentence> test,
                        const Encoder* encoder, const CharVocab& chars,
                        const ChunkProbeConfig& cfg) {
  if (train.empty() || test.empty()) {
    throw std::invalid_argument("chunk_probe: train and test must be non-empty");
  }
  const bool task_trained = cfg.features == ChunkProbeConfig::Features::TaskTrained;
  if (!task_trained && encoder == nullptr) {
    throw std::invalid_argument("chunk_probe: frozen feature modes need an encoder");
  }

  std::set<std::string> tag_set;
  for (const Sentence& s : train) {
    if (s.tags.size() != s.words.size()) {
      throw std::invalid_argument("chunk_probe: training sentence without tags");
    }
    tag_set.insert(s.tags.begin(), s.tags.end());
  }
  std::vector<std::string> tags(tag_set.begin(), tag_set.end());
  std::unordered_map<std::string, int> tag_id;
  for (std::size_t i = 0; i < tags.size(); ++i) tag_id[tags[i]] = static_cast<int>(i);
  for (const Sentence& s : test) {
    if (s.tags.size() != s.words.size()) {
      throw std::invalid_argument("chunk_probe: test sentence without tags");
    }
    for (const std::string& t : s.tags) {
      if (!tag_id.count(t)) {
        throw std::invalid_argument("chunk_probe: tag set mismatch, test tag \"" + t +
                                    "\" unseen in training data");
      }
    }
  }
  const std::size_t classes = tags.size();

  // frozen features are encoded once; task-trained features are built on the
  // training tape every pass
  std::vector<std::vector<Tensor2>> train_feats, test_feats;
  std::vector<EncodedSentence> train_enc, test_enc;
  std::size_t feat_dim = 0;
  if (task_trained) {
    for (const Sentence& s : train) train_enc.push_back(encode_chars(s, chars));
    for (const Sentence& s : test) test_enc.push_back(encode_chars(s, chars));
    feat_dim = cfg.task_encoder.word_dim() + cfg.task_encoder.d_ctx;
  } else {
    for (const Sentence& s : train) {
      train_feats.push_back(frozen_features(*encoder, chars, s, cfg.features));
    }
    for (const Sentence& s : test) {
      test_feats.push_back(frozen_features(*encoder, chars, s, cfg.features));
    }
    feat_dim = train_feats.front().front().cols;

    // standardize per dimension on training statistics; frozen embedding
    // blocks arrive with very different scales and offsets
    std::vector<double> mean(feat_dim, 0.0), var(feat_dim, 0.0);
    std::size_t count = 0;
    for (const auto& sent_rows : train_feats) {
      for (const Tensor2& row : sent_rows) {
        for (std::size_t j = 0; j < feat_dim; ++j) mean[j] += row.data[j];
        ++count;
      }
    }
    for (double& m : mean) m /= static_cast<double>(count);
    for (const auto& sent_rows : train_feats) {
      for (const Tensor2& row : sent_rows) {
        for (std::size_t j = 0; j < feat_dim; ++j) {
          const double d = row.data[j] - mean[j];
          var[j] += d * d;
        }
      }
    }
    std::vector<double> inv_std(feat_dim);
    for (std::size_t j = 0; j < feat_dim; ++j) {
      inv_std[j] = 1.0 / std::sqrt(var[j] / static_cast<double>(count) + 1e-8);
    }
    auto standardize = [&](std::vector<std::vector<Tensor2>>& feats) {
      for (auto& sent_rows : feats) {
        for (Tensor2& row : sent_rows) {
          for (std::size_t j = 0; j < feat_dim; ++j) {
            row.data[j] = (row.data[j] - mean[j]) * inv_std[j];
          }
        }
      }
    };
    standardize(train_feats);
    standardize(test_feats);
  }

  Rng rng(mix_seed(cfg.seed, 0x746167ULL));  // "tag"
  TaggerParams tagger =
      TaggerParams::init(feat_dim, cfg.proj_dim, cfg.tagger_hidden, classes, rng);
  EncoderParams task_params;
  if (task_trained) {
    task_params = EncoderParams::init(cfg.task_encoder,
                                      static_cast<std::size_t>(chars.size()), 0, rng);
  }

  std::vector<Tensor2*> params = tagger.all();
  if (task_trained) {
    for (auto& [name, t] : task_params.named_params()) params.push_back(t);
  }
  OptimizerState opt = OptimizerState::init(OptimizerKind::Adam, params);
  OptimizerConfig ocfg;
  ocfg.learning_rate = cfg.learning_rate;
  ocfg.weight_decay = cfg.weight_decay;

  // builds features on the tape for one training sentence
  auto features_on_tape = [&](Tape& tape, std::size_t sent_idx,
                              const EncoderVals* enc_vals) -> std::vector<Val> {
    std::vector<Val> feats;
    if (task_trained) {
      const EncodedSentence& es = train_enc[sent_idx];
      std::vector<Val> words = encode_words_taped(tape, *enc_vals, es);
      std::vector<Val> ctxs = encode_contexts_taped(tape, *enc_vals, words);
      feats.reserve(es.size());
      for (std::size_t i = 0; i < es.size(); ++i) {
        feats.push_back(tape.concat_cols(words[i], ctxs[i]));
      }
    } else {
      feats.reserve(train_feats[sent_idx].size());
      for (const Tensor2& row : train_feats[sent_idx]) feats.push_back(tape.input(row));
    }
    return feats;
  };

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(mix_seed(cfg.seed, 0x6f72646572ULL, epoch));  // "order"
    shuffle_rng.shuffle(order);
    for (std::size_t si : order) {
      const Sentence& s = train[si];
      std::vector<int> ids(s.tags.size());
      for (std::size_t i = 0; i < s.tags.size(); ++i) ids[i] = tag_id.at(s.tags[i]);

      Tape tape;
      TaggerVals tg = lease_tagger(tape, tagger);
      EncoderVals enc_vals;
      if (task_trained) enc_vals = lease_encoder(tape, task_params, LeaseParts::Encoder);
      std::vector<Val> feats = features_on_tape(tape, si, task_trained ? &enc_vals : nullptr);
      std::vector<Val> scores = tagger_scores(tape, tg, feats);
      Val loss = tagger_loss(tape, scores, ids);
      tape.backward(loss);

      std::vector<Val> vals = tagger_vals_list(tg);
      if (task_trained) {
        for (Val v : leased_vals(enc_vals, LeaseParts::Encoder)) vals.push_back(v);
      }
      std::vector<Tensor2> grads;
      grads.reserve(vals.size());
      for (Val v : vals) grads.push_back(tape.grad(v));
      clip_grad_norm(grads, cfg.grad_clip);
      optimizer_update(params, grads, opt, ocfg);
    }
  }

  // evaluation
  ChunkReport report;
  report.classes = classes;
  report.tag_set = tags;
  std::size_t tokens = 0, correct_tokens = 0;
  for (std::size_t si = 0; si < test.size(); ++si) {
    const Sentence& s = test[si];
    Tape tape;
    TaggerVals tg = lease_tagger(tape, tagger);
    std::vector<Val> feats;
    if (task_trained) {
      EncoderVals enc_vals = lease_encoder(tape, task_params, LeaseParts::Encoder);
      const EncodedSentence& es = test_enc[si];
      std::vector<Val> words = encode_words_taped(tape, enc_vals, es);
      std::vector<Val> ctxs = encode_contexts_taped(tape, enc_vals, words);
      for (std::size_t i = 0; i < es.size(); ++i) {
        feats.push_back(tape.concat_cols(words[i], ctxs[i]));
      }
    } else {
      for (const Tensor2& row : test_feats[si]) feats.push_back(tape.input(row));
    }
    std::vector<Val> scores = tagger_scores(tape, tg, feats);

    std::vector<std::string> predicted(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      const Tensor2& row = tape.value(scores[i]);
      std::size_t best = 0;
      for (std::size_t j = 1; j < row.cols; ++j) {
        if (row.data[j] > row.data[best]) best = j;
      }
      predicted[i] = tags[best];
      ++tokens;
      if (predicted[i] == s.tags[i]) ++correct_tokens;
    }

    const std::vector<ChunkSpan> pred_chunks = extract_chunks(predicted);
    const std::vector<ChunkSpan> gold_chunks = extract_chunks(s.tags);
    report.chunks.predicted += pred_chunks.size();
    report.chunks.gold += gold_chunks.size();
    for (const ChunkSpan& c : pred_chunks) {
      if (std::find(gold_chunks.begin(), gold_chunks.end(), c) != gold_chunks.end()) {
        ++report.chunks.correct;
      }
    }
  }
  report.token_accuracy = tokens == 0 ? 0.0 : static_cast<double>(correct_tokens) /
                                                   static_cast<double>(tokens);
  return report;
}

// ---------------------------------------------------------------------------
// typo robustness

namespace {

struct SoftmaxClassifier {
  Tensor2 w, b;

  int predict(std::span<const double> x) const {
    int best = 0;
    double best_score = -1e300;
    for (std::size_t j = 0; j < w.cols; ++j) {
      double s = b.data[j];
      for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * w.at(i, j);
      if (s > best_score) {
        best_score = s;
        best = static_cast<int>(j);
      }
    }
    return best;
  }
};

SoftmaxClassifier train_softmax(const std::vector<Tensor2>& features,
                                std::span<const int> labels, std::size_t classes,
                                const TypoProbeConfig& cfg, std::uint64_t seed) {
  const std::size_t dim = features.front().cols;
  Rng rng(mix_seed(seed, 0x736d6178ULL));  // "smax"
  SoftmaxClassifier clf;
  clf.w = Tensor2(dim, classes);
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  for (double& x : clf.w.data) x = rng.uniform(-bound, bound);
  clf.b = Tensor2(1, classes);

  std::vector<Tensor2*> params = {&clf.w, &clf.b};
  OptimizerState opt = OptimizerState::init(OptimizerKind::Adam, params);
  OptimizerConfig ocfg;
  ocfg.learning_rate = cfg.learning_rate;
  ocfg.weight_decay = cfg.weight_decay;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Tape tape;
    Val w = tape.param(clf.w);
    Val b = tape.param(clf.b);
    Val total;
    for (std::size_t i = 0; i < features.size(); ++i) {
      Val x = tape.input(features[i]);
      Val lp = tape.log_softmax_row(tape.add(tape.matmul(x, w), b));
      Val li = tape.scale(tape.slice_cols(lp, static_cast<std::size_t>(labels[i]), 1), -1.0);
      total = i == 0 ? li : tape.add(total, li);
    }
    Val loss = tape.scale(total, 1.0 / static_cast<double>(features.size()));
    tape.backward(loss);
    std::vector<Tensor2> grads = {tape.grad(w), tape.grad(b)};
    optimizer_update(params, grads, opt, ocfg);
  }
  return clf;
}

}  // namespace

TypoCurve typo_eval(const ContextClassifyTask& task, const Encoder& encoder,
                    const CharVocab& chars, std::span<const double> p_grid,
                    std::span<const std::uint64_t> seeds, const TypoProbeConfig& cfg) {
  if (task.train.empty() || task.test.empty()) {
    throw std::invalid_argument("typo_eval: empty task splits");
  }
  if (task.train_labels.size() != task.train.size() ||
      task.test_labels.size() != task.test.size()) {
    throw std::invalid_argument("typo_eval: labels do not cover the examples");
  }
  if (seeds.empty()) throw std::invalid_argument("typo_eval: at least one seed required");
  for (std::size_t i = 0; i < p_grid.size(); ++i) {
    if (p_grid[i] < 0.0 || p_grid[i] > 1.0 || (i > 0 && p_grid[i] <= p_grid[i - 1])) {
      throw std::invalid_argument("typo_eval: p grid must be strictly increasing within [0,1]");
    }
  }

  // training features, never perturbed, shared across seeds
  std::vector<Tensor2> train_feats;
  train_feats.reserve(task.train.size());
  for (const MarkedContext& mc : task.train) {
    const EncodedSentence enc = encode_chars(mc.sentence, chars);
    train_feats.push_back(Tensor2::row(encoder.encode_context(enc, mc.position)));
  }

  std::vector<SoftmaxClassifier> classifiers;
  classifiers.reserve(seeds.size());
  for (std::uint64_t s : seeds) {
    classifiers.push_back(
        train_softmax(train_feats, task.train_labels, task.n_classes, cfg, s));
  }

  TypoCurve curve;
  for (std::size_t pi = 0; pi < p_grid.size(); ++pi) {
    TypoPoint point;
    point.p = p_grid[pi];
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      Rng perturb_rng(mix_seed(seeds[si] ^ 0x7479706fULL, pi));  // "typo"
      std::size_t correct = 0;
      for (std::size_t i = 0; i < task.test.size(); ++i) {
        const MarkedContext& mc = task.test[i];
        const Sentence noisy = perturb_typos(mc.sentence, point.p, perturb_rng, chars);
        const EncodedSentence enc = encode_chars(noisy, chars);
        const std::vector<double> feat = encoder.encode_context(enc, mc.position);
        if (classifiers[si].predict(feat) == task.test_labels[i]) ++correct;
      }
      point.per_seed.push_back(static_cast<double>(correct) /
                               static_cast<double>(task.test.size()));
    }
    point.mean = std::accumulate(point.per_seed.begin(), point.per_seed.end(), 0.0) /
                 static_cast<double>(point.per_seed.size());
    if (point.per_seed.size() > 1) {
      double var = 0.0;
      for (double a : point.per_seed) var += (a - point.mean) * (a - point.mean);
      var /= static_cast<double>(point.per_seed.size() - 1);
      point.std_error = std::sqrt(var / static_cast<double>(point.per_seed.size()));
    }
    curve.points.push_back(std::move(point));
  }
  return curve;
}

}  // namespace cctx
