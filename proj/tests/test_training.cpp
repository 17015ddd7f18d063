#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cctx/gradcheck.hpp"
#include "cctx/model_io.hpp"
#include "cctx/training.hpp"
#include "support/synthdata.hpp"

using namespace cctx;

namespace {

EncoderConfig tiny_config() {
  EncoderConfig cfg;
  cfg.d_char = 5;
  cfg.h_word = 4;
  cfg.h_ctx = 3;
  cfg.d_hidden = 6;
  cfg.d_ctx = 4;
  return cfg;
}

std::vector<Sentence> toy_corpus() {
  return tokenize("a b a b\nb a b a\na b a b\nb a b a").sentences;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Straight-line re-implementation of the NCE formula, independent of the
// tape: raw loops, raw std::log/exp.
double nce_reference(const std::vector<double>& ctx, int target, const std::vector<int>& noise,
                     const EncoderParams& params, const NoiseDistribution& dist) {
  auto score = [&](int w) {
    double s = params.out_bias.at(static_cast<std::size_t>(w), 0);
    for (std::size_t j = 0; j < ctx.size(); ++j) {
      s += ctx[j] * params.out_weight.at(static_cast<std::size_t>(w), j);
    }
    return s;
  };
  auto log_sigmoid = [](double x) {
    return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
  };
  const double k = static_cast<double>(noise.size());
  double loss = -log_sigmoid(score(target) - std::log(k * dist.prob(target)));
  for (int w : noise) {
    loss -= log_sigmoid(-(score(w) - std::log(k * dist.prob(w))));
  }
  return loss;
}

}  // namespace

TEST_CASE("nce loss at zero logits is 2 log 2") {
  // bias rows equal log(k Pn(w)) and a zero context null the dot products
  EncoderParams p;
  p.cfg.d_ctx = 2;
  p.vocab_count = 2;
  p.out_weight = Tensor2(2, 2, {1.0, -1.0, 0.5, 2.0});
  p.out_bias = Tensor2(2, 1);
  const NoiseDistribution dist(std::vector<std::uint64_t>{3, 1}, 1.0);
  const double k = 1.0;
  p.out_bias.at(0, 0) = std::log(k * dist.prob(0));
  p.out_bias.at(1, 0) = std::log(k * dist.prob(1));

  const std::vector<double> ctx = {0.0, 0.0};
  const double loss = nce_loss(ctx, 0, std::vector<int>{1}, p, dist);
  CHECK(loss == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("nce loss strictly decreases as the target score rises") {
  EncoderParams p;
  p.cfg.d_ctx = 1;
  p.vocab_count = 2;
  p.out_weight = Tensor2(2, 1, {1.0, 0.3});
  p.out_bias = Tensor2(2, 1);
  const NoiseDistribution dist(std::vector<std::uint64_t>{1, 1}, 1.0);
  const std::vector<int> noise = {1};
  double prev = 1e300;
  for (double b = -3.0; b <= 3.0; b += 0.5) {
    p.out_bias.at(0, 0) = b;
    const double loss = nce_loss(std::vector<double>{1.0}, 0, noise, p, dist);
    CHECK(loss < prev);
    prev = loss;
  }
}

TEST_CASE("nce loss matches the straight-line reference within 1e-12") {
  Rng rng(41);
  EncoderParams p;
  p.cfg.d_ctx = 6;
  p.vocab_count = 9;
  p.out_weight = Tensor2(9, 6);
  p.out_bias = Tensor2(9, 1);
  for (double& x : p.out_weight.data) x = rng.uniform(-1, 1);
  for (double& x : p.out_bias.data) x = rng.uniform(-1, 1);
  std::vector<std::uint64_t> counts(9);
  for (auto& c : counts) c = 1 + rng.below(50);
  const NoiseDistribution dist(counts, 0.75);

  for (int trial = 0; trial < 25; ++trial) {
    std::vector<double> ctx(6);
    for (double& x : ctx) x = rng.uniform(-2, 2);
    const int target = static_cast<int>(rng.below(9));
    std::vector<int> noise(5);
    for (int& w : noise) w = static_cast<int>(rng.below(9));
    const double got = nce_loss(ctx, target, noise, p, dist);
    const double want = nce_reference(ctx, target, noise, p, dist);
    CHECK(std::fabs(got - want) / std::max(std::fabs(want), 1e-12) < 1e-12);
  }

  CHECK_THROWS_AS(nce_loss(std::vector<double>(6, 0.0), 9, std::vector<int>{0}, p, dist),
                  std::out_of_range);
  CHECK_THROWS_AS(nce_loss(std::vector<double>(6, 0.0), 0, std::vector<int>{-1}, p, dist),
                  std::out_of_range);
}

TEST_CASE("nce loss is invariant to the order of noise samples") {
  Rng rng(43);
  EncoderParams p;
  p.cfg.d_ctx = 4;
  p.vocab_count = 6;
  p.out_weight = Tensor2(6, 4);
  p.out_bias = Tensor2(6, 1);
  for (double& x : p.out_weight.data) x = rng.uniform(-1, 1);
  const NoiseDistribution dist(std::vector<std::uint64_t>{5, 4, 3, 2, 1, 1}, 1.0);
  const std::vector<double> ctx = {0.3, -0.4, 0.9, 0.1};
  const std::vector<int> fwd = {1, 4, 2, 2, 5};
  const std::vector<int> rev = {5, 2, 2, 4, 1};
  CHECK(nce_loss(ctx, 0, fwd, p, dist) ==
        doctest::Approx(nce_loss(ctx, 0, rev, p, dist)).epsilon(1e-12));
}

TEST_CASE("sample_noise basics") {
  Rng rng(3);
  // point mass
  const NoiseDistribution point(std::vector<std::uint64_t>{7, 0}, 1.0);
  for (int id : sample_noise(point, 5, rng)) CHECK(id == 0);

  // same rng state, same samples
  const NoiseDistribution uni(std::vector<std::uint64_t>{1, 1}, 1.0);
  Rng a(11), b(11);
  CHECK(sample_noise(uni, 8, a) == sample_noise(uni, 8, b));

  // both of two uniform ids appear in k=5 draws with prob 1 - 2^-4
  std::size_t both = 0;
  const std::size_t trials = 10000;
  Rng mc(17);
  for (std::size_t t = 0; t < trials; ++t) {
    const std::vector<int> s = sample_noise(uni, 5, mc);
    bool saw0 = false, saw1 = false;
    for (int id : s) (id == 0 ? saw0 : saw1) = true;
    if (saw0 && saw1) ++both;
  }
  const double freq = static_cast<double>(both) / static_cast<double>(trials);
  CHECK(std::fabs(freq - 0.9375) < 0.02);

  CHECK_THROWS_AS(sample_noise(uni, 0, rng), std::invalid_argument);
}

TEST_CASE("end-to-end gradients match finite differences on a 2-sentence corpus") {
  const std::vector<Sentence> corpus = tokenize("a b c\nc a").sentences;
  const Vocabs v = build_vocabs(corpus, 1);
  const NoiseDistribution dist = noise_distribution(v.words, 0.75);

  Rng init(9);
  EncoderParams params = EncoderParams::init(tiny_config(), v.chars.size(), v.words.size(), init);
  std::vector<EncodedSentence> enc;
  for (const Sentence& s : corpus) enc.push_back(encode_for_training(s, v.chars, v.words));

  // fixed noise draws per position
  Rng noise_rng(31);
  std::vector<std::vector<std::vector<int>>> noise;
  for (const EncodedSentence& es : enc) {
    std::vector<std::vector<int>> per_pos;
    for (std::size_t i = 0; i < es.size(); ++i) per_pos.push_back(sample_noise(dist, 3, noise_rng));
    noise.push_back(per_pos);
  }

  auto named = params.named_params();
  std::vector<Tensor2*> ptrs;
  for (auto& [name, t] : named) ptrs.push_back(t);

  auto build = [&](Tape& tape, std::span<const Val> leased) {
    // assemble EncoderVals from the leased values, in named_params order
    EncoderVals ev;
    ev.cfg = &params.cfg;
    std::size_t k = 0;
    ev.char_table = leased[k++];
    for (LstmCellVals* c : {&ev.char_fwd, &ev.char_bwd, &ev.ctx_fwd, &ev.ctx_bwd}) {
      c->w_input = leased[k++];
      c->w_hidden = leased[k++];
      c->bias = leased[k++];
    }
    ev.char_fwd.hidden = ev.char_bwd.hidden = params.cfg.h_word;
    ev.ctx_fwd.hidden = ev.ctx_bwd.hidden = params.cfg.h_ctx;
    ev.mlp_w1 = leased[k++];
    ev.mlp_b1 = leased[k++];
    ev.mlp_w2 = leased[k++];
    ev.mlp_b2 = leased[k++];
    ev.out_weight = leased[k++];
    ev.out_bias = leased[k++];
    Val total;
    for (std::size_t s = 0; s < enc.size(); ++s) {
      Val l = sentence_nce_loss_taped(tape, ev, enc[s], noise[s], dist);
      total = s == 0 ? l : tape.add(total, l);
    }
    return total;
  };

  Rng coord_rng(55);
  const GradCheckReport rep = check_gradients(build, ptrs, coord_rng, 8, 1e-5);
  INFO(rep.summary());
  CHECK(rep.checked >= 100);
  CHECK(rep.max_rel_err < 1e-4);
}

TEST_CASE("train_step with zero learning rate leaves parameters unchanged") {
  const std::vector<Sentence> corpus = toy_corpus();
  const Vocabs v = build_vocabs(corpus, 1);
  const NoiseDistribution dist = noise_distribution(v.words, 0.75);
  Rng init(1);
  EncoderParams params = EncoderParams::init(tiny_config(), v.chars.size(), v.words.size(), init);
  const EncoderParams before = params;

  std::vector<EncodedSentence> enc;
  for (const Sentence& s : corpus) enc.push_back(encode_for_training(s, v.chars, v.words));

  TrainConfig cfg;
  cfg.learning_rate = 0.0;  // deliberately unvalidated no-op update
  cfg.k_noise = 2;
  auto named = params.named_params();
  std::vector<Tensor2*> ptrs;
  for (auto& [name, t] : named) ptrs.push_back(t);
  OptimizerState opt = OptimizerState::init(cfg.optimizer, ptrs);

  const StepResult res = train_step(enc, params, opt, cfg, dist, 0);
  CHECK(res.targets == 16);
  CHECK(std::isfinite(res.mean_loss));
  auto before_named = const_cast<EncoderParams&>(before).named_params();
  for (std::size_t i = 0; i < named.size(); ++i) {
    CHECK(named[i].second->data == before_named[i].second->data);
  }
}

TEST_CASE("train_step result is independent of the thread count") {
  const std::vector<Sentence> corpus = toy_corpus();
  const Vocabs v = build_vocabs(corpus, 1);
  const NoiseDistribution dist = noise_distribution(v.words, 0.75);
  std::vector<EncodedSentence> enc;
  for (const Sentence& s : corpus) enc.push_back(encode_for_training(s, v.chars, v.words));

  auto run = [&](std::size_t threads) {
    Rng init(5);
    EncoderParams params =
        EncoderParams::init(tiny_config(), v.chars.size(), v.words.size(), init);
    TrainConfig cfg;
    cfg.k_noise = 3;
    cfg.threads = threads;
    auto named = params.named_params();
    std::vector<Tensor2*> ptrs;
    for (auto& [name, t] : named) ptrs.push_back(t);
    OptimizerState opt = OptimizerState::init(cfg.optimizer, ptrs);
    train_step(enc, params, opt, cfg, dist, 0);
    train_step(enc, params, opt, cfg, dist, 1);
    return params.char_table.data;
  };
  CHECK(run(1) == run(4));
}

TEST_CASE("train_step aborts on non-finite losses naming the sentence") {
  const std::vector<Sentence> corpus = toy_corpus();
  const Vocabs v = build_vocabs(corpus, 1);
  const NoiseDistribution dist = noise_distribution(v.words, 0.75);
  Rng init(1);
  EncoderParams params = EncoderParams::init(tiny_config(), v.chars.size(), v.words.size(), init);
  params.out_weight.data[0] = std::nan("");
  std::vector<EncodedSentence> enc = {encode_for_training(corpus[0], v.chars, v.words)};

  TrainConfig cfg;
  auto named = params.named_params();
  std::vector<Tensor2*> ptrs;
  for (auto& [name, t] : named) ptrs.push_back(t);
  OptimizerState opt = OptimizerState::init(cfg.optimizer, ptrs);
  CHECK_THROWS_WITH_AS(train_step(enc, params, opt, cfg, dist, 0),
                       doctest::Contains("sentence"), std::runtime_error);
}

TEST_CASE("overfitting one repeated batch drives the loss down monotonically") {
  const std::vector<Sentence> corpus = tokenize("a b a b").sentences;
  const Vocabs v = build_vocabs(corpus, 1);
  const NoiseDistribution dist = noise_distribution(v.words, 0.75);
  std::vector<EncodedSentence> enc = {encode_for_training(corpus[0], v.chars, v.words)};

  int monotone = 0;
  const int n_seeds = 20;
  for (int seed = 1; seed <= n_seeds; ++seed) {
    Rng init(static_cast<std::uint64_t>(seed));
    EncoderParams params =
        EncoderParams::init(tiny_config(), v.chars.size(), v.words.size(), init);
    TrainConfig cfg;
    cfg.k_noise = 2;
    cfg.seed = static_cast<std::uint64_t>(seed);
    auto named = params.named_params();
    std::vector<Tensor2*> ptrs;
    for (auto& [name, t] : named) ptrs.push_back(t);
    OptimizerState opt = OptimizerState::init(cfg.optimizer, ptrs);

    bool ok = true;
    double prev = 1e300;
    for (int step = 0; step < 50; ++step) {
      // the batch is literally repeated: keep the noise draws fixed too
      const StepResult res = train_step(enc, params, opt, cfg, dist, 0);
      if (res.mean_loss >= prev) ok = false;
      prev = res.mean_loss;
    }
    if (ok) ++monotone;
  }
  CHECK(monotone >= 19);  // >= 95% of seeds
}

TEST_CASE("one train_step never mutates the vocabularies") {
  const std::vector<Sentence> corpus = toy_corpus();
  Vocabs v = build_vocabs(corpus, 1);
  const int words_before = v.words.size();
  const int chars_before = v.chars.size();
  const NoiseDistribution dist = noise_distribution(v.words, 0.75);
  Rng init(1);
  EncoderParams params = EncoderParams::init(tiny_config(), v.chars.size(), v.words.size(), init);
  std::vector<EncodedSentence> enc = {encode_for_training(corpus[0], v.chars, v.words)};
  TrainConfig cfg;
  auto named = params.named_params();
  std::vector<Tensor2*> ptrs;
  for (auto& [name, t] : named) ptrs.push_back(t);
  OptimizerState opt = OptimizerState::init(cfg.optimizer, ptrs);
  train_step(enc, params, opt, cfg, dist, 0);
  CHECK(v.words.size() == words_before);
  CHECK(v.chars.size() == chars_before);
}

TEST_CASE("training writes logs and identical seeds give byte-identical checkpoints") {
  Rng data_rng(7);
  const synth::TopicData data = synth::make_topic_data(60, data_rng);

  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_sentences = 10;
  cfg.k_noise = 2;
  cfg.min_count = 1;
  cfg.log_every = 3;
  cfg.seed = 123;

  auto run = [&](const std::string& path) {
    std::ostringstream log;
    train(data.sentences, cfg, tiny_config(), path, &log);
    return log.str();
  };
  const std::string log1 = run("train_det_a.ckpt");
  const std::string log2 = run("train_det_b.ckpt");
  CHECK(read_file("train_det_a.ckpt") == read_file("train_det_b.ckpt"));

  // log lines are "step<TAB>loss<TAB>ms"
  std::istringstream ls(log1);
  std::string line;
  std::size_t lines = 0;
  while (std::getline(ls, line)) {
    CHECK(std::count(line.begin(), line.end(), '\t') == 2);
    ++lines;
  }
  CHECK(lines == 4);  // 12 steps, every 3rd logged
  std::remove("train_det_a.ckpt");
  std::remove("train_det_b.ckpt");
}

TEST_CASE("training progress on a toy synthetic corpus") {
  Rng data_rng(19);
  const synth::TopicData data = synth::make_topic_data(100, data_rng);

  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.batch_sentences = 10;
  cfg.k_noise = 3;
  cfg.min_count = 1;
  cfg.log_every = 0;
  cfg.seed = 5;

  // re-run the loop manually to read per-epoch means
  const Vocabs v = build_vocabs(data.sentences, cfg.min_count);
  const NoiseDistribution dist = noise_distribution(v.words, cfg.noise_power);
  Rng init(mix_seed(cfg.seed, 0x696e6974ULL));
  EncoderParams params = EncoderParams::init(tiny_config(), v.chars.size(), v.words.size(), init);
  auto named = params.named_params();
  std::vector<Tensor2*> ptrs;
  for (auto& [name, t] : named) ptrs.push_back(t);
  OptimizerState opt = OptimizerState::init(cfg.optimizer, ptrs);

  std::vector<EncodedSentence> enc;
  for (const Sentence& s : data.sentences) enc.push_back(encode_for_training(s, v.chars, v.words));

  std::uint64_t step = 0;
  std::vector<double> epoch_mean;
  for (std::uint64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double sum = 0;
    std::size_t steps = 0;
    for (std::size_t pos = 0; pos < enc.size(); pos += cfg.batch_sentences) {
      const std::size_t take = std::min(cfg.batch_sentences, enc.size() - pos);
      std::vector<EncodedSentence> batch(enc.begin() + pos, enc.begin() + pos + take);
      sum += train_step(batch, params, opt, cfg, dist, step++).mean_loss;
      ++steps;
    }
    epoch_mean.push_back(sum / static_cast<double>(steps));
  }
  CHECK(epoch_mean.back() < epoch_mean.front());
}

TEST_CASE("train rejects unwritable checkpoint paths before any work") {
  Rng data_rng(3);
  const synth::TopicData data = synth::make_topic_data(10, data_rng);
  TrainConfig cfg;
  cfg.min_count = 1;
  CHECK_THROWS_AS(train(data.sentences, cfg, tiny_config(), "no_such_dir/x.ckpt", nullptr),
                  std::runtime_error);
}
