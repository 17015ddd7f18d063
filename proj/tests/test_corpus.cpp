#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cctx/corpus.hpp"
#include "cctx/text.hpp"
#include "cctx/vocab.hpp"

using namespace cctx;

TEST_CASE("tokenize splits the running example into one sentence of four words") {
  const TokenizeResult res = tokenize("The cat is sleepy");
  REQUIRE(res.sentences.size() == 1);
  const Sentence& s = res.sentences[0];
  REQUIRE(s.words.size() == 4);
  CHECK(s.words[1] == U"cat");
  CHECK(s.words[1][0] == U'c');
  CHECK(s.words[1][1] == U'a');
  CHECK(s.words[1][2] == U't');
}

TEST_CASE("tokenize whitespace and empty-line rules") {
  const TokenizeResult res = tokenize("a\tb\n\nc");
  REQUIRE(res.sentences.size() == 2);
  CHECK(res.sentences[0].words == std::vector<std::u32string>{U"a", U"b"});
  CHECK(res.sentences[1].words == std::vector<std::u32string>{U"c"});

  CHECK(tokenize("").sentences.empty());
  CHECK(tokenize("   \n \t \n").sentences.empty());
}

TEST_CASE("tokenize skips undecodable lines with a diagnostic") {
  std::string text = "good line\n";
  text += "bad \xff\xfe line\n";
  text += "another good\n";
  const TokenizeResult res = tokenize(text);
  CHECK(res.sentences.size() == 2);
  CHECK(res.skipped_lines == 1);
  REQUIRE(res.diagnostics.size() == 1);
  CHECK(res.diagnostics[0].find("line 2") != std::string::npos);
}

TEST_CASE("tokenize is idempotent on normalized text") {
  const TokenizeResult once = tokenize("the quick fox\njumps over dogs");
  std::string rebuilt;
  for (const Sentence& s : once.sentences) {
    for (std::size_t i = 0; i < s.words.size(); ++i) {
      rebuilt += (i ? " " : "") + utf8_encode(s.words[i]);
    }
    rebuilt += "\n";
  }
  const TokenizeResult twice = tokenize(rebuilt);
  REQUIRE(twice.sentences.size() == once.sentences.size());
  for (std::size_t i = 0; i < once.sentences.size(); ++i) {
    CHECK(twice.sentences[i].words == once.sentences[i].words);
  }
}

TEST_CASE("tokenize truncates overlong words") {
  TokenizeOptions opts;
  opts.max_word_len = 4;
  const TokenizeResult res = tokenize("abcdefgh ok", opts);
  REQUIRE(res.sentences.size() == 1);
  CHECK(res.sentences[0].words[0] == U"abcd");
  CHECK(res.truncated_words == 1);
}

TEST_CASE("tokenize handles multibyte UTF-8 and unicode spaces") {
  const TokenizeResult res = tokenize("caf\xc3\xa9\xc2\xa0the");  // NBSP separator
  REQUIRE(res.sentences.size() == 1);
  REQUIRE(res.sentences[0].words.size() == 2);
  CHECK(res.sentences[0].words[0] == U"café");
}

TEST_CASE("build_vocabs direct counts and threshold folding") {
  const TokenizeResult res = tokenize("a a b");
  const Vocabs v1 = build_vocabs(res.sentences, 1);
  CHECK(v1.words.size() == 3);  // <unk>, a, b
  CHECK(v1.words.id(U"a") == 1);
  CHECK(v1.words.id(U"b") == 2);
  CHECK(v1.words.count(1) == 2);
  CHECK(v1.words.count(2) == 1);
  CHECK(v1.chars.size() == CharVocab::kReserved + 2);
  CHECK(v1.chars.contains(U'a'));
  CHECK(v1.chars.contains(U'b'));

  const Vocabs v2 = build_vocabs(res.sentences, 2);
  CHECK(v2.words.size() == 2);  // <unk>, a
  CHECK(v2.words.id(U"b") == TrainVocab::kUnk);
  CHECK(v2.words.count(TrainVocab::kUnk) == 1);  // b folded

  CHECK_THROWS_AS(build_vocabs(std::vector<Sentence>{}, 1), std::invalid_argument);
}

TEST_CASE("vocab ids are deterministic and order-independent") {
  const char* text = "the cat sat\non the mat\nthe end";
  const TokenizeResult a = tokenize(text);
  std::vector<Sentence> reversed(a.sentences.rbegin(), a.sentences.rend());
  const Vocabs va = build_vocabs(a.sentences, 1);
  const Vocabs vb = build_vocabs(reversed, 1);
  REQUIRE(va.words.size() == vb.words.size());
  for (int i = 0; i < va.words.size(); ++i) {
    CHECK(va.words.surface(i) == vb.words.surface(i));
    CHECK(va.words.count(i) == vb.words.count(i));
  }
  CHECK(va.chars.size() == vb.chars.size());
  // descending count, ties lexicographic: "the" (3) first
  CHECK(va.words.surface(1) == U"the");
}

TEST_CASE("char cap warning flags runaway inventories") {
  std::vector<std::string> warnings;
  const TokenizeResult res = tokenize("abc def");
  build_vocabs(res.sentences, 1, 3, &warnings);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("cap") != std::string::npos);
}

TEST_CASE("char encode round-trips in-vocab words") {
  const TokenizeResult res = tokenize("hello world");
  const Vocabs v = build_vocabs(res.sentences, 1);
  const std::u32string word = U"hello";
  CHECK(v.chars.decode(v.chars.encode(word)) == word);
  // unseen character maps to UNK
  CHECK(v.chars.encode(U"z")[0] == CharVocab::kUnk);
}

TEST_CASE("noise distribution normalizes counts to the given power") {
  const std::vector<std::uint64_t> counts = {3, 1};
  const NoiseDistribution d1(counts, 1.0);
  CHECK(d1.prob(0) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(d1.prob(1) == doctest::Approx(0.25).epsilon(1e-12));

  const NoiseDistribution d0(counts, 0.0);
  CHECK(d0.prob(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(d0.prob(1) == doctest::Approx(0.5).epsilon(1e-12));

  CHECK_THROWS_AS(NoiseDistribution(std::vector<std::uint64_t>{0, 0}, 1.0),
                  std::invalid_argument);
}

TEST_CASE("noise distribution sums to one within 1e-12") {
  Rng rng(21);
  std::vector<std::uint64_t> counts(257);
  for (auto& c : counts) c = 1 + rng.below(1000);
  const NoiseDistribution d(counts, 0.75);
  double total = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) total += d.prob(i);
  CHECK(std::fabs(total - 1.0) < 1e-12);
}

TEST_CASE("alias sampling matches probabilities within 1% over 1e6 draws") {
  const std::vector<std::uint64_t> counts = {60, 25, 10, 4, 1};
  const NoiseDistribution d(counts, 1.0);
  Rng rng(42);
  std::vector<std::size_t> hits(counts.size(), 0);
  const std::size_t n = 1000000;
  for (std::size_t i = 0; i < n; ++i) ++hits[static_cast<std::size_t>(d.sample(rng))];
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double freq = static_cast<double>(hits[i]) / static_cast<double>(n);
    CHECK(std::fabs(freq - d.prob(i)) < 0.01);
  }
}

TEST_CASE("perturb_typos p=0 is the identity") {
  const TokenizeResult res = tokenize("hello wide world");
  const Vocabs v = build_vocabs(res.sentences, 1);
  Rng rng(1);
  const Sentence out = perturb_typos(res.sentences[0], 0.0, rng, v.chars);
  CHECK(out.words == res.sentences[0].words);
  CHECK_THROWS_AS(perturb_typos(res.sentences[0], 1.5, rng, v.chars), std::invalid_argument);
}

TEST_CASE("perturb_typos p=1 changes every word in exactly one position") {
  const TokenizeResult res = tokenize("hello wide world a\nmore words here too");
  const Vocabs v = build_vocabs(res.sentences, 1);
  Rng rng(7);
  for (const Sentence& orig : res.sentences) {
    const Sentence copy = orig;  // original must stay unmodified
    const Sentence out = perturb_typos(orig, 1.0, rng, v.chars);
    CHECK(orig.words == copy.words);
    REQUIRE(out.words.size() == orig.words.size());
    for (std::size_t i = 0; i < out.words.size(); ++i) {
      REQUIRE(out.words[i].size() == orig.words[i].size());
      std::size_t diff = 0;
      for (std::size_t k = 0; k < out.words[i].size(); ++k) {
        if (out.words[i][k] != orig.words[i][k]) ++diff;
      }
      CHECK(diff == 1);
    }
  }
}

TEST_CASE("perturb_typos hits close to the requested rate") {
  const TokenizeResult res = tokenize("alpha beta gamma delta epsilon");
  const Vocabs v = build_vocabs(res.sentences, 1);
  Rng rng(99);
  std::size_t perturbed = 0, total = 0;
  for (int trial = 0; trial < 2000; ++trial) {  // 10k word draws
    const Sentence out = perturb_typos(res.sentences[0], 0.3, rng, v.chars);
    for (std::size_t i = 0; i < out.words.size(); ++i) {
      ++total;
      if (out.words[i] != res.sentences[0].words[i]) ++perturbed;
    }
  }
  const double rate = static_cast<double>(perturbed) / static_cast<double>(total);
  CHECK(rate > 0.29);
  CHECK(rate < 0.31);
}

TEST_CASE("conll reader consumes word and chunk columns") {
  std::istringstream in(
      "He PRP B-NP\n"
      "reckons VBZ B-VP\n"
      "the DT B-NP\n"
      "deficit NN I-NP\n"
      "\n"
      "short line\n"
      "Rockwell NNP B-NP\n");
  const ConllResult res = read_conll(in);
  REQUIRE(res.sentences.size() == 2);
  CHECK(res.sentences[0].words.size() == 4);
  CHECK(res.sentences[0].tags[0] == "B-NP");
  CHECK(res.sentences[0].tags[3] == "I-NP");
  CHECK(res.sentences[0].words[3] == U"deficit");
  CHECK(res.bad_lines == 1);
  REQUIRE(res.diagnostics.size() == 1);
  CHECK(res.diagnostics[0].find("line 6") != std::string::npos);
}

TEST_CASE("vocab export writes id, surface and count") {
  const TokenizeResult res = tokenize("b b b a a c");
  const Vocabs v = build_vocabs(res.sentences, 2);
  const std::string path = "vocab_export_test.tsv";
  export_vocab(v.words, path);
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);
  CHECK(line == "0\t<unk>\t1");
  std::getline(in, line);
  CHECK(line == "1\tb\t3");
  std::getline(in, line);
  CHECK(line == "2\ta\t2");
  std::remove(path.c_str());
}

TEST_CASE("encode_for_training maps words and characters") {
  const TokenizeResult res = tokenize("a b a");
  const Vocabs v = build_vocabs(res.sentences, 2);  // only "a" kept
  const EncodedSentence enc = encode_for_training(res.sentences[0], v.chars, v.words);
  REQUIRE(enc.words.size() == 3);
  REQUIRE(enc.targets.size() == 3);
  CHECK(enc.targets[0] == v.words.id(U"a"));
  CHECK(enc.targets[1] == TrainVocab::kUnk);
  CHECK(enc.words[0] == v.chars.encode(U"a"));
}
