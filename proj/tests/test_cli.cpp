// Drives the installed binary end to end through a shell; the path comes in
// via the CCTX_BIN environment variable set by ctest.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string& bin() {
  static const std::string path = [] {
    const char* env = std::getenv("CCTX_BIN");
    REQUIRE_MESSAGE(env != nullptr, "CCTX_BIN must point at the cctx binary");
    return std::string(env);
  }();
  return path;
}

const std::string& workdir() {
  static const std::string dir = [] {
    char tmpl[] = "/tmp/cctx_cli_XXXXXX";
    REQUIRE(mkdtemp(tmpl) != nullptr);
    return std::string(tmpl);
  }();
  return dir;
}

RunResult run(const std::string& args) {
  const std::string out_path = workdir() + "/stdout.txt";
  const std::string err_path = workdir() + "/stderr.txt";
  const std::string cmd = bin() + " " + args + " >" + out_path + " 2>" + err_path;
  const int status = std::system(cmd.c_str());
  RunResult res;
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  res.out = slurp(out_path);
  res.err = slurp(err_path);
  return res;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out << content;
}

std::string corpus_path() {
  static const std::string path = [] {
    std::string text;
    const char* foods[] = {"pizza", "pasta", "salad", "bread"};
    const char* cities[] = {"paris", "rome", "london", "berlin"};
    for (int i = 0; i < 40; ++i) {
      text += std::string("i like eating ") + foods[i % 4] + " with cheese\n";
      text += std::string(cities[i % 4]) + " is the capital city\n";
    }
    const std::string p = workdir() + "/corpus.txt";
    write_file(p, text);
    return p;
  }();
  return path;
}

const std::string kDims = " --d-char 6 --h-word 5 --h-ctx 4 --d-hidden 8 --d-ctx 6";

// one shared trained checkpoint for the query subcommands
const std::string& checkpoint() {
  static const std::string path = [] {
    const std::string p = workdir() + "/model.ckpt";
    const RunResult r = run("train " + corpus_path() + " --out " + p +
                            " --epochs 2 --batch 8 --k-noise 2 --min-count 2 --seed 5" + kDims);
    REQUIRE_MESSAGE(r.exit_code == 0, r.err);
    return p;
  }();
  return path;
}

}  // namespace

TEST_CASE("train reports a missing corpus path with a nonzero exit") {
  const RunResult r = run("train /nonexistent/corpus.txt --out " + workdir() + "/x.ckpt");
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("/nonexistent/corpus.txt") != std::string::npos);
}

TEST_CASE("unknown flags are a usage error") {
  const RunResult r = run("train " + corpus_path() + " --no-such-flag");
  CHECK(r.exit_code == 1);
}

TEST_CASE("help enumerates subcommands and flag defaults") {
  const RunResult r = run("--help");
  CHECK(r.exit_code == 0);
  for (const char* sub : {"train", "encode", "nn", "rank-contexts", "chunk", "typo", "inspect"}) {
    CHECK(r.out.find(sub) != std::string::npos);
  }
  const RunResult tr = run("train --help");
  CHECK(tr.out.find("--k-noise") != std::string::npos);
  CHECK(tr.out.find("--noise-power") != std::string::npos);
  CHECK(tr.out.find("0.75") != std::string::npos);  // default surfaced
}

TEST_CASE("training produces a reloadable checkpoint and is seed-deterministic") {
  const std::string& ck = checkpoint();
  const RunResult inspect = run("inspect " + ck);
  CHECK(inspect.exit_code == 0);
  CHECK(inspect.out.find("kind: checkpoint") != std::string::npos);
  CHECK(inspect.out.find("encoder parameters:") != std::string::npos);

  const std::string again = workdir() + "/model2.ckpt";
  const RunResult r = run("train " + corpus_path() + " --out " + again +
                          " --epochs 2 --batch 8 --k-noise 2 --min-count 2 --seed 5" + kDims);
  REQUIRE(r.exit_code == 0);
  CHECK(slurp(ck) == slurp(again));

  // vocab export rides along
  const std::string vocab = workdir() + "/vocab.tsv";
  const RunResult rv = run("train " + corpus_path() + " --out " + workdir() +
                           "/model3.ckpt --epochs 1 --min-count 2 --vocab-out " + vocab + kDims);
  REQUIRE(rv.exit_code == 0);
  const std::string vocab_text = slurp(vocab);
  CHECK(vocab_text.find("0\t<unk>\t") == 0);
  CHECK(vocab_text.find("\tcheese\t") != std::string::npos);
}

TEST_CASE("encode word mode emits one embedding per word") {
  const std::string in = workdir() + "/words.txt";
  write_file(in, "cat\n");
  const std::string out = workdir() + "/emb.txt";
  const RunResult r =
      run("encode --model " + checkpoint() + " --mode word --input " + in + " --out " + out);
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  std::istringstream lines(slurp(out));
  std::string line;
  REQUIRE(std::getline(lines, line));
  std::istringstream fields(line);
  std::string token;
  fields >> token;
  CHECK(token == "cat");
  std::size_t floats = 0;
  double x;
  while (fields >> x) ++floats;
  CHECK(floats == 10);  // 2 * h_word with the test dims
  CHECK_FALSE(std::getline(lines, line));

  // identical invocations produce identical bytes
  const std::string out2 = workdir() + "/emb2.txt";
  run("encode --model " + checkpoint() + " --mode word --input " + in + " --out " + out2);
  CHECK(slurp(out) == slurp(out2));
}

TEST_CASE("encode context mode validates positions per line") {
  const std::string in = workdir() + "/ctx.txt";
  write_file(in, "i like eating pizza\t2\nshort line\t9\n");
  const RunResult r = run("encode --model " + checkpoint() + " --mode context --input " + in);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("line 2") != std::string::npos);
  // the good line still encoded
  std::istringstream lines(r.out);
  std::string line;
  REQUIRE(std::getline(lines, line));
  CHECK(line.find("eating") == 0);
}

TEST_CASE("nn returns exactly k rows unless the lexicon is smaller") {
  const RunResult r = run("nn pizza --model " + checkpoint() + " --k 3");
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  std::istringstream lines(r.out);
  std::string line;
  std::size_t rows = 0;
  while (std::getline(lines, line)) {
    CHECK(line.find('\t') != std::string::npos);
    CHECK(line.substr(0, line.find('\t')) != "pizza");
    ++rows;
  }
  CHECK(rows == 3);

  const std::string lex = workdir() + "/lex.txt";
  write_file(lex, "pizza\npasta\n");
  const RunResult r2 = run("nn pizza --model " + checkpoint() + " --k 5 --lexicon " + lex);
  REQUIRE(r2.exit_code == 0);
  std::istringstream lines2(r2.out);
  rows = 0;
  while (std::getline(lines2, line)) ++rows;
  CHECK(rows == 1);  // query excluded, only one candidate left
}

TEST_CASE("rank-contexts scores the query itself at similarity 1") {
  const std::string cands = workdir() + "/cands.txt";
  write_file(cands,
             "i like eating pizza with cheese\t3\n"
             "rome is the capital city\t0\n");
  const RunResult r = run("rank-contexts --model " + checkpoint() +
                          " --query 'i like eating pizza with cheese\t3' --candidates " + cands);
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  std::istringstream lines(r.out);
  std::string first;
  REQUIRE(std::getline(lines, first));
  CHECK(first.substr(0, first.find('\t')) == "1");
  CHECK(first.find("pizza") != std::string::npos);
}

TEST_CASE("inspect rejects corrupt and truncated files") {
  const std::string bad = workdir() + "/bad.bin";
  write_file(bad, "this is not a model");
  const RunResult r = run("inspect " + bad);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("magic") != std::string::npos);

  const std::string full = slurp(checkpoint());
  const std::string trunc = workdir() + "/trunc.bin";
  write_file(trunc, full.substr(0, full.size() / 10));  // cut inside the weight tensors
  const RunResult r2 = run("inspect " + trunc);
  CHECK(r2.exit_code == 2);
  CHECK(r2.err.find("unexpected end of file") != std::string::npos);

  // no model flag and no env var
  const RunResult r3 = run("inspect");
  CHECK(r3.exit_code == 2);
  CHECK(r3.err.find("CCTX_MODEL") != std::string::npos);
}

TEST_CASE("chunk probe runs over CoNLL files and reports key=value lines") {
  const std::string train = workdir() + "/chunk_train.txt";
  const std::string test = workdir() + "/chunk_test.txt";
  std::string rows;
  for (int i = 0; i < 30; ++i) {
    rows += "the DT B-NP\n";
    rows += (i % 2 ? "pizza NN I-NP\n" : "bread NN I-NP\n");
    rows += "pleases VBZ B-VP\n";
    rows += "everyone NN B-NP\n\n";
  }
  write_file(train, rows);
  write_file(test, rows);
  const RunResult r = run("chunk --model " + checkpoint() + " --train " + train + " --test " +
                          test + " --features both --epochs 3 --lr 0.01 --proj-dim 8 "
                          "--tagger-hidden 6");
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  CHECK(r.out.find("f1=") != std::string::npos);
  CHECK(r.out.find("features=both") != std::string::npos);
  CHECK(r.out.find("token_accuracy=") != std::string::npos);
}

TEST_CASE("typo probe emits a CSV curve whose p=0 row is perturbation-free") {
  const std::string train = workdir() + "/typo_train.txt";
  const std::string test = workdir() + "/typo_test.txt";
  std::string ex;
  const char* foods[] = {"pizza", "pasta", "salad", "bread"};
  const char* cities[] = {"paris", "rome", "london", "berlin"};
  for (int i = 0; i < 16; ++i) {
    ex += std::string("i like eating ") + foods[i % 4] + " with cheese\t3\t0\n";
    ex += std::string(cities[i % 4]) + " is the capital city\t0\t1\n";
  }
  write_file(train, ex);
  write_file(test, ex);
  const RunResult r = run("typo --model " + checkpoint() + " --train " + train + " --test " +
                          test + " --p 0.0 0.5 --seeds 1 2 --epochs 10");
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  std::istringstream lines(r.out);
  std::string header, row0;
  REQUIRE(std::getline(lines, header));
  CHECK(header == "p,score,stderr");
  REQUIRE(std::getline(lines, row0));
  CHECK(row0.rfind("0,", 0) == 0);

  const RunResult r2 = run("typo --model " + checkpoint() + " --train " + train + " --test " +
                           test + " --p 0.0 --seeds 1 2 --epochs 10");
  std::istringstream lines2(r2.out);
  std::string header2, row02;
  std::getline(lines2, header2);
  std::getline(lines2, row02);
  CHECK(row02 == row0);  // identical p=0 row regardless of the rest of the grid
}
