// cctx: character-aware word and context embeddings.
//
// Single binary with subcommands over the library: unsupervised training,
// embedding export, nearest-neighbour and context-ranking queries, the
// chunking and typo probes, and model inspection.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cctx/model_io.hpp"
#include "cctx/probes.hpp"
#include "cctx/text.hpp"
#include "cctx/training.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string default_model_path(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("CCTX_MODEL")) return env;
  throw DataError("no model path given (use --model or set CCTX_MODEL)");
}

// Loads encoder parameters plus char vocab from either file kind; the train
// vocab is present only for checkpoints.
struct AnyModel {
  cctx::EncoderParams params;
  cctx::CharVocab chars;
  std::optional<cctx::TrainVocab> words;
};

AnyModel load_any_model(const std::string& path) {
  AnyModel m;
  if (cctx::is_checkpoint_file(path)) {
    cctx::Checkpoint ck = cctx::load_checkpoint(path);
    m.params = std::move(ck.params);
    m.chars = std::move(ck.chars);
    m.words = std::move(ck.words);
  } else {
    cctx::LoadedModel lm = cctx::load_model(path);
    m.params = std::move(lm.params);
    m.chars = std::move(lm.chars);
  }
  return m;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

cctx::Sentence parse_sentence_utf8(const std::string& text, std::size_t line_no) {
  const cctx::TokenizeResult tk = cctx::tokenize(text);
  if (tk.skipped_lines > 0) {
    throw DataError("line " + std::to_string(line_no) + ": invalid UTF-8");
  }
  if (tk.sentences.size() != 1) {
    throw DataError("line " + std::to_string(line_no) + ": expected one non-empty sentence");
  }
  return tk.sentences.front();
}

// "sentence<TAB>position" with a 0-based position
cctx::MarkedContext parse_marked_context(const std::string& line, std::size_t line_no) {
  const std::size_t tab = line.rfind('\t');
  if (tab == std::string::npos) {
    throw DataError("line " + std::to_string(line_no) + ": expected \"sentence<TAB>position\"");
  }
  cctx::MarkedContext mc;
  mc.sentence = parse_sentence_utf8(line.substr(0, tab), line_no);
  try {
    mc.position = std::stoul(line.substr(tab + 1));
  } catch (const std::exception&) {
    throw DataError("line " + std::to_string(line_no) + ": position is not a number");
  }
  if (mc.position >= mc.sentence.size()) {
    throw DataError("line " + std::to_string(line_no) + ": position " +
                    std::to_string(mc.position) + " out of range for " +
                    std::to_string(mc.sentence.size()) + " words");
  }
  return mc;
}

void write_floats_text(std::ostream& out, const std::vector<double>& v) {
  out.precision(8);
  for (std::size_t i = 0; i < v.size(); ++i) {
    out << (i ? " " : "") << v[i];
  }
}

void write_floats_binary(std::ostream& out, const std::vector<double>& v) {
  for (double x : v) {
    const float f = static_cast<float>(x);
    out.write(reinterpret_cast<const char*>(&f), sizeof(f));
  }
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string corpus;
  std::string out = "model.ckpt";
  std::string export_model;
  std::string vocab_out;
  std::string log_path;
  cctx::TrainConfig cfg;
  cctx::EncoderConfig enc;
  bool f32 = false;
  bool sgd = false;
  bool deterministic = false;
};

int cmd_train(const TrainArgs& a) {
  cctx::TrainConfig cfg = a.cfg;
  cfg.precision = a.f32 ? cctx::Precision::F32 : cctx::Precision::F64;
  cfg.optimizer = a.sgd ? cctx::OptimizerKind::Sgd : cctx::OptimizerKind::Adam;
  if (a.deterministic) cfg.threads = 1;
  cfg.validate();

  std::cerr << "config: k_noise=" << cfg.k_noise << " noise_power=" << cfg.noise_power
            << " lr=" << cfg.learning_rate << " optimizer=" << (a.sgd ? "sgd" : "adam")
            << " batch=" << cfg.batch_sentences << " epochs=" << cfg.epochs
            << " grad_clip=" << cfg.grad_clip << " seed=" << cfg.seed
            << " min_count=" << cfg.min_count << " threads=" << cfg.threads << " dims(d_char="
            << a.enc.d_char << ",h_word=" << a.enc.h_word << ",h_ctx=" << a.enc.h_ctx
            << ",d_hidden=" << a.enc.d_hidden << ",d_ctx=" << a.enc.d_ctx << ")\n";

  cctx::TokenizeOptions topts;
  topts.max_word_len = cfg.max_word_len;
  cctx::TokenizeResult tk = cctx::tokenize_file(a.corpus, topts);
  for (const std::string& d : tk.diagnostics) std::cerr << a.corpus << ": " << d << "\n";
  if (tk.skipped_lines > 0) {
    std::cerr << a.corpus << ": skipped " << tk.skipped_lines << " undecodable lines\n";
  }
  if (tk.sentences.empty()) throw DataError(a.corpus + ": no sentences after tokenization");

  std::ofstream log;
  std::ostream* log_stream = nullptr;
  if (!a.log_path.empty()) {
    log.open(a.log_path);
    if (!log) throw DataError("cannot write log " + a.log_path);
    log_stream = &log;
  }

  cctx::Checkpoint ck = cctx::train(tk.sentences, cfg, a.enc, a.out, log_stream);
  std::cerr << "trained " << ck.step << " steps over " << ck.epoch << " epochs; checkpoint at "
            << a.out << "\n";
  if (!a.vocab_out.empty()) cctx::export_vocab(ck.words, a.vocab_out);
  if (!a.export_model.empty()) cctx::save_model(a.export_model, ck.params, ck.chars);
  return kExitOk;
}

struct EncodeArgs {
  std::string model;
  std::string mode = "word";
  std::string input;  // empty = stdin
  std::string output; // empty = stdout
  bool binary = false;
};

int cmd_encode(const EncodeArgs& a) {
  const AnyModel m = load_any_model(default_model_path(a.model));
  const cctx::Encoder encoder(m.params);

  std::vector<std::string> lines;
  if (a.input.empty()) {
    std::string line;
    while (std::getline(std::cin, line)) lines.push_back(line);
  } else {
    lines = read_lines(a.input);
  }

  std::ofstream file_out;
  std::ostream* out = &std::cout;
  if (!a.output.empty()) {
    file_out.open(a.output, std::ios::binary);
    if (!file_out) throw DataError("cannot write " + a.output);
    out = &file_out;
  }

  std::size_t errors = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    try {
      if (a.mode == "word") {
        const cctx::Sentence s = parse_sentence_utf8(lines[i], i + 1);
        for (const std::u32string& w : s.words) {
          const std::vector<double> e = encoder.encode_word(m.chars.encode(w));
          if (a.binary) {
            write_floats_binary(*out, e);
          } else {
            *out << cctx::utf8_encode(w) << " ";
            write_floats_text(*out, e);
            *out << "\n";
          }
        }
      } else {
        const cctx::MarkedContext mc = parse_marked_context(lines[i], i + 1);
        const cctx::EncodedSentence enc = cctx::encode_chars(mc.sentence, m.chars);
        const std::vector<double> e = encoder.encode_context(enc, mc.position);
        if (a.binary) {
          write_floats_binary(*out, e);
        } else {
          *out << cctx::utf8_encode(mc.sentence.words[mc.position]) << " ";
          write_floats_text(*out, e);
          *out << "\n";
        }
      }
    } catch (const DataError& e) {
      std::cerr << e.what() << "\n";
      ++errors;
    }
  }
  return errors == 0 ? kExitOk : kExitData;
}

struct NnArgs {
  std::string model;
  std::string query;
  std::string lexicon_path;
  std::size_t k = 5;
};

int cmd_nn(const NnArgs& a) {
  const AnyModel m = load_any_model(default_model_path(a.model));
  const cctx::Encoder encoder(m.params);

  std::vector<std::string> lexicon;
  if (!a.lexicon_path.empty()) {
    for (std::string& line : read_lines(a.lexicon_path)) {
      if (!line.empty()) lexicon.push_back(std::move(line));
    }
  } else if (m.words) {
    for (int i = cctx::TrainVocab::kUnk + 1; i < m.words->size(); ++i) {
      lexicon.push_back(m.words->surface_utf8(i));
    }
  } else {
    throw DataError("model file has no vocabulary; pass --lexicon");
  }
  if (lexicon.empty()) throw DataError("empty lexicon");

  const cctx::NeighborResult res = cctx::nearest_words(a.query, lexicon, a.k, encoder, m.chars);
  std::cout.precision(6);
  for (const auto& [word, sim] : res.neighbors) {
    std::cout << word << "\t" << sim << "\n";
  }
  return kExitOk;
}

struct RankArgs {
  std::string model;
  std::string query;       // "sentence<TAB>position"
  std::string candidates;  // file of such lines
};

int cmd_rank_contexts(const RankArgs& a) {
  const AnyModel m = load_any_model(default_model_path(a.model));
  const cctx::Encoder encoder(m.params);

  const cctx::MarkedContext query = parse_marked_context(a.query, 0);
  std::vector<cctx::MarkedContext> candidates;
  const std::vector<std::string> lines = read_lines(a.candidates);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!lines[i].empty()) candidates.push_back(parse_marked_context(lines[i], i + 1));
  }
  if (candidates.empty()) throw DataError("no candidate contexts in " + a.candidates);

  std::cout.precision(6);
  for (const cctx::RankedContext& rc :
       cctx::rank_contexts(query, candidates, encoder, m.chars)) {
    std::cout << rc.similarity << "\t" << lines[rc.index] << "\n";
  }
  return kExitOk;
}

struct ChunkArgs {
  std::string model;
  std::string train_path;
  std::string test_path;
  std::string features = "both";
  std::string report_out;
  cctx::ChunkProbeConfig cfg;
};

int cmd_chunk(const ChunkArgs& a) {
  cctx::ChunkProbeConfig cfg = a.cfg;
  if (a.features == "we") {
    cfg.features = cctx::ChunkProbeConfig::Features::WordOnly;
  } else if (a.features == "ce") {
    cfg.features = cctx::ChunkProbeConfig::Features::ContextOnly;
  } else if (a.features == "both") {
    cfg.features = cctx::ChunkProbeConfig::Features::Both;
  } else if (a.features == "task") {
    cfg.features = cctx::ChunkProbeConfig::Features::TaskTrained;
  } else {
    throw CLI::ValidationError("--features must be one of we|ce|both|task");
  }

  cctx::ConllResult train = cctx::read_conll_file(a.train_path);
  cctx::ConllResult test = cctx::read_conll_file(a.test_path);
  for (const std::string& d : train.diagnostics) std::cerr << a.train_path << ": " << d << "\n";
  for (const std::string& d : test.diagnostics) std::cerr << a.test_path << ": " << d << "\n";
  if (train.sentences.empty() || test.sentences.empty()) {
    throw DataError("empty chunking data");
  }

  std::optional<AnyModel> m;
  std::optional<cctx::Encoder> encoder;
  cctx::CharVocab chars;
  if (cfg.features != cctx::ChunkProbeConfig::Features::TaskTrained) {
    m = load_any_model(default_model_path(a.model));
    encoder.emplace(m->params);
    chars = m->chars;
  } else if (!a.model.empty() || std::getenv("CCTX_MODEL")) {
    // reuse the model's character inventory when one is at hand
    m = load_any_model(default_model_path(a.model));
    chars = m->chars;
  } else {
    chars = cctx::build_vocabs(train.sentences, 1).chars;
  }

  const cctx::ChunkReport report = cctx::chunk_probe(
      train.sentences, test.sentences, encoder ? &*encoder : nullptr, chars, cfg);

  std::ostringstream body;
  body.precision(4);
  body << std::fixed;
  body << "features=" << a.features << "\n";
  body << "f1=" << report.chunks.f1_percent() << "\n";
  body << "precision=" << 100.0 * report.chunks.precision() << "\n";
  body << "recall=" << 100.0 * report.chunks.recall() << "\n";
  body << "token_accuracy=" << 100.0 * report.token_accuracy << "\n";
  body << "classes=" << report.classes << "\n";
  body << "gold_chunks=" << report.chunks.gold << "\n";
  body << "predicted_chunks=" << report.chunks.predicted << "\n";
  std::cout << body.str();
  if (!a.report_out.empty()) {
    std::ofstream out(a.report_out);
    if (!out) throw DataError("cannot write " + a.report_out);
    out << body.str();
  }
  return kExitOk;
}

struct TypoArgs {
  std::string model;
  std::string train_path;  // "sentence<TAB>position<TAB>label"
  std::string test_path;
  std::vector<double> p_grid = {0.0, 0.1, 0.3, 0.5, 0.9};
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::string csv_out;
  cctx::TypoProbeConfig cfg;
};

void parse_labeled_contexts(const std::string& path, std::vector<cctx::MarkedContext>& out,
                            std::vector<int>& labels, std::size_t& n_classes) {
  const std::vector<std::string> lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::size_t tab = lines[i].rfind('\t');
    if (tab == std::string::npos) {
      throw DataError(path + " line " + std::to_string(i + 1) +
                      ": expected \"sentence<TAB>position<TAB>label\"");
    }
    int label = 0;
    try {
      label = std::stoi(lines[i].substr(tab + 1));
    } catch (const std::exception&) {
      throw DataError(path + " line " + std::to_string(i + 1) + ": label is not an integer");
    }
    out.push_back(parse_marked_context(lines[i].substr(0, tab), i + 1));
    labels.push_back(label);
    n_classes = std::max(n_classes, static_cast<std::size_t>(label) + 1);
  }
}

int cmd_typo(const TypoArgs& a) {
  const AnyModel m = load_any_model(default_model_path(a.model));
  const cctx::Encoder encoder(m.params);

  cctx::ContextClassifyTask task;
  parse_labeled_contexts(a.train_path, task.train, task.train_labels, task.n_classes);
  parse_labeled_contexts(a.test_path, task.test, task.test_labels, task.n_classes);
  if (task.train.empty() || task.test.empty()) throw DataError("empty typo task data");

  const cctx::TypoCurve curve =
      cctx::typo_eval(task, encoder, m.chars, a.p_grid, a.seeds, a.cfg);

  std::ostringstream csv;
  csv << "p,score,stderr\n";
  csv.precision(6);
  for (const cctx::TypoPoint& pt : curve.points) {
    csv << pt.p << "," << pt.mean << "," << pt.std_error << "\n";
  }
  std::cout << csv.str();
  if (!a.csv_out.empty()) {
    std::ofstream out(a.csv_out);
    if (!out) throw DataError("cannot write " + a.csv_out);
    out << csv.str();
  }
  return kExitOk;
}

int cmd_inspect(const std::string& model_path) {
  const cctx::ModelInfo info = cctx::inspect_file(default_model_path(model_path));
  std::cout << "kind: " << (info.checkpoint ? "checkpoint" : "model") << "\n";
  std::cout << "dtype: " << (info.dtype == cctx::Precision::F32 ? "float32" : "float64") << "\n";
  std::cout << "dims: C=" << info.char_count << " d_char=" << info.cfg.d_char
            << " h_word=" << info.cfg.h_word << " h_ctx=" << info.cfg.h_ctx
            << " d_hidden=" << info.cfg.d_hidden << " d_ctx=" << info.cfg.d_ctx
            << " N=" << info.vocab_count << "\n";
  for (const cctx::TensorInfo& t : info.tensors) {
    std::cout << "tensor: " << t.name << " " << t.rows << "x" << t.cols << " ("
              << t.rows * t.cols << ")\n";
  }
  std::cout << "encoder parameters: " << info.encoder_params << "\n";
  std::cout << "output projection parameters: " << info.output_params << "\n";
  std::cout << "total parameters: " << info.encoder_params + info.output_params << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"character-aware word and context embeddings"};
  app.require_subcommand(1);

  // train
  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "train an encoder on a plain-text corpus");
  train->add_option("corpus", train_args.corpus, "UTF-8 corpus, one sentence per line")
      ->required();
  train->add_option("--out", train_args.out, "checkpoint output path")
      ->capture_default_str();
  train->add_option("--export-model", train_args.export_model,
                    "also export an inference model (float32, no output projection)");
  train->add_option("--vocab-out", train_args.vocab_out, "export the training vocabulary (tsv)");
  train->add_option("--log", train_args.log_path, "training log path (step, mean loss, ms)");
  train->add_option("--epochs", train_args.cfg.epochs, "training epochs")->capture_default_str();
  train->add_option("--batch", train_args.cfg.batch_sentences, "sentences per step")
      ->capture_default_str();
  train->add_option("--k-noise", train_args.cfg.k_noise, "NCE noise samples per target")
      ->capture_default_str();
  train->add_option("--noise-power", train_args.cfg.noise_power,
                    "unigram exponent of the noise distribution")
      ->capture_default_str();
  train->add_option("--lr", train_args.cfg.learning_rate, "learning rate")->capture_default_str();
  train->add_option("--grad-clip", train_args.cfg.grad_clip, "gradient norm clip")
      ->capture_default_str();
  train->add_option("--min-count", train_args.cfg.min_count,
                    "words below this count fold into <unk>")
      ->capture_default_str();
  train->add_option("--seed", train_args.cfg.seed, "rng seed")->capture_default_str();
  train->add_option("--log-every", train_args.cfg.log_every, "steps between log lines")
      ->capture_default_str();
  train->add_option("--checkpoint-every", train_args.cfg.checkpoint_every,
                    "steps between periodic checkpoints (0 = final only)")
      ->capture_default_str();
  train->add_option("--threads", train_args.cfg.threads, "parallel sentence passes per step")
      ->capture_default_str();
  train->add_option("--max-word-len", train_args.cfg.max_word_len,
                    "longer tokens are truncated")
      ->capture_default_str();
  train->add_flag("--f32", train_args.f32, "train with float32 storage rounding");
  train->add_flag("--sgd", train_args.sgd, "use plain SGD instead of Adam");
  train->add_flag("--deterministic", train_args.deterministic, "force single-threaded steps");
  train->add_option("--d-char", train_args.enc.d_char, "character embedding size")
      ->capture_default_str();
  train->add_option("--h-word", train_args.enc.h_word,
                    "char-level LSTM hidden size per direction")
      ->capture_default_str();
  train->add_option("--h-ctx", train_args.enc.h_ctx,
                    "context-level LSTM hidden size per direction")
      ->capture_default_str();
  train->add_option("--d-hidden", train_args.enc.d_hidden, "MLP hidden layer size")
      ->capture_default_str();
  train->add_option("--d-ctx", train_args.enc.d_ctx, "context embedding size")
      ->capture_default_str();

  // encode
  EncodeArgs encode_args;
  CLI::App* encode = app.add_subcommand("encode", "emit word or context embeddings");
  encode->add_option("--model", encode_args.model, "model or checkpoint path (or $CCTX_MODEL)");
  encode->add_option("--mode", encode_args.mode, "word | context")
      ->check(CLI::IsMember({"word", "context"}))
      ->capture_default_str();
  encode->add_option("--input", encode_args.input,
                     "input file (default stdin); word mode: words per line; context mode: "
                     "\"sentence<TAB>position\" with 0-based positions");
  encode->add_option("--out", encode_args.output, "output file (default stdout)");
  encode->add_flag("--binary", encode_args.binary, "raw float32 records instead of text");

  // nn
  NnArgs nn_args;
  CLI::App* nn = app.add_subcommand("nn", "nearest words by cosine over word embeddings");
  nn->add_option("query", nn_args.query, "query word")->required();
  nn->add_option("--model", nn_args.model, "model or checkpoint path (or $CCTX_MODEL)");
  nn->add_option("--k", nn_args.k, "neighbours to return")->capture_default_str();
  nn->add_option("--lexicon", nn_args.lexicon_path,
                 "one word per line (default: checkpoint vocabulary)");

  // rank-contexts
  RankArgs rank_args;
  CLI::App* rank = app.add_subcommand("rank-contexts",
                                      "rank candidate contexts against a query context");
  rank->add_option("--model", rank_args.model, "model or checkpoint path (or $CCTX_MODEL)");
  rank->add_option("--query", rank_args.query, "\"sentence<TAB>position\" (0-based)")
      ->required();
  rank->add_option("--candidates", rank_args.candidates, "file of \"sentence<TAB>position\"")
      ->required();

  // chunk
  ChunkArgs chunk_args;
  CLI::App* chunk = app.add_subcommand("chunk", "chunking probe on CoNLL-format data");
  chunk->add_option("--model", chunk_args.model, "model or checkpoint path (or $CCTX_MODEL)");
  chunk->add_option("--train", chunk_args.train_path, "CoNLL training file")->required();
  chunk->add_option("--test", chunk_args.test_path, "CoNLL test file")->required();
  chunk->add_option("--features", chunk_args.features, "we | ce | both | task")
      ->capture_default_str();
  chunk->add_option("--proj-dim", chunk_args.cfg.proj_dim, "feature projection size")
      ->capture_default_str();
  chunk->add_option("--tagger-hidden", chunk_args.cfg.tagger_hidden,
                    "tagger LSTM hidden per direction")
      ->capture_default_str();
  chunk->add_option("--epochs", chunk_args.cfg.epochs, "tagger epochs")->capture_default_str();
  chunk->add_option("--lr", chunk_args.cfg.learning_rate, "tagger learning rate")
      ->capture_default_str();
  chunk->add_option("--weight-decay", chunk_args.cfg.weight_decay, "L2 factor")
      ->capture_default_str();
  chunk->add_option("--seed", chunk_args.cfg.seed, "rng seed")->capture_default_str();
  chunk->add_option("--report", chunk_args.report_out, "also write the key=value report here");

  // typo
  TypoArgs typo_args;
  CLI::App* typo = app.add_subcommand("typo", "typo-robustness curve on a context task");
  typo->add_option("--model", typo_args.model, "model or checkpoint path (or $CCTX_MODEL)");
  typo->add_option("--train", typo_args.train_path,
                   "\"sentence<TAB>position<TAB>label\" training examples")
      ->required();
  typo->add_option("--test", typo_args.test_path, "same format, evaluation examples")
      ->required();
  typo->add_option("--p", typo_args.p_grid, "noise probabilities (strictly increasing)")
      ->capture_default_str();
  typo->add_option("--seeds", typo_args.seeds, "evaluation seeds")->capture_default_str();
  typo->add_option("--epochs", typo_args.cfg.epochs, "classifier epochs")->capture_default_str();
  typo->add_option("--lr", typo_args.cfg.learning_rate, "classifier learning rate")
      ->capture_default_str();
  typo->add_option("--csv", typo_args.csv_out, "also write the curve CSV here");

  // inspect
  std::string inspect_model;
  CLI::App* inspect = app.add_subcommand("inspect", "print tensor shapes and parameter counts");
  inspect->add_option("model", inspect_model, "model or checkpoint path (or $CCTX_MODEL)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (train->parsed()) return cmd_train(train_args);
    if (encode->parsed()) return cmd_encode(encode_args);
    if (nn->parsed()) return cmd_nn(nn_args);
    if (rank->parsed()) return cmd_rank_contexts(rank_args);
    if (chunk->parsed()) return cmd_chunk(chunk_args);
    if (typo->parsed()) return cmd_typo(typo_args);
    if (inspect->parsed()) return cmd_inspect(inspect_model);
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}
