#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "cctx/model_io.hpp"
#include "cctx/probes.hpp"
#include "cctx/text.hpp"
#include "cctx/training.hpp"

namespace py = pybind11;

namespace {

std::u32string decode_word(const std::string& utf8) {
  std::u32string out;
  if (!cctx::utf8_decode(utf8, out) || out.empty()) {
    throw py::value_error("not a valid non-empty UTF-8 word: " + utf8);
  }
  return out;
}

cctx::Sentence to_sentence(const std::vector<std::string>& words) {
  cctx::Sentence s;
  for (const std::string& w : words) s.words.push_back(decode_word(w));
  if (s.words.empty()) throw py::value_error("empty sentence");
  return s;
}

// Encoder plus vocabularies loaded from a model or checkpoint file.
class Model {
 public:
  explicit Model(const std::string& path) {
    if (cctx::is_checkpoint_file(path)) {
      cctx::Checkpoint ck = cctx::load_checkpoint(path);
      chars_ = std::move(ck.chars);
      words_ = std::move(ck.words);
      encoder_.emplace(std::move(ck.params));
    } else {
      cctx::LoadedModel lm = cctx::load_model(path);
      chars_ = std::move(lm.chars);
      encoder_.emplace(std::move(lm.params));
    }
  }

  std::vector<double> word_embedding(const std::string& word) const {
    return encoder_->encode_word(chars_.encode(decode_word(word)));
  }

  std::vector<double> context_embedding(const std::vector<std::string>& words,
                                        std::size_t position) const {
    const cctx::EncodedSentence enc = cctx::encode_chars(to_sentence(words), chars_);
    return encoder_->encode_context(enc, position);
  }

  std::vector<std::pair<std::vector<double>, std::vector<double>>> sentence_embeddings(
      const std::vector<std::string>& words) const {
    const cctx::EncodedSentence enc = cctx::encode_chars(to_sentence(words), chars_);
    std::vector<std::pair<std::vector<double>, std::vector<double>>> out;
    for (cctx::EmbeddingPair& p : encoder_->encode_sentence(enc)) {
      out.emplace_back(std::move(p.word), std::move(p.context));
    }
    return out;
  }

  std::vector<std::pair<std::string, double>> nearest(
      const std::string& query, std::size_t k,
      std::optional<std::vector<std::string>> lexicon) const {
    std::vector<std::string> lex;
    if (lexicon) {
      lex = std::move(*lexicon);
    } else if (words_) {
      for (int i = cctx::TrainVocab::kUnk + 1; i < words_->size(); ++i) {
        lex.push_back(words_->surface_utf8(i));
      }
    } else {
      throw py::value_error("model file has no vocabulary; pass lexicon=");
    }
    return cctx::nearest_words(query, lex, k, *encoder_, chars_).neighbors;
  }

  std::vector<std::pair<std::size_t, double>> rank_contexts(
      const std::vector<std::string>& query_words, std::size_t query_position,
      const std::vector<std::pair<std::vector<std::string>, std::size_t>>& candidates) const {
    cctx::MarkedContext query{to_sentence(query_words), query_position};
    std::vector<cctx::MarkedContext> cands;
    for (const auto& [words, pos] : candidates) {
      cands.push_back(cctx::MarkedContext{to_sentence(words), pos});
    }
    std::vector<std::pair<std::size_t, double>> out;
    for (const cctx::RankedContext& rc : cctx::rank_contexts(query, cands, *encoder_, chars_)) {
      out.emplace_back(rc.index, rc.similarity);
    }
    return out;
  }

  std::vector<std::string> perturb(const std::vector<std::string>& words, double p,
                                   std::uint64_t seed) const {
    cctx::Rng rng(seed);
    const cctx::Sentence out = cctx::perturb_typos(to_sentence(words), p, rng, chars_);
    std::vector<std::string> res;
    for (const std::u32string& w : out.words) res.push_back(cctx::utf8_encode(w));
    return res;
  }

  std::vector<std::string> vocab() const {
    std::vector<std::string> out;
    if (!words_) return out;
    for (int i = 0; i < words_->size(); ++i) out.push_back(words_->surface_utf8(i));
    return out;
  }

  std::size_t word_dim() const { return encoder_->config().word_dim(); }
  std::size_t context_dim() const { return encoder_->config().d_ctx; }
  std::size_t char_count() const { return static_cast<std::size_t>(chars_.size()); }
  std::size_t parameter_count() const { return encoder_->params().encoder_param_count(); }

 private:
  cctx::CharVocab chars_;
  std::optional<cctx::TrainVocab> words_;
  std::optional<cctx::Encoder> encoder_;
};

py::dict train_file(const std::string& corpus, const std::string& out, std::size_t epochs,
                    std::size_t batch, std::size_t k_noise, double noise_power, double lr,
                    std::size_t min_count, std::uint64_t seed, std::size_t threads,
                    std::size_t d_char, std::size_t h_word, std::size_t h_ctx,
                    std::size_t d_hidden, std::size_t d_ctx) {
  cctx::TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_sentences = batch;
  cfg.k_noise = k_noise;
  cfg.noise_power = noise_power;
  cfg.learning_rate = lr;
  cfg.min_count = min_count;
  cfg.seed = seed;
  cfg.threads = threads;
  cctx::EncoderConfig enc;
  enc.d_char = d_char;
  enc.h_word = h_word;
  enc.h_ctx = h_ctx;
  enc.d_hidden = d_hidden;
  enc.d_ctx = d_ctx;

  const cctx::TokenizeResult tk = cctx::tokenize_file(corpus);
  if (tk.sentences.empty()) throw py::value_error(corpus + ": no sentences after tokenization");
  const cctx::Checkpoint ck = cctx::train(tk.sentences, cfg, enc, out);

  py::dict res;
  res["steps"] = ck.step;
  res["epochs"] = ck.epoch;
  res["vocab_size"] = ck.words.size();
  res["char_count"] = ck.chars.size();
  res["checkpoint"] = out;
  return res;
}

py::dict inspect(const std::string& path) {
  const cctx::ModelInfo info = cctx::inspect_file(path);
  py::dict d;
  d["kind"] = info.checkpoint ? "checkpoint" : "model";
  d["dtype"] = info.dtype == cctx::Precision::F32 ? "float32" : "float64";
  d["char_count"] = info.char_count;
  d["vocab_count"] = info.vocab_count;
  d["encoder_parameters"] = info.encoder_params;
  d["output_parameters"] = info.output_params;
  py::list tensors;
  for (const cctx::TensorInfo& t : info.tensors) {
    tensors.append(py::make_tuple(t.name, t.rows, t.cols));
  }
  d["tensors"] = tensors;
  return d;
}

std::vector<std::vector<std::string>> tokenize_text(const std::string& text) {
  std::vector<std::vector<std::string>> out;
  for (const cctx::Sentence& s : cctx::tokenize(text).sentences) {
    std::vector<std::string> words;
    for (const std::u32string& w : s.words) words.push_back(cctx::utf8_encode(w));
    out.push_back(std::move(words));
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_cctx, m) {
  m.doc() = "character-aware word and context embeddings";

  py::class_<Model>(m, "Model")
      .def(py::init<const std::string&>(), py::arg("path"),
           "load an inference model or training checkpoint")
      .def("word_embedding", &Model::word_embedding, py::arg("word"))
      .def("context_embedding", &Model::context_embedding, py::arg("words"),
           py::arg("position"))
      .def("sentence_embeddings", &Model::sentence_embeddings, py::arg("words"),
           "per position: (word embedding, context embedding)")
      .def("nearest", &Model::nearest, py::arg("query"), py::arg("k") = 5,
           py::arg("lexicon") = py::none())
      .def("rank_contexts", &Model::rank_contexts, py::arg("query_words"),
           py::arg("query_position"), py::arg("candidates"))
      .def("perturb", &Model::perturb, py::arg("words"), py::arg("p"), py::arg("seed") = 0)
      .def("vocab", &Model::vocab)
      .def_property_readonly("word_dim", &Model::word_dim)
      .def_property_readonly("context_dim", &Model::context_dim)
      .def_property_readonly("char_count", &Model::char_count)
      .def_property_readonly("parameter_count", &Model::parameter_count);

  m.def("train_file", &train_file, py::arg("corpus"), py::arg("out"), py::arg("epochs") = 1,
        py::arg("batch") = 16, py::arg("k_noise") = 10, py::arg("noise_power") = 0.75,
        py::arg("lr") = 1e-3, py::arg("min_count") = 5, py::arg("seed") = 42,
        py::arg("threads") = 1, py::arg("d_char") = 50, py::arg("h_word") = 500,
        py::arg("h_ctx") = 300, py::arg("d_hidden") = 1200, py::arg("d_ctx") = 600,
        "unsupervised training over a one-sentence-per-line corpus; writes a checkpoint");
  m.def("inspect", &inspect, py::arg("path"));
  m.def("tokenize", &tokenize_text, py::arg("text"));
  m.def(
      "cosine",
      [](const std::vector<double>& u, const std::vector<double>& v) { return cctx::cosine(u, v); },
      py::arg("u"), py::arg("v"));
}
