#include "cctx/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace cctx {

EncoderParams EncoderParams::init(const EncoderConfig& cfg, std::size_t char_count,
                                  std::size_t vocab_count, Rng& rng) {
  if (char_count == 0) throw std::invalid_argument("EncoderParams::init: char_count must be > 0");
  EncoderParams p;
  p.cfg = cfg;
  p.char_count = char_count;
  p.vocab_count = vocab_count;

  p.char_table = Tensor2(char_count, cfg.d_char);
  for (double& x : p.char_table.data) x = rng.uniform(-0.05, 0.05);

  p.char_fwd = LstmCellParams::init(cfg.d_char, cfg.h_word, rng);
  p.char_bwd = LstmCellParams::init(cfg.d_char, cfg.h_word, rng);
  p.ctx_fwd = LstmCellParams::init(cfg.word_dim(), cfg.h_ctx, rng);
  p.ctx_bwd = LstmCellParams::init(cfg.word_dim(), cfg.h_ctx, rng);

  auto affine_init = [&rng](std::size_t in, std::size_t out) {
    Tensor2 w(in, out);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (double& x : w.data) x = rng.uniform(-bound, bound);
    return w;
  };
  p.mlp_w1 = affine_init(2 * cfg.h_ctx, cfg.d_hidden);
  p.mlp_b1 = Tensor2(1, cfg.d_hidden);
  p.mlp_w2 = affine_init(cfg.d_hidden, cfg.d_ctx);
  p.mlp_b2 = Tensor2(1, cfg.d_ctx);

  if (vocab_count > 0) {
    p.out_weight = Tensor2(vocab_count, cfg.d_ctx);
    const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.d_ctx));
    for (double& x : p.out_weight.data) x = rng.uniform(-bound, bound);
    p.out_bias = Tensor2(vocab_count, 1);
  }
  return p;
}

void EncoderParams::drop_output() {
  out_weight = Tensor2();
  out_bias = Tensor2();
  vocab_count = 0;
}

std::size_t EncoderParams::encoder_param_count() const {
  return char_table.numel() + char_fwd.param_count() + char_bwd.param_count() +
         ctx_fwd.param_count() + ctx_bwd.param_count() + mlp_w1.numel() + mlp_b1.numel() +
         mlp_w2.numel() + mlp_b2.numel();
}

std::size_t EncoderParams::output_param_count() const {
  return out_weight.numel() + out_bias.numel();
}

std::vector<std::pair<std::string, Tensor2*>> EncoderParams::named_params() {
  std::vector<std::pair<std::string, Tensor2*>> out = {
      {"char_table", &char_table},
      {"char_fwd.w_input", &char_fwd.w_input},
      {"char_fwd.w_hidden", &char_fwd.w_hidden},
      {"char_fwd.bias", &char_fwd.bias},
      {"char_bwd.w_input", &char_bwd.w_input},
      {"char_bwd.w_hidden", &char_bwd.w_hidden},
      {"char_bwd.bias", &char_bwd.bias},
      {"ctx_fwd.w_input", &ctx_fwd.w_input},
      {"ctx_fwd.w_hidden", &ctx_fwd.w_hidden},
      {"ctx_fwd.bias", &ctx_fwd.bias},
      {"ctx_bwd.w_input", &ctx_bwd.w_input},
      {"ctx_bwd.w_hidden", &ctx_bwd.w_hidden},
      {"ctx_bwd.bias", &ctx_bwd.bias},
      {"mlp.w1", &mlp_w1},
      {"mlp.b1", &mlp_b1},
      {"mlp.w2", &mlp_w2},
      {"mlp.b2", &mlp_b2},
  };
  if (has_output()) {
    out.emplace_back("out.weight", &out_weight);
    out.emplace_back("out.bias", &out_bias);
  }
  return out;
}

std::vector<std::pair<std::string, const Tensor2*>> EncoderParams::named_params() const {
  std::vector<std::pair<std::string, const Tensor2*>> out;
  for (auto& [name, t] : const_cast<EncoderParams*>(this)->named_params()) {
    out.emplace_back(name, t);
  }
  return out;
}

EncoderVals lease_encoder(Tape& tape, const EncoderParams& p, LeaseParts parts) {
  EncoderVals v;
  v.cfg = &p.cfg;
  v.char_table = tape.param(p.char_table);
  v.char_fwd = lease_lstm(tape, p.char_fwd);
  v.char_bwd = lease_lstm(tape, p.char_bwd);
  if (parts == LeaseParts::WordOnly) return v;
  v.ctx_fwd = lease_lstm(tape, p.ctx_fwd);
  v.ctx_bwd = lease_lstm(tape, p.ctx_bwd);
  v.mlp_w1 = tape.param(p.mlp_w1);
  v.mlp_b1 = tape.param(p.mlp_b1);
  v.mlp_w2 = tape.param(p.mlp_w2);
  v.mlp_b2 = tape.param(p.mlp_b2);
  if (parts == LeaseParts::WithOutput) {
    if (!p.has_output()) {
      throw std::invalid_argument("lease_encoder: model has no output projection");
    }
    v.out_weight = tape.param(p.out_weight);
    v.out_bias = tape.param(p.out_bias);
  }
  return v;
}

std::vector<Val> leased_vals(const EncoderVals& v, LeaseParts parts) {
  std::vector<Val> out = {v.char_table,
                          v.char_fwd.w_input, v.char_fwd.w_hidden, v.char_fwd.bias,
                          v.char_bwd.w_input, v.char_bwd.w_hidden, v.char_bwd.bias};
  if (parts == LeaseParts::WordOnly) return out;
  out.insert(out.end(), {v.ctx_fwd.w_input, v.ctx_fwd.w_hidden, v.ctx_fwd.bias,
                         v.ctx_bwd.w_input, v.ctx_bwd.w_hidden, v.ctx_bwd.bias,
                         v.mlp_w1, v.mlp_b1, v.mlp_w2, v.mlp_b2});
  if (parts == LeaseParts::WithOutput) {
    out.push_back(v.out_weight);
    out.push_back(v.out_bias);
  }
  return out;
}

std::vector<Val> embed_char_rows(Tape& tape, const EncoderVals& enc, std::span<const int> chars) {
  if (chars.empty()) throw std::invalid_argument("embed_char_rows: empty word");
  std::vector<Val> rows;
  rows.reserve(chars.size());
  for (int id : chars) {
    if (id < 0) throw std::out_of_range("embed_char_rows: negative char id");
    rows.push_back(tape.gather_row(enc.char_table, static_cast<std::size_t>(id)));
  }
  return rows;
}

Tensor2 embed_chars(const EncoderParams& p, std::span<const int> chars) {
  if (chars.empty()) throw std::invalid_argument("embed_chars: empty word");
  Tensor2 out(chars.size(), p.cfg.d_char);
  for (std::size_t i = 0; i < chars.size(); ++i) {
    const int id = chars[i];
    if (id < 0 || static_cast<std::size_t>(id) >= p.char_table.rows) {
      throw std::out_of_range("embed_chars: char id " + std::to_string(id) + " out of range");
    }
    for (std::size_t j = 0; j < p.cfg.d_char; ++j) {
      out.at(i, j) = p.char_table.at(static_cast<std::size_t>(id), j);
    }
  }
  return out;
}

Val encode_word_taped(Tape& tape, const EncoderVals& enc, std::span<const int> chars) {
  const std::vector<Val> rows = embed_char_rows(tape, enc, chars);
  Val fwd = run_lstm(tape, enc.char_fwd, rows, LstmDirection::Forward);
  Val bwd = run_lstm(tape, enc.char_bwd, rows, LstmDirection::Backward);
  return tape.concat_cols(fwd, bwd);
}

std::vector<Val> encode_words_taped(Tape& tape, const EncoderVals& enc,
                                    const EncodedSentence& sent) {
  std::vector<Val> out;
  out.reserve(sent.words.size());
  for (const std::vector<int>& w : sent.words) out.push_back(encode_word_taped(tape, enc, w));
  return out;
}

namespace {

Val mlp_taped(Tape& tape, const EncoderVals& enc, Val x) {
  Val h = tape.relu(tape.add(tape.matmul(x, enc.mlp_w1), enc.mlp_b1));
  return tape.add(tape.matmul(h, enc.mlp_w2), enc.mlp_b2);
}

}  // namespace

Val encode_context_at_taped(Tape& tape, const EncoderVals& enc, std::span<const Val> word_embs,
                            std::size_t position) {
  const std::size_t n = word_embs.size();
  if (position >= n) {
    throw std::out_of_range("encode_context: position " + std::to_string(position) +
                            " out of range for sentence of " + std::to_string(n) + " words");
  }
  Val left = run_lstm(tape, enc.ctx_fwd, word_embs.subspan(0, position), LstmDirection::Forward);
  Val right = run_lstm(tape, enc.ctx_bwd, word_embs.subspan(position + 1), LstmDirection::Backward);
  return mlp_taped(tape, enc, tape.concat_cols(left, right));
}

std::vector<Val> encode_contexts_taped(Tape& tape, const EncoderVals& enc,
                                       std::span<const Val> word_embs) {
  const std::size_t n = word_embs.size();
  if (n == 0) throw std::invalid_argument("encode_contexts: empty sentence");

  // left_states[i] = forward state after e_0..e_i; rev_states[k] = backward
  // state after e_{n-1}..e_{n-1-k}. Both start from the per-sentence zero
  // state, so nothing carries across sentences.
  std::vector<Val> left_states = lstm_states(tape, enc.ctx_fwd, word_embs);
  std::vector<Val> rev(word_embs.rbegin(), word_embs.rend());
  std::vector<Val> right_states = lstm_states(tape, enc.ctx_bwd, rev);

  Val zero_left = tape.zeros(1, enc.ctx_fwd.hidden);
  Val zero_right = tape.zeros(1, enc.ctx_bwd.hidden);

  std::vector<Val> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Val left = i == 0 ? zero_left : left_states[i - 1];
    Val right = i + 1 == n ? zero_right : right_states[n - 2 - i];
    out.push_back(mlp_taped(tape, enc, tape.concat_cols(left, right)));
  }
  return out;
}

std::vector<double> Encoder::encode_word(std::span<const int> chars) const {
  Tape tape;
  EncoderVals vals = lease_encoder(tape, params_, LeaseParts::WordOnly);
  Val e = encode_word_taped(tape, vals, chars);
  return tape.value(e).data;
}

std::vector<double> Encoder::encode_context(const EncodedSentence& sent,
                                            std::size_t position) const {
  Tape tape;
  EncoderVals vals = lease_encoder(tape, params_, LeaseParts::Encoder);
  std::vector<Val> words = encode_words_taped(tape, vals, sent);
  Val c = encode_context_at_taped(tape, vals, words, position);
  return tape.value(c).data;
}

std::vector<EmbeddingPair> Encoder::encode_sentence(const EncodedSentence& sent) const {
  Tape tape;
  EncoderVals vals = lease_encoder(tape, params_, LeaseParts::Encoder);
  std::vector<Val> words = encode_words_taped(tape, vals, sent);
  std::vector<Val> contexts = encode_contexts_taped(tape, vals, words);
  std::vector<EmbeddingPair> out(sent.size());
  for (std::size_t i = 0; i < sent.size(); ++i) {
    out[i].position = i;
    out[i].word = tape.value(words[i]).data;
    out[i].context = tape.value(contexts[i]).data;
  }
  return out;
}

Encoder::WordBatch::WordBatch(const EncoderParams& p)
    : vals_(lease_encoder(tape_, p, LeaseParts::WordOnly)), mark_(tape_.mark()) {}

std::vector<double> Encoder::WordBatch::encode(std::span<const int> chars) {
  tape_.rewind(mark_);
  Val e = encode_word_taped(tape_, vals_, chars);
  return tape_.value(e).data;
}

}  // namespace cctx
