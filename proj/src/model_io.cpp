#include "cctx/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "cctx/text.hpp"

namespace cctx {

namespace {

void put_bytes(std::ostream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void put_u8(std::ostream& out, std::uint8_t v) { put_bytes(out, &v, 1); }

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  put_bytes(out, b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  put_u32(out, static_cast<std::uint32_t>(v));
  put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  put_bytes(out, s.data(), s.size());
}

struct Reader {
  std::istream& in;
  std::string path;

  void get_bytes(void* p, std::size_t n) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (in.gcount() != static_cast<std::streamsize>(n)) {
      throw std::runtime_error(path + ": unexpected end of file");
    }
  }
  std::uint8_t get_u8() {
    std::uint8_t v;
    get_bytes(&v, 1);
    return v;
  }
  std::uint32_t get_u32() {
    unsigned char b[4];
    get_bytes(b, 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  std::uint64_t get_u64() {
    const std::uint64_t lo = get_u32();
    const std::uint64_t hi = get_u32();
    return lo | (hi << 32);
  }
  double get_f64() { return std::bit_cast<double>(get_u64()); }
  std::string get_string() {
    const std::uint32_t n = get_u32();
    std::string s(n, '\0');
    get_bytes(s.data(), n);
    return s;
  }
};

void put_tensor(std::ostream& out, const std::string& name, const Tensor2& t, Precision dtype) {
  put_string(out, name);
  put_u32(out, static_cast<std::uint32_t>(t.rows));
  put_u32(out, static_cast<std::uint32_t>(t.cols));
  if (dtype == Precision::F32) {
    for (double x : t.data) {
      const std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(x));
      put_u32(out, bits);
    }
  } else {
    for (double x : t.data) put_f64(out, x);
  }
}

Tensor2 get_tensor(Reader& r, std::string& name, Precision dtype) {
  name = r.get_string();
  const std::uint32_t rows = r.get_u32();
  const std::uint32_t cols = r.get_u32();
  Tensor2 t(rows, cols);
  if (dtype == Precision::F32) {
    for (double& x : t.data) x = static_cast<double>(std::bit_cast<float>(r.get_u32()));
  } else {
    for (double& x : t.data) x = r.get_f64();
  }
  return t;
}

struct Header {
  bool checkpoint = false;
  Precision dtype = Precision::F32;
  EncoderConfig cfg;
  std::uint32_t char_count = 0;
  std::uint32_t vocab_count = 0;
};

void put_header(std::ostream& out, const Header& h) {
  put_bytes(out, kModelMagic, 4);
  put_u32(out, kFormatVersion);
  put_u8(out, h.checkpoint ? 1 : 0);
  put_u8(out, h.dtype == Precision::F32 ? 0 : 1);
  put_u32(out, h.char_count);
  put_u32(out, static_cast<std::uint32_t>(h.cfg.d_char));
  put_u32(out, static_cast<std::uint32_t>(h.cfg.h_word));
  put_u32(out, static_cast<std::uint32_t>(h.cfg.h_ctx));
  put_u32(out, static_cast<std::uint32_t>(h.cfg.d_hidden));
  put_u32(out, static_cast<std::uint32_t>(h.cfg.d_ctx));
  put_u32(out, h.vocab_count);
}

Header get_header(Reader& r) {
  char magic[4];
  r.get_bytes(magic, 4);
  if (std::memcmp(magic, kModelMagic, 4) != 0) {
    throw std::runtime_error(r.path + ": not a CCTX model file (bad magic)");
  }
  const std::uint32_t version = r.get_u32();
  if (version != kFormatVersion) {
    throw std::runtime_error(r.path + ": unsupported format version " + std::to_string(version));
  }
  Header h;
  h.checkpoint = r.get_u8() != 0;
  h.dtype = r.get_u8() == 0 ? Precision::F32 : Precision::F64;
  h.char_count = r.get_u32();
  h.cfg.d_char = r.get_u32();
  h.cfg.h_word = r.get_u32();
  h.cfg.h_ctx = r.get_u32();
  h.cfg.d_hidden = r.get_u32();
  h.cfg.d_ctx = r.get_u32();
  h.vocab_count = r.get_u32();
  return h;
}

void put_char_vocab(std::ostream& out, const CharVocab& chars) {
  const auto inv = chars.inventory();
  put_u32(out, static_cast<std::uint32_t>(inv.size()));
  for (char32_t c : inv) put_u32(out, static_cast<std::uint32_t>(c));
}

CharVocab get_char_vocab(Reader& r) {
  const std::uint32_t n = r.get_u32();
  std::vector<char32_t> inv(n);
  for (char32_t& c : inv) c = static_cast<char32_t>(r.get_u32());
  return CharVocab(inv);
}

void put_train_vocab(std::ostream& out, const TrainVocab& words) {
  put_u32(out, static_cast<std::uint32_t>(words.size()));
  for (int i = 0; i < words.size(); ++i) {
    put_string(out, words.surface_utf8(i));
    put_u64(out, words.count(i));
  }
}

TrainVocab get_train_vocab(Reader& r) {
  const std::uint32_t n = r.get_u32();
  if (n == 0) throw std::runtime_error(r.path + ": checkpoint without train vocab");
  std::string unk_surface = r.get_string();
  const std::uint64_t unk_count = r.get_u64();
  (void)unk_surface;
  std::vector<std::pair<std::u32string, std::uint64_t>> entries;
  entries.reserve(n - 1);
  for (std::uint32_t i = 1; i < n; ++i) {
    const std::string utf8 = r.get_string();
    std::u32string surface;
    if (!utf8_decode(utf8, surface)) {
      throw std::runtime_error(r.path + ": corrupt vocab entry");
    }
    entries.emplace_back(std::move(surface), r.get_u64());
  }
  return TrainVocab(std::move(entries), unk_count);
}

void put_config(std::ostream& out, const TrainConfig& c) {
  put_u64(out, c.k_noise);
  put_f64(out, c.noise_power);
  put_f64(out, c.learning_rate);
  put_u8(out, c.optimizer == OptimizerKind::Sgd ? 0 : 1);
  put_u64(out, c.batch_sentences);
  put_u64(out, c.epochs);
  put_f64(out, c.grad_clip);
  put_u64(out, c.seed);
  put_u8(out, c.precision == Precision::F32 ? 0 : 1);
  put_u64(out, c.min_count);
  put_u64(out, c.log_every);
  put_u64(out, c.checkpoint_every);
  put_u64(out, c.threads);
  put_u64(out, c.max_word_len);
}

TrainConfig get_config(Reader& r) {
  TrainConfig c;
  c.k_noise = r.get_u64();
  c.noise_power = r.get_f64();
  c.learning_rate = r.get_f64();
  c.optimizer = r.get_u8() == 0 ? OptimizerKind::Sgd : OptimizerKind::Adam;
  c.batch_sentences = r.get_u64();
  c.epochs = r.get_u64();
  c.grad_clip = r.get_f64();
  c.seed = r.get_u64();
  c.precision = r.get_u8() == 0 ? Precision::F32 : Precision::F64;
  c.min_count = r.get_u64();
  c.log_every = r.get_u64();
  c.checkpoint_every = r.get_u64();
  c.threads = r.get_u64();
  c.max_word_len = r.get_u64();
  return c;
}

void put_params_tensors(std::ostream& out, const EncoderParams& params, Precision dtype) {
  const auto named = params.named_params();
  put_u32(out, static_cast<std::uint32_t>(named.size()));
  for (const auto& [name, t] : named) put_tensor(out, name, *t, dtype);
}

void read_params_tensors(Reader& r, EncoderParams& params, Precision dtype) {
  const std::uint32_t count = r.get_u32();
  auto named = params.named_params();
  if (count != named.size()) {
    throw std::runtime_error(r.path + ": expected " + std::to_string(named.size()) +
                             " tensors, found " + std::to_string(count));
  }
  for (auto& [expected_name, slot] : named) {
    std::string name;
    Tensor2 t = get_tensor(r, name, dtype);
    if (name != expected_name) {
      throw std::runtime_error(r.path + ": tensor \"" + name + "\" where \"" + expected_name +
                               "\" was expected");
    }
    if (!t.same_shape(*slot)) {
      throw std::runtime_error(r.path + ": tensor \"" + name + "\" has shape " + t.shape_str() +
                               ", header implies " + slot->shape_str());
    }
    *slot = std::move(t);
  }
}

// Allocates parameter shells matching the header so tensor reads can verify
// names and shapes against them.
EncoderParams shell_params(const Header& h) {
  EncoderParams p;
  p.cfg = h.cfg;
  p.char_count = h.char_count;
  p.vocab_count = h.vocab_count;
  p.char_table = Tensor2(h.char_count, h.cfg.d_char);
  auto cell = [](std::size_t din, std::size_t hid) {
    LstmCellParams c;
    c.input_dim = din;
    c.hidden = hid;
    c.w_input = Tensor2(din, 4 * hid);
    c.w_hidden = Tensor2(hid, 4 * hid);
    c.bias = Tensor2(1, 4 * hid);
    return c;
  };
  p.char_fwd = cell(h.cfg.d_char, h.cfg.h_word);
  p.char_bwd = cell(h.cfg.d_char, h.cfg.h_word);
  p.ctx_fwd = cell(h.cfg.word_dim(), h.cfg.h_ctx);
  p.ctx_bwd = cell(h.cfg.word_dim(), h.cfg.h_ctx);
  p.mlp_w1 = Tensor2(2 * h.cfg.h_ctx, h.cfg.d_hidden);
  p.mlp_b1 = Tensor2(1, h.cfg.d_hidden);
  p.mlp_w2 = Tensor2(h.cfg.d_hidden, h.cfg.d_ctx);
  p.mlp_b2 = Tensor2(1, h.cfg.d_ctx);
  if (h.vocab_count > 0) {
    p.out_weight = Tensor2(h.vocab_count, h.cfg.d_ctx);
    p.out_bias = Tensor2(h.vocab_count, 1);
  }
  return p;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

}  // namespace

void save_model(const std::string& path, const EncoderParams& params, const CharVocab& chars) {
  std::ofstream out = open_out(path);
  Header h;
  h.checkpoint = false;
  h.dtype = Precision::F32;
  h.cfg = params.cfg;
  h.char_count = static_cast<std::uint32_t>(params.char_count);
  h.vocab_count = 0;
  put_header(out, h);
  put_char_vocab(out, chars);

  // export without the training-only output projection
  if (params.has_output()) {
    EncoderParams stripped = params;
    stripped.drop_output();
    put_params_tensors(out, stripped, Precision::F32);
  } else {
    put_params_tensors(out, params, Precision::F32);
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

LoadedModel load_model(const std::string& path) {
  std::ifstream in = open_in(path);
  Reader r{in, path};
  Header h = get_header(r);
  if (h.checkpoint) {
    throw std::runtime_error(path + ": is a checkpoint; load_checkpoint should be used");
  }
  LoadedModel m;
  m.chars = get_char_vocab(r);
  m.params = shell_params(h);
  read_params_tensors(r, m.params, h.dtype);
  return m;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::ofstream out = open_out(path);
  Header h;
  h.checkpoint = true;
  h.dtype = ck.config.precision;
  h.cfg = ck.params.cfg;
  h.char_count = static_cast<std::uint32_t>(ck.params.char_count);
  h.vocab_count = static_cast<std::uint32_t>(ck.params.vocab_count);
  put_header(out, h);
  put_char_vocab(out, ck.chars);
  put_params_tensors(out, ck.params, h.dtype);

  put_train_vocab(out, ck.words);
  put_config(out, ck.config);

  put_u8(out, ck.opt.kind == OptimizerKind::Sgd ? 0 : 1);
  put_u64(out, ck.opt.t);
  put_u32(out, static_cast<std::uint32_t>(ck.opt.m.size()));
  for (std::size_t i = 0; i < ck.opt.m.size(); ++i) {
    put_tensor(out, "adam.m." + std::to_string(i), ck.opt.m[i], Precision::F64);
    put_tensor(out, "adam.v." + std::to_string(i), ck.opt.v[i], Precision::F64);
  }

  put_u64(out, ck.step);
  put_u64(out, ck.epoch);
  put_u64(out, ck.pos_in_epoch);
  if (!out) throw std::runtime_error("write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in = open_in(path);
  Reader r{in, path};
  Header h = get_header(r);
  if (!h.checkpoint) {
    throw std::runtime_error(path + ": is an inference model, not a checkpoint");
  }
  Checkpoint ck;
  ck.chars = get_char_vocab(r);
  ck.params = shell_params(h);
  read_params_tensors(r, ck.params, h.dtype);

  ck.words = get_train_vocab(r);
  if (static_cast<std::uint32_t>(ck.words.size()) != h.vocab_count) {
    throw std::runtime_error(path + ": vocab size does not match header");
  }
  ck.config = get_config(r);

  ck.opt.kind = r.get_u8() == 0 ? OptimizerKind::Sgd : OptimizerKind::Adam;
  ck.opt.t = r.get_u64();
  const std::uint32_t n_opt = r.get_u32();
  ck.opt.m.reserve(n_opt);
  ck.opt.v.reserve(n_opt);
  for (std::uint32_t i = 0; i < n_opt; ++i) {
    std::string name;
    ck.opt.m.push_back(get_tensor(r, name, Precision::F64));
    ck.opt.v.push_back(get_tensor(r, name, Precision::F64));
  }

  ck.step = r.get_u64();
  ck.epoch = r.get_u64();
  ck.pos_in_epoch = r.get_u64();
  return ck;
}

bool is_checkpoint_file(const std::string& path) {
  std::ifstream in = open_in(path);
  Reader r{in, path};
  return get_header(r).checkpoint;
}

ModelInfo inspect_file(const std::string& path) {
  std::ifstream in = open_in(path);
  Reader r{in, path};
  Header h = get_header(r);
  ModelInfo info;
  info.checkpoint = h.checkpoint;
  info.dtype = h.dtype;
  info.cfg = h.cfg;
  info.char_count = h.char_count;
  info.vocab_count = h.vocab_count;

  get_char_vocab(r);
  const std::uint32_t count = r.get_u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name;
    Tensor2 t = get_tensor(r, name, h.dtype);
    const bool is_output = name.rfind("out.", 0) == 0;
    (is_output ? info.output_params : info.encoder_params) += t.numel();
    info.tensors.push_back(TensorInfo{std::move(name), t.rows, t.cols});
  }
  return info;
}

}  // namespace cctx
