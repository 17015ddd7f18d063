#pragma once

#include <string>
#include <vector>

#include "cctx/training.hpp"

namespace cctx {

// Binary container, magic "CCTX", little-endian throughout.
//   header: magic, u32 version, u8 kind (0 model / 1 checkpoint),
//           u8 dtype (0 f32 / 1 f64), u32 dims C d_char h_word h_ctx
//           d_hidden d_ctx N (N = 0 for inference exports)
//   char vocab: u32 count of non-reserved entries, then their code points
//   tensors: u32 count, then (u32 name_len, name, u32 rows, u32 cols, payload)
// Checkpoints append the train vocab, the config snapshot, optimizer state
// tensors and the progress counters.
//
// Inference exports always carry float32 payloads and omit the output
// projection; checkpoints store payloads at the training precision so a
// resumed run continues bit-for-bit.

inline constexpr char kModelMagic[4] = {'C', 'C', 'T', 'X'};
inline constexpr std::uint32_t kFormatVersion = 1;

struct LoadedModel {
  EncoderParams params;
  CharVocab chars;
};

void save_model(const std::string& path, const EncoderParams& params, const CharVocab& chars);
LoadedModel load_model(const std::string& path);

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

// True if the file at path is a checkpoint (kind byte), false for a model.
bool is_checkpoint_file(const std::string& path);

struct TensorInfo {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

struct ModelInfo {
  bool checkpoint = false;
  Precision dtype = Precision::F32;
  EncoderConfig cfg;
  std::size_t char_count = 0;
  std::size_t vocab_count = 0;
  std::vector<TensorInfo> tensors;
  std::size_t encoder_params = 0;  // everything except the output projection
  std::size_t output_params = 0;
};

ModelInfo inspect_file(const std::string& path);

}  // namespace cctx
