#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "cctx/rng.hpp"

namespace cctx {

class CharVocab;

// One sentence: an ordered list of words, each kept as a code-point string so
// it can be re-encoded against any character vocabulary. Tags ride along for
// probe datasets and are either empty or one per word.
struct Sentence {
  std::vector<std::u32string> words;
  std::vector<std::string> tags;

  std::size_t size() const { return words.size(); }
};

struct TokenizeOptions {
  std::size_t max_word_len = 64;    // longer tokens are truncated with a warning
  std::size_t max_diagnostics = 20; // cap on recorded per-line messages
};

struct TokenizeResult {
  std::vector<Sentence> sentences;
  std::size_t skipped_lines = 0;    // undecodable lines
  std::size_t truncated_words = 0;
  std::vector<std::string> diagnostics;
};

// One sentence per input line; words split on runs of Unicode whitespace;
// empty lines skipped. Undecodable lines are skipped and counted.
TokenizeResult tokenize(std::string_view text, const TokenizeOptions& opts = {});
TokenizeResult tokenize_file(const std::string& path, const TokenizeOptions& opts = {});

// CoNLL-2000 column format: "word POS chunk-tag" per line, blank line between
// sentences. Only columns 1 and 3 are consumed.
struct ConllResult {
  std::vector<Sentence> sentences;  // tags filled with the chunk column
  std::vector<std::string> diagnostics;
  std::size_t bad_lines = 0;
};

ConllResult read_conll(std::istream& in, const TokenizeOptions& opts = {});
ConllResult read_conll_file(const std::string& path, const TokenizeOptions& opts = {});

// Independently per word, with probability p, replaces one uniformly chosen
// character position by a uniformly chosen non-reserved vocabulary character
// different from the one it replaces. The input sentence is left untouched.
// Draw order per word: perturb coin, then position, then replacement.
Sentence perturb_typos(const Sentence& sentence, double p, Rng& rng, const CharVocab& chars);

}  // namespace cctx
