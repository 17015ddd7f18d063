#include "cctx/corpus.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cctx/text.hpp"
#include "cctx/vocab.hpp"

namespace cctx {

namespace {

void add_diag(TokenizeResult& res, const TokenizeOptions& opts, std::string msg) {
  if (res.diagnostics.size() < opts.max_diagnostics) res.diagnostics.push_back(std::move(msg));
}

}  // namespace

TokenizeResult tokenize(std::string_view text, const TokenizeOptions& opts) {
  TokenizeResult res;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    if (line.empty() && pos > text.size()) break;  // no trailing phantom line

    std::u32string decoded;
    if (!utf8_decode(line, decoded)) {
      ++res.skipped_lines;
      add_diag(res, opts, "line " + std::to_string(line_no) + ": invalid UTF-8, skipped");
      continue;
    }
    Sentence sent;
    std::u32string word;
    auto flush = [&]() {
      if (word.empty()) return;
      if (word.size() > opts.max_word_len) {
        ++res.truncated_words;
        add_diag(res, opts,
                 "line " + std::to_string(line_no) + ": word truncated to " +
                     std::to_string(opts.max_word_len) + " chars");
        word.resize(opts.max_word_len);
      }
      sent.words.push_back(std::move(word));
      word.clear();
    };
    for (char32_t c : decoded) {
      if (is_space(c)) {
        flush();
      } else {
        word.push_back(c);
      }
    }
    flush();
    if (!sent.words.empty()) res.sentences.push_back(std::move(sent));
  }
  return res;
}

TokenizeResult tokenize_file(const std::string& path, const TokenizeOptions& opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("tokenize_file: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return tokenize(ss.str(), opts);
}

ConllResult read_conll(std::istream& in, const TokenizeOptions& opts) {
  ConllResult res;
  Sentence cur;
  std::string line;
  std::size_t line_no = 0;
  auto flush = [&]() {
    if (!cur.words.empty()) res.sentences.push_back(std::move(cur));
    cur = Sentence{};
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    const std::size_t s1 = line.find(' ');
    const std::size_t s2 = s1 == std::string::npos ? std::string::npos : line.find(' ', s1 + 1);
    if (s1 == std::string::npos || s2 == std::string::npos || s1 == 0 || s2 + 1 >= line.size()) {
      ++res.bad_lines;
      if (res.diagnostics.size() < opts.max_diagnostics) {
        res.diagnostics.push_back("line " + std::to_string(line_no) +
                                  ": expected \"word POS chunk-tag\", got \"" + line + "\"");
      }
      continue;
    }
    std::u32string word;
    if (!utf8_decode(std::string_view(line).substr(0, s1), word) || word.empty()) {
      ++res.bad_lines;
      if (res.diagnostics.size() < opts.max_diagnostics) {
        res.diagnostics.push_back("line " + std::to_string(line_no) + ": invalid word column");
      }
      continue;
    }
    if (word.size() > opts.max_word_len) word.resize(opts.max_word_len);
    cur.words.push_back(std::move(word));
    cur.tags.push_back(line.substr(s2 + 1));
  }
  flush();
  return res;
}

ConllResult read_conll_file(const std::string& path, const TokenizeOptions& opts) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_conll_file: cannot open " + path);
  return read_conll(in, opts);
}

Sentence perturb_typos(const Sentence& sentence, double p, Rng& rng, const CharVocab& chars) {
  if (p < 0.0 || p > 1.0) {
    throw std::invalid_argument("perturb_typos: p must be in [0,1], got " + std::to_string(p));
  }
  Sentence out = sentence;
  if (p == 0.0) return out;
  const std::vector<char32_t> inventory = chars.inventory();
  for (std::u32string& word : out.words) {
    if (rng.uniform() >= p) continue;
    if (word.empty()) continue;
    const std::size_t pos = static_cast<std::size_t>(rng.below(word.size()));
    const char32_t current = word[pos];
    // uniform over the inventory minus the character being replaced
    std::size_t options = inventory.size();
    std::size_t skip = inventory.size();
    for (std::size_t k = 0; k < inventory.size(); ++k) {
      if (inventory[k] == current) {
        skip = k;
        --options;
        break;
      }
    }
    if (options == 0) continue;
    std::size_t j = static_cast<std::size_t>(rng.below(options));
    if (skip != inventory.size() && j >= skip) ++j;
    word[pos] = inventory[j];
  }
  return out;
}

}  // namespace cctx
