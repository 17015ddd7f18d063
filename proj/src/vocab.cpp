#include "cctx/vocab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <stdexcept>

#include "cctx/text.hpp"

namespace cctx {

CharVocab::CharVocab(const std::vector<char32_t>& chars) {
  chars_.resize(kReserved, 0);
  chars_.reserve(chars.size() + kReserved);
  for (char32_t c : chars) {
    if (index_.count(c)) throw std::invalid_argument("CharVocab: duplicate character");
    index_[c] = static_cast<int>(chars_.size());
    chars_.push_back(c);
  }
}

std::vector<int> CharVocab::encode(const std::u32string& word) const {
  std::vector<int> ids;
  ids.reserve(word.size());
  for (char32_t c : word) ids.push_back(id(c));
  return ids;
}

std::u32string CharVocab::decode(std::span<const int> ids) const {
  std::u32string out;
  out.reserve(ids.size());
  for (int i : ids) {
    if (i < kReserved || i >= size()) {
      throw std::out_of_range("CharVocab::decode: id " + std::to_string(i) + " not decodable");
    }
    out.push_back(chars_[static_cast<std::size_t>(i)]);
  }
  return out;
}

std::vector<char32_t> CharVocab::inventory() const {
  return std::vector<char32_t>(chars_.begin() + kReserved, chars_.end());
}

TrainVocab::TrainVocab(std::vector<std::pair<std::u32string, std::uint64_t>> entries,
                       std::uint64_t unk_count) {
  surfaces_.push_back(U"<unk>");
  counts_.push_back(std::max<std::uint64_t>(unk_count, 1));
  for (auto& [surface, count] : entries) {
    if (count == 0) throw std::invalid_argument("TrainVocab: zero count for a kept word");
    if (index_.count(surface)) throw std::invalid_argument("TrainVocab: duplicate word");
    index_[surface] = static_cast<int>(surfaces_.size());
    surfaces_.push_back(std::move(surface));
    counts_.push_back(count);
  }
  total_ = 0;
  for (std::uint64_t c : counts_) total_ += c;
}

std::string TrainVocab::surface_utf8(int id) const { return utf8_encode(surface(id)); }

Vocabs build_vocabs(std::span<const Sentence> sentences, std::size_t min_count,
                    std::size_t char_cap, std::vector<std::string>* warnings) {
  if (sentences.empty()) throw std::invalid_argument("build_vocabs: empty corpus");

  std::map<char32_t, std::uint64_t> char_counts;  // ordered for deterministic ties
  std::map<std::u32string, std::uint64_t> word_counts;
  for (const Sentence& s : sentences) {
    for (const std::u32string& w : s.words) {
      if (w.empty()) throw std::invalid_argument("build_vocabs: empty word in corpus");
      ++word_counts[w];
      for (char32_t c : w) ++char_counts[c];
    }
  }
  if (word_counts.empty()) throw std::invalid_argument("build_vocabs: empty corpus");

  auto by_count_desc = [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  };

  std::vector<std::pair<char32_t, std::uint64_t>> chars(char_counts.begin(), char_counts.end());
  std::sort(chars.begin(), chars.end(), by_count_desc);
  std::vector<char32_t> char_list;
  char_list.reserve(chars.size());
  for (auto& [c, n] : chars) char_list.push_back(c);
  CharVocab char_vocab(char_list);

  if (static_cast<std::size_t>(char_vocab.size()) > char_cap) {
    std::string msg = "character inventory has " + std::to_string(char_vocab.size()) +
                      " entries (cap " + std::to_string(char_cap) +
                      "); check the tokenizer or the input encoding";
    if (warnings) {
      warnings->push_back(std::move(msg));
    } else {
      std::cerr << "warning: " << msg << "\n";
    }
  }

  std::vector<std::pair<std::u32string, std::uint64_t>> kept;
  std::uint64_t folded = 0;
  for (auto& [w, n] : word_counts) {
    if (n >= min_count) {
      kept.emplace_back(w, n);
    } else {
      folded += n;
    }
  }
  std::sort(kept.begin(), kept.end(), by_count_desc);
  return Vocabs{std::move(char_vocab), TrainVocab(std::move(kept), folded)};
}

void export_vocab(const TrainVocab& vocab, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("export_vocab: cannot write " + path);
  for (int i = 0; i < vocab.size(); ++i) {
    out << i << '\t' << vocab.surface_utf8(i) << '\t' << vocab.count(i) << '\n';
  }
}

NoiseDistribution::NoiseDistribution(std::span<const std::uint64_t> counts, double power) {
  if (counts.empty()) throw std::invalid_argument("NoiseDistribution: empty counts");
  if (power < 0.0) throw std::invalid_argument("NoiseDistribution: power must be >= 0");
  double total = 0.0;
  prob_.resize(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    prob_[i] = counts[i] > 0 ? std::pow(static_cast<double>(counts[i]), power) : 0.0;
    total += prob_[i];
  }
  if (total <= 0.0) throw std::invalid_argument("NoiseDistribution: all counts are zero");
  for (double& p : prob_) p /= total;

  // Walker alias table
  const std::size_t n = prob_.size();
  accept_.assign(n, 0.0);
  alias_.assign(n, 0);
  std::vector<std::uint32_t> small, large;
  std::vector<double> scaled(n);
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = prob_[i] * static_cast<double>(n);
    (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
  }
  while (!small.empty() && !large.empty()) {
    const std::uint32_t s = small.back();
    const std::uint32_t l = large.back();
    small.pop_back();
    large.pop_back();
    accept_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] -= 1.0 - scaled[s];
    (scaled[l] < 1.0 ? small : large).push_back(l);
  }
  for (std::uint32_t i : large) {
    accept_[i] = 1.0;
    alias_[i] = i;
  }
  for (std::uint32_t i : small) {
    accept_[i] = 1.0;
    alias_[i] = i;
  }
}

int NoiseDistribution::sample(Rng& rng) const {
  const std::size_t i = static_cast<std::size_t>(rng.below(prob_.size()));
  return rng.uniform() < accept_[i] ? static_cast<int>(i) : static_cast<int>(alias_[i]);
}

NoiseDistribution noise_distribution(const TrainVocab& vocab, double power) {
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(vocab.size()));
  for (int i = 0; i < vocab.size(); ++i) counts[static_cast<std::size_t>(i)] = vocab.count(i);
  return NoiseDistribution(counts, power);
}

EncodedSentence encode_chars(const Sentence& s, const CharVocab& chars) {
  EncodedSentence out;
  out.words.reserve(s.words.size());
  for (const std::u32string& w : s.words) out.words.push_back(chars.encode(w));
  return out;
}

EncodedSentence encode_for_training(const Sentence& s, const CharVocab& chars,
                                    const TrainVocab& words) {
  EncodedSentence out = encode_chars(s, chars);
  out.targets.reserve(s.words.size());
  for (const std::u32string& w : s.words) out.targets.push_back(words.id(w));
  return out;
}

}  // namespace cctx
