#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cctx/corpus.hpp"
#include "cctx/rng.hpp"

namespace cctx {

// Character inventory with reserved padding and unknown ids. Ids are dense in
// [0, size()); unseen characters map to kUnk at encode time.
class CharVocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kReserved = 2;

  CharVocab() = default;
  // chars must be unique; ids are assigned in the given order after reserved.
  explicit CharVocab(const std::vector<char32_t>& chars);

  int size() const { return static_cast<int>(chars_.size()); }
  bool contains(char32_t c) const { return index_.count(c) > 0; }
  int id(char32_t c) const {
    auto it = index_.find(c);
    return it == index_.end() ? kUnk : it->second;
  }
  // Only meaningful for non-reserved ids.
  char32_t surface(int id) const { return chars_.at(static_cast<std::size_t>(id)); }

  std::vector<int> encode(const std::u32string& word) const;
  // Inverse of encode for in-vocab, non-reserved ids.
  std::u32string decode(std::span<const int> ids) const;

  // Non-reserved code points in id order.
  std::vector<char32_t> inventory() const;

 private:
  std::vector<char32_t> chars_;  // chars_[0], chars_[1] are placeholders
  std::unordered_map<char32_t, int> index_;
};

// Training-time word inventory with unigram counts. Words below the frequency
// threshold fold into kUnk. Ids dense in [0, size()).
class TrainVocab {
 public:
  static constexpr int kUnk = 0;

  TrainVocab() = default;
  // entries: (surface, count) already ordered; id i+1 is entries[i];
  // unk_count is floored at 1 to keep counts strictly positive.
  TrainVocab(std::vector<std::pair<std::u32string, std::uint64_t>> entries,
             std::uint64_t unk_count);

  int size() const { return static_cast<int>(surfaces_.size()); }
  int id(const std::u32string& word) const {
    auto it = index_.find(word);
    return it == index_.end() ? kUnk : it->second;
  }
  const std::u32string& surface(int id) const { return surfaces_.at(static_cast<std::size_t>(id)); }
  std::string surface_utf8(int id) const;
  std::uint64_t count(int id) const { return counts_.at(static_cast<std::size_t>(id)); }
  std::uint64_t total_tokens() const { return total_; }

 private:
  std::vector<std::u32string> surfaces_;  // surfaces_[0] = "<unk>"
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::u32string, int> index_;
  std::uint64_t total_ = 0;
};

struct Vocabs {
  CharVocab chars;
  TrainVocab words;
};

// Deterministic vocabulary construction: ids by descending count, ties broken
// by code-point order. Warns (into *warnings if given, else stderr) when the
// character inventory exceeds char_cap, which usually means a tokenizer bug.
Vocabs build_vocabs(std::span<const Sentence> sentences, std::size_t min_count,
                    std::size_t char_cap = 4096, std::vector<std::string>* warnings = nullptr);

// "id<TAB>surface<TAB>count" per line.
void export_vocab(const TrainVocab& vocab, const std::string& path);

// P(w) proportional to count(w)^power, sampled in O(1) via a Walker alias table.
class NoiseDistribution {
 public:
  NoiseDistribution() = default;
  NoiseDistribution(std::span<const std::uint64_t> counts, double power);

  std::size_t size() const { return prob_.size(); }
  double prob(std::size_t id) const { return prob_.at(id); }
  int sample(Rng& rng) const;

 private:
  std::vector<double> prob_;
  std::vector<double> accept_;
  std::vector<std::uint32_t> alias_;
};

NoiseDistribution noise_distribution(const TrainVocab& vocab, double power);

// Sentence encoded against the vocabularies: char ids per word, and word ids
// as training targets when a TrainVocab is supplied.
struct EncodedSentence {
  std::vector<std::vector<int>> words;
  std::vector<int> targets;

  std::size_t size() const { return words.size(); }
};

EncodedSentence encode_chars(const Sentence& s, const CharVocab& chars);
EncodedSentence encode_for_training(const Sentence& s, const CharVocab& chars,
                                    const TrainVocab& words);

}  // namespace cctx
