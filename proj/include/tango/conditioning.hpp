#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tango/tensor.hpp"

namespace tango {

// Token embeddings tau (L x d_text) for one caption, or the reserved null
// sequence used for the unconditional branch.
class ConditioningSequence {
 public:
  static ConditioningSequence null(std::size_t d_text);

  ConditioningSequence(std::vector<std::size_t> tokens, Tensor tau);

  const std::vector<std::size_t>& tokens() const { return tokens_; }
  const Tensor& tau() const { return tau_; }
  bool is_null() const { return is_null_; }
  std::size_t length() const { return tau_.dim(0); }
  std::size_t d_text() const { return tau_.dim(1); }

  // Identity for grouping: equal keys imply equal tau.
  std::string key() const;

 private:
  ConditioningSequence() = default;
  std::vector<std::size_t> tokens_;
  Tensor tau_;
  bool is_null_ = false;
};

// Lowercase, strip ASCII punctuation, split on whitespace.
std::vector<std::string> normalize_caption(const std::string& caption);

// Frozen word-level encoder: a seeded random embedding table that never
// changes after construction. Id 0 is the unknown token.
class ToyVocabulary {
 public:
  static constexpr std::size_t kUnknownId = 0;
  static constexpr const char* kUnknownWord = "<unk>";

  ToyVocabulary(const std::vector<std::string>& words, std::size_t d_text,
                std::uint64_t seed);

  // Vocabulary over every normalized word in the captions, sorted.
  static ToyVocabulary from_captions(std::span<const std::string> captions,
                                     std::size_t d_text, std::uint64_t seed);

  std::size_t size() const { return words_.size(); }
  std::size_t d_text() const { return d_text_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t id(const std::string& word) const;
  const std::string& word(std::size_t id) const { return words_.at(id); }
  const Tensor& table() const { return table_; }

  ConditioningSequence encode(const std::string& caption) const;

  // "word id" per line, preceded by "# d_text=<d> seed=<s>".
  void save(const std::filesystem::path& path) const;
  static ToyVocabulary load(const std::filesystem::path& path);

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> ids_;
  std::size_t d_text_;
  std::uint64_t seed_;
  Tensor table_;
};

// Joins two captions with a single space.
std::string concat_captions(const std::string& a, const std::string& b);

enum class EventStructure { kMultipleEvents, kSingleEvent };

std::string to_string(EventStructure e);

// Multiple events iff a whole-word temporal identifier (while, before, after,
// then, followed) occurs.
EventStructure classify_temporal(const std::string& caption);

}  // namespace tango
