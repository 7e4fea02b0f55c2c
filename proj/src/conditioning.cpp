#include "tango/conditioning.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "tango/errors.hpp"
#include "tango/random.hpp"

namespace tango {

ConditioningSequence ConditioningSequence::null(std::size_t d_text) {
  if (d_text == 0) throw ParameterError("d_text must be >= 1");
  ConditioningSequence s;
  s.tau_ = Tensor::zeros({1, d_text});
  s.is_null_ = true;
  return s;
}

ConditioningSequence::ConditioningSequence(std::vector<std::size_t> tokens,
                                           Tensor tau)
    : tokens_(std::move(tokens)), tau_(std::move(tau)) {
  if (tau_.rank() != 2 || tau_.dim(0) < 1 || tau_.dim(1) < 1) {
    throw ContractError("tau must be an L x d_text matrix with L >= 1");
  }
  if (tokens_.size() != tau_.dim(0)) {
    throw ContractError("token count does not match tau rows");
  }
}

std::string ConditioningSequence::key() const {
  if (is_null_) return "<null>";
  std::string k;
  for (auto t : tokens_) k += std::to_string(t) + ",";
  return k;
}

std::vector<std::string> normalize_caption(const std::string& caption) {
  std::string cleaned;
  cleaned.reserve(caption.size());
  for (unsigned char c : caption) {
    if (std::ispunct(c)) continue;
    cleaned.push_back(static_cast<char>(std::tolower(c)));
  }
  std::istringstream in(cleaned);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

ToyVocabulary::ToyVocabulary(const std::vector<std::string>& words,
                             std::size_t d_text, std::uint64_t seed)
    : d_text_(d_text), seed_(seed) {
  if (d_text == 0) throw ParameterError("d_text must be >= 1");
  words_.push_back(kUnknownWord);
  ids_[kUnknownWord] = kUnknownId;
  for (const auto& w : words) {
    if (w.empty() || ids_.contains(w)) continue;
    ids_[w] = words_.size();
    words_.push_back(w);
  }
  Rng rng(seed);
  auto values = standard_normal(rng, words_.size() * d_text);
  const double s = 1.0 / std::sqrt(static_cast<double>(d_text));
  for (auto& v : values) v *= s;
  table_ = Tensor({words_.size(), d_text}, std::move(values));
}

ToyVocabulary ToyVocabulary::from_captions(std::span<const std::string> captions,
                                           std::size_t d_text,
                                           std::uint64_t seed) {
  std::set<std::string> uniq;
  for (const auto& c : captions)
    for (auto& w : normalize_caption(c)) uniq.insert(std::move(w));
  return ToyVocabulary(std::vector<std::string>(uniq.begin(), uniq.end()),
                       d_text, seed);
}

std::size_t ToyVocabulary::id(const std::string& word) const {
  auto it = ids_.find(word);
  return it == ids_.end() ? kUnknownId : it->second;
}

ConditioningSequence ToyVocabulary::encode(const std::string& caption) const {
  const auto words = normalize_caption(caption);
  if (words.empty()) return ConditioningSequence::null(d_text_);
  std::vector<std::size_t> tokens;
  std::vector<double> rows;
  rows.reserve(words.size() * d_text_);
  const auto table = table_.data();
  for (const auto& w : words) {
    const auto t = id(w);
    tokens.push_back(t);
    rows.insert(rows.end(), table.begin() + static_cast<long>(t * d_text_),
                table.begin() + static_cast<long>((t + 1) * d_text_));
  }
  const auto L = tokens.size();
  return ConditioningSequence(std::move(tokens), Tensor({L, d_text_}, std::move(rows)));
}

void ToyVocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write vocabulary " + path.string());
  out << "# d_text=" << d_text_ << " seed=" << seed_ << "\n";
  for (std::size_t i = 1; i < words_.size(); ++i) out << words_[i] << ' ' << i << '\n';
}

ToyVocabulary ToyVocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open vocabulary " + path.string());
  std::string line;
  std::size_t d_text = 16;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::size_t, std::string>> entries;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string kv;
      while (hs >> kv) {
        if (kv.rfind("d_text=", 0) == 0) d_text = std::stoul(kv.substr(7));
        if (kv.rfind("seed=", 0) == 0) seed = std::stoull(kv.substr(5));
      }
      continue;
    }
    std::istringstream ls(line);
    std::string word;
    std::size_t id = 0;
    if (!(ls >> word >> id)) throw FormatError("bad vocabulary line: " + line);
    entries.emplace_back(id, word);
  }
  std::sort(entries.begin(), entries.end());
  std::vector<std::string> words;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].first != i + 1) throw FormatError("vocabulary ids must be 1..n");
    words.push_back(entries[i].second);
  }
  return ToyVocabulary(words, d_text, seed);
}

std::string concat_captions(const std::string& a, const std::string& b) {
  if (a.empty() || b.empty()) throw ParameterError("cannot concatenate an empty caption");
  return a + " " + b;
}

std::string to_string(EventStructure e) {
  return e == EventStructure::kMultipleEvents ? "multiple-events" : "single-event";
}

EventStructure classify_temporal(const std::string& caption) {
  static constexpr std::array<const char*, 5> kIdentifiers = {
      "while", "before", "after", "then", "followed"};
  for (const auto& w : normalize_caption(caption)) {
    for (const char* id : kIdentifiers)
      if (w == id) return EventStructure::kMultipleEvents;
  }
  return EventStructure::kSingleEvent;
}

}  // namespace tango
