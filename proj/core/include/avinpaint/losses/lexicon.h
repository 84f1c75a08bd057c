// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace avi::losses {

// Ordered label inventory; the CTC blank is appended after the last symbol.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> symbols);

  // 39 stress-free ARPAbet phones, alphabetical.
  static Vocabulary Phones();
  // "a".."z" followed by " ".
  static Vocabulary Characters();

  int Size() const { return static_cast<int>(symbols_.size()); }
  int Blank() const { return Size(); }
  const std::vector<std::string>& Symbols() const { return symbols_; }
  // Throws std::invalid_argument for unknown symbols.
  int Index(std::string_view symbol) const;
  std::vector<int> Encode(const std::vector<std::string>& units) const;

 private:
  std::vector<std::string> symbols_;
  std::map<std::string, int, std::less<>> index_;
};

// word -> phone list. Lookup is case-insensitive on the word.
class Lexicon {
 public:
  Lexicon() = default;

  // Pronunciations for the 51-word Grid command vocabulary.
  static Lexicon Grid();
  static Lexicon FromJson(const nlohmann::json& j);
  static Lexicon Load(const std::filesystem::path& path);
  nlohmann::json ToJson() const;

  void Add(std::string word, std::vector<std::string> phones);
  bool Contains(std::string_view word) const;
  const std::map<std::string, std::vector<std::string>, std::less<>>& Entries() const {
    return entries_;
  }
  // Concatenated phones of the whitespace-separated words. Throws for
  // out-of-lexicon words.
  std::vector<std::string> Phonemize(std::string_view transcript) const;

 private:
  std::map<std::string, std::vector<std::string>, std::less<>> entries_;
};

enum class LabelMode { kPhones, kCharacters };

LabelMode ParseLabelMode(std::string_view name);
std::string_view LabelModeName(LabelMode mode);

// Transcript -> CTC label indices.
class Tokenizer {
 public:
  Tokenizer(LabelMode mode, Lexicon lexicon);

  LabelMode Mode() const { return mode_; }
  const Vocabulary& Vocab() const { return vocab_; }
  std::vector<int> Encode(std::string_view transcript) const;

 private:
  LabelMode mode_;
  Lexicon lexicon_;
  Vocabulary vocab_;
};

}  // namespace avi::losses
