// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avinpaint/losses/lexicon.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace avi::losses {

namespace {

std::string Lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string> SplitWords(std::string_view text) {
  std::vector<std::string> words;
  std::istringstream in{std::string(text)};
  for (std::string w; in >> w;) words.push_back(w);
  return words;
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (!index_.emplace(symbols_[i], static_cast<int>(i)).second)
      throw std::invalid_argument("duplicate vocabulary symbol: " + symbols_[i]);
  }
}

Vocabulary Vocabulary::Phones() {
  return Vocabulary({"AA", "AE", "AH", "AO", "AW", "AY", "B",  "CH", "D",  "DH",
                     "EH", "ER", "EY", "F",  "G",  "HH", "IH", "IY", "JH", "K",
                     "L",  "M",  "N",  "NG", "OW", "OY", "P",  "R",  "S",  "SH",
                     "T",  "TH", "UH", "UW", "V",  "W",  "Y",  "Z",  "ZH"});
}

Vocabulary Vocabulary::Characters() {
  std::vector<std::string> symbols;
  for (char c = 'a'; c <= 'z'; ++c) symbols.emplace_back(1, c);
  symbols.emplace_back(" ");
  return Vocabulary(std::move(symbols));
}

int Vocabulary::Index(std::string_view symbol) const {
  const auto it = index_.find(symbol);
  if (it == index_.end()) throw std::invalid_argument("symbol not in vocabulary: " + std::string(symbol));
  return it->second;
}

std::vector<int> Vocabulary::Encode(const std::vector<std::string>& units) const {
  std::vector<int> out;
  out.reserve(units.size());
  for (const auto& u : units) out.push_back(Index(u));
  return out;
}

Lexicon Lexicon::Grid() {
  static const char* const kEntries[][2] = {
      // commands, colours, prepositions
      {"bin", "B IH N"}, {"lay", "L EY"}, {"place", "P L EY S"}, {"set", "S EH T"},
      {"blue", "B L UW"}, {"green", "G R IY N"}, {"red", "R EH D"}, {"white", "W AY T"},
      {"at", "AE T"}, {"by", "B AY"}, {"in", "IH N"}, {"with", "W IH DH"},
      // letters (no w in the corpus)
      {"a", "EY"}, {"b", "B IY"}, {"c", "S IY"}, {"d", "D IY"}, {"e", "IY"},
      {"f", "EH F"}, {"g", "JH IY"}, {"h", "EY CH"}, {"i", "AY"}, {"j", "JH EY"},
      {"k", "K EY"}, {"l", "EH L"}, {"m", "EH M"}, {"n", "EH N"}, {"o", "OW"},
      {"p", "P IY"}, {"q", "K Y UW"}, {"r", "AA R"}, {"s", "EH S"}, {"t", "T IY"},
      {"u", "Y UW"}, {"v", "V IY"}, {"x", "EH K S"}, {"y", "W AY"}, {"z", "Z IY"},
      // digits
      {"zero", "Z IH R OW"}, {"one", "W AH N"}, {"two", "T UW"}, {"three", "TH R IY"},
      {"four", "F AO R"}, {"five", "F AY V"}, {"six", "S IH K S"}, {"seven", "S EH V AH N"},
      {"eight", "EY T"}, {"nine", "N AY N"},
      // adverbs
      {"again", "AH G EH N"}, {"now", "N AW"}, {"please", "P L IY Z"}, {"soon", "S UW N"},
  };
  Lexicon lex;
  for (const auto& e : kEntries) lex.Add(e[0], SplitWords(e[1]));
  return lex;
}

Lexicon Lexicon::FromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("lexicon JSON must map word -> phone list");
  Lexicon lex;
  for (const auto& [word, phones] : j.items()) {
    if (!phones.is_array()) throw std::invalid_argument("lexicon entry for '" + word + "' is not a list");
    lex.Add(word, phones.get<std::vector<std::string>>());
  }
  return lex;
}

Lexicon Lexicon::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open lexicon " + path.string());
  return FromJson(nlohmann::json::parse(in));
}

nlohmann::json Lexicon::ToJson() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [word, phones] : entries_) j[word] = phones;
  return j;
}

void Lexicon::Add(std::string word, std::vector<std::string> phones) {
  if (word.empty()) throw std::invalid_argument("empty lexicon word");
  entries_[Lower(word)] = std::move(phones);
}

bool Lexicon::Contains(std::string_view word) const { return entries_.count(Lower(word)) > 0; }

std::vector<std::string> Lexicon::Phonemize(std::string_view transcript) const {
  std::vector<std::string> out;
  for (const auto& w : SplitWords(transcript)) {
    const auto it = entries_.find(Lower(w));
    if (it == entries_.end()) throw std::invalid_argument("word not in lexicon: " + w);
    out.insert(out.end(), it->second.begin(), it->second.end());
  }
  return out;
}

LabelMode ParseLabelMode(std::string_view name) {
  if (name == "phones") return LabelMode::kPhones;
  if (name == "chars") return LabelMode::kCharacters;
  throw std::invalid_argument("unknown label mode: " + std::string(name));
}

std::string_view LabelModeName(LabelMode mode) {
  return mode == LabelMode::kPhones ? "phones" : "chars";
}

Tokenizer::Tokenizer(LabelMode mode, Lexicon lexicon)
    : mode_(mode),
      lexicon_(std::move(lexicon)),
      vocab_(mode == LabelMode::kPhones ? Vocabulary::Phones() : Vocabulary::Characters()) {
  if (mode_ == LabelMode::kPhones)
    for (const auto& [word, phones] : lexicon_.Entries()) vocab_.Encode(phones);
}

std::vector<int> Tokenizer::Encode(std::string_view transcript) const {
  if (mode_ == LabelMode::kPhones) return vocab_.Encode(lexicon_.Phonemize(transcript));
  std::vector<int> out;
  for (const auto& w : SplitWords(transcript)) {
    if (!out.empty()) out.push_back(vocab_.Index(" "));
    for (char c : Lower(w)) {
      if (c < 'a' || c > 'z') throw std::invalid_argument(std::string("character outside a-z: ") + c);
      out.push_back(vocab_.Index(std::string(1, c)));
    }
  }
  return out;
}

}  // namespace avi::losses
