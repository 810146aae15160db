#include "concaps/text.h"

#include <algorithm>
#include <cctype>
#include <set>

#include "concaps/errors.h"

namespace concaps {

Tokens tokenize(std::string_view text) {
  Tokens out;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

Vocab::Vocab() {
  insert(std::string(kBosToken));
  insert(std::string(kEosToken));
  insert(std::string(kUnkToken));
  insert(std::string(kPadToken));
}

void Vocab::insert(const std::string& token) {
  if (ids_.count(token) > 0) fail(ErrorKind::kVocab, "duplicate vocabulary entry " + token);
  ids_[token] = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
}

Vocab Vocab::build(const std::vector<Tokens>& sentences) {
  std::set<std::string> words;
  for (const auto& s : sentences)
    for (const auto& w : s) words.insert(lowercase(w));
  Vocab v;
  for (const auto& w : words)
    if (v.ids_.count(w) == 0) v.insert(w);
  return v;
}

Vocab Vocab::from_tokens(const std::vector<std::string>& tokens) {
  if (tokens.size() < 4 || tokens[kBos] != kBosToken || tokens[kEos] != kEosToken ||
      tokens[kUnk] != kUnkToken || tokens[kPad] != kPadToken)
    fail(ErrorKind::kVocab, "vocabulary must start with the four reserved tokens");
  Vocab v;
  for (size_t i = 4; i < tokens.size(); ++i) v.insert(tokens[i]);
  return v;
}

int Vocab::id(std::string_view token) const {
  auto it = ids_.find(token);
  if (it != ids_.end()) return it->second;
  it = ids_.find(lowercase(token));
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || id >= size()) fail(ErrorKind::kVocab, "token id out of range");
  return tokens_[static_cast<size_t>(id)];
}

std::vector<int> Vocab::encode(std::span<const std::string> words) const {
  std::vector<int> out;
  out.reserve(words.size());
  for (const auto& w : words) out.push_back(id(w));
  return out;
}

std::vector<int> Vocab::encode_caption(std::span<const std::string> words) const {
  std::vector<int> out;
  out.reserve(words.size() + 2);
  out.push_back(kBos);
  for (const auto& w : words) out.push_back(id(w));
  out.push_back(kEos);
  return out;
}

Tokens Vocab::decode(std::span<const int> ids) const {
  Tokens out;
  for (int i : ids) {
    if (i == kBos || i == kEos || i == kPad) continue;
    out.push_back(token(i));
  }
  return out;
}

}  // namespace concaps
