#ifndef CONCAPS_TEXT_H_
#define CONCAPS_TEXT_H_

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace concaps {

using Tokens = std::vector<std::string>;

// Splits on ASCII whitespace. Case is preserved; Vocab lowercases on lookup.
Tokens tokenize(std::string_view text);
std::string join_tokens(std::span<const std::string> tokens);
std::string lowercase(std::string_view s);

// Token <-> id bijection with four reserved ids.
class Vocab {
 public:
  static constexpr int kBos = 0;  // <s>
  static constexpr int kEos = 1;  // </s>
  static constexpr int kUnk = 2;
  static constexpr int kPad = 3;
  static constexpr std::string_view kBosToken = "<s>";
  static constexpr std::string_view kEosToken = "</s>";
  static constexpr std::string_view kUnkToken = "<unk>";
  static constexpr std::string_view kPadToken = "<pad>";

  Vocab();
  // Reserved tokens first, then the lowercased distinct words in sorted order.
  static Vocab build(const std::vector<Tokens>& sentences);
  static Vocab from_tokens(const std::vector<std::string>& tokens);

  int id(std::string_view token) const;
  const std::string& token(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<int> encode(std::span<const std::string> words) const;
  // <s> words </s>
  std::vector<int> encode_caption(std::span<const std::string> words) const;
  // Drops <s>, </s> and <pad>.
  Tokens decode(std::span<const int> ids) const;

 private:
  void insert(const std::string& token);

  std::vector<std::string> tokens_;
  std::map<std::string, int, std::less<>> ids_;
};

}  // namespace concaps

#endif  // CONCAPS_TEXT_H_
