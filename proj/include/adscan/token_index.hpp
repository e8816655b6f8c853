#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace adscan {

/// Lexicographically ordered token list; a token's index is its rank.
class TokenIndex {
 public:
  TokenIndex() = default;
  /// Sorts and de-duplicates.
  explicit TokenIndex(std::vector<std::string> tokens);

  /// Every token occurring in at least `min_documents` of the documents.
  static TokenIndex from_documents(const std::vector<std::vector<std::string>>& docs, std::size_t min_documents = 1);

  std::optional<std::size_t> find(std::string_view token) const;
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const std::string& token(std::size_t i) const { return tokens_.at(i); }
  std::size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }

  /// Indices of the known tokens in `tokens`, unknown ones dropped.
  std::vector<int> encode(const std::vector<std::string>& tokens) const;

  /// FNV-1a over the ordered token list.
  std::uint64_t hash() const noexcept;

  friend bool operator==(const TokenIndex&, const TokenIndex&) = default;

 private:
  std::vector<std::string> tokens_;
};

}  // namespace adscan
