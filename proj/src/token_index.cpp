#include "adscan/token_index.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "adscan/hash.hpp"

namespace adscan {

TokenIndex::TokenIndex(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  std::sort(tokens_.begin(), tokens_.end());
  tokens_.erase(std::unique(tokens_.begin(), tokens_.end()), tokens_.end());
}

TokenIndex TokenIndex::from_documents(const std::vector<std::vector<std::string>>& docs, std::size_t min_documents) {
  std::map<std::string, std::size_t, std::less<>> df;
  for (const auto& doc : docs) {
    std::set<std::string_view> seen(doc.begin(), doc.end());
    for (auto tok : seen) {
      auto it = df.find(tok);
      if (it == df.end()) df.emplace(std::string(tok), 1);
      else ++it->second;
    }
  }
  std::vector<std::string> kept;
  for (auto& [tok, n] : df)
    if (n >= min_documents) kept.push_back(tok);
  return TokenIndex(std::move(kept));
}

std::optional<std::size_t> TokenIndex::find(std::string_view token) const {
  auto it = std::lower_bound(tokens_.begin(), tokens_.end(), token,
                             [](const std::string& a, std::string_view b) { return std::string_view(a) < b; });
  if (it == tokens_.end() || *it != token) return std::nullopt;
  return static_cast<std::size_t>(it - tokens_.begin());
}

std::vector<int> TokenIndex::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens)
    if (auto i = find(t)) out.push_back(static_cast<int>(*i));
  return out;
}

std::uint64_t TokenIndex::hash() const noexcept {
  Fnv1a h;
  h.update(static_cast<std::uint64_t>(tokens_.size()));
  for (const auto& t : tokens_) h.update(t).update(std::string_view("\0", 1));
  return h.digest();
}

}  // namespace adscan
