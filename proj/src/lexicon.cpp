#include "prefgym/lexicon.hpp"

#include <algorithm>

#include "prefgym/text.hpp"

namespace prefgym {

const AspectVocabulary* Lexicon::vocabulary(AspectKind kind) const {
  for (const auto& vocab : aspects) {
    if (vocab.aspect == kind) return &vocab;
  }
  return nullptr;
}

std::vector<AspectKind> Lexicon::mentioned_aspects(const std::string& normalized) const {
  std::vector<AspectKind> out;
  for (const auto& vocab : aspects) {
    const bool hit = std::any_of(vocab.keywords.begin(), vocab.keywords.end(),
                                 [&](const std::string& kw) {
                                   return text::contains_phrase(normalized, kw);
                                 });
    if (hit) out.push_back(vocab.aspect);
  }
  return out;
}

std::vector<std::string> Lexicon::mentioned_cities(const std::string& normalized) const {
  std::vector<std::pair<std::size_t, std::string>> hits;
  for (const auto& city : cities) {
    std::size_t best = std::string::npos;
    auto consider = [&](std::string_view phrase) {
      best = std::min(best, text::find_phrase(normalized, phrase));
    };
    consider(city.name);
    for (const auto& alias : city.aliases) consider(alias);
    if (best != std::string::npos) hits.emplace_back(best, city.name);
  }
  std::sort(hits.begin(), hits.end());
  std::vector<std::string> out;
  for (auto& [pos, name] : hits) out.push_back(std::move(name));
  return out;
}

}  // namespace prefgym
