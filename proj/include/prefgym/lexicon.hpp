#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "prefgym/domain.hpp"

namespace prefgym {

struct City {
  std::string name;
  std::vector<std::string> aliases;
  friend bool operator==(const City&, const City&) = default;
};

struct AspectVocabulary {
  AspectKind aspect = AspectKind::kFlight;
  // Nouns naming the aspect itself ("hotel", "rental car").
  std::vector<std::string> keywords;
  // Attribute-level terms; their presence makes a question concrete.
  std::vector<std::string> attribute_terms;
  friend bool operator==(const AspectVocabulary&, const AspectVocabulary&) = default;
};

// Vocabulary the rule-based user simulator works from. Ships with the
// catalog so imported catalogs can bring their own terms.
struct Lexicon {
  std::vector<City> cities;
  std::vector<AspectVocabulary> aspects;
  // Words that mark an utterance as asking about preferences.
  std::vector<std::string> request_cues;

  const AspectVocabulary* vocabulary(AspectKind kind) const;

  // Aspects whose keywords occur in the normalized text.
  std::vector<AspectKind> mentioned_aspects(const std::string& normalized) const;

  // Canonical city names in order of first mention.
  std::vector<std::string> mentioned_cities(const std::string& normalized) const;

  friend bool operator==(const Lexicon&, const Lexicon&) = default;
};

}  // namespace prefgym
