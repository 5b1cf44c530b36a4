#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "signbank/chat.hpp"
#include "signbank/corpus.hpp"

namespace signbank::llm {

class UnparseableResponse : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CleanRequest {
  std::size_t num_signs = 0;
  std::optional<std::string> language;
  std::vector<std::string> terms;
  // Entry being cleaned; selects and excludes same-puddle examples.
  std::optional<EntryKey> key;
};

struct ExpandRequest {
  std::string language;
  std::vector<std::string> terms;
};

enum class StrategyLevel { e1, e2, e3, e4 };

std::string_view to_string(StrategyLevel level);
StrategyLevel strategy_from_string(std::string_view name);

struct FewShotExample {
  CleanRequest request;
  std::vector<std::string> answer;
};

/// The four manually curated cleaning examples, in order.
const std::vector<FewShotExample>& fixed_clean_examples();

struct ExpandExample {
  ExpandRequest request;
  ExpansionResult answer;
};

/// The nine manually curated expansion examples, in order.
const std::vector<ExpandExample>& fixed_expand_examples();

/// Gold annotations keyed by puddle, in gold-file order.
using PuddlePool = std::map<int, std::vector<FewShotExample>>;

struct FewShotStrategy {
  StrategyLevel level = StrategyLevel::e2;
  std::vector<FewShotExample> fixed = fixed_clean_examples();
  PuddlePool puddle_pool;
  std::size_t k_puddle = 5;

  /// E1: none. E2: the fixed pairs. E3: up to k_puddle same-puddle pairs, skipping the
  /// request's own entry. E4: E2 followed by E3.
  std::vector<FewShotExample> examples_for(const CleanRequest& request) const;
};

const std::string& clean_system_prompt();
const std::string& expand_system_prompt();

/// `["a", "b"]`
std::string format_string_array(const std::vector<std::string>& items);
/// `clean(1, "sl", ["Koreja (mednarodno)", "Korea"])`; a missing language prints as null.
std::string format_clean_call(const CleanRequest& request);
/// `expand("sv", ["tre"])`
std::string format_expand_call(const ExpandRequest& request);
/// `{"sv": ["Tre", "3"], "en": ["Three", "3"]}`; English requests print only "en".
std::string format_expansion(std::string_view language, const ExpansionResult& result);

std::vector<ChatMessage> build_clean_prompt(const CleanRequest& request, const FewShotStrategy& strategy);
std::vector<ChatMessage> build_expand_prompt(const ExpandRequest& request);

struct ParseMode {
  // Requires the payload to be the whole response (surrounding whitespace allowed).
  bool strict = false;
};

/// First well-formed JSON array of strings in `response`; elements trimmed, empties
/// dropped, duplicates removed in first-occurrence order.
std::vector<std::string> parse_clean_response(std::string_view response, ParseMode mode = {});

/// First JSON object in `response`. Missing keys give empty lists. For English
/// requests the "en" list is the native list.
ExpansionResult parse_expand_response(std::string_view response, std::string_view language,
                                      ParseMode mode = {});

/// Builds E3/E4 pools from gold term lists, taking each example's request from the
/// matching corpus entry. Gold keys absent from the corpus are skipped.
PuddlePool build_puddle_pool(const Corpus& corpus,
                             const std::vector<std::pair<EntryKey, std::vector<std::string>>>& gold);

}  // namespace signbank::llm
