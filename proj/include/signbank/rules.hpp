#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <regex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "signbank/corpus.hpp"

namespace signbank::rules {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Action { unchanged, annotate, drop_entry, keep };

std::string_view to_string(Action action);

struct RuleOutcome {
  Action action = Action::unchanged;
  // Annotation for `annotate`, surviving terms for `keep`.
  std::vector<std::string> terms;
  std::string rule_id;

  static RuleOutcome unchanged() { return {}; }
  friend bool operator==(const RuleOutcome&, const RuleOutcome&) = default;
};

struct BibleRef {
  std::string book;
  int chapter = 0;
  int verse = 0;

  friend auto operator<=>(const BibleRef&, const BibleRef&) = default;
};

/// "<Book><chapter>v<verse>" with optional zero padding and trailing annotation
/// ("Matthew15v07 NLT"). Ranges and partial verses yield nullopt.
std::optional<BibleRef> parse_bible_reference(std::string_view term);

class VerseStore {
 public:
  /// TSV rows "book<TAB>chapter<TAB>verse<TAB>text". Empty verse text is rejected.
  static VerseStore load(const std::filesystem::path& path);
  static VerseStore load(std::istream& in);

  void add(BibleRef ref, std::string text);
  std::optional<std::string> lookup(const BibleRef& ref) const;
  std::size_t size() const noexcept { return verses_.size(); }

 private:
  std::map<BibleRef, std::string> verses_;
};

enum class MatchKind {
  contains,     // literal substring
  prefix,       // literal prefix
  equals,       // whole term equals the literal
  search,       // regex found anywhere in the term
  full_match,   // regex matches the whole term
  strip,        // regex match is erased from the term; the term is kept if anything remains
  drop_last_if  // last term of the entry is dropped when it equals one of the literals
};

std::string_view to_string(MatchKind kind);
MatchKind match_kind_from_string(std::string_view name);

struct TermMatcher {
  std::string id;
  MatchKind kind = MatchKind::contains;
  std::vector<std::string> patterns;
};

/// Compiled puddle-keyed filter rules applied in declaration order.
class FilterConfig {
 public:
  FilterConfig() = default;

  bool url_filter = true;

  void set_puddle(int puddle_id, std::vector<TermMatcher> matchers);
  const std::map<int, std::vector<TermMatcher>>& puddles() const noexcept { return puddles_; }

  /// Throws ConfigError on a pattern std::regex rejects.
  void compile();

  struct Compiled {
    TermMatcher matcher;
    std::vector<std::regex> regexes;
  };
  const std::vector<Compiled>* compiled_for(int puddle_id) const;

 private:
  std::map<int, std::vector<TermMatcher>> puddles_;
  std::map<int, std::vector<Compiled>> compiled_;
};

struct RuleSet {
  FilterConfig filters;
  VerseStore verses;
  // FSW prefixes marking an entry whose signing starts with "Verse <n>".
  std::vector<std::string> verse_prefixes;
};

/// The shipped rule set: URL removal plus the per-puddle filters for puddles 4, 16,
/// 41, 47, 49, 52 and 53. Verse store and verse prefixes start empty.
RuleSet default_rules();

/// JSON rule configuration. Sections present in the file replace the defaults for
/// that puddle; `verse_store` paths resolve relative to the file.
RuleSet load_rules(const std::filesystem::path& path);
RuleSet rules_from_json(std::string_view json_text, const std::filesystem::path& base_dir = {});
std::string rules_to_json(const RuleSet& rules);

inline constexpr std::string_view kQuestionMarkFsw = "M510x517S29f0c491x484";
inline constexpr int kKoreanPuddle = 78;
inline constexpr int kSlovenePuddle = 52;
inline constexpr int kBiblePuddleA = 151;
inline constexpr int kBiblePuddleB = 152;

RuleOutcome rule_question_mark(const Entry& entry);
RuleOutcome rule_korean(const Entry& entry);
RuleOutcome rule_slovene(const Entry& entry);
RuleOutcome rule_bible(const Entry& entry, const VerseStore& store,
                       const std::vector<std::string>& verse_prefixes);
RuleOutcome filter_terms(const Entry& entry, const FilterConfig& config);

/// Removes the variation letter and/or parenthesised source from the end of a term.
std::string strip_slovene_suffix(std::string_view term);

bool is_url_term(std::string_view term);

/// Annotation rules first (question mark, Korean, Slovene, Bible), then filtering.
/// Exactly one outcome per entry.
RuleOutcome apply_rules(const Entry& entry, const RuleSet& rules);

struct RulesReport {
  Corpus corpus;
  struct Row {
    EntryKey key;
    RuleOutcome outcome;
  };
  std::vector<Row> outcomes;
};

/// Dropped entries leave the corpus; annotate and keep replace the terms.
RulesReport apply_rules(const Corpus& corpus, const RuleSet& rules);

/// One JSON object per line: {"puddle_id","entry_id","rule_id","action"}.
std::string outcome_log_line(const RulesReport::Row& row);

}  // namespace signbank::rules
