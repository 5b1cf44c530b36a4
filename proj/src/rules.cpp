#include "signbank/rules.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>

#include <json.hpp>

#include "signbank/text.hpp"

namespace signbank::rules {

namespace {

const std::regex& korean_number_term() {
  static const std::regex re(R"(^(.*?[^\s\d])\s*\d+$)");
  return re;
}

const std::regex& slovene_shape() {
  // term words, optional variation letter, optional (source)
  static const std::regex re(R"(^([^\s()]+(?: [^\s()]+)*?)(\s+[A-Z])?(\s*\([^()]*\))?$)");
  return re;
}

const std::regex& bible_reference() {
  static const std::regex re(R"(^([1-3]?[A-Za-z]+)(\d+)v(\d+)(?:\s[\s\S]*)?$)");
  return re;
}

constexpr const char* kSloveneSuffix = R"((?:\s+[A-Z])?\s*\([^()]*\)\s*$|\s+[A-Z]\s*$)";

bool matches(const FilterConfig::Compiled& rule, std::string_view term) {
  const auto& m = rule.matcher;
  switch (m.kind) {
    case MatchKind::contains:
      return std::any_of(m.patterns.begin(), m.patterns.end(),
                         [&](const std::string& p) { return term.find(p) != std::string_view::npos; });
    case MatchKind::prefix:
      return std::any_of(m.patterns.begin(), m.patterns.end(),
                         [&](const std::string& p) { return term.starts_with(p); });
    case MatchKind::equals:
      return std::any_of(m.patterns.begin(), m.patterns.end(),
                         [&](const std::string& p) { return term == p; });
    case MatchKind::search:
      return std::any_of(rule.regexes.begin(), rule.regexes.end(), [&](const std::regex& re) {
        return std::regex_search(term.begin(), term.end(), re);
      });
    case MatchKind::full_match:
      return std::any_of(rule.regexes.begin(), rule.regexes.end(), [&](const std::regex& re) {
        return std::regex_match(term.begin(), term.end(), re);
      });
    case MatchKind::strip:
    case MatchKind::drop_last_if:
      return false;
  }
  return false;
}

int parse_positive(const std::string& s, const char* what) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || v < 1) {
    throw ConfigError(std::string("bad ") + what + " '" + s + "'");
  }
  return v;
}

void append_rule_id(std::string& ids, const std::string& id) {
  if (ids.find(id) != std::string::npos) return;
  if (!ids.empty()) ids += ',';
  ids += id;
}

}  // namespace

std::string_view to_string(Action action) {
  switch (action) {
    case Action::unchanged: return "unchanged";
    case Action::annotate: return "annotate";
    case Action::drop_entry: return "drop_entry";
    case Action::keep: return "keep";
  }
  return "unchanged";
}

std::string_view to_string(MatchKind kind) {
  switch (kind) {
    case MatchKind::contains: return "contains";
    case MatchKind::prefix: return "prefix";
    case MatchKind::equals: return "equals";
    case MatchKind::search: return "search";
    case MatchKind::full_match: return "full_match";
    case MatchKind::strip: return "strip";
    case MatchKind::drop_last_if: return "drop_last_if";
  }
  return "contains";
}

MatchKind match_kind_from_string(std::string_view name) {
  for (auto kind : {MatchKind::contains, MatchKind::prefix, MatchKind::equals, MatchKind::search,
                    MatchKind::full_match, MatchKind::strip, MatchKind::drop_last_if}) {
    if (to_string(kind) == name) return kind;
  }
  throw ConfigError("unknown match kind '" + std::string(name) + "'");
}

std::optional<BibleRef> parse_bible_reference(std::string_view term) {
  term = text::trim(term);
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(term.begin(), term.end(), m, bible_reference())) return std::nullopt;
  BibleRef ref;
  ref.book = m[1].str();
  try {
    ref.chapter = std::stoi(m[2].str());
    ref.verse = std::stoi(m[3].str());
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (ref.chapter < 1 || ref.verse < 1) return std::nullopt;
  return ref;
}

VerseStore VerseStore::load(std::istream& in) {
  VerseStore store;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = text::chomp(line);
    if (text::trim(view).empty()) continue;
    const auto fields = text::split(view, '\t');
    const std::string where = "verse store line " + std::to_string(line_no);
    if (fields.size() != 4) throw ConfigError(where + ": expected 4 fields");
    BibleRef ref{std::string(text::trim(fields[0])),
                 parse_positive(std::string(text::trim(fields[1])), "chapter"),
                 parse_positive(std::string(text::trim(fields[2])), "verse")};
    if (ref.book.empty()) throw ConfigError(where + ": empty book");
    const std::string_view verse_text = text::trim(fields[3]);
    if (verse_text.empty()) throw ConfigError(where + ": empty verse text");
    store.add(std::move(ref), std::string(verse_text));
  }
  return store;
}

VerseStore VerseStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read verse store " + path.string());
  return load(in);
}

void VerseStore::add(BibleRef ref, std::string text) {
  if (text.empty()) throw ConfigError("empty verse text");
  verses_[std::move(ref)] = std::move(text);
}

std::optional<std::string> VerseStore::lookup(const BibleRef& ref) const {
  const auto it = verses_.find(ref);
  if (it == verses_.end()) return std::nullopt;
  return it->second;
}

void FilterConfig::set_puddle(int puddle_id, std::vector<TermMatcher> matchers) {
  puddles_[puddle_id] = std::move(matchers);
  compiled_.clear();
}

void FilterConfig::compile() {
  compiled_.clear();
  for (const auto& [puddle, matchers] : puddles_) {
    auto& out = compiled_[puddle];
    for (const auto& m : matchers) {
      Compiled c{m, {}};
      if (m.kind == MatchKind::search || m.kind == MatchKind::full_match || m.kind == MatchKind::strip) {
        for (const auto& p : m.patterns) {
          try {
            c.regexes.emplace_back(p, std::regex::ECMAScript);
          } catch (const std::regex_error& e) {
            throw ConfigError("puddle " + std::to_string(puddle) + " rule '" + m.id + "': bad regex '" + p +
                              "': " + e.what());
          }
        }
      }
      out.push_back(std::move(c));
    }
  }
}

const std::vector<FilterConfig::Compiled>* FilterConfig::compiled_for(int puddle_id) const {
  const auto it = compiled_.find(puddle_id);
  return it == compiled_.end() ? nullptr : &it->second;
}

RuleSet default_rules() {
  RuleSet rules;
  auto& f = rules.filters;
  f.set_puddle(4, {{"english_sign", MatchKind::equals, {"English sign"}}});
  f.set_puddle(16, {{"sws_tag", MatchKind::contains, {"SWS-TAG"}}});
  f.set_puddle(41, {{"lsc_source", MatchKind::prefix, {".LSC"}}});
  f.set_puddle(47, {
      {"list_source", MatchKind::prefix, {"Liste:", "Alice"}},
      {"part_of_speech", MatchKind::drop_last_if,
       {"nom", "verbe", "adjectif", "adverbe", "pronom", "préposition", "conjonction", "interjection",
        "déterminant", "phrase", "géographie"}},
  });
  f.set_puddle(49, {
      {"source", MatchKind::search,
       {"(lexique SGBFSS |lexique SGB-FSS|Liste: |jeu SignEcriture |JEU-COULEURS |CCSS |ApéroSignes)"}},
      {"fms_emm", MatchKind::prefix, {"FMS", "EMM"}},
      {"numero", MatchKind::contains, {"n°"}},
  });
  f.set_puddle(52, {{"suffix", MatchKind::strip, {kSloveneSuffix}}});
  f.set_puddle(53, {
      {"source", MatchKind::contains, {"vgl", "KK", "delegs"}},
      {"source_pattern", MatchKind::full_match,
       {R"(Variante \d)", R"(Geschichte "\. * ?")", R"([Ss][\d.]*)", R"(rwth\d*)"}},
  });
  f.compile();
  return rules;
}

RuleSet rules_from_json(std::string_view json_text, const std::filesystem::path& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("rule config is not valid JSON: ") + e.what());
  }
  RuleSet rules = default_rules();
  try {
    if (j.contains("url_filter")) rules.filters.url_filter = j.at("url_filter").get<bool>();
    if (j.contains("verse_prefixes")) rules.verse_prefixes = j.at("verse_prefixes").get<std::vector<std::string>>();
    if (j.contains("verse_store")) {
      std::filesystem::path p = j.at("verse_store").get<std::string>();
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      rules.verses = VerseStore::load(p);
    }
    if (j.contains("puddles")) {
      for (const auto& [key, section] : j.at("puddles").items()) {
        std::vector<TermMatcher> matchers;
        for (const auto& item : section) {
          TermMatcher m;
          m.id = item.at("id").get<std::string>();
          m.kind = match_kind_from_string(item.at("kind").get<std::string>());
          m.patterns = item.at("patterns").get<std::vector<std::string>>();
          matchers.push_back(std::move(m));
        }
        rules.filters.set_puddle(parse_positive(key, "puddle id"), std::move(matchers));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad rule config: ") + e.what());
  }
  rules.filters.compile();
  return rules;
}

RuleSet load_rules(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read rule config " + path.string());
  const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return rules_from_json(content, path.parent_path());
}

std::string rules_to_json(const RuleSet& rules) {
  nlohmann::ordered_json j;
  j["url_filter"] = rules.filters.url_filter;
  j["verse_prefixes"] = rules.verse_prefixes;
  nlohmann::ordered_json puddles = nlohmann::ordered_json::object();
  for (const auto& [puddle, matchers] : rules.filters.puddles()) {
    nlohmann::ordered_json section = nlohmann::ordered_json::array();
    for (const auto& m : matchers) {
      nlohmann::ordered_json item;
      item["id"] = m.id;
      item["kind"] = std::string(to_string(m.kind));
      item["patterns"] = m.patterns;
      section.push_back(std::move(item));
    }
    puddles[std::to_string(puddle)] = std::move(section);
  }
  j["puddles"] = std::move(puddles);
  return j.dump(2) + "\n";
}

bool is_url_term(std::string_view term) {
  const std::string lower = text::to_lower_ascii(term);
  return lower.find("http://") != std::string::npos || lower.find("https://") != std::string::npos ||
         lower.find("www.") != std::string::npos;
}

std::string strip_slovene_suffix(std::string_view term) {
  static const std::regex re(kSloveneSuffix);
  return std::string(text::trim(std::regex_replace(std::string(term), re, "")));
}

RuleOutcome rule_question_mark(const Entry& entry) {
  if (fsw::serialize(entry.fsw) != kQuestionMarkFsw) return RuleOutcome::unchanged();
  return {Action::drop_entry, {}, "question_mark"};
}

RuleOutcome rule_korean(const Entry& entry) {
  if (entry.puddle_id != kKoreanPuddle || entry.terms.size() != 4) return RuleOutcome::unchanged();
  const auto& t = entry.terms;
  const std::string_view id = text::trim(t[0]);
  if (id.empty() || std::any_of(id.begin(), id.end(), [](char c) { return c == ' ' || c == '\t'; })) {
    return RuleOutcome::unchanged();
  }
  if (text::trim(t[2]).empty() || text::trim(t[3]) != ".") return RuleOutcome::unchanged();
  const std::string second(text::trim(t[1]));
  std::smatch m;
  if (!std::regex_match(second, m, korean_number_term())) return RuleOutcome::unchanged();
  std::string word(text::trim(m[1].str()));
  if (word.empty()) return RuleOutcome::unchanged();
  return {Action::annotate, {std::move(word)}, "korean"};
}

RuleOutcome rule_slovene(const Entry& entry) {
  if (entry.puddle_id != kSlovenePuddle || entry.terms.size() != 1) return RuleOutcome::unchanged();
  const std::string term(text::trim(entry.terms.front()));
  std::smatch m;
  if (!std::regex_match(term, m, slovene_shape())) return RuleOutcome::unchanged();
  const std::string bare = m[1].str();
  const bool has_suffix = m[2].matched || m[3].matched;
  // Several words only qualify when a variation or source marks the end of the term.
  if (!has_suffix && bare.find(' ') != std::string::npos) return RuleOutcome::unchanged();
  return {Action::annotate, {bare}, "slovene"};
}

RuleOutcome rule_bible(const Entry& entry, const VerseStore& store,
                       const std::vector<std::string>& verse_prefixes) {
  if (entry.puddle_id != kBiblePuddleA && entry.puddle_id != kBiblePuddleB) return RuleOutcome::unchanged();
  std::set<BibleRef> refs;
  for (const auto& term : entry.terms) {
    if (auto ref = parse_bible_reference(term)) refs.insert(std::move(*ref));
  }
  if (refs.size() != 1) return RuleOutcome::unchanged();
  const BibleRef& ref = *refs.begin();
  auto verse = store.lookup(ref);
  if (!verse) return RuleOutcome::unchanged();
  const std::string signwriting = fsw::serialize(entry.fsw);
  const bool marked = std::any_of(verse_prefixes.begin(), verse_prefixes.end(), [&](const std::string& p) {
    return !p.empty() && signwriting.starts_with(p);
  });
  if (marked) *verse = "Verse " + std::to_string(ref.verse) + ": " + *verse;
  return {Action::annotate, {std::move(*verse)}, "bible"};
}

RuleOutcome filter_terms(const Entry& entry, const FilterConfig& config) {
  std::vector<std::string> kept;
  kept.reserve(entry.terms.size());
  std::string fired;
  for (const auto& term : entry.terms) {
    if (config.url_filter && is_url_term(term)) {
      append_rule_id(fired, "url");
      continue;
    }
    kept.push_back(term);
  }
  const auto prefix = "p" + std::to_string(entry.puddle_id) + ".";
  if (const auto* rules = config.compiled_for(entry.puddle_id)) {
    for (const auto& rule : *rules) {
      const auto& m = rule.matcher;
      if (m.kind == MatchKind::drop_last_if) {
        if (!kept.empty() && std::find(m.patterns.begin(), m.patterns.end(), kept.back()) != m.patterns.end()) {
          kept.pop_back();
          append_rule_id(fired, prefix + m.id);
        }
        continue;
      }
      if (m.kind == MatchKind::strip) {
        std::vector<std::string> next;
        for (const auto& term : kept) {
          std::string s = term;
          for (const auto& re : rule.regexes) s = std::regex_replace(s, re, "");
          s = std::string(text::trim(s));
          if (s != term) append_rule_id(fired, prefix + m.id);
          if (!s.empty()) next.push_back(std::move(s));
        }
        kept = std::move(next);
        continue;
      }
      const auto before = kept.size();
      std::erase_if(kept, [&](const std::string& term) { return matches(rule, term); });
      if (kept.size() != before) append_rule_id(fired, prefix + m.id);
    }
  }
  if (fired.empty()) return RuleOutcome::unchanged();
  return {Action::keep, std::move(kept), "filter:" + fired};
}

RuleOutcome apply_rules(const Entry& entry, const RuleSet& rules) {
  if (auto o = rule_question_mark(entry); o.action != Action::unchanged) return o;
  if (auto o = rule_korean(entry); o.action != Action::unchanged) return o;
  if (auto o = rule_slovene(entry); o.action != Action::unchanged) return o;
  if (auto o = rule_bible(entry, rules.verses, rules.verse_prefixes); o.action != Action::unchanged) return o;
  return filter_terms(entry, rules.filters);
}

RulesReport apply_rules(const Corpus& corpus, const RuleSet& rules) {
  RulesReport report;
  report.corpus.provenance = corpus.provenance;
  report.outcomes.reserve(corpus.size());
  for (const auto& entry : corpus.entries) {
    RuleOutcome outcome = apply_rules(entry, rules);
    if (outcome.action != Action::drop_entry) {
      Entry out = entry;
      if (outcome.action == Action::annotate || outcome.action == Action::keep) out.terms = outcome.terms;
      report.corpus.entries.push_back(std::move(out));
    }
    report.outcomes.push_back({entry.key(), std::move(outcome)});
  }
  return report;
}

std::string outcome_log_line(const RulesReport::Row& row) {
  nlohmann::ordered_json j;
  j["puddle_id"] = row.key.puddle_id;
  j["entry_id"] = row.key.entry_id;
  j["rule_id"] = row.outcome.rule_id;
  j["action"] = std::string(to_string(row.outcome.action));
  return j.dump();
}

}  // namespace signbank::rules
