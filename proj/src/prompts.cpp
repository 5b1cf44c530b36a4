#include "signbank/prompts.hpp"

#include <algorithm>

#include <json.hpp>

#include "signbank/text.hpp"

namespace signbank::llm {

namespace {

const std::string kCleanSystemPrompt = R"prompt(You are a proficient assistant, responsible for data sanitization for a machine translation model. Your main task involves operating the `clean` function:

The `clean` function is specifically designed to return a list of accurate translations that correspond to the provided SignWriting text. The text output must be valid spoken language text, fixed in case of errors. This aids in the training of machine translation models. Since SignWriting can also write fingerspelling, a single character can also be a valid output.

When confronted with an unfamiliar SignWriting string, the function employs heuristic methods, including:

1. A similarity in the number of words to the number of signs. For example, a string with 20 signs and 3 words is unlikely to have a parallel translation.
2. Potential multiple entries are considered when several terms in the text have the same meaning. For instance, "one (1)" or "one-also-1" or "one/1" will result in "one" and "1".
3. In cases of uncertainty, the function returns an empty array.

Parameters:

SignWriting (int): Number of signs present.
Language (string): language code (Optional)
texts (list): A list of raw, unfiltered candidate texts.

Returns:

translations (list): A list of strings that accurately match the SignWriting, intended for machine translation.

In the course of the session, users will invoke the `clean` function and you will respond with the function's output.)prompt";

const std::string kExpandSystemPrompt = R"prompt(You are a proficient assistant, responsible for data augmentation for a machine translation model. Your main task involves executing the `expand` function:

The expand function is specifically crafted to return a list of equivalent expressions that match the provided text in a certain language. The text output must be accurately spelled and grammatically correct spoken language text. This is beneficial for improving the robustness of machine translation models.

The function uses a series of methods to ensure a variety of equivalent terms, including:

1. Paraphrases in the same language. For example, the text "hello" can be paraphrased as "Hi" or "Hey"
2. Capitalization corrections: For instance, the text "one" may result in ["One"]. "donald duck" may result in ["Donald Duck"]
3. Numerical translation: When the text represents a number, its numeric equivalent is added. For example, "one" would return ["One", "1"].
4. Language translation: If the text is in a non-English language, and it's feasible to translate it to English, the English translation is included. For instance, "domingo" would return ["Domingo", "Sunday"].
5. If the text is not spoken language text, but instead a random identifier like "rom-ale-10-44r", ignore it completely.

Parameters:

language (string): language code for the terms in the list.
texts (list): A list of terms requiring expansion.

Returns:

expansions (obj):
language (list): A list of unique strings that are equivalent to the provided terms, intended for machine translation training.
en (list): A list of unique translations to English if the language is not english and translation is feasible.

During the session, users will call the `expand` function and you will respond with the function's output.)prompt";

std::string quote(std::string_view s) {
  return nlohmann::json(std::string(s)).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

// Offset one past the bracket closing the one at `open`, honouring JSON strings.
std::optional<std::size_t> matching_close(std::string_view s, std::size_t open) {
  const char open_ch = s[open];
  const char close_ch = open_ch == '[' ? ']' : '}';
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == open_ch) {
      ++depth;
    } else if (c == close_ch && --depth == 0) {
      return i + 1;
    }
  }
  return std::nullopt;
}

// First JSON value of the given kind ('[' or '{') accepted by `accept`.
template <typename Accept>
std::optional<nlohmann::json> find_json(std::string_view response, char open_ch, ParseMode mode,
                                        Accept accept) {
  if (mode.strict) {
    const std::string_view body = text::trim(response);
    if (body.empty() || body.front() != open_ch) return std::nullopt;
    try {
      auto j = nlohmann::json::parse(body);
      if (accept(j)) return j;
    } catch (const nlohmann::json::exception&) {
    }
    return std::nullopt;
  }
  for (std::size_t i = response.find(open_ch); i != std::string_view::npos; i = response.find(open_ch, i + 1)) {
    const auto end = matching_close(response, i);
    if (!end) continue;
    try {
      auto j = nlohmann::json::parse(response.substr(i, *end - i));
      if (accept(j)) return j;
    } catch (const nlohmann::json::exception&) {
    }
  }
  return std::nullopt;
}

bool is_string_array(const nlohmann::json& j) {
  return j.is_array() && std::all_of(j.begin(), j.end(), [](const nlohmann::json& v) { return v.is_string(); });
}

std::vector<std::string> string_list(const nlohmann::json& j) {
  std::vector<std::string> out;
  for (const auto& v : j) out.push_back(v.get<std::string>());
  return text::dedupe_trimmed(out);
}

}  // namespace

std::string_view to_string(StrategyLevel level) {
  switch (level) {
    case StrategyLevel::e1: return "e1";
    case StrategyLevel::e2: return "e2";
    case StrategyLevel::e3: return "e3";
    case StrategyLevel::e4: return "e4";
  }
  return "e2";
}

StrategyLevel strategy_from_string(std::string_view name) {
  const std::string lower = text::to_lower_ascii(name);
  if (lower == "e1") return StrategyLevel::e1;
  if (lower == "e2") return StrategyLevel::e2;
  if (lower == "e3") return StrategyLevel::e3;
  if (lower == "e4") return StrategyLevel::e4;
  throw std::invalid_argument("unknown strategy '" + std::string(name) + "' (expected e1, e2, e3 or e4)");
}

const std::vector<FewShotExample>& fixed_clean_examples() {
  static const std::vector<FewShotExample> examples = {
      {{1, "sl", {"Koreja (mednarodno)", "Korea"}, std::nullopt}, {"Koreja", "Korea"}},
      {{1, "sl", {"Bosna in Hercegovina 2", "Bosnia and Herzegovina"}, std::nullopt},
       {"Bosna in Hercegovina", "Bosnia and Herzegovina"}},
      {{18, "en", {"Acts 04_27-31c", "James Orlow"}, std::nullopt}, {}},
      {{8,
        "es",
        {"Juan el Bautista predica", "1:1 El principio de la buena noticia de Jesucristo, el Hijo de Dios."},
        std::nullopt},
       {"El principio de la buena noticia de Jesucristo, el Hijo de Dios."}},
  };
  return examples;
}

const std::vector<ExpandExample>& fixed_expand_examples() {
  static const std::vector<ExpandExample> examples = {
      {{"sl", {"2"}}, {{"2", "Dva"}, {"2", "Two"}}},
      {{"fr", {"Lac", "LEMAN"}}, {{"Lac Lemman"}, {"Lake Geneva"}}},
      {{"no", {"fire", "tall", "4"}}, {{"fire", "4"}, {"four", "4"}}},
      {{"he", {" "}}, {{" "}, {"Aleph", "Alef"}}},
      {{"pt", {"MAGIA", "MAGICO"}}, {{"MAGIA", "MÁGICO"}, {"Magic", "Magical", "Magician"}}},
      {{"de", {"Vater", "father"}},
       {{"Vater", "Papa", "Papi", "Vati", "Erzeuger"}, {"Father", "Dad", "Daddy", "Papa"}}},
      {{"en", {"Hello", "hi"}},
       {{"Hello", "Hi", "Hey", "Greetings", "Howdy", "Hiya", "Aloha", "Bonjour", "Hola", "Salutations",
         "Hello there", "Hi there"},
        {}}},
      {{"pt", {"Eu-tentar"}}, {{"Eu tentar"}, {"I try"}}},
      {{"de", {"zweiund zwanzig", "S3-07163-V"}},
       {{"Zwei und Zwanzig", "22", "Zweiundzwanzig"}, {"Twenty-two", "22"}}},
  };
  return examples;
}

std::vector<FewShotExample> FewShotStrategy::examples_for(const CleanRequest& request) const {
  std::vector<FewShotExample> out;
  if (level == StrategyLevel::e2 || level == StrategyLevel::e4) out = fixed;
  if ((level == StrategyLevel::e3 || level == StrategyLevel::e4) && request.key) {
    const auto it = puddle_pool.find(request.key->puddle_id);
    if (it != puddle_pool.end()) {
      std::size_t taken = 0;
      for (const auto& example : it->second) {
        if (taken == k_puddle) break;
        if (example.request.key && *example.request.key == *request.key) continue;
        out.push_back(example);
        ++taken;
      }
    }
  }
  return out;
}

const std::string& clean_system_prompt() { return kCleanSystemPrompt; }
const std::string& expand_system_prompt() { return kExpandSystemPrompt; }

std::string format_string_array(const std::vector<std::string>& items) {
  std::string out = "[";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += ", ";
    out += quote(items[i]);
  }
  out += "]";
  return out;
}

std::string format_clean_call(const CleanRequest& request) {
  return "clean(" + std::to_string(request.num_signs) + ", " +
         (request.language ? quote(*request.language) : std::string("null")) + ", " +
         format_string_array(request.terms) + ")";
}

std::string format_expand_call(const ExpandRequest& request) {
  return "expand(" + quote(request.language) + ", " + format_string_array(request.terms) + ")";
}

std::string format_expansion(std::string_view language, const ExpansionResult& result) {
  if (text::to_lower_ascii(language) == "en") {
    return "{" + quote("en") + ": " + format_string_array(result.native) + "}";
  }
  return "{" + quote(language) + ": " + format_string_array(result.native) + ", " + quote("en") + ": " +
         format_string_array(result.english) + "}";
}

std::vector<ChatMessage> build_clean_prompt(const CleanRequest& request, const FewShotStrategy& strategy) {
  std::vector<ChatMessage> messages;
  messages.push_back({Role::system, clean_system_prompt()});
  for (const auto& example : strategy.examples_for(request)) {
    messages.push_back({Role::user, format_clean_call(example.request)});
    messages.push_back({Role::assistant, format_string_array(example.answer)});
  }
  messages.push_back({Role::user, format_clean_call(request)});
  return messages;
}

std::vector<ChatMessage> build_expand_prompt(const ExpandRequest& request) {
  std::vector<ChatMessage> messages;
  messages.push_back({Role::system, expand_system_prompt()});
  for (const auto& example : fixed_expand_examples()) {
    messages.push_back({Role::user, format_expand_call(example.request)});
    messages.push_back({Role::assistant, format_expansion(example.request.language, example.answer)});
  }
  messages.push_back({Role::user, format_expand_call(request)});
  return messages;
}

std::vector<std::string> parse_clean_response(std::string_view response, ParseMode mode) {
  const auto j = find_json(response, '[', mode, is_string_array);
  if (!j) throw UnparseableResponse("no JSON array of strings in response");
  return string_list(*j);
}

ExpansionResult parse_expand_response(std::string_view response, std::string_view language, ParseMode mode) {
  const auto j = find_json(response, '{', mode, [](const nlohmann::json& v) { return v.is_object(); });
  if (!j) throw UnparseableResponse("no JSON object in response");
  auto list = [&](std::string_view key) -> std::vector<std::string> {
    const auto it = j->find(std::string(key));
    if (it == j->end() || it->is_null()) return {};
    if (!is_string_array(*it)) {
      throw UnparseableResponse("expansion key '" + std::string(key) + "' is not an array of strings");
    }
    return string_list(*it);
  };
  ExpansionResult result;
  if (text::to_lower_ascii(language) == "en") {
    result.native = list("en");
  } else {
    result.native = list(language);
    result.english = list("en");
  }
  return result;
}

PuddlePool build_puddle_pool(const Corpus& corpus,
                             const std::vector<std::pair<EntryKey, std::vector<std::string>>>& gold) {
  std::map<EntryKey, const Entry*> by_key;
  for (const auto& entry : corpus.entries) by_key.emplace(entry.key(), &entry);
  PuddlePool pool;
  for (const auto& [key, answer] : gold) {
    const auto it = by_key.find(key);
    if (it == by_key.end() || it->second->terms.empty()) continue;
    const Entry& entry = *it->second;
    CleanRequest request{fsw::count_signs(entry.fsw), entry.language, entry.terms, key};
    pool[key.puddle_id].push_back({std::move(request), answer});
  }
  return pool;
}

}  // namespace signbank::llm
