#include "signbank/pipeline.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "signbank/text.hpp"

namespace signbank::pipeline {

namespace {

using nlohmann::json;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

template <typename T>
T read_field(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config field '") + key + "' has the wrong type");
  }
}

std::vector<std::string> terms_from(const json& result) {
  std::vector<std::string> terms;
  for (const auto& t : result) terms.push_back(t.get<std::string>());
  return terms;
}

}  // namespace

PipelineConfig PipelineConfig::from_json(std::string_view json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  PipelineConfig c;
  const std::map<std::string, std::filesystem::path*> paths{
      {"input", &c.input},         {"gold", &c.gold},
      {"out", &c.out},             {"rules_config", &c.rules_config},
      {"rules_log", &c.rules_log}, {"checkpoint", &c.checkpoint},
      {"failure_log", &c.failure_log}, {"tag_table", &c.tag_table},
      {"test_ids", &c.test_ids},   {"replay", &c.replay},
  };
  for (const auto& [key, value] : j.items()) {
    if (const auto it = paths.find(key); it != paths.end()) {
      *it->second = resolve(base_dir, read_field<std::string>(j, key.c_str()));
    } else if (key == "backend") {
      c.backend = read_field<std::string>(j, "backend");
    } else if (key == "model") {
      c.model = read_field<std::string>(j, "model");
    } else if (key == "base_url") {
      c.base_url = read_field<std::string>(j, "base_url");
    } else if (key == "max_in_flight") {
      c.max_in_flight = read_field<std::size_t>(j, "max_in_flight");
    } else if (key == "retries") {
      c.retries = read_field<int>(j, "retries");
    } else if (key == "backoff_ms") {
      c.backoff_ms = read_field<int>(j, "backoff_ms");
    } else if (key == "temperature") {
      c.temperature = read_field<double>(j, "temperature");
    } else if (key == "strategy") {
      try {
        c.strategy = llm::strategy_from_string(read_field<std::string>(j, "strategy"));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    } else if (key == "k_puddle") {
      c.k_puddle = read_field<std::size_t>(j, "k_puddle");
    } else if (key == "dev_size") {
      c.dev_size = read_field<std::size_t>(j, "dev_size");
    } else if (key == "direction") {
      try {
        c.direction = corpus::direction_from_string(read_field<std::string>(j, "direction"));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    } else if (key == "strict_fsw") {
      c.strict_fsw = read_field<bool>(j, "strict_fsw");
    } else if (key == "api_key") {
      throw ConfigError("the API credential is read from CHAT_API_KEY only");
    } else {
      throw ConfigError("unknown config field '" + key + "'");
    }
  }
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str(), path.parent_path());
}

std::string PipelineConfig::semantic_json() const {
  nlohmann::ordered_json j;
  j["backend"] = backend;
  j["model"] = model;
  j["temperature"] = temperature;
  j["retries"] = retries;
  j["strategy"] = std::string(llm::to_string(strategy));
  j["k_puddle"] = k_puddle;
  j["dev_size"] = dev_size;
  j["direction"] = std::string(corpus::to_string(direction));
  j["strict_fsw"] = strict_fsw;
  return j.dump();
}

std::string PipelineConfig::hash() const { return text::sha256_hex(semantic_json()); }

llm::BatchLimits PipelineConfig::limits() const {
  llm::BatchLimits l;
  l.max_in_flight = max_in_flight;
  l.retries = retries;
  l.backoff = std::chrono::milliseconds(backoff_ms);
  l.checkpoint = checkpoint;
  l.failure_log = failure_log;
  return l;
}

std::set<EntryKey> read_annotated(const std::filesystem::path& rules_log) {
  std::ifstream in(rules_log, std::ios::binary);
  if (!in) throw ConfigError("cannot read rules log " + rules_log.string());
  std::set<EntryKey> keys;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = json::parse(line);
      if (j.at("action").get<std::string>() == "annotate") {
        keys.insert({j.at("puddle_id").get<int>(), j.at("entry_id").get<int>()});
      }
    } catch (const json::exception& e) {
      throw ConfigError(rules_log.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return keys;
}

namespace {

Corpus filtered(const Corpus& corpus, const CleanSettings& settings) {
  Corpus out = corpus;
  out.provenance = Provenance::cleaned;
  for (auto& entry : out.entries) {
    if (settings.skip.contains(entry.key())) continue;
    auto outcome = rules::filter_terms(entry, settings.filters);
    if (outcome.action == rules::Action::keep) entry.terms = std::move(outcome.terms);
  }
  return out;
}

bool sent_to_model(const Entry& entry, const CleanSettings& settings) {
  return !entry.terms.empty() && !settings.skip.contains(entry.key());
}

llm::CleanRequest request_for(const Entry& entry) {
  llm::CleanRequest r;
  r.num_signs = fsw::count_signs(entry.fsw);
  if (!entry.language.empty()) r.language = entry.language;
  r.terms = entry.terms;
  r.key = entry.key();
  return r;
}

std::vector<llm::BatchItem> clean_items_for(const Corpus& filtered_corpus, const CleanSettings& settings) {
  std::vector<llm::BatchItem> items;
  if (settings.strategy.level == llm::StrategyLevel::e1) return items;
  for (const auto& entry : filtered_corpus.entries) {
    if (!sent_to_model(entry, settings)) continue;
    items.push_back({entry.key().str(), llm::build_clean_prompt(request_for(entry), settings.strategy)});
  }
  return items;
}

}  // namespace

std::vector<llm::BatchItem> clean_items(const Corpus& corpus, const CleanSettings& settings) {
  return clean_items_for(filtered(corpus, settings), settings);
}

StageReport clean_corpus(const Corpus& corpus, llm::ChatBackend& backend, const CleanSettings& settings,
                         const llm::BatchLimits& limits) {
  StageReport report;
  report.corpus = filtered(corpus, settings);
  const auto items = clean_items_for(report.corpus, settings);
  report.skipped = report.corpus.size() - items.size();
  if (items.empty()) return report;

  report.batch = llm::run_batch(items, backend, limits, [](const std::string&, const std::string& response) {
    return json(llm::parse_clean_response(response));
  });
  std::map<std::string, const llm::ItemResult*> by_id;
  for (const auto& r : report.batch.results) by_id[r.id] = &r;
  for (auto& entry : report.corpus.entries) {
    const auto it = by_id.find(entry.key().str());
    if (it == by_id.end() || !it->second->ok) continue;
    entry.terms = terms_from(it->second->result);
  }
  return report;
}

std::vector<llm::BatchItem> expand_items(const Corpus& corpus) {
  std::vector<llm::BatchItem> items;
  for (const auto& entry : corpus.entries) {
    if (entry.terms.empty() || entry.language.empty()) continue;
    items.push_back({entry.key().str(), llm::build_expand_prompt({entry.language, entry.terms})});
  }
  return items;
}

StageReport expand_corpus(const Corpus& corpus, llm::ChatBackend& backend, const llm::BatchLimits& limits) {
  StageReport report;
  const auto items = expand_items(corpus);
  report.skipped = corpus.size() - items.size();

  std::map<std::string, std::string> language_of;
  for (const auto& entry : corpus.entries) language_of[entry.key().str()] = entry.language;

  std::map<EntryKey, ExpansionResult> results;
  if (!items.empty()) {
    report.batch = llm::run_batch(items, backend, limits, [&language_of](const std::string& id, const std::string& response) {
      const auto r = llm::parse_expand_response(response, language_of.at(id));
      return json{{"native", r.native}, {"english", r.english}};
    });
    std::map<std::string, const llm::ItemResult*> by_id;
    for (const auto& r : report.batch.results) by_id[r.id] = &r;
    for (const auto& entry : corpus.entries) {
      const auto it = by_id.find(entry.key().str());
      if (it == by_id.end() || !it->second->ok) continue;
      const auto& r = it->second->result;
      results[entry.key()] = {terms_from(r.at("native")), terms_from(r.at("english"))};
    }
  }
  report.corpus = corpus::apply_expansion(corpus, results);
  report.corpus.provenance = Provenance::expanded;
  return report;
}

CostEstimate estimate(const std::vector<llm::BatchItem>& items, double price_per_1k) {
  CostEstimate e;
  e.requests = items.size();
  e.price_per_1k = price_per_1k;
  for (const auto& item : items) e.tokens += llm::estimate_tokens(item.messages);
  e.usd = static_cast<double>(e.tokens) / 1000.0 * price_per_1k;
  return e;
}

}  // namespace signbank::pipeline
