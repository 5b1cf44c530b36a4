#include <gtest/gtest.h>

#include <json.hpp>

#include "generators.hpp"
#include "signbank/chat.hpp"
#include "signbank/pipeline.hpp"

using namespace signbank;
using namespace signbank::pipeline;

namespace {

Entry entry(int puddle, int id, std::string language, std::vector<std::string> terms) {
  Entry e;
  e.puddle_id = puddle;
  e.entry_id = id;
  e.language = std::move(language);
  e.fsw = fsw::parse_sequence("M518x529S14c20481x471S27106503x489");
  e.terms = std::move(terms);
  return e;
}

Corpus small_corpus() {
  Corpus c;
  c.entries = {entry(1, 1, "en", {"cookie", "http://example.com/cookie"}),
               entry(1, 2, "en", {"tree"}),
               entry(1, 3, "", {"lonely"}),
               entry(1, 4, "sv", {})};
  return c;
}

// Throws for entries whose prompt mentions a poisoned term; echoes otherwise.
class PoisonedBackend : public llm::ChatBackend {
 public:
  std::string poison;
  std::string send(std::span<const llm::ChatMessage> messages) override {
    if (messages.back().content.find(poison) != std::string::npos) throw llm::BackendError("poisoned");
    return echo_.send(messages);
  }
  std::string model_name() const override { return "poisoned"; }
  double price_per_1k_tokens() const override { return 0.0; }

 private:
  llm::EchoBackend echo_;
};

llm::BatchLimits quick() {
  llm::BatchLimits l;
  l.max_in_flight = 3;
  l.retries = 0;
  l.backoff = std::chrono::milliseconds(0);
  return l;
}

}  // namespace

TEST(Config, DefaultsAndOverrides) {
  const auto c = PipelineConfig::from_json(R"({"model": "gpt-4-0613", "strategy": "e4", "input": "in.tsv",
                                               "dev_size": 10, "direction": "spoken_to_signed"})",
                                           "/base");
  EXPECT_EQ(c.model, "gpt-4-0613");
  EXPECT_EQ(c.strategy, llm::StrategyLevel::e4);
  EXPECT_EQ(c.input, std::filesystem::path("/base/in.tsv"));
  EXPECT_EQ(c.dev_size, 10u);
  EXPECT_EQ(c.direction, corpus::Direction::spoken_to_signed);
  EXPECT_EQ(c.max_in_flight, 4u);
  EXPECT_EQ(PipelineConfig::from_json(R"({"out": "/abs/out"})", "/base").out, std::filesystem::path("/abs/out"));
}

TEST(Config, Rejections) {
  EXPECT_THROW(PipelineConfig::from_json(R"({"modle": "x"})"), ConfigError);
  EXPECT_THROW(PipelineConfig::from_json(R"({"retries": "two"})"), ConfigError);
  EXPECT_THROW(PipelineConfig::from_json(R"({"strategy": "e9"})"), ConfigError);
  EXPECT_THROW(PipelineConfig::from_json(R"({"direction": "sideways"})"), ConfigError);
  EXPECT_THROW(PipelineConfig::from_json("[1]"), ConfigError);
  EXPECT_THROW(PipelineConfig::from_json("{"), ConfigError);
  try {
    PipelineConfig::from_json(R"({"api_key": "sk-secret"})");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("CHAT_API_KEY"), std::string::npos);
    EXPECT_EQ(std::string(e.what()).find("sk-secret"), std::string::npos);
  }
  EXPECT_THROW(PipelineConfig::load("/nonexistent/config.json"), ConfigError);
}

TEST(Config, HashIgnoresPathsAndTracksSemantics) {
  PipelineConfig a;
  PipelineConfig b;
  b.input = "/somewhere/else.tsv";
  b.checkpoint = "/tmp/c.jsonl";
  b.max_in_flight = 32;
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 64u);
  b.strategy = llm::StrategyLevel::e3;
  EXPECT_NE(a.hash(), b.hash());
  const auto j = nlohmann::json::parse(a.semantic_json());
  EXPECT_FALSE(j.contains("input"));
  EXPECT_EQ(j["strategy"], "e2");
}

TEST(Config, LoadResolvesRelativeToFile) {
  fixtures::TempDir dir("cfg");
  fixtures::write_file(dir / "c.json", R"({"gold": "gold.tsv", "retries": 5})");
  const auto c = PipelineConfig::load(dir / "c.json");
  EXPECT_EQ(c.gold, dir / "gold.tsv");
  EXPECT_EQ(c.limits().retries, 5);
}

TEST(RulesLog, ReadsAnnotatedKeys) {
  fixtures::TempDir dir("rlog");
  fixtures::write_file(dir / "log.jsonl",
                       "{\"puddle_id\":78,\"entry_id\":1,\"rule_id\":\"korean\",\"action\":\"annotate\"}\n"
                       "{\"puddle_id\":4,\"entry_id\":2,\"rule_id\":\"filter\",\"action\":\"keep\"}\n\n");
  EXPECT_EQ(read_annotated(dir / "log.jsonl"), (std::set<EntryKey>{{78, 1}}));
  fixtures::write_file(dir / "bad.jsonl", "{\"puddle_id\":1}\n");
  EXPECT_THROW(read_annotated(dir / "bad.jsonl"), ConfigError);
}

TEST(Clean, E1FiltersWithoutModel) {
  CleanSettings settings;
  settings.strategy.level = llm::StrategyLevel::e1;
  EXPECT_TRUE(clean_items(small_corpus(), settings).empty());
  PoisonedBackend backend;  // never called
  backend.poison = "";
  const auto report = clean_corpus(small_corpus(), backend, settings, quick());
  EXPECT_EQ(report.corpus.provenance, Provenance::cleaned);
  EXPECT_EQ(report.corpus.entries[0].terms, (std::vector<std::string>{"cookie"}));
  EXPECT_EQ(report.batch.requests_sent, 0u);
  EXPECT_EQ(report.skipped, 4u);
}

TEST(Clean, E2SendsNonEmptyEntriesAndKeepsFailures) {
  CleanSettings settings;
  settings.skip = {{1, 3}};
  const auto items = clean_items(small_corpus(), settings);
  ASSERT_EQ(items.size(), 2u);
  EXPECT_EQ(items[0].id, "1:1");
  EXPECT_EQ(items[0].messages.back().content, R"~(clean(1, "en", ["cookie"]))~");

  llm::ReplayBackend replay;
  replay.add(R"~(clean(1, "en", ["cookie"]))~", R"(["Cookie"])");
  replay.add(R"~(clean(1, "en", ["tree"]))~", "[]");
  const auto report = clean_corpus(small_corpus(), replay, settings, quick());
  EXPECT_EQ(report.corpus.entries[0].terms, (std::vector<std::string>{"Cookie"}));
  EXPECT_TRUE(report.corpus.entries[1].terms.empty());
  EXPECT_EQ(report.corpus.entries[2].terms, (std::vector<std::string>{"lonely"}));
  EXPECT_EQ(report.skipped, 2u);

  PoisonedBackend poisoned;
  poisoned.poison = "cookie";
  const auto partial = clean_corpus(small_corpus(), poisoned, settings, quick());
  EXPECT_EQ(partial.batch.failures, 1u);
  EXPECT_EQ(partial.corpus.entries[0].terms, (std::vector<std::string>{"cookie"}));  // filtered, not raw
}

TEST(Clean, EchoIsIdentityAfterFilteringProperty) {
  fixtures::Gen gen(404);
  for (int i = 0; i < 30; ++i) {
    const auto c = gen.corpus(40);
    CleanSettings e1;
    e1.strategy.level = llm::StrategyLevel::e1;
    CleanSettings e2;
    llm::EchoBackend echo;
    const auto a = clean_corpus(c, echo, e1, quick()).corpus;
    const auto b = clean_corpus(c, echo, e2, quick()).corpus;
    ASSERT_EQ(a, b);
    ASSERT_EQ(b, clean_corpus(c, echo, e2, quick()).corpus);
  }
}

TEST(Expand, AppliesResults) {
  llm::ReplayBackend replay;
  replay.add(R"~(expand("en", ["cookie", "http://example.com/cookie"]))~", R"({"en": ["cookie", "biscuit"]})");
  replay.add(R"~(expand("en", ["tree"]))~", R"({"en": []})");
  const auto report = expand_corpus(small_corpus(), replay, quick());
  EXPECT_EQ(report.corpus.provenance, Provenance::expanded);
  EXPECT_EQ(report.skipped, 2u);
  EXPECT_EQ(report.corpus.entries[0].terms, (std::vector<std::string>{"cookie", "biscuit"}));
  EXPECT_EQ(report.corpus.entries[1].terms, (std::vector<std::string>{"tree"}));  // empty answer keeps terms
  EXPECT_EQ(report.corpus.entries[2], small_corpus().entries[2]);
}

TEST(Expand, EnglishTermsFromNonEnglishEntries) {
  Corpus c;
  c.entries = {entry(2, 1, "sv", {"tre"})};
  llm::EchoBackend echo;
  const auto report = expand_corpus(c, echo, quick());
  EXPECT_EQ(report.corpus.entries[0].terms, (std::vector<std::string>{"tre"}));
  EXPECT_TRUE(report.corpus.entries[0].english_terms.empty());

  llm::ReplayBackend replay;
  replay.add(R"~(expand("sv", ["tre"]))~", R"({"sv": ["Tre", "3"], "en": ["Three", "3"]})");
  const auto r2 = expand_corpus(c, replay, quick());
  EXPECT_EQ(r2.corpus.entries[0].terms, (std::vector<std::string>{"Tre", "3"}));
  EXPECT_EQ(r2.corpus.entries[0].english_terms, (std::vector<std::string>{"Three", "3"}));
}

TEST(Estimate, CountsTokens) {
  CleanSettings settings;
  const auto items = clean_items(small_corpus(), settings);
  const auto e = estimate(items, 0.0015);
  EXPECT_EQ(e.requests, items.size());
  std::size_t tokens = 0;
  for (const auto& item : items) tokens += llm::estimate_tokens(item.messages);
  EXPECT_EQ(e.tokens, tokens);
  EXPECT_NEAR(e.usd, tokens / 1000.0 * 0.0015, 1e-12);
}
