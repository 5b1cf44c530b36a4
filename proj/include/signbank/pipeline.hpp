#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "signbank/batch.hpp"
#include "signbank/corpus.hpp"
#include "signbank/prompts.hpp"
#include "signbank/rules.hpp"

namespace signbank::pipeline {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Settings shared by the CLI subcommands. A JSON file provides the base and flags
/// override individual fields.
struct PipelineConfig {
  // paths
  std::filesystem::path input;
  std::filesystem::path gold;
  std::filesystem::path out;
  std::filesystem::path rules_config;
  std::filesystem::path rules_log;
  std::filesystem::path checkpoint;
  std::filesystem::path failure_log;
  std::filesystem::path tag_table;
  std::filesystem::path test_ids;
  std::filesystem::path replay;

  // model
  std::string backend = "openai";
  std::string model = "gpt-3.5-turbo-0613";
  std::string base_url = "https://api.openai.com";
  std::size_t max_in_flight = 4;
  int retries = 2;
  int backoff_ms = 500;
  double temperature = 0.0;

  llm::StrategyLevel strategy = llm::StrategyLevel::e2;
  std::size_t k_puddle = 5;
  std::size_t dev_size = 3000;
  corpus::Direction direction = corpus::Direction::signed_to_spoken;
  bool strict_fsw = false;

  /// Unknown keys are a ConfigError; relative paths resolve against `base_dir`.
  static PipelineConfig from_json(std::string_view json_text, const std::filesystem::path& base_dir = {});
  static PipelineConfig load(const std::filesystem::path& path);

  /// Settings that change outputs, without any paths. Stable key order.
  std::string semantic_json() const;
  /// SHA-256 of semantic_json(); recorded in export manifests.
  std::string hash() const;

  llm::BatchLimits limits() const;
};

/// Entries the rule engine already annotated, read from a rules outcome log.
std::set<EntryKey> read_annotated(const std::filesystem::path& rules_log);

struct CleanSettings {
  llm::FewShotStrategy strategy;
  rules::FilterConfig filters = rules::default_rules().filters;
  // Entries left exactly as they are (rule-annotated).
  std::set<EntryKey> skip;
};

struct StageReport {
  Corpus corpus;
  llm::BatchReport batch;
  // Entries that never reached the model.
  std::size_t skipped = 0;
};

/// Batch items for the model stage of cleaning; empty at E1.
std::vector<llm::BatchItem> clean_items(const Corpus& corpus, const CleanSettings& settings);

/// Filters every entry (E1), then at E2..E4 asks the model for the parallel subset.
/// Entries whose call failed keep their filtered terms.
StageReport clean_corpus(const Corpus& corpus, llm::ChatBackend& backend, const CleanSettings& settings,
                         const llm::BatchLimits& limits);

std::vector<llm::BatchItem> expand_items(const Corpus& corpus);

/// Entries without terms or language are not sent and stay unchanged.
StageReport expand_corpus(const Corpus& corpus, llm::ChatBackend& backend, const llm::BatchLimits& limits);

struct CostEstimate {
  std::size_t requests = 0;
  std::size_t tokens = 0;
  double price_per_1k = 0.0;
  double usd = 0.0;
};

CostEstimate estimate(const std::vector<llm::BatchItem>& items, double price_per_1k);

}  // namespace signbank::pipeline
