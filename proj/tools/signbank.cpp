#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "signbank/chat.hpp"
#include "signbank/corpus.hpp"
#include "signbank/metrics.hpp"
#include "signbank/pipeline.hpp"
#include "signbank/rules.hpp"
#include "signbank/text.hpp"
#include "signbank/tokenizer.hpp"

namespace fs = std::filesystem;
using namespace signbank;
using pipeline::ConfigError;
using pipeline::PipelineConfig;

namespace {

// Bad input data; exit code 1. Config problems raise ConfigError instead (exit code 2).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Flags {
  std::optional<std::string> config, input, gold, out, model, strategy, direction, rules_config, rules_log,
      test_ids, backend, replay, checkpoint, failure_log, tag_table, base_url;
  std::optional<std::size_t> max_in_flight, dev_size, k_puddle;
  std::optional<int> retries;
  bool estimate_only = false;
  bool dry_run = false;
  bool strict_fsw = false;
  bool ids = false;
  bool pretty = false;
  bool json = false;
  bool dump_config = false;
};

PipelineConfig resolve_config(const Flags& f) {
  PipelineConfig c = f.config ? PipelineConfig::load(*f.config) : PipelineConfig{};
  auto path = [](const std::optional<std::string>& flag, fs::path& field) {
    if (flag) field = *flag;
  };
  path(f.input, c.input);
  path(f.gold, c.gold);
  path(f.out, c.out);
  path(f.rules_config, c.rules_config);
  path(f.rules_log, c.rules_log);
  path(f.test_ids, c.test_ids);
  path(f.replay, c.replay);
  path(f.checkpoint, c.checkpoint);
  path(f.failure_log, c.failure_log);
  path(f.tag_table, c.tag_table);
  if (f.model) c.model = *f.model;
  if (f.backend) c.backend = *f.backend;
  if (f.base_url) c.base_url = *f.base_url;
  if (f.max_in_flight) c.max_in_flight = *f.max_in_flight;
  if (f.retries) c.retries = *f.retries;
  if (f.dev_size) c.dev_size = *f.dev_size;
  if (f.k_puddle) c.k_puddle = *f.k_puddle;
  if (f.strict_fsw) c.strict_fsw = true;
  try {
    if (f.strategy) c.strategy = llm::strategy_from_string(*f.strategy);
    if (f.direction) c.direction = corpus::direction_from_string(*f.direction);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (c.max_in_flight == 0) throw ConfigError("--max-in-flight must be at least 1");
  if (c.retries < 0) throw ConfigError("--retries must not be negative");
  return c;
}

void require_file(const fs::path& p, const char* flag) {
  if (p.empty()) throw ConfigError(std::string(flag) + " is required");
  if (!fs::is_regular_file(p)) throw ConfigError(std::string(flag) + ": no such file " + p.string());
}

void optional_file(const fs::path& p, const char* flag) {
  if (!p.empty()) require_file(p, flag);
}

void require_out(const PipelineConfig& c) {
  if (c.out.empty()) throw ConfigError("--out is required");
}

std::ofstream open_output(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + p.string());
  return out;
}

// Writes to --out when given, otherwise stdout; nothing is written under --dry-run.
class Sink {
 public:
  Sink(const fs::path& path, bool dry_run) : dry_run_(dry_run) {
    if (!dry_run && !path.empty()) file_ = open_output(path);
  }
  template <typename T>
  Sink& operator<<(const T& value) {
    if (dry_run_) return *this;
    if (file_.is_open()) {
      file_ << value;
    } else {
      std::cout << value;
    }
    return *this;
  }

 private:
  bool dry_run_;
  std::ofstream file_;
};

Corpus load_corpus(const PipelineConfig& c, std::size_t& rejects) {
  auto result = corpus::ingest(c.input, {c.strict_fsw});
  for (const auto& r : result.rejects) {
    std::cerr << c.input.string() << ":" << r.line << ": " << r.reason << "\n";
  }
  rejects += result.rejects.size();
  return std::move(result.corpus);
}

std::unique_ptr<llm::ChatBackend> make_backend(const PipelineConfig& c) {
  if (c.backend == "echo") return std::make_unique<llm::EchoBackend>();
  if (c.backend == "replay") {
    require_file(c.replay, "--replay");
    try {
      return std::make_unique<llm::ReplayBackend>(llm::ReplayBackend::load(c.replay));
    } catch (const llm::BackendError& e) {
      throw ConfigError(e.what());
    }
  }
  if (c.backend == "openai") {
    const char* key = std::getenv("CHAT_API_KEY");
    if (key == nullptr || *key == '\0') throw ConfigError("CHAT_API_KEY is not set");
    llm::HttpBackendOptions o;
    o.base_url = c.base_url;
    o.model = c.model;
    o.api_key = key;
    o.temperature = c.temperature;
    return std::make_unique<llm::HttpChatBackend>(o);
  }
  throw ConfigError("unknown backend '" + c.backend + "' (openai, echo, replay)");
}

double price_for(const PipelineConfig& c) {
  if (c.backend != "openai") return 0.0;
  const auto price = llm::price_per_1k(c.model);
  if (!price) throw ConfigError("no price known for model '" + c.model + "'");
  return *price;
}

void print_estimate(const pipeline::CostEstimate& e) {
  std::cout << "requests\t" << e.requests << "\n"
            << "tokens\t" << e.tokens << "\n"
            << "price_per_1k\t" << e.price_per_1k << "\n"
            << std::fixed << std::setprecision(2) << "usd\t" << e.usd << "\n";
}

void report_batch(const char* stage, const pipeline::StageReport& r) {
  std::cerr << stage << ": " << r.corpus.size() << " entries, " << r.batch.requests_sent << " requests, "
            << r.batch.failures << " failures, " << r.skipped << " not sent\n";
}

// --- subcommands ---

int cmd_tokenize(const Flags& f, const PipelineConfig& c) {
  optional_file(c.input, "--input");
  std::ifstream file;
  std::istream* in = &std::cin;
  if (!c.input.empty()) {
    file.open(c.input, std::ios::binary);
    in = &file;
  }
  Sink out(c.out, f.dry_run);
  std::size_t errors = 0;
  std::size_t line_no = 0;
  for (std::string raw; std::getline(*in, raw);) {
    ++line_no;
    const auto line = text::trim(text::chomp(raw));
    if (line.empty()) {
      out << "\n";
      continue;
    }
    try {
      const auto tokens = tokens::tokenize(fsw::parse_sequence(line, {c.strict_fsw}));
      if (f.ids) {
        std::string joined;
        for (const auto id : tokens::encode_ids(tokens)) {
          if (!joined.empty()) joined += ' ';
          joined += std::to_string(id);
        }
        out << joined << "\n";
      } else {
        out << tokens::format_tokens(tokens) << "\n";
      }
    } catch (const fsw::MalformedSign& e) {
      std::cerr << "line " << line_no << ": " << e.what() << "\n";
      ++errors;
    }
  }
  return errors == 0 ? 0 : 1;
}

int cmd_detokenize(const Flags& f, const PipelineConfig& c) {
  optional_file(c.input, "--input");
  std::ifstream file;
  std::istream* in = &std::cin;
  if (!c.input.empty()) {
    file.open(c.input, std::ios::binary);
    in = &file;
  }
  Sink out(c.out, f.dry_run);
  std::size_t errors = 0;
  std::size_t line_no = 0;
  for (std::string raw; std::getline(*in, raw);) {
    ++line_no;
    const auto line = text::trim(text::chomp(raw));
    if (line.empty()) {
      out << "\n";
      continue;
    }
    try {
      std::vector<tokens::Token> toks;
      if (f.ids) {
        std::vector<std::int32_t> ids;
        std::istringstream fields{std::string(line)};
        for (std::string id; fields >> id;) {
          std::size_t used = 0;
          ids.push_back(std::stoi(id, &used));
          if (used != id.size()) throw tokens::UnknownToken("not a token id: " + id);
        }
        toks = tokens::decode_ids(ids);
      } else {
        toks = tokens::parse_tokens(line);
      }
      out << fsw::serialize(tokens::detokenize(toks)) << "\n";
    } catch (const std::exception& e) {
      std::cerr << "line " << line_no << ": " << e.what() << "\n";
      ++errors;
    }
  }
  return errors == 0 ? 0 : 1;
}

int cmd_vocab(const Flags& f, const PipelineConfig& c) {
  Sink out(c.out, f.dry_run);
  const auto& vocab = tokens::vocabulary();
  for (std::size_t i = 0; i < vocab.size(); ++i) out << i << "\t" << vocab.tokens()[i] << "\n";
  return 0;
}

int cmd_validate(const Flags&, const PipelineConfig& c) {
  require_file(c.input, "--input");
  std::size_t rejects = 0;
  const auto corpus = load_corpus(c, rejects);
  std::size_t terms = 0;
  for (const auto& e : corpus.entries) terms += e.term_count();
  std::cout << "entries\t" << corpus.size() << "\nterms\t" << terms << "\nrejects\t" << rejects << "\n";
  return rejects == 0 ? 0 : 1;
}

rules::RuleSet load_rule_set(const PipelineConfig& c) {
  if (c.rules_config.empty()) return rules::default_rules();
  return rules::load_rules(c.rules_config);
}

int cmd_rules(const Flags& f, const PipelineConfig& c) {
  optional_file(c.rules_config, "--rules-config");
  if (f.dump_config) {
    Sink out(c.out, f.dry_run);
    out << rules::rules_to_json(load_rule_set(c));
    return 0;
  }
  require_file(c.input, "--input");
  const auto rule_set = load_rule_set(c);
  std::size_t rejects = 0;
  const auto input = load_corpus(c, rejects);
  const auto report = rules::apply_rules(input, rule_set);

  std::map<std::string, std::size_t> by_action;
  for (const auto& row : report.outcomes) ++by_action[std::string(rules::to_string(row.outcome.action))];
  for (const auto& [action, n] : by_action) std::cerr << action << "\t" << n << "\n";

  if (!f.dry_run) {
    if (c.out.empty()) {
      corpus::write_corpus(std::cout, report.corpus);
    } else {
      corpus::write_corpus(c.out, report.corpus);
    }
    if (!c.rules_log.empty()) {
      auto log = open_output(c.rules_log);
      for (const auto& row : report.outcomes) log << rules::outcome_log_line(row) << "\n";
    }
  }
  return rejects == 0 ? 0 : 1;
}

int cmd_clean(const Flags& f, const PipelineConfig& c) {
  require_file(c.input, "--input");
  optional_file(c.gold, "--gold");
  optional_file(c.rules_config, "--rules-config");
  optional_file(c.rules_log, "--rules-log");
  const bool pooled = c.strategy == llm::StrategyLevel::e3 || c.strategy == llm::StrategyLevel::e4;
  if (pooled && c.gold.empty()) throw ConfigError("strategies e3 and e4 need --gold for the puddle examples");
  if (!f.estimate_only) require_out(c);

  pipeline::CleanSettings settings;
  settings.strategy.level = c.strategy;
  settings.strategy.k_puddle = c.k_puddle;
  if (!c.rules_config.empty()) settings.filters = rules::load_rules(c.rules_config).filters;
  if (!c.rules_log.empty()) settings.skip = pipeline::read_annotated(c.rules_log);

  std::size_t rejects = 0;
  const auto input = load_corpus(c, rejects);
  if (pooled) settings.strategy.puddle_pool = llm::build_puddle_pool(input, metrics::read_term_lists(c.gold));

  if (f.estimate_only) {
    print_estimate(pipeline::estimate(pipeline::clean_items(input, settings), price_for(c)));
    return rejects == 0 ? 0 : 1;
  }
  auto backend = make_backend(c);
  if (f.dry_run) {
    std::cerr << "clean: " << pipeline::clean_items(input, settings).size() << " requests would be sent\n";
    return rejects == 0 ? 0 : 1;
  }
  const auto report = pipeline::clean_corpus(input, *backend, settings, c.limits());
  corpus::write_corpus(c.out, report.corpus);
  report_batch("clean", report);
  return rejects == 0 && report.batch.failures == 0 ? 0 : 1;
}

int cmd_expand(const Flags& f, const PipelineConfig& c) {
  require_file(c.input, "--input");
  if (!f.estimate_only) require_out(c);
  std::size_t rejects = 0;
  const auto input = load_corpus(c, rejects);

  if (f.estimate_only) {
    print_estimate(pipeline::estimate(pipeline::expand_items(input), price_for(c)));
    return rejects == 0 ? 0 : 1;
  }
  auto backend = make_backend(c);
  if (f.dry_run) {
    std::cerr << "expand: " << pipeline::expand_items(input).size() << " requests would be sent\n";
    return rejects == 0 ? 0 : 1;
  }
  const auto report = pipeline::expand_corpus(input, *backend, c.limits());
  corpus::write_corpus(c.out, report.corpus);
  report_batch("expand", report);
  return rejects == 0 && report.batch.failures == 0 ? 0 : 1;
}

metrics::TermTable term_table(const fs::path& path) {
  metrics::TermTable table;
  for (const auto& [key, terms] : metrics::read_term_lists(path)) table.emplace(key, metrics::TermSet(terms));
  return table;
}

int cmd_eval(const Flags& f, const PipelineConfig& c) {
  require_file(c.input, "--input");
  require_file(c.gold, "--gold");
  const auto report = metrics::mean_iou(term_table(c.input), term_table(c.gold));
  std::cout << (f.json ? report.to_json() + "\n" : report.to_table());
  if (!c.out.empty() && !f.dry_run) open_output(c.out) << report.to_json() << "\n";
  return 0;
}

std::set<EntryKey> test_ids_of(const PipelineConfig& c) {
  return c.test_ids.empty() ? std::set<EntryKey>{} : corpus::read_id_list(c.test_ids);
}

int cmd_split(const Flags& f, const PipelineConfig& c) {
  require_file(c.input, "--input");
  optional_file(c.test_ids, "--test-ids");
  require_out(c);
  const auto test_ids = test_ids_of(c);
  std::size_t rejects = 0;
  const auto input = load_corpus(c, rejects);
  const auto parts = corpus::split(input, c.dev_size, test_ids);
  std::cout << "train\t" << parts.train.size() << "\ndev\t" << parts.dev.size() << "\ntest\t" << parts.test.size()
            << "\n";
  if (!f.dry_run) {
    fs::create_directories(c.out);
    corpus::write_corpus(c.out / "train.tsv", parts.train);
    corpus::write_corpus(c.out / "dev.tsv", parts.dev);
    corpus::write_corpus(c.out / "test.tsv", parts.test);
  }
  return rejects == 0 ? 0 : 1;
}

int cmd_export(const Flags& f, const PipelineConfig& c) {
  if (c.input.empty()) throw ConfigError("--input is required");
  if (!fs::exists(c.input)) throw ConfigError("--input: no such file or directory " + c.input.string());
  optional_file(c.tag_table, "--tag-table");
  optional_file(c.test_ids, "--test-ids");
  require_out(c);
  const auto tags = c.tag_table.empty() ? corpus::TagTable::defaults() : corpus::TagTable::load(c.tag_table);

  // A directory holds split output; a file is split here.
  std::size_t rejects = 0;
  std::vector<std::pair<std::string, Corpus>> parts;
  if (fs::is_directory(c.input)) {
    for (const char* name : {"train", "dev", "test"}) {
      auto part = c;
      part.input = c.input / (std::string(name) + ".tsv");
      if (fs::is_regular_file(part.input)) parts.emplace_back(name, load_corpus(part, rejects));
    }
    if (parts.empty()) throw ConfigError("--input: no train/dev/test.tsv in " + c.input.string());
  } else {
    const auto test_ids = test_ids_of(c);
    auto s = corpus::split(load_corpus(c, rejects), c.dev_size, test_ids);
    parts = {{"train", std::move(s.train)}, {"dev", std::move(s.dev)}, {"test", std::move(s.test)}};
  }

  if (f.dry_run) {
    for (const auto& [name, part] : parts) {
      std::size_t pairs = 0;
      for (const auto& e : part.entries) pairs += corpus::make_pairs(e, c.direction, tags).size();
      std::cout << name << "\t" << part.size() << " entries\t" << pairs << " pairs\n";
    }
    return rejects == 0 ? 0 : 1;
  }
  std::vector<corpus::ExportSplit> splits;
  for (const auto& [name, part] : parts) splits.push_back({name, &part});
  const auto manifest = corpus::export_corpus(splits, c.direction, c.out, tags, c.hash());
  std::cout << manifest.to_json() << "\n";
  return rejects == 0 ? 0 : 1;
}

// --- flag wiring ---

enum Opt : unsigned {
  kInput = 1u << 0,
  kGold = 1u << 1,
  kOut = 1u << 2,
  kModel = 1u << 3,  // --model, --backend, --replay, --max-in-flight, --retries, --checkpoint, --failure-log
  kStrategy = 1u << 4,
  kDirection = 1u << 5,
  kDevSize = 1u << 6,
  kEstimate = 1u << 7,
  kStrict = 1u << 8,
  kRulesConfig = 1u << 9,
  kRulesLog = 1u << 10,
  kTestIds = 1u << 11,
  kTagTable = 1u << 12,
};

CLI::App* add_command(CLI::App& app, Flags& f, const std::string& name, const std::string& help, unsigned opts) {
  auto* cmd = app.add_subcommand(name, help);
  cmd->add_option("--config", f.config, "JSON config file; flags override its fields");
  cmd->add_flag("--dry-run", f.dry_run, "validate everything; no writes, no network calls");
  if (opts & kInput) cmd->add_option("--input", f.input, "input file");
  if (opts & kGold) cmd->add_option("--gold", f.gold, "gold term lists");
  if (opts & kOut) cmd->add_option("--out", f.out, "output path");
  if (opts & kModel) {
    cmd->add_option("--model", f.model, "model id");
    cmd->add_option("--backend", f.backend, "openai, echo or replay");
    cmd->add_option("--base-url", f.base_url, "chat completion endpoint root");
    cmd->add_option("--replay", f.replay, "recorded exchanges for the replay backend");
    cmd->add_option("--max-in-flight", f.max_in_flight, "concurrent requests");
    cmd->add_option("--retries", f.retries, "retries per request");
    cmd->add_option("--checkpoint", f.checkpoint, "JSON-lines checkpoint for resuming");
    cmd->add_option("--failure-log", f.failure_log, "JSON-lines log of failed entries");
  }
  if (opts & kStrategy) {
    cmd->add_option("--strategy", f.strategy, "few-shot level e1..e4");
    cmd->add_option("--k-puddle", f.k_puddle, "same-puddle examples at e3/e4");
  }
  if (opts & kDirection) cmd->add_option("--direction", f.direction, "signed_to_spoken or spoken_to_signed");
  if (opts & kDevSize) cmd->add_option("--dev-size", f.dev_size, "entries in the dev split");
  if (opts & kEstimate) cmd->add_flag("--estimate-only", f.estimate_only, "print the cost estimate and stop");
  if (opts & kStrict) cmd->add_flag("--strict-fsw", f.strict_fsw, "reject symbol bases 38c..38f");
  if (opts & kRulesConfig) cmd->add_option("--rules-config", f.rules_config, "rule configuration JSON");
  if (opts & kRulesLog) cmd->add_option("--rules-log", f.rules_log, "rule outcome log (JSON lines)");
  if (opts & kTestIds) cmd->add_option("--test-ids", f.test_ids, "held-out puddle/entry ids");
  if (opts & kTagTable) cmd->add_option("--tag-table", f.tag_table, "puddle to signed-language code table");
  return cmd;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SignBank+ corpus toolkit"};
  app.require_subcommand(1);
  Flags f;

  using Handler = int (*)(const Flags&, const PipelineConfig&);
  std::vector<std::pair<CLI::App*, Handler>> commands;
  auto add = [&](const std::string& name, const std::string& help, unsigned opts, Handler h) {
    auto* cmd = add_command(app, f, name, help, opts);
    commands.emplace_back(cmd, h);
    return cmd;
  };

  add("validate", "check a corpus TSV", kInput | kStrict, cmd_validate);
  add("tokenize", "FSW lines to token lines", kInput | kOut | kStrict, cmd_tokenize)
      ->add_flag("--ids", f.ids, "emit vocabulary ids");
  add("detokenize", "token lines to FSW lines", kInput | kOut, cmd_detokenize)
      ->add_flag("--ids", f.ids, "read vocabulary ids");
  add("vocab", "print the token vocabulary", kOut, cmd_vocab);
  add("rules", "apply annotation and filter rules", kInput | kOut | kRulesConfig | kRulesLog | kStrict, cmd_rules)
      ->add_flag("--dump-config", f.dump_config, "print the rule configuration as JSON");
  add("clean", "filter terms and ask the model for the parallel subset",
      kInput | kGold | kOut | kModel | kStrategy | kEstimate | kStrict | kRulesConfig | kRulesLog, cmd_clean);
  add("expand", "ask the model for term expansions", kInput | kOut | kModel | kEstimate | kStrict, cmd_expand);
  add("eval-iou", "mean IoU of predicted against gold term lists", kInput | kGold | kOut, cmd_eval)
      ->add_flag("--json", f.json, "print the JSON report");
  add("split", "train/dev/test split", kInput | kOut | kDevSize | kTestIds | kStrict, cmd_split);
  add("export", "write parallel source/target files",
      kInput | kOut | kDevSize | kTestIds | kDirection | kTagTable | kStrict, cmd_export);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    const auto config = resolve_config(f);
    for (const auto& [cmd, handler] : commands) {
      if (cmd->parsed()) return handler(f, config);
    }
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const rules::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const llm::BatchConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const metrics::KeyMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
