#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "signbank/fsw.hpp"

namespace signbank {

struct EntryKey {
  int puddle_id = 0;
  int entry_id = 0;

  std::string str() const { return std::to_string(puddle_id) + ":" + std::to_string(entry_id); }
  friend auto operator<=>(const EntryKey&, const EntryKey&) = default;
};

/// One SignBank record. `english_terms` holds English expansions of a non-English
/// entry; they pair under the "en" spoken tag.
struct Entry {
  int puddle_id = 0;
  int entry_id = 0;
  std::string language;
  fsw::FswSequence fsw;
  std::vector<std::string> terms;
  std::vector<std::string> english_terms;

  EntryKey key() const { return {puddle_id, entry_id}; }
  std::size_t term_count() const { return terms.size() + english_terms.size(); }
  friend bool operator==(const Entry&, const Entry&) = default;
};

/// Output of one expand call: term lists for the entry's language and for English,
/// each deduplicated in first-occurrence order.
struct ExpansionResult {
  std::vector<std::string> native;
  std::vector<std::string> english;
  friend bool operator==(const ExpansionResult&, const ExpansionResult&) = default;
};

enum class Provenance { original, cleaned, expanded };

std::string_view to_string(Provenance provenance);
Provenance provenance_from_string(std::string_view name);

struct Corpus {
  std::vector<Entry> entries;
  Provenance provenance = Provenance::original;

  std::size_t size() const noexcept { return entries.size(); }
  /// Sorts by (puddle_id, entry_id).
  void normalize_order();
  friend bool operator==(const Corpus&, const Corpus&) = default;
};

}  // namespace signbank

namespace signbank::corpus {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DevTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Reject {
  std::size_t line = 0;
  std::string reason;
  std::string raw;
};

struct IngestResult {
  Corpus corpus;
  std::vector<Reject> rejects;
};

struct IngestOptions {
  bool strict_fsw = false;
};

// Row layout: puddle_id, entry_id, language, fsw, terms[, english_terms], tab-separated.
// An optional first line "#provenance=<name>" records the corpus provenance.
Entry parse_row(std::string_view line, const IngestOptions& options = {});
std::string format_row(const Entry& entry);

IngestResult ingest(std::istream& in, const IngestOptions& options = {});
/// Throws IoError when the file cannot be opened.
IngestResult ingest(const std::filesystem::path& path, const IngestOptions& options = {});

void write_corpus(std::ostream& out, const Corpus& corpus);
void write_corpus(const std::filesystem::path& path, const Corpus& corpus);
void write_rejects(const std::filesystem::path& path, const std::vector<Reject>& rejects);

struct Split {
  Corpus train;
  Corpus dev;
  Corpus test;
};

/// Holds out `test_ids` first, then takes the first `dev_size` remaining entries as dev.
Split split(const Corpus& corpus, std::size_t dev_size, const std::set<EntryKey>& test_ids = {});

/// Reads "puddle_id<TAB>entry_id" lines; further columns are ignored.
std::set<EntryKey> read_id_list(const std::filesystem::path& path);

enum class Direction { signed_to_spoken, spoken_to_signed };

std::string_view to_string(Direction direction);
Direction direction_from_string(std::string_view name);

/// Signed-language code per puddle, with a fallback derived from the spoken language.
class TagTable {
 public:
  static TagTable defaults();
  /// "puddle_id<TAB>code" lines, layered over the defaults.
  static TagTable load(const std::filesystem::path& path);

  void set(int puddle_id, std::string code) { signed_codes_[puddle_id] = std::move(code); }
  std::string signed_code(int puddle_id, std::string_view spoken_language) const;
  const std::map<int, std::string>& entries() const noexcept { return signed_codes_; }

 private:
  std::map<int, std::string> signed_codes_;
};

struct ParallelPair {
  std::string source;
  std::string target;
  std::string signed_tag;
  std::string spoken_tag;
};

/// One pair per term. The source side starts with "$<signed> $<spoken>".
std::vector<ParallelPair> make_pairs(const Entry& entry, Direction direction,
                                     const TagTable& tags = TagTable::defaults());

struct ExportSplit {
  std::string name;
  const Corpus* corpus = nullptr;
};

struct ExportManifest {
  std::string direction;
  std::string config_hash;
  struct SplitInfo {
    std::string name;
    std::string provenance;
    std::size_t entries = 0;
    std::size_t pairs = 0;
    std::string source_sha256;
    std::string target_sha256;
  };
  std::vector<SplitInfo> splits;

  std::string to_json() const;
};

/// Writes <name>.source.txt / <name>.target.txt per split plus manifest.json.
ExportManifest export_corpus(const std::vector<ExportSplit>& splits, Direction direction,
                             const std::filesystem::path& out_dir, const TagTable& tags,
                             const std::string& config_hash);

/// Replaces terms by the native expansion and sets english_terms from the English one;
/// entries without a result keep their terms.
Corpus apply_expansion(const Corpus& corpus, const std::map<EntryKey, ExpansionResult>& results);

}  // namespace signbank::corpus
