#include "signbank/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "signbank/text.hpp"
#include "signbank/tokenizer.hpp"

namespace signbank {

std::string_view to_string(Provenance provenance) {
  switch (provenance) {
    case Provenance::original: return "original";
    case Provenance::cleaned: return "cleaned";
    case Provenance::expanded: return "expanded";
  }
  return "original";
}

Provenance provenance_from_string(std::string_view name) {
  if (name == "original") return Provenance::original;
  if (name == "cleaned") return Provenance::cleaned;
  if (name == "expanded") return Provenance::expanded;
  throw std::invalid_argument("unknown provenance '" + std::string(name) + "'");
}

void Corpus::normalize_order() {
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.key() < b.key(); });
}

}  // namespace signbank

namespace signbank::corpus {

namespace {

constexpr std::string_view kProvenanceHeader = "#provenance=";

int parse_id(std::string_view field, const char* what) {
  field = text::trim(field);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size() || v < 0) {
    throw ParseError(std::string("bad ") + what + " '" + std::string(field) + "'");
  }
  return v;
}

std::vector<std::string> clean_terms(std::string_view cell) {
  return text::dedupe_trimmed(text::decode_terms(cell));
}

// Pair sides must stay on one line.
std::string flatten(std::string_view s) {
  std::string out(s);
  std::replace_if(out.begin(), out.end(), [](char c) { return c == '\n' || c == '\r' || c == '\t'; }, ' ');
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

Entry parse_row(std::string_view line, const IngestOptions& options) {
  const auto fields = text::split(text::chomp(line), '\t');
  if (fields.size() != 5 && fields.size() != 6) {
    throw ParseError("expected 5 or 6 tab-separated fields, got " + std::to_string(fields.size()));
  }
  Entry entry;
  entry.puddle_id = parse_id(fields[0], "puddle_id");
  entry.entry_id = parse_id(fields[1], "entry_id");
  entry.language = std::string(text::trim(fields[2]));
  if (entry.language.empty()) throw ParseError("empty language code");
  try {
    entry.fsw = fsw::parse_sequence(text::trim(fields[3]), fsw::ParseOptions{options.strict_fsw});
  } catch (const fsw::MalformedSign& e) {
    throw ParseError(std::string("bad fsw: ") + e.what());
  }
  entry.terms = clean_terms(fields[4]);
  if (fields.size() == 6) entry.english_terms = clean_terms(fields[5]);
  return entry;
}

std::string format_row(const Entry& entry) {
  std::string row = std::to_string(entry.puddle_id) + '\t' + std::to_string(entry.entry_id) + '\t' +
                    entry.language + '\t' + fsw::serialize(entry.fsw) + '\t' +
                    text::encode_terms(entry.terms);
  if (!entry.english_terms.empty()) row += '\t' + text::encode_terms(entry.english_terms);
  return row;
}

IngestResult ingest(std::istream& in, const IngestOptions& options) {
  IngestResult result;
  std::set<EntryKey> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = text::chomp(line);
    if (line_no == 1 && view.starts_with(kProvenanceHeader)) {
      try {
        result.corpus.provenance = provenance_from_string(view.substr(kProvenanceHeader.size()));
      } catch (const std::invalid_argument& e) {
        result.rejects.push_back({line_no, e.what(), line});
      }
      continue;
    }
    if (text::trim(view).empty()) continue;
    try {
      Entry entry = parse_row(view, options);
      if (!seen.insert(entry.key()).second) throw ParseError("duplicate entry " + entry.key().str());
      result.corpus.entries.push_back(std::move(entry));
    } catch (const ParseError& e) {
      result.rejects.push_back({line_no, e.what(), line});
    }
  }
  result.corpus.normalize_order();
  return result;
}

IngestResult ingest(const std::filesystem::path& path, const IngestOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return ingest(in, options);
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  // Original is the default, so a corpus that went through no model stage round-trips unchanged.
  if (corpus.provenance != Provenance::original) out << kProvenanceHeader << to_string(corpus.provenance) << '\n';
  for (const auto& entry : corpus.entries) out << format_row(entry) << '\n';
}

void write_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  auto out = open_out(path);
  write_corpus(out, corpus);
  if (!out) throw IoError("write failed: " + path.string());
}

void write_rejects(const std::filesystem::path& path, const std::vector<Reject>& rejects) {
  auto out = open_out(path);
  for (const auto& r : rejects) out << r.line << '\t' << r.reason << '\t' << flatten(r.raw) << '\n';
}

Split split(const Corpus& corpus, std::size_t dev_size, const std::set<EntryKey>& test_ids) {
  Split parts;
  parts.train.provenance = parts.dev.provenance = parts.test.provenance = corpus.provenance;
  std::vector<const Entry*> remaining;
  for (const auto& entry : corpus.entries) {
    if (test_ids.contains(entry.key())) {
      parts.test.entries.push_back(entry);
    } else {
      remaining.push_back(&entry);
    }
  }
  if (dev_size > remaining.size()) {
    throw DevTooLarge("dev size " + std::to_string(dev_size) + " exceeds the " +
                      std::to_string(remaining.size()) + " entries left after the test holdout");
  }
  for (std::size_t i = 0; i < remaining.size(); ++i) {
    (i < dev_size ? parts.dev : parts.train).entries.push_back(*remaining[i]);
  }
  return parts;
}

std::set<EntryKey> read_id_list(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::set<EntryKey> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(text::chomp(line), '\t');
    if (fields.size() < 2) throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected two ids");
    ids.insert({parse_id(fields[0], "puddle_id"), parse_id(fields[1], "entry_id")});
  }
  return ids;
}

std::string_view to_string(Direction direction) {
  return direction == Direction::signed_to_spoken ? "signed_to_spoken" : "spoken_to_signed";
}

Direction direction_from_string(std::string_view name) {
  if (name == "signed_to_spoken") return Direction::signed_to_spoken;
  if (name == "spoken_to_signed") return Direction::spoken_to_signed;
  throw std::invalid_argument("unknown direction '" + std::string(name) + "'");
}

TagTable TagTable::defaults() {
  TagTable table;
  // Puddles whose signed language differs from the spoken-language fallback.
  table.set(16, "hds");
  table.set(41, "aed");
  table.set(47, "fcs");
  table.set(49, "ssr");
  return table;
}

TagTable TagTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  TagTable table = defaults();
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty() || line.front() == '#') continue;
    const auto fields = text::split(text::chomp(line), '\t');
    if (fields.size() != 2 || text::trim(fields[1]).empty()) {
      throw ParseError("bad tag table line '" + line + "'");
    }
    table.set(parse_id(fields[0], "puddle_id"), std::string(text::trim(fields[1])));
  }
  return table;
}

std::string TagTable::signed_code(int puddle_id, std::string_view spoken_language) const {
  if (const auto it = signed_codes_.find(puddle_id); it != signed_codes_.end()) return it->second;
  static const std::map<std::string, std::string, std::less<>> by_spoken = {
      {"bg", "bqn"}, {"ca", "csc"}, {"cs", "cse"}, {"da", "dsl"}, {"de", "gsg"}, {"en", "ase"},
      {"es", "ssp"}, {"fi", "fse"}, {"fr", "fsl"}, {"hu", "hsh"}, {"is", "icl"}, {"it", "ise"},
      {"ja", "jsl"}, {"ko", "kvk"}, {"mt", "mdl"}, {"ne", "nsp"}, {"nl", "dse"}, {"no", "nsl"},
      {"pl", "pso"}, {"pt", "bzs"}, {"ro", "rms"}, {"ru", "rsl"}, {"sk", "svk"}, {"sq", "sqk"},
      {"sv", "swl"}, {"tr", "tsm"}, {"uk", "ukl"},
  };
  const std::string lower = text::to_lower_ascii(spoken_language);
  if (const auto it = by_spoken.find(lower); it != by_spoken.end()) return it->second;
  return "sgn-" + lower;
}

std::vector<ParallelPair> make_pairs(const Entry& entry, Direction direction, const TagTable& tags) {
  std::vector<ParallelPair> pairs;
  pairs.reserve(entry.term_count());
  // "und" keeps the two-tag prefix intact for entries without a language code.
  const std::string language = entry.language.empty() ? std::string("und") : entry.language;
  const std::string signed_tag = "$" + tags.signed_code(entry.puddle_id, language);
  const std::string signed_text = tokens::format_tokens(tokens::tokenize(entry.fsw));
  auto add = [&](const std::string& term, const std::string& spoken_code) {
    ParallelPair pair;
    pair.signed_tag = signed_tag;
    pair.spoken_tag = "$" + spoken_code;
    const std::string prefix = pair.signed_tag + " " + pair.spoken_tag + " ";
    if (direction == Direction::signed_to_spoken) {
      pair.source = prefix + signed_text;
      pair.target = flatten(term);
    } else {
      pair.source = prefix + flatten(term);
      pair.target = signed_text;
    }
    pairs.push_back(std::move(pair));
  };
  for (const auto& term : entry.terms) add(term, language);
  for (const auto& term : entry.english_terms) add(term, "en");
  return pairs;
}

std::string ExportManifest::to_json() const {
  nlohmann::ordered_json j;
  j["direction"] = direction;
  j["config_hash"] = config_hash;
  j["splits"] = nlohmann::ordered_json::array();
  for (const auto& s : splits) {
    nlohmann::ordered_json item;
    item["name"] = s.name;
    item["provenance"] = s.provenance;
    item["entries"] = s.entries;
    item["pairs"] = s.pairs;
    item["source_sha256"] = s.source_sha256;
    item["target_sha256"] = s.target_sha256;
    j["splits"].push_back(std::move(item));
  }
  return j.dump(2) + "\n";
}

ExportManifest export_corpus(const std::vector<ExportSplit>& splits, Direction direction,
                             const std::filesystem::path& out_dir, const TagTable& tags,
                             const std::string& config_hash) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  ExportManifest manifest;
  manifest.direction = std::string(to_string(direction));
  manifest.config_hash = config_hash;
  for (const auto& split : splits) {
    std::string source;
    std::string target;
    ExportManifest::SplitInfo info;
    info.name = split.name;
    info.provenance = std::string(to_string(split.corpus->provenance));
    info.entries = split.corpus->size();
    for (const auto& entry : split.corpus->entries) {
      for (const auto& pair : make_pairs(entry, direction, tags)) {
        source += pair.source;
        source += '\n';
        target += pair.target;
        target += '\n';
        ++info.pairs;
      }
    }
    info.source_sha256 = text::sha256_hex(source);
    info.target_sha256 = text::sha256_hex(target);
    auto src = open_out(out_dir / (split.name + ".source.txt"));
    src << source;
    auto tgt = open_out(out_dir / (split.name + ".target.txt"));
    tgt << target;
    if (!src || !tgt) throw IoError("write failed in " + out_dir.string());
    manifest.splits.push_back(std::move(info));
  }
  auto out = open_out(out_dir / "manifest.json");
  out << manifest.to_json();
  return manifest;
}

Corpus apply_expansion(const Corpus& corpus, const std::map<EntryKey, ExpansionResult>& results) {
  Corpus expanded;
  expanded.provenance = Provenance::expanded;
  expanded.entries.reserve(corpus.size());
  for (const auto& entry : corpus.entries) {
    Entry out = entry;
    const auto it = results.find(entry.key());
    if (it != results.end() && (!it->second.native.empty() || !it->second.english.empty())) {
      const auto& result = it->second;
      std::vector<std::string> native = result.native.empty() ? entry.terms : result.native;
      if (text::to_lower_ascii(entry.language) == "en") {
        native.insert(native.end(), result.english.begin(), result.english.end());
        out.terms = text::dedupe_trimmed(native);
        out.english_terms.clear();
      } else {
        out.terms = text::dedupe_trimmed(native);
        out.english_terms = text::dedupe_trimmed(result.english);
      }
    }
    expanded.entries.push_back(std::move(out));
  }
  return expanded;
}

}  // namespace signbank::corpus
