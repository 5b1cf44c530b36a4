#include "signbank/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "signbank/text.hpp"

namespace signbank::metrics {

namespace {

std::string describe(const std::vector<EntryKey>& missing, const std::vector<EntryKey>& extra) {
  std::string out = "prediction and gold keys differ";
  auto list = [&out](const char* label, const std::vector<EntryKey>& keys) {
    if (keys.empty()) return;
    out += std::string("; ") + label + ":";
    for (std::size_t i = 0; i < keys.size() && i < 20; ++i) out += " " + keys[i].str();
    if (keys.size() > 20) out += " ... (" + std::to_string(keys.size()) + " total)";
  };
  list("missing", missing);
  list("extra", extra);
  return out;
}

int parse_id(std::string_view field, const std::string& where) {
  field = text::trim(field);
  try {
    std::size_t used = 0;
    const int v = std::stoi(std::string(field), &used);
    if (used != field.size() || v < 0) throw std::invalid_argument("id");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(where + ": bad id '" + std::string(field) + "'");
  }
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

KeyMismatch::KeyMismatch(std::vector<EntryKey> missing, std::vector<EntryKey> extra)
    : std::runtime_error(describe(missing, extra)), missing_(std::move(missing)), extra_(std::move(extra)) {}

TermSet::TermSet(std::initializer_list<std::string> terms) {
  for (const auto& t : terms) insert(t);
}

TermSet::TermSet(const std::vector<std::string>& terms) {
  for (const auto& t : terms) insert(t);
}

void TermSet::insert(std::string_view term) {
  term = text::trim(term);
  if (!term.empty()) terms_.emplace(term);
}

double iou(const TermSet& pred, const TermSet& gold) {
  if (pred.empty() && gold.empty()) return 1.0;
  std::size_t common = 0;
  for (const auto& t : pred.terms()) common += gold.contains(t) ? 1 : 0;
  const std::size_t united = pred.size() + gold.size() - common;
  return static_cast<double>(common) / static_cast<double>(united);
}

IoUReport mean_iou(const TermTable& predictions, const TermTable& gold) {
  std::vector<EntryKey> missing;
  std::vector<EntryKey> extra;
  for (const auto& [key, _] : gold) {
    if (!predictions.contains(key)) missing.push_back(key);
  }
  for (const auto& [key, _] : predictions) {
    if (!gold.contains(key)) extra.push_back(key);
  }
  if (!missing.empty() || !extra.empty()) throw KeyMismatch(std::move(missing), std::move(extra));

  IoUReport report;
  std::map<int, std::pair<double, std::size_t>> puddle_sums;
  double total = 0.0;
  for (const auto& [key, gold_terms] : gold) {
    const double score = iou(predictions.at(key), gold_terms);
    report.per_entry.emplace_back(key, score);
    total += score;
    auto& [sum, count] = puddle_sums[key.puddle_id];
    sum += score;
    ++count;
  }
  if (!report.per_entry.empty()) report.mean = total / static_cast<double>(report.per_entry.size());
  for (const auto& [puddle, sc] : puddle_sums) report.per_puddle[puddle] = sc.first / static_cast<double>(sc.second);
  return report;
}

std::string IoUReport::to_json() const {
  nlohmann::ordered_json j;
  j["entries"] = per_entry.size();
  j["mean_iou"] = mean;
  nlohmann::ordered_json puddles = nlohmann::ordered_json::object();
  for (const auto& [puddle, score] : per_puddle) puddles[std::to_string(puddle)] = score;
  j["per_puddle"] = std::move(puddles);
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& [key, score] : per_entry) {
    rows.push_back({{"puddle_id", key.puddle_id}, {"entry_id", key.entry_id}, {"iou", score}});
  }
  j["per_entry"] = std::move(rows);
  return j.dump(2) + "\n";
}

std::string IoUReport::to_table() const {
  std::ostringstream out;
  out << "puddle  entries  mean_iou\n";
  std::map<int, std::size_t> counts;
  for (const auto& [key, _] : per_entry) ++counts[key.puddle_id];
  for (const auto& [puddle, score] : per_puddle) {
    char line[64];
    std::snprintf(line, sizeof line, "%6d  %7zu  %s\n", puddle, counts[puddle], fixed4(score).c_str());
    out << line;
  }
  char line[64];
  std::snprintf(line, sizeof line, "%6s  %7zu  %s\n", "all", per_entry.size(), fixed4(mean).c_str());
  out << line;
  return out.str();
}

TermLists read_term_lists(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw corpus::IoError("cannot read " + path.string());
  TermLists lists;
  std::set<EntryKey> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    const std::string_view view = text::chomp(line);
    if (line_no == 1 && view.starts_with("#provenance=")) continue;
    if (text::trim(view).empty()) continue;
    const auto fields = text::split(view, '\t');
    std::string_view cell;
    if (fields.size() == 3) {
      cell = fields[2];
    } else if (fields.size() == 5 || fields.size() == 6) {
      cell = fields[4];
    } else {
      throw std::runtime_error(where + ": expected 3 fields (or a corpus row), got " +
                               std::to_string(fields.size()));
    }
    const EntryKey key{parse_id(fields[0], where), parse_id(fields[1], where)};
    if (!seen.insert(key).second) throw std::runtime_error(where + ": duplicate entry " + key.str());
    lists.emplace_back(key, text::dedupe_trimmed(text::decode_terms(cell)));
  }
  return lists;
}

TermTable to_table(const TermLists& lists) {
  TermTable table;
  for (const auto& [key, terms] : lists) table.emplace(key, TermSet(terms));
  return table;
}

TermTable to_table(const Corpus& corpus) {
  TermTable table;
  for (const auto& entry : corpus.entries) table.emplace(entry.key(), TermSet(entry.terms));
  return table;
}

}  // namespace signbank::metrics
