#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "signbank/corpus.hpp"

namespace signbank::metrics {

class KeyMismatch : public std::runtime_error {
 public:
  KeyMismatch(std::vector<EntryKey> missing, std::vector<EntryKey> extra);

  /// Gold entries without a prediction.
  const std::vector<EntryKey>& missing() const noexcept { return missing_; }
  /// Predictions without a gold entry.
  const std::vector<EntryKey>& extra() const noexcept { return extra_; }

 private:
  std::vector<EntryKey> missing_;
  std::vector<EntryKey> extra_;
};

/// Trimmed, non-empty, case-sensitive set of terms.
class TermSet {
 public:
  TermSet() = default;
  TermSet(std::initializer_list<std::string> terms);
  explicit TermSet(const std::vector<std::string>& terms);

  const std::set<std::string>& terms() const noexcept { return terms_; }
  std::size_t size() const noexcept { return terms_.size(); }
  bool empty() const noexcept { return terms_.empty(); }
  bool contains(const std::string& term) const { return terms_.contains(term); }

  friend bool operator==(const TermSet&, const TermSet&) = default;

 private:
  void insert(std::string_view term);
  std::set<std::string> terms_;
};

/// |pred ∩ gold| / |pred ∪ gold|, and 1 when both are empty.
double iou(const TermSet& pred, const TermSet& gold);

struct IoUReport {
  std::vector<std::pair<EntryKey, double>> per_entry;
  double mean = 0.0;
  std::map<int, double> per_puddle;

  std::string to_json() const;
  std::string to_table() const;
};

using TermTable = std::map<EntryKey, TermSet>;

/// Key sets must match exactly; an empty table yields mean 0 and no rows.
IoUReport mean_iou(const TermTable& predictions, const TermTable& gold);

using TermLists = std::vector<std::pair<EntryKey, std::vector<std::string>>>;

/// Rows "puddle_id<TAB>entry_id<TAB>term1||term2". Corpus rows (5 or 6 fields) are
/// also accepted; their primary terms are used. Order is kept, duplicate keys throw.
TermLists read_term_lists(const std::filesystem::path& path);
TermTable to_table(const TermLists& lists);
TermTable to_table(const Corpus& corpus);

}  // namespace signbank::metrics
