#include "signbank/batch.hpp"

#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

#include "signbank/text.hpp"

namespace signbank::llm {

namespace {

struct CheckpointRecord {
  bool ok = false;
  nlohmann::json result;
};

std::map<std::string, CheckpointRecord> load_checkpoint(const std::filesystem::path& path) {
  std::map<std::string, CheckpointRecord> records;
  if (path.empty() || !std::filesystem::exists(path)) return records;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BatchConfigError("cannot read checkpoint " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      // Later lines win, so a resumed failure can be superseded by a success.
      records[j.at("entry_id").get<std::string>()] = {j.at("status").get<std::string>() == "ok",
                                                      j.value("result", nlohmann::json())};
    } catch (const nlohmann::json::exception&) {
      // A run killed mid-write can leave a torn final line.
      std::string rest;
      if (std::getline(in, rest)) {
        throw BatchConfigError("corrupt checkpoint line " + std::to_string(line_no) + " in " + path.string());
      }
    }
  }
  return records;
}

// Cuts a partial last line so appended records start on a fresh line.
void drop_torn_tail(const std::filesystem::path& path) {
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec || size == 0) return;
  std::ifstream in(path, std::ios::binary);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (content.back() == '\n') return;
  const auto keep = content.rfind('\n');
  in.close();
  std::filesystem::resize_file(path, keep == std::string::npos ? 0 : keep + 1, ec);
  if (ec) throw BatchConfigError("cannot repair checkpoint " + path.string() + ": " + ec.message());
}

std::string checkpoint_line(const ItemResult& r) {
  nlohmann::ordered_json j;
  j["entry_id"] = r.id;
  j["status"] = r.ok ? "ok" : "failed";
  j["result"] = r.ok ? r.result : nlohmann::json(r.error);
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

}  // namespace

BatchReport run_batch(std::span<const BatchItem> items, ChatBackend& backend, const BatchLimits& limits,
                      const ResponseParser& parse) {
  if (limits.max_in_flight == 0) throw BatchConfigError("max_in_flight must be at least 1");
  if (limits.retries < 0) throw BatchConfigError("retries must be non-negative");
  {
    std::set<std::string> ids;
    for (const auto& item : items) {
      if (!ids.insert(item.id).second) throw BatchConfigError("duplicate batch id '" + item.id + "'");
    }
  }

  BatchReport report;
  report.results.resize(items.size());
  const auto done = load_checkpoint(limits.checkpoint);
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < items.size(); ++i) {
    auto& r = report.results[i];
    r.id = items[i].id;
    const auto it = done.find(r.id);
    if (it != done.end() && it->second.ok) {
      r.ok = true;
      r.result = it->second.result;
      r.from_checkpoint = true;
    } else {
      pending.push_back(i);
    }
  }

  std::ofstream checkpoint;
  if (!limits.checkpoint.empty()) {
    drop_torn_tail(limits.checkpoint);
    checkpoint.open(limits.checkpoint, std::ios::binary | std::ios::app);
    if (!checkpoint) throw BatchConfigError("cannot write checkpoint " + limits.checkpoint.string());
  }

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> sent{0};
  std::mutex commit_mutex;
  std::vector<char> finished(pending.size(), 0);
  std::size_t frontier = 0;

  auto commit = [&](std::size_t slot) {
    std::lock_guard lock(commit_mutex);
    finished[slot] = 1;
    while (frontier < pending.size() && finished[frontier]) {
      if (checkpoint.is_open()) {
        checkpoint << checkpoint_line(report.results[pending[frontier]]) << '\n';
        checkpoint.flush();
      }
      ++frontier;
    }
  };

  auto worker = [&]() {
    for (std::size_t slot = next++; slot < pending.size(); slot = next++) {
      const auto index = pending[slot];
      auto& r = report.results[index];
      auto delay = limits.backoff;
      for (int attempt = 0; attempt <= limits.retries; ++attempt) {
        if (attempt > 0 && delay.count() > 0) {
          std::this_thread::sleep_for(delay);
          delay *= 2;
        }
        ++r.attempts;
        try {
          ++sent;
          const std::string response = backend.send(items[index].messages);
          r.result = parse(items[index].id, response);
          r.ok = true;
          r.error.clear();
          break;
        } catch (const std::exception& e) {
          r.error = e.what();
        }
      }
      commit(slot);
    }
  };

  const std::size_t threads = std::min(limits.max_in_flight, pending.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  report.requests_sent = sent.load();
  std::ofstream failure_log;
  if (!limits.failure_log.empty()) {
    failure_log.open(limits.failure_log, std::ios::binary | std::ios::trunc);
    if (!failure_log) throw BatchConfigError("cannot write failure log " + limits.failure_log.string());
  }
  for (const auto& r : report.results) {
    if (r.ok) continue;
    ++report.failures;
    if (failure_log.is_open()) {
      nlohmann::ordered_json j;
      j["entry_id"] = r.id;
      j["reason"] = r.error;
      j["attempts"] = r.attempts;
      failure_log << j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
    }
  }
  return report;
}

std::size_t estimate_tokens(std::span<const ChatMessage> messages) {
  std::size_t chars = 0;
  for (const auto& m : messages) chars += m.content.size();
  return (chars + 3) / 4;
}

double estimate_cost(std::span<const std::size_t> tokens_per_request, double price_per_1k) {
  const auto total = std::accumulate(tokens_per_request.begin(), tokens_per_request.end(), std::size_t{0});
  return static_cast<double>(total) / 1000.0 * price_per_1k;
}

double estimate_cost(std::span<const BatchItem> requests, double price_per_1k, const TokenEstimator& estimator) {
  std::vector<std::size_t> tokens;
  tokens.reserve(requests.size());
  for (const auto& r : requests) tokens.push_back(estimator(r.messages));
  return estimate_cost(tokens, price_per_1k);
}

}  // namespace signbank::llm
