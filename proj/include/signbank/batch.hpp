#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "signbank/chat.hpp"

namespace signbank::llm {

/// Invalid batch setup; the only error that aborts a run.
class BatchConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BatchItem {
  std::string id;
  std::vector<ChatMessage> messages;
};

struct BatchLimits {
  std::size_t max_in_flight = 4;
  // Extra attempts after the first failure.
  int retries = 2;
  std::chrono::milliseconds backoff{500};
  // JSON-lines {entry_id, status, result}; successful ids found here are not re-sent.
  std::filesystem::path checkpoint;
  // JSON-lines {entry_id, reason, attempts} for items that exhausted their retries.
  std::filesystem::path failure_log;
};

/// Turns an item's response into the stored result. Throwing marks the attempt failed.
using ResponseParser = std::function<nlohmann::json(const std::string& id, const std::string& response)>;

struct ItemResult {
  std::string id;
  bool ok = false;
  nlohmann::json result;
  std::string error;
  int attempts = 0;
  bool from_checkpoint = false;
};

struct BatchReport {
  // Same order as the input.
  std::vector<ItemResult> results;
  std::size_t requests_sent = 0;
  std::size_t failures = 0;
};

/// Sends every item not already completed in the checkpoint with at most
/// `max_in_flight` concurrent calls. Checkpoint lines are committed in input order.
BatchReport run_batch(std::span<const BatchItem> items, ChatBackend& backend, const BatchLimits& limits,
                      const ResponseParser& parse);

using TokenEstimator = std::function<std::size_t(std::span<const ChatMessage>)>;

/// ceil(total UTF-8 bytes / 4) over all message contents.
std::size_t estimate_tokens(std::span<const ChatMessage> messages);

/// sum(tokens) / 1000 * price.
double estimate_cost(std::span<const std::size_t> tokens_per_request, double price_per_1k);
double estimate_cost(std::span<const BatchItem> requests, double price_per_1k,
                     const TokenEstimator& estimator = estimate_tokens);

}  // namespace signbank::llm
