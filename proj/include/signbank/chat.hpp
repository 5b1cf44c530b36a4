#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace signbank::llm {

enum class Role { system, user, assistant };

std::string_view to_string(Role role);

struct ChatMessage {
  Role role;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

/// A backend call that did not produce a response body.
class BackendError : public std::runtime_error {
 public:
  explicit BackendError(const std::string& message, int status = 0)
      : std::runtime_error(message), status_(status) {}
  /// HTTP status when one was received, else 0.
  int status() const noexcept { return status_; }

 private:
  int status_;
};

/// Chat-completion model behind the clean and expand calls. Implementations must be
/// callable from several threads at once.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;

  /// Returns the assistant text; throws BackendError on failure.
  virtual std::string send(std::span<const ChatMessage> messages) = 0;
  virtual std::string model_name() const = 0;
  virtual double price_per_1k_tokens() const = 0;
};

/// USD per 1K tokens for known model families (gpt-3.5-turbo 0.0015, gpt-4 0.03).
std::optional<double> price_per_1k(std::string_view model);

struct HttpBackendOptions {
  std::string base_url = "https://api.openai.com";
  std::string path = "/v1/chat/completions";
  std::string model = "gpt-3.5-turbo-0613";
  std::string api_key;
  double temperature = 0.0;
  std::optional<int> max_tokens;
  std::chrono::seconds timeout{60};
};

/// Request body for an OpenAI-style chat completion endpoint.
std::string chat_request_body(std::span<const ChatMessage> messages, const HttpBackendOptions& options);
/// Extracts choices[0].message.content; throws BackendError.
std::string chat_response_content(std::string_view body);

class HttpChatBackend final : public ChatBackend {
 public:
  explicit HttpChatBackend(HttpBackendOptions options);

  std::string send(std::span<const ChatMessage> messages) override;
  std::string model_name() const override { return options_.model; }
  double price_per_1k_tokens() const override;

 private:
  HttpBackendOptions options_;
};

/// Offline backend: answers `clean(...)` with the given terms and `expand(lang, ...)`
/// with {"<lang>": terms}. Deterministic and stateless.
class EchoBackend final : public ChatBackend {
 public:
  std::string send(std::span<const ChatMessage> messages) override;
  std::string model_name() const override { return "echo"; }
  double price_per_1k_tokens() const override { return 0.0; }
};

/// Answers from recorded exchanges keyed by the final user message. JSON-lines
/// file with {"request": "...", "response": "..."} objects.
class ReplayBackend final : public ChatBackend {
 public:
  static ReplayBackend load(const std::filesystem::path& path);
  void add(std::string request, std::string response);

  std::string send(std::span<const ChatMessage> messages) override;
  std::string model_name() const override { return "replay"; }
  double price_per_1k_tokens() const override { return 0.0; }

 private:
  std::map<std::string, std::string> responses_;
};

}  // namespace signbank::llm
