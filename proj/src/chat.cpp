#include "signbank/chat.hpp"

#include <fstream>

#include <httplib.h>
#include <json.hpp>

#include "signbank/prompts.hpp"
#include "signbank/text.hpp"

namespace signbank::llm {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

std::optional<double> price_per_1k(std::string_view model) {
  if (model.starts_with("gpt-3.5-turbo")) return 0.0015;
  if (model.starts_with("gpt-4")) return 0.03;
  return std::nullopt;
}

std::string chat_request_body(std::span<const ChatMessage> messages, const HttpBackendOptions& options) {
  nlohmann::ordered_json body;
  body["model"] = options.model;
  body["messages"] = nlohmann::ordered_json::array();
  for (const auto& m : messages) {
    body["messages"].push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
  }
  body["temperature"] = options.temperature;
  if (options.max_tokens) body["max_tokens"] = *options.max_tokens;
  return body.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::string chat_response_content(std::string_view body) {
  try {
    const auto j = nlohmann::json::parse(body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw BackendError("response content is not a string");
    return content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("malformed chat response: ") + e.what());
  }
}

HttpChatBackend::HttpChatBackend(HttpBackendOptions options) : options_(std::move(options)) {
  if (options_.api_key.empty()) throw BackendError("missing API credential");
}

double HttpChatBackend::price_per_1k_tokens() const { return price_per_1k(options_.model).value_or(0.0); }

std::string HttpChatBackend::send(std::span<const ChatMessage> messages) {
  // httplib clients are not shareable across threads; one per call.
  httplib::Client client(options_.base_url);
  client.set_connection_timeout(options_.timeout);
  client.set_read_timeout(options_.timeout);
  client.set_bearer_token_auth(options_.api_key);
  const auto result = client.Post(options_.path, chat_request_body(messages, options_), "application/json");
  if (!result) throw BackendError("request failed: " + httplib::to_string(result.error()));
  if (result->status < 200 || result->status >= 300) {
    throw BackendError("HTTP " + std::to_string(result->status) + ": " + result->body.substr(0, 200),
                       result->status);
  }
  return chat_response_content(result->body);
}

namespace {

// Splits `name(arg, ..., [array])` into its argument list text.
std::string_view call_arguments(std::string_view call, std::string_view name) {
  call = text::trim(call);
  if (!call.starts_with(name) || call.size() < name.size() + 2 || call[name.size()] != '(' || call.back() != ')') {
    throw BackendError("not a " + std::string(name) + " call");
  }
  return call.substr(name.size() + 1, call.size() - name.size() - 2);
}

std::vector<std::string> trailing_array(std::string_view args) {
  const auto open = args.find('[');
  if (open == std::string_view::npos) throw BackendError("call has no term array");
  try {
    return parse_clean_response(args.substr(open), ParseMode{true});
  } catch (const UnparseableResponse& e) {
    throw BackendError(e.what());
  }
}

}  // namespace

std::string EchoBackend::send(std::span<const ChatMessage> messages) {
  if (messages.empty()) throw BackendError("empty conversation");
  const std::string_view last = text::trim(messages.back().content);
  if (last.starts_with("clean(")) {
    return format_string_array(trailing_array(call_arguments(last, "clean")));
  }
  if (last.starts_with("expand(")) {
    const auto args = call_arguments(last, "expand");
    const auto comma = args.find(',');
    if (comma == std::string_view::npos) throw BackendError("expand call without terms");
    std::string language;
    try {
      language = nlohmann::json::parse(text::trim(args.substr(0, comma))).get<std::string>();
    } catch (const nlohmann::json::exception&) {
      throw BackendError("expand call with a bad language argument");
    }
    ExpansionResult result;
    result.native = trailing_array(args.substr(comma + 1));
    return format_expansion(language, result);
  }
  throw BackendError("echo backend only answers clean and expand calls");
}

ReplayBackend ReplayBackend::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BackendError("cannot read replay file " + path.string());
  ReplayBackend backend;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      backend.add(j.at("request").get<std::string>(), j.at("response").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw BackendError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return backend;
}

void ReplayBackend::add(std::string request, std::string response) {
  responses_[std::move(request)] = std::move(response);
}

std::string ReplayBackend::send(std::span<const ChatMessage> messages) {
  if (messages.empty()) throw BackendError("empty conversation");
  const auto it = responses_.find(messages.back().content);
  if (it == responses_.end()) throw BackendError("no recorded response for: " + messages.back().content);
  return it->second;
}

}  // namespace signbank::llm
