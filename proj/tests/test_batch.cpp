#include <gtest/gtest.h>

#include <atomic>
#include <mutex>
#include <thread>

#include "generators.hpp"
#include "signbank/batch.hpp"

using namespace signbank;
using namespace signbank::llm;

namespace {

// Replies with the last message; counts calls and the peak number of calls in flight.
class ScriptedBackend : public ChatBackend {
 public:
  std::function<bool(int call)> fail_on = [](int) { return false; };
  std::function<int(const std::string&)> delay_ms = [](const std::string&) { return 0; };

  std::string send(std::span<const ChatMessage> messages) override {
    const int call = calls_++;
    const int now = ++in_flight_;
    int peak = peak_.load();
    while (now > peak && !peak_.compare_exchange_weak(peak, now)) {
    }
    const auto& content = messages.back().content;
    std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms(content)));
    --in_flight_;
    if (fail_on(call)) throw BackendError("scripted failure on call " + std::to_string(call));
    return content;
  }
  std::string model_name() const override { return "scripted"; }
  double price_per_1k_tokens() const override { return 0.0; }

  int calls() const { return calls_.load(); }
  int peak() const { return peak_.load(); }

 private:
  std::atomic<int> calls_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> peak_{0};
};

std::vector<BatchItem> make_items(int n) {
  std::vector<BatchItem> items;
  for (int i = 0; i < n; ++i) {
    items.push_back({"id" + std::to_string(i), {{Role::system, "s"}, {Role::user, "msg" + std::to_string(i)}}});
  }
  return items;
}

const ResponseParser kIdentity = [](const std::string&, const std::string& r) { return nlohmann::json(r); };

BatchLimits fast(std::size_t in_flight, int retries) {
  BatchLimits l;
  l.max_in_flight = in_flight;
  l.retries = retries;
  l.backoff = std::chrono::milliseconds(0);
  return l;
}

}  // namespace

TEST(Batch, OrderStableUnderShuffledCompletion) {
  fixtures::Gen gen(3);
  std::vector<int> delays(40);
  for (auto& d : delays) d = gen.between(0, 8);
  ScriptedBackend backend;
  backend.delay_ms = [&](const std::string& content) { return delays[std::stoul(content.substr(3))]; };
  const auto items = make_items(40);
  const auto report = run_batch(items, backend, fast(6, 0), kIdentity);
  ASSERT_EQ(report.results.size(), 40u);
  for (int i = 0; i < 40; ++i) {
    const auto& r = report.results[static_cast<std::size_t>(i)];
    EXPECT_EQ(r.id, "id" + std::to_string(i));
    EXPECT_TRUE(r.ok);
    EXPECT_EQ(r.result, "msg" + std::to_string(i));
  }
  EXPECT_EQ(report.requests_sent, 40u);
  EXPECT_LE(backend.peak(), 6);
  EXPECT_GT(backend.peak(), 1);
}

TEST(Batch, EveryThirdCallFailsWithOneRetry) {
  // Serial dispatch makes the call order, and hence the script, deterministic.
  ScriptedBackend backend;
  backend.fail_on = [](int call) { return call % 3 == 2; };
  fixtures::TempDir dir("batch_fail");
  auto limits = fast(1, 1);
  limits.failure_log = dir / "failures.jsonl";
  const auto items = make_items(12);
  const auto report = run_batch(items, backend, limits, kIdentity);

  // Oracle: replay the script by hand.
  std::set<std::string> expected_failed;
  int call = 0;
  for (const auto& item : items) {
    bool ok = false;
    for (int attempt = 0; attempt < 2 && !ok; ++attempt) ok = (call++ % 3) != 2;
    if (!ok) expected_failed.insert(item.id);
  }
  std::set<std::string> failed;
  for (const auto& r : report.results) {
    if (!r.ok) {
      failed.insert(r.id);
      EXPECT_EQ(r.attempts, 2);
    }
  }
  EXPECT_EQ(failed, expected_failed);
  EXPECT_EQ(report.failures, failed.size());
  EXPECT_EQ(report.requests_sent, static_cast<std::size_t>(call));

  std::set<std::string> logged;
  std::istringstream log(fixtures::read_file(limits.failure_log));
  for (std::string line; std::getline(log, line);) {
    const auto j = nlohmann::json::parse(line);
    logged.insert(j["entry_id"]);
    EXPECT_EQ(j["attempts"], 2);
    EXPECT_NE(j["reason"].get<std::string>().find("scripted failure"), std::string::npos);
  }
  EXPECT_EQ(logged, expected_failed);
}

TEST(Batch, ParserFailuresAreRetried) {
  ScriptedBackend backend;
  std::atomic<int> parses{0};
  const ResponseParser flaky = [&](const std::string&, const std::string& r) {
    if (parses++ == 0) throw std::runtime_error("unparseable");
    return nlohmann::json(r);
  };
  const auto report = run_batch(make_items(1), backend, fast(1, 1), flaky);
  EXPECT_TRUE(report.results[0].ok);
  EXPECT_EQ(report.results[0].attempts, 2);
}

TEST(Batch, CheckpointResumeIssuesRemainder) {
  for (int k : {0, 1, 7, 19, 20}) {
    fixtures::TempDir dir("ckpt");
    auto limits = fast(4, 0);
    limits.checkpoint = dir / "ckpt.jsonl";
    const auto items = make_items(20);

    ScriptedBackend first;
    run_batch(std::span(items).first(static_cast<std::size_t>(k)), first, limits, kIdentity);
    ASSERT_EQ(first.calls(), k);

    ScriptedBackend second;
    const auto report = run_batch(items, second, limits, kIdentity);
    EXPECT_EQ(second.calls(), 20 - k) << "k=" << k;
    EXPECT_EQ(report.requests_sent, static_cast<std::size_t>(20 - k));
    for (std::size_t i = 0; i < items.size(); ++i) {
      EXPECT_TRUE(report.results[i].ok);
      EXPECT_EQ(report.results[i].from_checkpoint, static_cast<int>(i) < k);
      EXPECT_EQ(report.results[i].result, "msg" + std::to_string(i));
    }

    ScriptedBackend third;
    run_batch(items, third, limits, kIdentity);
    EXPECT_EQ(third.calls(), 0);
  }
}

TEST(Batch, CheckpointLinesInInputOrder) {
  fixtures::Gen gen(12);
  std::vector<int> delays(30);
  for (auto& d : delays) d = gen.between(0, 5);
  ScriptedBackend backend;
  backend.delay_ms = [&](const std::string& content) { return delays[std::stoul(content.substr(3))]; };
  fixtures::TempDir dir("ckpt_order");
  auto limits = fast(8, 0);
  limits.checkpoint = dir / "c.jsonl";
  run_batch(make_items(30), backend, limits, kIdentity);
  std::istringstream in(fixtures::read_file(limits.checkpoint));
  int i = 0;
  for (std::string line; std::getline(in, line); ++i) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j["entry_id"], "id" + std::to_string(i));
    EXPECT_EQ(j["status"], "ok");
  }
  EXPECT_EQ(i, 30);
}

TEST(Batch, FailedItemsAreRetriedOnResume) {
  fixtures::TempDir dir("ckpt_fail");
  auto limits = fast(1, 0);
  limits.checkpoint = dir / "c.jsonl";
  ScriptedBackend failing;
  failing.fail_on = [](int call) { return call == 1; };
  const auto first = run_batch(make_items(3), failing, limits, kIdentity);
  EXPECT_EQ(first.failures, 1u);
  ScriptedBackend healthy;
  const auto second = run_batch(make_items(3), healthy, limits, kIdentity);
  EXPECT_EQ(healthy.calls(), 1);
  EXPECT_EQ(second.failures, 0u);
}

TEST(Batch, TornFinalCheckpointLineTolerated) {
  fixtures::TempDir dir("torn");
  auto limits = fast(1, 0);
  limits.checkpoint = dir / "c.jsonl";
  fixtures::write_file(limits.checkpoint, "{\"entry_id\":\"id0\",\"status\":\"ok\",\"result\":\"msg0\"}\n{\"entry_id\":\"id1\",\"sta");
  ScriptedBackend backend;
  run_batch(make_items(2), backend, limits, kIdentity);
  EXPECT_EQ(backend.calls(), 1);
  // The repaired file resumes cleanly.
  ScriptedBackend again;
  run_batch(make_items(3), again, limits, kIdentity);
  EXPECT_EQ(again.calls(), 1);

  fixtures::write_file(limits.checkpoint, "garbage\n{\"entry_id\":\"id0\",\"status\":\"ok\",\"result\":\"msg0\"}\n");
  EXPECT_THROW(run_batch(make_items(2), backend, limits, kIdentity), BatchConfigError);
}

TEST(Batch, ConfigurationErrors) {
  ScriptedBackend backend;
  EXPECT_THROW(run_batch(make_items(1), backend, fast(0, 0), kIdentity), BatchConfigError);
  EXPECT_THROW(run_batch(make_items(1), backend, fast(1, -1), kIdentity), BatchConfigError);
  auto dup = make_items(2);
  dup[1].id = dup[0].id;
  EXPECT_THROW(run_batch(dup, backend, fast(1, 0), kIdentity), BatchConfigError);
  EXPECT_EQ(backend.calls(), 0);
  EXPECT_TRUE(run_batch({}, backend, fast(1, 0), kIdentity).results.empty());
}

TEST(Batch, BackoffDoubles) {
  ScriptedBackend backend;
  backend.fail_on = [](int call) { return call < 2; };
  auto limits = fast(1, 2);
  limits.backoff = std::chrono::milliseconds(20);
  const auto start = std::chrono::steady_clock::now();
  const auto report = run_batch(make_items(1), backend, limits, kIdentity);
  const auto elapsed = std::chrono::steady_clock::now() - start;
  EXPECT_TRUE(report.results[0].ok);
  EXPECT_GE(elapsed, std::chrono::milliseconds(60));
}

TEST(Cost, Examples) {
  const std::vector<std::size_t> tokens(200000, 714);
  EXPECT_NEAR(estimate_cost(tokens, 0.0015), 214.2, 1e-6);
  EXPECT_NEAR(estimate_cost(tokens, 0.03), 4284.0, 1e-6);
  EXPECT_EQ(estimate_cost(std::vector<std::size_t>{}, 0.03), 0.0);
  EXPECT_EQ(estimate_cost(std::vector<BatchItem>{}, 0.03), 0.0);
}

TEST(Cost, EstimatorIsCharsOverFour) {
  const std::vector<ChatMessage> m{{Role::system, std::string(10, 'a')}, {Role::user, std::string(3, 'b')}};
  EXPECT_EQ(estimate_tokens(m), 4u);
  const std::vector<BatchItem> items{{"a", m}, {"b", m}};
  EXPECT_NEAR(estimate_cost(items, 1.0), 0.008, 1e-12);
  EXPECT_NEAR(estimate_cost(items, 1.0, [](std::span<const ChatMessage>) { return std::size_t{500}; }), 1.0, 1e-12);
}
