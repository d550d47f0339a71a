#pragma once

// Deterministic mock of an OpenAI-compatible streaming endpoint.
//
// Latency model for a request with n input tokens (whitespace-separated
// words across all message contents) and m output tokens:
//   queue  : FIFO wait for one of `concurrency_cap` slots
//   prefill: prefill_a_s + prefill_b_s_per_token * n, then the first token
//   decode : m / decode_rate_tps, then completion and slot release
// m = min(output_tokens, request max_tokens). While any request is present
// (queued or in service) the coupled synthetic device is driven busy.
// The final stream event carries usage and a `timing` object with the
// server-side queue_time_s and ttft_s.

#include <httplib.h>

#include <cctype>
#include <climits>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "wattbench/clock.hpp"
#include "wattbench/error.hpp"
#include "wattbench/synthetic_device.hpp"

namespace wattbench {

struct MockSutProfile {
  static constexpr int kUnlimited = INT_MAX;

  std::string model_name = "mock-model";
  double prefill_a_s = 0.05;
  double prefill_b_s_per_token = 0.0005;
  double decode_rate_tps = 128;
  int concurrency_cap = 4;
  int output_tokens = 256;
  double chunk_interval_s = 0.05;
  int worker_threads = 256;
  std::shared_ptr<SyntheticDevice> power_coupling;

  void validate() const {
    if (!(decode_rate_tps > 0)) throw ConfigError("mock: decode_rate_tps must be > 0");
    if (concurrency_cap < 1) throw ConfigError("mock: concurrency_cap must be >= 1");
    if (output_tokens < 1) throw ConfigError("mock: output_tokens must be >= 1");
    if (!(prefill_a_s >= 0 && prefill_b_s_per_token >= 0)) throw ConfigError("mock: prefill terms must be >= 0");
    if (!(chunk_interval_s > 0)) throw ConfigError("mock: chunk_interval_s must be > 0");
    if (worker_threads < 1) throw ConfigError("mock: worker_threads must be >= 1");
  }
};

inline std::int64_t count_words(std::string_view text) {
  std::int64_t n = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    const bool space = std::isspace(c) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

class MockSut {
 public:
  MockSut(MockSutProfile profile, const std::string& host = "127.0.0.1", int port = 0)
      : profile_(std::move(profile)), host_(host) {
    profile_.validate();
    const int threads = profile_.worker_threads;
    server_.new_task_queue = [threads] { return new httplib::ThreadPool(static_cast<size_t>(threads)); };
    server_.Get("/v1/models", [this](const httplib::Request&, httplib::Response& res) {
      nlohmann::json body = {{"object", "list"},
                             {"data", nlohmann::json::array({{{"id", profile_.model_name}, {"object", "model"}}})}};
      res.set_content(body.dump(), "application/json");
    });
    server_.Get("/health", [](const httplib::Request&, httplib::Response& res) { res.set_content("ok", "text/plain"); });
    server_.Post("/v1/chat/completions",
                 [this](const httplib::Request& req, httplib::Response& res) { handle_chat(req, res); });

    port_ = port == 0 ? server_.bind_to_any_port(host_) : (server_.bind_to_port(host_, port) ? port : -1);
    if (port_ < 0) throw UnavailableError(fmt::format("mock SUT: cannot bind {}:{}", host_, port));
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~MockSut() { stop(); }

  MockSut(const MockSut&) = delete;
  MockSut& operator=(const MockSut&) = delete;

  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

  int port() const { return port_; }
  std::string base_url() const { return fmt::format("http://{}:{}", host_, port_); }
  const MockSutProfile& profile() const { return profile_; }

  std::uint64_t requests_served() const {
    std::lock_guard lock(mu_);
    return served_;
  }

 private:
  // Lifetime of one request inside the mock. Destruction releases whatever
  // the request still holds, including when the client disconnects early.
  struct Ticket {
    MockSut* sut;
    std::uint64_t id;
    double arrival;
    std::int64_t input_tokens;
    std::int64_t output_tokens;
    bool admitted = false;
    bool finished = false;

    ~Ticket() { sut->finish(*this); }
  };

  void handle_chat(const httplib::Request& req, httplib::Response& res) {
    const double arrival = RunClock::now();
    auto body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.contains("messages") || !body["messages"].is_array()) {
      res.status = 400;
      res.set_content(R"({"error":{"message":"invalid request body"}})", "application/json");
      return;
    }
    std::int64_t input = 0;
    for (const auto& m : body["messages"])
      if (m.contains("content") && m["content"].is_string()) input += count_words(m["content"].get_ref<const std::string&>());
    std::int64_t output = profile_.output_tokens;
    if (body.contains("max_tokens") && body["max_tokens"].is_number_integer() && body["max_tokens"].get<std::int64_t>() > 0)
      output = std::min<std::int64_t>(output, body["max_tokens"].get<std::int64_t>());

    auto ticket = std::make_shared<Ticket>();
    ticket->sut = this;
    ticket->arrival = arrival;
    ticket->input_tokens = input;
    ticket->output_tokens = output;
    {
      std::lock_guard lock(mu_);
      ticket->id = next_id_++;
      waiting_.push_back(ticket->id);
      ++present_;
      if (profile_.power_coupling) profile_.power_coupling->set_in_flight_now(present_);
    }

    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider("text/event-stream", [this, ticket](size_t, httplib::DataSink& sink) {
      stream(*ticket, sink);
      return true;
    });
  }

  void stream(Ticket& t, httplib::DataSink& sink) {
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [&] { return active_ < profile_.concurrency_cap && waiting_.front() == t.id; });
      waiting_.pop_front();
      ++active_;
      t.admitted = true;
    }
    cv_.notify_all();
    const double admitted = RunClock::now();
    const double queue_time = admitted - t.arrival;
    const double first = admitted + profile_.prefill_a_s + profile_.prefill_b_s_per_token * static_cast<double>(t.input_tokens);
    const double done = first + static_cast<double>(t.output_tokens) / profile_.decode_rate_tps;
    const std::string id = fmt::format("chatcmpl-mock-{}", t.id);

    auto write_event = [&](const nlohmann::json& j) {
      const std::string s = "data: " + j.dump() + "\n\n";
      return sink.write(s.data(), s.size());
    };
    auto chunk = [&](std::int64_t tokens) {
      std::string text;
      for (std::int64_t k = 0; k < tokens; ++k) text += "tok ";
      return nlohmann::json{{"id", id},
                            {"object", "chat.completion.chunk"},
                            {"created", 0},
                            {"model", profile_.model_name},
                            {"choices", nlohmann::json::array({{{"index", 0},
                                                                {"delta", {{"role", "assistant"}, {"content", text}}},
                                                                {"finish_reason", nullptr}}})}};
    };

    RunClock::sleep_until(first);
    bool alive = write_event(chunk(1));
    std::int64_t sent = 1;
    double t_emit = first;
    while (alive && sent < t.output_tokens) {
      t_emit = std::min(t_emit + profile_.chunk_interval_s, done);
      RunClock::sleep_until(t_emit);
      std::int64_t due = t_emit >= done ? t.output_tokens
                                        : std::clamp<std::int64_t>(static_cast<std::int64_t>((t_emit - first) * profile_.decode_rate_tps), sent, t.output_tokens - 1);
      if (due > sent) {
        alive = write_event(chunk(due - sent));
        sent = due;
      }
    }
    RunClock::sleep_until(done);
    finish(t);
    if (alive) {
      nlohmann::json last = {{"id", id},
                             {"object", "chat.completion.chunk"},
                             {"created", 0},
                             {"model", profile_.model_name},
                             {"choices", nlohmann::json::array({{{"index", 0}, {"delta", nlohmann::json::object()}, {"finish_reason", "length"}}})},
                             {"usage", {{"prompt_tokens", t.input_tokens}, {"completion_tokens", t.output_tokens}, {"total_tokens", t.input_tokens + t.output_tokens}}},
                             {"timing", {{"queue_time_s", queue_time}, {"ttft_s", first - t.arrival}, {"e2e_s", done - t.arrival}}}};
      if (write_event(last)) {
        static constexpr std::string_view kDone = "data: [DONE]\n\n";
        sink.write(kDone.data(), kDone.size());
      }
    }
    sink.done();
  }

  void finish(Ticket& t) {
    {
      std::lock_guard lock(mu_);
      if (t.finished) return;
      t.finished = true;
      if (t.admitted) {
        --active_;
        ++served_;
      } else {
        std::erase(waiting_, t.id);
      }
      --present_;
      if (profile_.power_coupling) profile_.power_coupling->set_in_flight_now(present_);
    }
    cv_.notify_all();
  }

  MockSutProfile profile_;
  std::string host_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = -1;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::uint64_t> waiting_;
  std::uint64_t next_id_ = 0;
  int active_ = 0;
  int present_ = 0;
  std::uint64_t served_ = 0;
};

inline std::unique_ptr<MockSut> mock_serve(MockSutProfile profile, const std::string& host = "127.0.0.1", int port = 0) {
  return std::make_unique<MockSut>(std::move(profile), host, port);
}

}  // namespace wattbench
