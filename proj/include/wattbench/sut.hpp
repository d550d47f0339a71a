#pragma once

// Streaming chat-completions client and the batch / open-loop server
// dispatchers.

#include <httplib.h>

#include <algorithm>
#include <latch>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "wattbench/clock.hpp"
#include "wattbench/error.hpp"
#include "wattbench/loadgen.hpp"
#include "wattbench/metrics.hpp"
#include "wattbench/types.hpp"

namespace wattbench {

struct SutEndpoint {
  std::string base_url;  // http://host:port, optionally with a path prefix and/or /v1
  std::string model_name;
  double request_timeout_s = 600;

  void validate() const {
    if (!(request_timeout_s > 0)) throw ConfigError("endpoint: request_timeout_s must be > 0");
    if (base_url.rfind("http://", 0) != 0) throw ConfigError("endpoint: only http:// URLs are supported: " + base_url);
  }
};

struct ParsedUrl {
  std::string origin;  // scheme://host:port
  std::string prefix;  // path before /v1, no trailing slash
};

inline ParsedUrl parse_base_url(const std::string& url) {
  if (url.rfind("http://", 0) != 0) throw ConfigError("endpoint: only http:// URLs are supported: " + url);
  const auto slash = url.find('/', 7);
  ParsedUrl p;
  p.origin = url.substr(0, slash);
  p.prefix = slash == std::string::npos ? "" : url.substr(slash);
  while (!p.prefix.empty() && p.prefix.back() == '/') p.prefix.pop_back();
  if (p.prefix.size() >= 3 && p.prefix.compare(p.prefix.size() - 3, 3, "/v1") == 0)
    p.prefix.resize(p.prefix.size() - 3);
  if (p.origin.size() <= 7) throw ConfigError("endpoint: missing host in " + url);
  return p;
}

/// Request body: GenerationParams are forwarded field-for-field.
inline nlohmann::json build_chat_request(const std::string& model, const std::string& prompt,
                                         const GenerationParams& p) {
  return {{"model", model},
          {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
          {"stream", true},
          {"stream_options", {{"include_usage", true}}},
          {"temperature", p.temperature},
          {"top_k", p.top_k},
          {"top_p", p.top_p},
          {"max_tokens", p.max_tokens},
          {"repetition_penalty", p.repetition_penalty},
          {"max_context", p.max_context},
          {"seed", p.seed}};
}

/// Incremental server-sent-events parser; invokes `on_data` with the payload
/// of every `data:` field once its event is complete.
class SseParser {
 public:
  template <class F>
  void feed(std::string_view bytes, F&& on_data) {
    buf_.append(bytes);
    for (;;) {
      auto end = buf_.find("\n\n");
      std::size_t sep = 2;
      if (auto crlf = buf_.find("\r\n\r\n"); crlf != std::string::npos && crlf < end) {
        end = crlf;
        sep = 4;
      }
      if (end == std::string::npos) break;
      std::string event = buf_.substr(0, end);
      buf_.erase(0, end + sep);
      std::string data;
      std::size_t pos = 0;
      while (pos <= event.size()) {
        auto nl = event.find('\n', pos);
        std::string line = event.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.rfind("data:", 0) == 0) {
          std::string_view v(line);
          v.remove_prefix(5);
          if (!v.empty() && v.front() == ' ') v.remove_prefix(1);
          if (!data.empty()) data += '\n';
          data.append(v);
        }
        if (nl == std::string::npos) break;
        pos = nl + 1;
      }
      if (!data.empty()) on_data(std::string_view(data));
    }
  }

 private:
  std::string buf_;
};

/// Sends one streaming chat request. First-token time is the arrival of the
/// first event carrying generated text; completion is the end of the stream.
/// Token counts come from the usage block when present, else from counted
/// content events. Transport and HTTP failures are returned as error records.
inline RequestRecord send_request(const SutEndpoint& endpoint, const std::string& prompt,
                                  const GenerationParams& params, std::optional<double> arrival_ts = {}) {
  RequestRecord rec;
  rec.arrival_ts = arrival_ts.value_or(RunClock::now());
  ParsedUrl url;
  try {
    url = parse_base_url(endpoint.base_url);
  } catch (const ConfigError& e) {
    rec.ok = false;
    rec.error = std::string("config: ") + e.what();
    return rec;
  }

  httplib::Client cli(url.origin);
  const auto timeout = std::chrono::duration<double>(endpoint.request_timeout_s);
  cli.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(std::min(timeout, std::chrono::duration<double>(10.0))));
  cli.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  cli.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

  httplib::Request req;
  req.method = "POST";
  req.path = url.prefix + "/v1/chat/completions";
  req.headers = {{"Accept", "text/event-stream"}};
  req.body = build_chat_request(endpoint.model_name, prompt, params).dump();
  req.set_header("Content-Type", "application/json");

  int status = 0;
  std::string error_body;
  SseParser sse;
  std::int64_t content_events = 0;
  bool done = false;
  std::optional<std::int64_t> usage_in, usage_out;
  std::string parse_error;

  req.response_handler = [&](const httplib::Response& r) {
    status = r.status;
    return true;
  };
  req.content_receiver = [&](const char* data, size_t len, uint64_t, uint64_t) {
    const double now = RunClock::now();
    if (status < 200 || status >= 300) {
      error_body.append(data, len);
      return true;
    }
    sse.feed(std::string_view(data, len), [&](std::string_view payload) {
      if (payload == "[DONE]") {
        done = true;
        return;
      }
      auto j = nlohmann::json::parse(payload, nullptr, false);
      if (j.is_discarded()) {
        parse_error = "malformed stream event";
        return;
      }
      if (j.contains("choices") && j["choices"].is_array()) {
        for (const auto& c : j["choices"]) {
          const auto d = c.find("delta");
          if (d == c.end()) continue;
          const auto content = d->find("content");
          if (content != d->end() && content->is_string() && !content->get_ref<const std::string&>().empty()) {
            ++content_events;
            if (!rec.first_token_ts) rec.first_token_ts = now;
          }
        }
      }
      if (auto u = j.find("usage"); u != j.end() && u->is_object()) {
        if (u->contains("prompt_tokens")) usage_in = (*u)["prompt_tokens"].get<std::int64_t>();
        if (u->contains("completion_tokens")) usage_out = (*u)["completion_tokens"].get<std::int64_t>();
      }
      if (auto t = j.find("timing"); t != j.end() && t->is_object()) {
        if (t->contains("queue_time_s")) rec.queue_time_s = (*t)["queue_time_s"].get<double>();
        if (t->contains("ttft_s")) rec.server_ttft_s = (*t)["ttft_s"].get<double>();
      }
    });
    return true;
  };

  httplib::Response res;
  httplib::Error err = httplib::Error::Success;
  const bool sent = cli.send(req, res, err);
  const double end = RunClock::now();
  if (!sent) {
    rec.ok = false;
    rec.error = err == httplib::Error::Read ? "timeout: " + httplib::to_string(err)
                                            : "connection: " + httplib::to_string(err);
    rec.completion_ts = end;
    rec.first_token_ts.reset();
    return rec;
  }
  if (status < 200 || status >= 300) {
    rec.ok = false;
    rec.error = fmt::format("http {}", status);
    rec.completion_ts = end;
    rec.first_token_ts.reset();
    return rec;
  }
  rec.completion_ts = end;
  rec.input_tokens = usage_in.value_or(0);
  rec.output_tokens = usage_out.value_or(content_events);
  if (!parse_error.empty()) {
    rec.ok = false;
    rec.error = parse_error;
  } else if (!done && !usage_out) {
    rec.ok = false;
    rec.error = "stream ended without completion";
  }
  if (rec.first_token_ts && *rec.first_token_ts < rec.arrival_ts) rec.first_token_ts = rec.arrival_ts;
  rec.validate();
  return rec;
}

/// Cheap liveness probe against the models listing.
inline bool endpoint_healthy(const SutEndpoint& endpoint, double timeout_s = 5.0) {
  try {
    const auto url = parse_base_url(endpoint.base_url);
    httplib::Client cli(url.origin);
    cli.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::duration<double>(timeout_s)));
    cli.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::duration<double>(timeout_s)));
    auto res = cli.Get(url.prefix + "/v1/models");
    return res && res->status == 200;
  } catch (const std::exception&) {
    return false;
  }
}

/// Raised when every request of a dispatch failed; the records are kept.
class SutFailure : public Error {
 public:
  SutFailure(const std::string& what, std::vector<RequestRecord> records)
      : Error(what), records_(std::move(records)) {}
  const std::vector<RequestRecord>& records() const { return records_; }

 private:
  std::vector<RequestRecord> records_;
};

struct BatchResult {
  std::vector<RequestRecord> records;  // in batch order
  double t_dispatch = 0;
  double t_end = 0;  // last completion
};

/// Submits the whole batch at once; every record shares the dispatch instant.
inline BatchResult run_batch(const SutEndpoint& endpoint, const std::vector<std::string>& batch,
                             const GenerationParams& params) {
  if (batch.empty()) throw DomainError("run_batch: empty batch");
  BatchResult out;
  out.records.resize(batch.size());
  std::latch ready(static_cast<std::ptrdiff_t>(batch.size()) + 1);
  {
    std::vector<std::jthread> workers;
    workers.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      workers.emplace_back([&, i] {
        ready.arrive_and_wait();
        out.records[i] = send_request(endpoint, batch[i], params, out.t_dispatch);
      });
    }
    out.t_dispatch = RunClock::now();
    ready.arrive_and_wait();
  }
  out.t_end = out.t_dispatch;
  bool any_ok = false;
  for (const auto& r : out.records) {
    any_ok |= r.ok;
    if (r.completion_ts) out.t_end = std::max(out.t_end, *r.completion_ts);
  }
  if (!any_ok) throw SutFailure("run_batch: every request failed (" + out.records.front().error + ")", out.records);
  return out;
}

inline constexpr double kLatenessBudgetS = 0.050;

struct ServerResult {
  std::vector<RequestRecord> records;  // in schedule order
  double t_origin = 0;
  double t_window_end = 0;
  double lateness_p99_s = 0;
  bool overrun = false;  // lateness p99 above the 50 ms budget
};

/// Open-loop dispatch: request i leaves at t_origin + schedule[i] regardless
/// of earlier responses. The window closes at t_origin + duration; requests
/// still in flight are drained and flagged post_window.
inline ServerResult run_server(const SutEndpoint& endpoint, const ArrivalSchedule& schedule,
                               const std::vector<std::string>& prompts, const GenerationParams& params,
                               std::optional<double> t_origin = {}) {
  if (schedule.arrival_ts.empty()) throw DomainError("run_server: empty schedule");
  if (prompts.size() != schedule.arrival_ts.size())
    throw DomainError("run_server: one prompt per scheduled arrival required");
  ServerResult out;
  out.t_origin = t_origin.value_or(RunClock::now());
  out.t_window_end = out.t_origin + schedule.duration_s;
  out.records.resize(prompts.size());
  {
    std::vector<std::jthread> workers;
    workers.reserve(prompts.size());
    for (std::size_t i = 0; i < prompts.size(); ++i) {
      const double due = out.t_origin + schedule.arrival_ts[i];
      RunClock::sleep_until(due);
      workers.emplace_back([&, i, due] {
        auto rec = send_request(endpoint, prompts[i], params);
        rec.scheduled_ts = due;
        out.records[i] = std::move(rec);
      });
    }
    // Keep the iteration open until the window closes even if the last
    // arrival came early; workers drain on scope exit.
    RunClock::sleep_until(out.t_window_end);
  }
  std::vector<double> lateness;
  bool any_ok = false;
  for (auto& r : out.records) {
    lateness.push_back(std::max(0.0, r.arrival_ts - *r.scheduled_ts));
    if (r.completion_ts && *r.completion_ts > out.t_window_end) r.post_window = true;
    any_ok |= r.ok;
  }
  out.lateness_p99_s = percentile(lateness, 99);
  out.overrun = out.lateness_p99_s > kLatenessBudgetS;
  if (!any_ok) throw SutFailure("run_server: every request failed (" + out.records.front().error + ")", out.records);
  return out;
}

}  // namespace wattbench
