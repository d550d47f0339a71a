#include <gtest/gtest.h>

#include "oracles/des_queue.hpp"
#include "support.hpp"

using namespace wattbench;

namespace {

SutEndpoint endpoint_for(const MockSut& m) { return {m.base_url(), m.profile().model_name, 30}; }

oracle::DesProfile des_of(const MockSutProfile& p) {
  return {p.prefill_a_s, p.prefill_b_s_per_token, p.decode_rate_tps, p.concurrency_cap};
}

GenerationParams gen(int max_tokens) {
  GenerationParams g;
  g.max_tokens = max_tokens;
  return g;
}

}  // namespace

TEST(Sse, ParsesSplitEventsAndCrLf) {
  SseParser p;
  std::vector<std::string> got;
  auto sink = [&](std::string_view d) { got.emplace_back(d); };
  p.feed("data: {\"a\":", sink);
  EXPECT_TRUE(got.empty());
  p.feed("1}\n\ndata: x\r\n\r\n: comment\n\ndata: a\ndata: b\n\n", sink);
  ASSERT_EQ(got.size(), 3u);
  EXPECT_EQ(got[0], "{\"a\":1}");
  EXPECT_EQ(got[1], "x");
  EXPECT_EQ(got[2], "a\nb");
}

TEST(ChatRequest, CarriesGenerationParamsVerbatim) {
  GenerationParams g;
  g.temperature = 0.5;
  g.top_k = 7;
  g.top_p = 0.9;
  g.max_tokens = 33;
  g.repetition_penalty = 1.1;
  g.max_context = 2048;
  g.seed = 99;
  const auto j = build_chat_request("m", "hello", g);
  EXPECT_TRUE(j["stream"].get<bool>());
  EXPECT_EQ(j["messages"][0]["content"], "hello");
  EXPECT_EQ(j["temperature"], 0.5);
  EXPECT_EQ(j["top_k"], 7);
  EXPECT_EQ(j["top_p"], 0.9);
  EXPECT_EQ(j["max_tokens"], 33);
  EXPECT_EQ(j["repetition_penalty"], 1.1);
  EXPECT_EQ(j["max_context"], 2048);
  EXPECT_EQ(j["seed"], 99);
}

TEST(Url, ParsesPrefixAndRejectsHttps) {
  EXPECT_EQ(parse_base_url("http://h:8000/v1").origin, "http://h:8000");
  EXPECT_EQ(parse_base_url("http://h:8000/v1").prefix, "");
  EXPECT_EQ(parse_base_url("http://h:8000/proxy/v1/").prefix, "/proxy");
  EXPECT_THROW(parse_base_url("https://h"), ConfigError);
  EXPECT_THROW(parse_base_url("http://"), ConfigError);
}

TEST(MockSut, SingleRequestTtftMatchesPrefill) {
  MockSutProfile p;
  p.prefill_a_s = 0.1;
  p.prefill_b_s_per_token = 0;
  p.decode_rate_tps = 1000;
  p.output_tokens = 20;
  auto mock = mock_serve(p);
  const auto r = send_request(endpoint_for(*mock), "a b c", gen(256));
  ASSERT_TRUE(r.ok) << r.error;
  EXPECT_NEAR(*r.ttft(), 0.100, 0.005);
  EXPECT_EQ(r.output_tokens, 20);
  EXPECT_EQ(r.input_tokens, 3);
  EXPECT_NEAR(*r.queue_time_s, 0, 0.005);
  EXPECT_LE(*r.ttft(), *r.e2e());
  EXPECT_EQ(mock->requests_served(), 1u);
}

TEST(MockSut, MaxTokensCapsOutput) {
  MockSutProfile p;
  p.prefill_a_s = 0.01;
  p.decode_rate_tps = 1000;
  auto mock = mock_serve(p);
  const auto r = send_request(endpoint_for(*mock), "x", gen(5));
  ASSERT_TRUE(r.ok);
  EXPECT_EQ(r.output_tokens, 5);
}

TEST(MockSut, RejectsMalformedBodyWithHttpError) {
  auto mock = mock_serve(MockSutProfile{});
  httplib::Client cli(mock->base_url());
  auto res = cli.Post("/v1/chat/completions", "{}", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  EXPECT_TRUE(endpoint_healthy(endpoint_for(*mock)));
}

TEST(MockSut, ProfileValidation) {
  MockSutProfile p;
  p.decode_rate_tps = 0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.concurrency_cap = 0;
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(Sut, UnreachableEndpointGivesErrorRecord) {
  SutEndpoint ep{"http://127.0.0.1:1", "m", 2};
  const auto r = send_request(ep, "hi", gen(8));
  EXPECT_FALSE(r.ok);
  EXPECT_NE(r.error.find("connection"), std::string::npos) << r.error;
  EXPECT_FALSE(endpoint_healthy(ep, 1));
  EXPECT_THROW(run_batch(ep, {"a", "b"}, gen(8)), SutFailure);
  try {
    run_batch(ep, {"a", "b"}, gen(8));
  } catch (const SutFailure& f) {
    EXPECT_EQ(f.records().size(), 2u);
  }
}

TEST(Sut, BatchMatchesDiscreteEventOracle) {
  MockSutProfile p;
  p.prefill_a_s = 0.05;
  p.prefill_b_s_per_token = 0.001;
  p.decode_rate_tps = 64;
  p.concurrency_cap = 4;
  p.output_tokens = 256;
  p.chunk_interval_s = 0.25;
  auto mock = mock_serve(p);
  const std::vector<std::string> prompts(10, "what is the energy of one token");
  const auto res = run_batch(endpoint_for(*mock), prompts, gen(256));
  ASSERT_EQ(res.records.size(), 10u);

  std::vector<oracle::DesRequest> reqs(10, {0.0, count_words(prompts[0]), 256});
  const auto des = oracle::simulate_fifo(reqs, des_of(p));
  std::vector<double> got, want, got_first, want_first;
  for (std::size_t i = 0; i < 10; ++i) {
    const auto& r = res.records[i];
    ASSERT_TRUE(r.ok) << r.error;
    EXPECT_EQ(r.arrival_ts, res.t_dispatch);
    got.push_back(*r.completion_ts - res.t_dispatch);
    got_first.push_back(*r.first_token_ts - res.t_dispatch);
    want.push_back(des[i].completion);
    want_first.push_back(des[i].first_token);
  }
  std::sort(got.begin(), got.end());
  std::sort(want.begin(), want.end());
  std::sort(got_first.begin(), got_first.end());
  std::sort(want_first.begin(), want_first.end());
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_NEAR(got[i], want[i], 0.03) << i;
    EXPECT_NEAR(got_first[i], want_first[i], 0.03) << i;
  }
  EXPECT_NEAR(res.t_end - res.t_dispatch, want.back(), 0.03);
}

TEST(Sut, SinglePromptBatchWindowIsItsLatency) {
  MockSutProfile p;
  p.prefill_a_s = 0.02;
  p.decode_rate_tps = 500;
  p.output_tokens = 50;
  auto mock = mock_serve(p);
  const auto res = run_batch(endpoint_for(*mock), {"one"}, gen(256));
  EXPECT_DOUBLE_EQ(res.t_end - res.t_dispatch, *res.records[0].e2e());
  EXPECT_THROW(run_batch(endpoint_for(*mock), {}, gen(8)), DomainError);
}

TEST(Sut, CapOneQueuesOverlappingArrivals) {
  MockSutProfile p;
  p.prefill_a_s = 0.05;
  p.prefill_b_s_per_token = 0;
  p.decode_rate_tps = 100;
  p.output_tokens = 50;
  p.concurrency_cap = 1;
  auto mock = mock_serve(p);
  ArrivalSchedule s{{0.0, 0.1}, 1.0, 1.0, 0};
  const auto res = run_server(endpoint_for(*mock), s, {"a", "b"}, gen(256));
  ASSERT_EQ(res.records.size(), 2u);
  std::vector<oracle::DesRequest> reqs;
  for (const auto& r : res.records) reqs.push_back({r.arrival_ts, 1, 50});
  const auto des = oracle::simulate_fifo(reqs, des_of(p));
  EXPECT_NEAR(*res.records[0].queue_time_s, 0.0, 0.005);
  EXPECT_GT(*res.records[1].queue_time_s, 0.3);
  EXPECT_NEAR(*res.records[1].queue_time_s, des[1].admitted - reqs[1].arrival, 0.005);
  EXPECT_NEAR(*res.records[1].ttft(), des[1].first_token - reqs[1].arrival, 0.005);
  EXPECT_FALSE(res.overrun);
}

TEST(Sut, ServerRunIsOpenLoopAndConserving) {
  MockSutProfile p;
  p.prefill_a_s = 0.05;
  p.decode_rate_tps = 50;
  p.output_tokens = 100;  // 2 s service, longer than typical gaps
  p.concurrency_cap = MockSutProfile::kUnlimited;
  auto mock = mock_serve(p);
  const auto s = build_poisson_schedule(2.0, 4.0, 17);
  ASSERT_GE(s.arrival_ts.size(), 3u);
  const auto prompts = assign_prompts(builtin_prompts(), s.arrival_ts.size(), 1);
  const auto res = run_server(endpoint_for(*mock), s, prompts, gen(256));
  ASSERT_EQ(res.records.size(), s.arrival_ts.size());
  int post = 0;
  for (std::size_t i = 0; i < res.records.size(); ++i) {
    const auto& r = res.records[i];
    ASSERT_TRUE(r.ok) << r.error;
    EXPECT_NEAR(*r.scheduled_ts - res.t_origin, s.arrival_ts[i], 1e-9);
    // Dispatch is never held back by earlier responses.
    EXPECT_LT(r.arrival_ts - *r.scheduled_ts, 0.05);
    EXPECT_NEAR(*r.queue_time_s, 0.0, 0.005);
    EXPECT_LE(*r.ttft(), *r.e2e());
    post += r.post_window;
  }
  EXPECT_GE(post, 1);
  EXPECT_EQ(mock->requests_served(), res.records.size());
  EXPECT_THROW(run_server(endpoint_for(*mock), ArrivalSchedule{{}, 1, 1, 0}, {}, gen(8)), DomainError);
}

TEST(MockSut, DrivesCoupledDeviceBusyThenIdle) {
  SyntheticDeviceProfile dp;
  dp.noise_std_w = 0;
  dp.power_rise_tau_s = 0.05;
  dp.power_fall_tau_s = 0.05;
  auto dev = std::make_shared<SyntheticDevice>(dp, RunClock::now());
  MockSutProfile p;
  p.prefill_a_s = 0.0;
  p.decode_rate_tps = 100;
  p.output_tokens = 100;
  p.power_coupling = dev;
  auto mock = mock_serve(p);
  const auto r = send_request(endpoint_for(*mock), "x", gen(256));
  ASSERT_TRUE(r.ok);
  const auto tr = dev->transitions();
  ASSERT_EQ(tr.size(), 2u);
  EXPECT_TRUE(tr[0].busy);
  EXPECT_NEAR(tr[1].ts - tr[0].ts, 1.0, 0.02);
  EXPECT_NEAR(dev->peek(RunClock::now() + 2).power_w, dp.idle_power_w, 1e-3);
}
