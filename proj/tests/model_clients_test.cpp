#include <lemmaguide/http_transport.hpp>
#include <lemmaguide/model_clients.hpp>
#include <lemmaguide/prompts.hpp>

#include <gtest/gtest.h>

#include <sstream>
#include <thread>

namespace {

using namespace lemmaguide;

class SequenceTransport : public HttpTransport {
 public:
  explicit SequenceTransport(std::vector<HttpResponse> responses) : responses_(std::move(responses)) {}
  HttpResponse post(const std::string&, const std::string& path, const std::string& body, const Headers& headers,
                    double) override {
    paths.push_back(path);
    bodies.push_back(body);
    last_headers = headers;
    if (next_ >= responses_.size()) return HttpResponse{503, "", std::nullopt};
    return responses_[next_++];
  }
  std::vector<std::string> paths;
  std::vector<std::string> bodies;
  Headers last_headers;

 private:
  std::vector<HttpResponse> responses_;
  std::size_t next_ = 0;
};

EndpointConfig config(int retries = 3) {
  EndpointConfig c = EndpointConfig::defaults_for(Role::prover);
  c.base_url = "http://unused";
  c.model = "prover-7b";
  c.max_retries = retries;
  return c;
}

CompletionRequest request() { return CompletionRequest{{{"user", "hi"}}, "thm", "initial"}; }

TEST(ChatClient, RetriesRateLimitWithBackoff) {
  auto t = std::make_shared<SequenceTransport>(std::vector<HttpResponse>{
      {429, "", std::nullopt}, {429, "", std::nullopt}, {200, chat_response_body("ok"), 0.25}});
  std::vector<double> sleeps;
  ChatClient client(config(), t, [&](double s) { sleeps.push_back(s); }, 0.5);
  const Completion c = client.complete(request());
  EXPECT_EQ(c.text, "ok");
  EXPECT_EQ(c.retries, 2);
  EXPECT_DOUBLE_EQ(c.seconds, 0.25);
  EXPECT_EQ(sleeps, (std::vector<double>{0.5, 1.0}));
  EXPECT_EQ(client.call_count(), 1u);
  EXPECT_EQ(t->paths.front(), "/chat/completions");
}

TEST(ChatClient, GivesUpAfterMaxRetries) {
  auto t = std::make_shared<SequenceTransport>(std::vector<HttpResponse>{});
  int sleeps = 0;
  ChatClient client(config(2), t, [&](double) { ++sleeps; });
  try {
    client.complete(request());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::endpoint_unavailable);
  }
  EXPECT_EQ(t->paths.size(), 3u);
  EXPECT_EQ(sleeps, 2);
}

TEST(ChatClient, ClientErrorsAreNotRetried) {
  auto t = std::make_shared<SequenceTransport>(std::vector<HttpResponse>{{400, "bad", std::nullopt}});
  ChatClient client(config(), t, [](double) {});
  EXPECT_THROW(client.complete(request()), Error);
  EXPECT_EQ(t->paths.size(), 1u);
}

TEST(ChatClient, MalformedBody) {
  auto t = std::make_shared<SequenceTransport>(std::vector<HttpResponse>{{200, "{\"choices\": []}", std::nullopt}});
  ChatClient client(config(), t, [](double) {});
  try {
    client.complete(request());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::response_malformed);
  }
}

TEST(ChatClient, RequestBodyCarriesSampling) {
  auto t = std::make_shared<SequenceTransport>(std::vector<HttpResponse>{{200, chat_response_body("x"), 0.0}});
  ChatClient client(config(), t, [](double) {});
  client.complete(request());
  const auto body = nlohmann::json::parse(t->bodies.front());
  EXPECT_EQ(body["model"], "prover-7b");
  EXPECT_DOUBLE_EQ(body["temperature"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(body["top_p"].get<double>(), 0.95);
  EXPECT_EQ(body["max_tokens"], 2048);
  EXPECT_EQ(body["messages"][0]["content"], "hi");
  EXPECT_EQ(header_value(t->last_headers, "X-Lemmaguide-Task"), "initial");
}

TEST(ChatClient, BearerTokenFromEnvironment) {
  ::setenv("LG_TEST_KEY", "sekret", 1);
  auto t = std::make_shared<SequenceTransport>(std::vector<HttpResponse>{{200, chat_response_body("x"), 0.0}});
  EndpointConfig c = config();
  c.api_key_env = "LG_TEST_KEY";
  ChatClient client(c, t, [](double) {});
  client.complete(request());
  EXPECT_EQ(header_value(t->last_headers, "Authorization"), "Bearer sekret");
}

TEST(ParseChat, LegacyTextAndUsage) {
  auto c = parse_chat_response(R"({"choices":[{"text":"abc"}],"usage":{"prompt_tokens":3,"completion_tokens":4}})");
  ASSERT_TRUE(c);
  EXPECT_EQ(c->text, "abc");
  EXPECT_EQ(c->completion_tokens, 4);
  EXPECT_FALSE(parse_chat_response("nope"));
}

TEST(Script, RoutesByTheoremAndTask) {
  std::istringstream in(
      R"({"theorem":"a","task":"summary","text":"A-summary","seconds":1.5}
{"task":"summary","text":"generic-summary","repeat":true}

{"theorem":"a","task":"initial","status":500,"text":"boom"}
{"theorem":"a","task":"initial","text":"A-initial"})");
  auto script = std::make_shared<ScriptTransport>(ScriptTransport::parse_script(in));
  ChatClient client(config(), script, [](double) {});
  auto ask = [&](std::string thm, std::string task) {
    return client.complete(CompletionRequest{{{"user", "x"}}, thm, task});
  };
  const Completion first = ask("a", "summary");
  EXPECT_EQ(first.text, "A-summary");
  EXPECT_DOUBLE_EQ(first.seconds, 1.5);
  EXPECT_EQ(ask("a", "summary").text, "generic-summary");
  EXPECT_EQ(ask("b", "summary").text, "generic-summary");
  const Completion retried = ask("a", "initial");
  EXPECT_EQ(retried.text, "A-initial");
  EXPECT_EQ(retried.retries, 1);
  EXPECT_THROW(ask("b", "initial"), Error);
  EXPECT_EQ(script->requests_for("a"), 4u);
}

TEST(Script, BadLineReportsLineNumber) {
  std::istringstream in("{\"text\":\"ok\"}\nnot json\n");
  try {
    ScriptTransport::parse_script(in, "s.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("s.jsonl:2"), std::string::npos);
  }
}

TEST(Bernoulli, DeterministicPerTheoremAndCallIndex) {
  auto run = [](double p, std::uint64_t seed) {
    auto t = std::make_shared<BernoulliProverTransport>(p, seed);
    ChatClient client(config(), t, [](double) {});
    std::string out;
    for (int i = 0; i < 64; ++i) {
      out += client.complete(CompletionRequest{{{"user", "x"}}, i % 2 ? "odd" : "even", "initial"}).text ==
                     "  norm_num\n```"
                 ? '1'
                 : '0';
    }
    return out;
  };
  EXPECT_EQ(run(0.3, 7), run(0.3, 7));
  EXPECT_NE(run(0.3, 7), run(0.3, 8));
  EXPECT_EQ(run(0.0, 1).find('1'), std::string::npos);
  EXPECT_EQ(run(1.0, 1).find('0'), std::string::npos);
  const std::string s = run(0.5, 11);
  const auto ones = std::count(s.begin(), s.end(), '1');
  EXPECT_GT(ones, 16);
  EXPECT_LT(ones, 48);
}

TEST(Registry, UrlSchemes) {
  TransportRegistry r;
  EXPECT_TRUE(r.for_url("mock-bernoulli:0.5:3"));
  EXPECT_EQ(r.for_url("mock-bernoulli:0.5:3"), r.for_url("mock-bernoulli:0.5:3"));
  EXPECT_TRUE(r.for_url("http://localhost:1/v1"));
  EXPECT_THROW(r.for_url("mock-bernoulli:1.5"), Error);
  EXPECT_THROW(r.for_url("ftp://x"), Error);
  EXPECT_THROW(r.for_url("mock:/nonexistent/script.jsonl"), Error);
}

TEST(Httplib, TalksToLocalServer) {
  httplib::Server server;
  std::string seen_path;
  std::string seen_auth;
  bool saw_routing_header = false;
  server.Post(R"(/v1/chat/completions)", [&](const httplib::Request& req, httplib::Response& res) {
    seen_path = req.path;
    seen_auth = req.get_header_value("Authorization");
    saw_routing_header = req.has_header("X-Lemmaguide-Theorem");
    const auto body = nlohmann::json::parse(req.body);
    res.set_content(chat_response_body("echo:" + body["messages"][0]["content"].get<std::string>()),
                    "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  EndpointConfig c = config();
  c.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  c.timeout_s = 5.0;
  ::setenv("LG_TEST_KEY2", "tok", 1);
  c.api_key_env = "LG_TEST_KEY2";
  TransportRegistry registry;
  auto client = make_model_client(c, registry);
  const Completion out = client->complete(request());
  server.stop();
  th.join();
  EXPECT_EQ(out.text, "echo:hi");
  EXPECT_EQ(seen_path, "/v1/chat/completions");
  EXPECT_EQ(seen_auth, "Bearer tok");
  EXPECT_FALSE(saw_routing_header);
}

TEST(Httplib, ConnectionRefusedIsRetriedThenUnavailable) {
  EndpointConfig c = config(1);
  c.base_url = "http://127.0.0.1:1";
  c.timeout_s = 1.0;
  ChatClient client(c, std::make_shared<HttplibTransport>(), [](double) {});
  try {
    client.complete(request());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::endpoint_unavailable);
  }
}

TEST(Prompts, RenderIsSinglePass) {
  EXPECT_EQ(render("A {nl_proof} B", {{"nl_proof", "{formal_statement}"}}), "A {formal_statement} B");
  EXPECT_EQ(render("set {x} and {lemmas}", {{"lemmas", "L"}}), "set {x} and L");
  try {
    render("{summary} {lean_code}", {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::missing_binding);
    EXPECT_NE(std::string(e.what()).find("lean_code, summary"), std::string::npos);
  }
}

TEST(Prompts, DefaultsUseOnlyKnownPlaceholders) {
  TemplateSet t;
  for (PromptId id : kAllPrompts) {
    EXPECT_FALSE(t.text(id).empty()) << to_string(id);
  }
  EXPECT_EQ(placeholders_of(t.text(PromptId::prover_cot)), std::vector<std::string>{"lean_code"});
  EXPECT_THROW(TemplateSet::with_overrides("/nonexistent/prompts"), Error);
}

}  // namespace
