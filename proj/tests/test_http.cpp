#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "oncv/corpus.hpp"
#include "oncv/policy.hpp"
#include "oncv/rollout.hpp"

using namespace oncv;
using json = nlohmann::json;

namespace {

// Loopback chat-completion stub. `handler` maps the request body to a
// response body; status_plan lets tests fail the first N calls.
class StubServer {
 public:
  using Handler = std::function<json(const json&)>;

  explicit StubServer(Handler handler, std::vector<int> status_plan = {})
      : handler_(std::move(handler)), status_plan_(std::move(status_plan)) {
    server_.Post("/chat/completions",
                 [this](const httplib::Request& request, httplib::Response& response) {
                   const int call = calls_.fetch_add(1);
                   if (call < static_cast<int>(status_plan_.size()) &&
                       status_plan_[static_cast<std::size_t>(call)] != 200) {
                     response.status = status_plan_[static_cast<std::size_t>(call)];
                     response.set_content("{}", "application/json");
                     return;
                   }
                   last_request_ = json::parse(request.body);
                   response.set_content(handler_(last_request_).dump(), "application/json");
                 });
    server_.Post("/search", [this](const httplib::Request& request,
                                   httplib::Response& response) {
      const json body = json::parse(request.body);
      json results = json::array();
      results.push_back({{"id", "e_1"}, {"score", 9.5}});
      if (body.value("k", 1) > 1) results.push_back({{"id", "e_2"}, {"score", 1.5}});
      response.set_content(json{{"results", results}}.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int calls() const { return calls_.load(); }
  json last_request() const { return last_request_; }

 private:
  httplib::Server server_;
  Handler handler_;
  std::vector<int> status_plan_;
  std::atomic<int> calls_{0};
  json last_request_;
  int port_ = 0;
  std::thread thread_;
};

json chat_response(const std::string& text, const json& logprobs = nullptr) {
  json choice = {{"message", {{"role", "assistant"}, {"content", text}}}};
  if (!logprobs.is_null()) choice["logprobs"] = logprobs;
  return json{{"choices", json::array({choice})}};
}

HttpChatPolicy::Options client_options(const StubServer& server, int retries = 1) {
  HttpChatPolicy::Options options;
  options.base_url = server.base_url();
  options.model = "stub-model";
  options.api_key = "test-key";
  options.timeout_ms = 5000;
  options.max_retries = retries;
  return options;
}

}  // namespace

TEST_CASE("http policy: request shape and token probabilities") {
  StubServer server([](const json&) {
    const json logprobs = {
        {"content", json::array({
                        json{{"token", "<answer>"}, {"logprob", 0.0}},
                        json{{"token", "ok"}, {"logprob", -0.105360516}},
                    })},
    };
    return chat_response("<answer>ok", logprobs);
  });

  HttpChatPolicy policy(client_options(server));
  PolicyRequest request;
  request.conversation = "prompt text";
  request.stop = {"</search>"};
  request.temperature = 0.8;
  request.max_tokens = 64;
  const PolicyResponse response = policy.complete(request);

  CHECK(response.text == "<answer>ok");
  REQUIRE(response.token_probs.size() == 2);
  CHECK(response.token_probs[0].prob == doctest::Approx(1.0));
  CHECK(response.token_probs[1].prob == doctest::Approx(0.9));

  const json sent = server.last_request();
  CHECK(sent.at("model") == "stub-model");
  CHECK(sent.at("stop") == json::array({"</search>"}));
  CHECK(sent.at("messages").at(0).at("content") == "prompt text");
  CHECK(sent.at("logprobs") == true);
}

TEST_CASE("http policy: legacy logprobs arrays are understood") {
  StubServer server([](const json&) {
    const json logprobs = {{"tokens", json::array({"a", "b"})},
                           {"token_logprobs", json::array({-0.2, -0.4})}};
    return chat_response("ab", logprobs);
  });
  HttpChatPolicy policy(client_options(server));
  const PolicyResponse response = policy.complete(PolicyRequest{});
  REQUIRE(response.token_probs.size() == 2);
  CHECK(response.token_probs[0].token == "a");
  CHECK(response.token_probs[0].prob == doctest::Approx(std::exp(-0.2)));
}

TEST_CASE("http policy: retries recover from transient server errors") {
  StubServer server([](const json&) { return chat_response("recovered"); },
                    {500, 429});  // first two calls fail
  HttpChatPolicy policy(client_options(server, 3));
  const PolicyResponse response = policy.complete(PolicyRequest{});
  CHECK(response.text == "recovered");
  CHECK(server.calls() == 3);
}

TEST_CASE("http policy: bounded retries then a transport error") {
  StubServer server([](const json&) { return chat_response("never seen"); },
                    {500, 500, 500, 500, 500, 500});
  HttpChatPolicy policy(client_options(server, 2));
  CHECK_THROWS_AS(policy.complete(PolicyRequest{}), PolicyTransportError);
  CHECK(server.calls() == 3);  // initial try + 2 retries

  HttpChatPolicy unconfigured{HttpChatPolicy::Options{}};
  CHECK_THROWS_AS(unconfigured.complete(PolicyRequest{}), PolicyTransportError);
}

TEST_CASE("http policy: non-retryable status fails fast") {
  StubServer server([](const json&) { return chat_response("nope"); }, {401});
  HttpChatPolicy policy(client_options(server, 3));
  CHECK_THROWS_AS(policy.complete(PolicyRequest{}), PolicyTransportError);
  CHECK(server.calls() == 1);
}

TEST_CASE("an online episode runs end to end over http") {
  std::atomic<int> turn{0};
  StubServer server([&](const json&) {
    if (turn.fetch_add(1) == 0) {
      return chat_response("<plan>trace</plan>\n<search>Danube Vienna</search>");
    }
    return chat_response(
        "<think>confirmed</think>\n<answer>\nLabel: SUPPORT\nEvidence: [[e_1]]\n</answer>");
  });

  std::vector<CorpusRecord> records = {
      {"e_1", "", "The Danube flows through Vienna."},
      {"e_2", "", "Unrelated entry about volcanoes."},
  };
  const CorpusIndex index = CorpusIndex::ingest_records(records);
  ClaimSample sample;
  sample.claim_id = "c_http";
  sample.claim = "The Danube flows through Vienna.";
  sample.gold.label = Label::Support;
  sample.gold.evidence = {"e_1"};

  HttpChatPolicy policy(client_options(server));
  const EpisodeResult result = run_online_episode(sample, policy, index, {});
  CHECK_FALSE(result.error.has_value());
  CHECK(result.reward.r_final == 4.0);
  CHECK(result.trajectory.search_count == 1);
}

TEST_CASE("http policy: the rate ceiling spaces out requests") {
  StubServer server([](const json&) { return chat_response("quick"); });
  HttpChatPolicy::Options options = client_options(server);
  options.min_request_interval_ms = 60;
  HttpChatPolicy policy(std::move(options));

  const auto started = std::chrono::steady_clock::now();
  policy.complete(PolicyRequest{});
  policy.complete(PolicyRequest{});
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - started)
                           .count();
  CHECK(elapsed >= 60);
}

TEST_CASE("remote retriever conforms to the retriever interface") {
  StubServer server([](const json&) { return chat_response("unused"); });
  std::vector<CorpusRecord> records = {
      {"e_1", "", "Local text for entry one."},
      {"e_2", "", "Local text for entry two."},
  };
  const CorpusIndex corpus = CorpusIndex::ingest_records(records);
  const RemoteRetriever retriever(server.base_url(), corpus);

  const auto hits = retriever.search("anything", 2);
  REQUIRE(hits.size() == 2);
  CHECK(hits[0].id == "e_1");
  CHECK(hits[0].score == 9.5);
  REQUIRE(retriever.find_entry("e_1") != nullptr);
  CHECK(retriever.find_entry("e_1")->text == "Local text for entry one.");
  CHECK(retriever.find_entry("missing") == nullptr);
}
