#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cstdlib>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "keyinst/llm.hpp"
#include "keyinst/prompt.hpp"

using namespace keyinst;

namespace {

Prompt simple_prompt(const std::string& text) {
  return Prompt{{PromptSegment{Role::User, text}}};
}

// One chat-completions stub per test. Counts requests, replays a scripted
// status sequence, then serves 200 with a fixed completion.
class StubServer {
public:
  explicit StubServer(std::vector<int> status_sequence, std::string completion = "SELECT 1",
                      bool garbage_body = false)
      : statuses_(std::move(status_sequence)),
        completion_(std::move(completion)),
        garbage_body_(garbage_body) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                httplib::Response& res) {
      std::size_t index = requests_.fetch_add(1);
      last_body_ = req.body;
      last_auth_ = req.get_header_value("Authorization");
      int status = index < statuses_.size() ? statuses_[index] : 200;
      if (status != 200) {
        res.status = status;
        res.set_content("{}", "application/json");
        return;
      }
      if (garbage_body_) {
        res.set_content("not-json{{{", "text/plain");
        return;
      }
      nlohmann::json reply = {
          {"choices", {{{"message", {{"role", "assistant"}, {"content", completion_}}}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
  std::size_t request_count() const { return requests_.load(); }
  std::string last_body() const { return last_body_; }
  std::string last_auth() const { return last_auth_; }

private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<std::size_t> requests_{0};
  std::vector<int> statuses_;
  std::string completion_;
  bool garbage_body_ = false;
  std::string last_body_;
  std::string last_auth_;
};

GenerationConfig test_config(const std::string& base_url) {
  GenerationConfig config;
  config.model = "test-model";
  config.base_url = base_url;
  config.retries = 3;
  config.timeout_seconds = 5.0;
  config.backoff_base_seconds = 0.001;  // keep test retries fast
  return config;
}

struct EnvVar {
  std::string name;
  EnvVar(const std::string& n, const std::string& value) : name(n) {
    setenv(name.c_str(), value.c_str(), 1);
  }
  ~EnvVar() { unsetenv(name.c_str()); }
};

}  // namespace

TEST_CASE("generation config invariants") {
  GenerationConfig config;
  config.model = "m";
  CHECK_NOTHROW(validate(config));
  CHECK(config.temperature == 0.0);

  GenerationConfig bad = config;
  bad.temperature = -1.0;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = config;
  bad.retries = -1;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = config;
  bad.timeout_seconds = 0.0;
  CHECK_THROWS_AS(validate(bad), ConfigError);
}

TEST_CASE("http provider completes a successful request") {
  StubServer server({}, "SELECT name FROM shop");
  EnvVar key("KEYINST_API_KEY", "sk-test-123");
  HttpProvider provider(test_config(server.base_url()));

  std::string reply = provider.generate(simple_prompt("hello"));
  CHECK(reply == "SELECT name FROM shop");
  CHECK(server.request_count() == 1);

  nlohmann::json body = nlohmann::json::parse(server.last_body());
  CHECK(body.at("model") == "test-model");
  CHECK(body.at("temperature") == 0.0);
  CHECK(body.at("max_tokens") == 512);
  REQUIRE(body.at("messages").size() == 1);
  CHECK(body.at("messages")[0].at("role") == "user");
  CHECK(body.at("messages")[0].at("content") == "hello");
  CHECK(server.last_auth() == "Bearer sk-test-123");
}

TEST_CASE("http provider retries a 429 then succeeds") {
  StubServer server({429});
  EnvVar key("KEYINST_API_KEY", "sk-test");
  HttpProvider provider(test_config(server.base_url()));

  CHECK(provider.generate(simple_prompt("retry me")) == "SELECT 1");
  CHECK(server.request_count() == 2);  // one retry
}

TEST_CASE("http provider bounds total attempts") {
  StubServer server({500, 500, 500, 500, 500, 500});
  EnvVar key("KEYINST_API_KEY", "sk-test");
  GenerationConfig config = test_config(server.base_url());
  config.retries = 2;
  HttpProvider provider(config);

  CHECK_THROWS_AS(provider.generate(simple_prompt("x")), TransportError);
  CHECK(server.request_count() == 3);  // retries + 1
}

TEST_CASE("http provider classifies rate limiting after exhaustion") {
  StubServer server({429, 429, 429, 429, 429});
  EnvVar key("KEYINST_API_KEY", "sk-test");
  GenerationConfig config = test_config(server.base_url());
  config.retries = 1;
  HttpProvider provider(config);
  CHECK_THROWS_AS(provider.generate(simple_prompt("x")), RateLimited);
  CHECK(server.request_count() == 2);
}

TEST_CASE("http provider refuses to run without credentials") {
  StubServer server({});
  unsetenv("KEYINST_API_KEY");
  HttpProvider provider(test_config(server.base_url()));
  CHECK_THROWS_AS(provider.generate(simple_prompt("x")), AuthError);
  CHECK(server.request_count() == 0);  // no request went out
}

TEST_CASE("http provider stops on auth rejection without retrying") {
  StubServer server({401, 401});
  EnvVar key("KEYINST_API_KEY", "sk-bad");
  HttpProvider provider(test_config(server.base_url()));
  try {
    provider.generate(simple_prompt("x"));
    FAIL("expected AuthError");
  } catch (const AuthError& e) {
    // the key itself never leaks into messages
    CHECK(std::string(e.what()).find("sk-bad") == std::string::npos);
  }
  CHECK(server.request_count() == 1);
}

TEST_CASE("http provider rejects unparseable bodies") {
  EnvVar key("KEYINST_API_KEY", "sk-test");

  StubServer garbage({}, "SELECT 1", /*garbage_body=*/true);
  HttpProvider provider(test_config(garbage.base_url()));
  CHECK_THROWS_AS(provider.generate(simple_prompt("x")), BadResponse);

  StubServer teapot({418});
  HttpProvider teapot_provider(test_config(teapot.base_url()));
  CHECK_THROWS_AS(teapot_provider.generate(simple_prompt("x")), BadResponse);
}

TEST_CASE("base url override comes from the environment") {
  StubServer real({}, "FROM OVERRIDE");
  EnvVar key("KEYINST_API_KEY", "sk-test");
  EnvVar base("KEYINST_BASE_URL", real.base_url());

  GenerationConfig config = test_config("http://127.0.0.1:9/unreachable");
  HttpProvider provider(config);
  CHECK(provider.generate(simple_prompt("x")) == "FROM OVERRIDE");
  CHECK(real.request_count() == 1);
}

TEST_CASE("mock provider list mode follows call order") {
  auto mock = MockProvider::with_list({"A", "B"});
  CHECK(mock->generate(simple_prompt("p1")) == "A");
  CHECK(mock->generate(simple_prompt("p2")) == "B");
  CHECK_THROWS_AS(mock->generate(simple_prompt("p3")), ScriptExhausted);
  CHECK(mock->transcript() == std::vector<std::string>{"p1", "p2", "p3"});
  CHECK(mock->call_count() == 3);
}

TEST_CASE("mock provider map mode answers by prompt hash") {
  Prompt p = simple_prompt("the exact prompt");
  auto mock = MockProvider::with_map({{prompt_hash(p), "SELECT 1"}});
  CHECK(mock->generate(p) == "SELECT 1");
  CHECK(mock->generate(p) == "SELECT 1");  // stable on repeat
  CHECK_THROWS_AS(mock->generate(simple_prompt("unknown")), ScriptExhausted);
  CHECK_THROWS_AS(MockProvider::with_list({}), ConfigError);
}

TEST_CASE("prompt hashes are stable and content-sensitive") {
  Prompt a = simple_prompt("alpha");
  Prompt b = simple_prompt("beta");
  CHECK(prompt_hash(a) == prompt_hash(a));
  CHECK(prompt_hash(a) != prompt_hash(b));
  CHECK(prompt_hash(a).size() == 16);
  CHECK(fnv1a64_hex("") == "cbf29ce484222325");
}
