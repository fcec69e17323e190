#pragma once
// Access to the frozen evaluation model: an OpenAI-compatible chat client and
// a deterministic rule-based stand-in.

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "promptopt/core.hpp"

namespace promptopt {

struct ChatRequest {
    std::optional<std::string> system;
    std::string user;
    int max_tokens = 256;
    double temperature = 0.0;
    std::string endpoint;  // base URL, e.g. http://localhost:8000
    std::string model_name;
    std::chrono::milliseconds timeout{60'000};
    int max_retries = 3;
    std::optional<std::int64_t> seed;  // forwarded for servers that support seeded sampling
};

/// Request body for POST /v1/chat/completions.
nlohmann::json chat_request_body(const ChatRequest& request);

/// Assistant text of the first choice. Throws MalformedResponseError.
std::string parse_chat_response(std::string_view body, int attempts = 1);

struct ChatResult {
    std::string text;
    int attempts = 0;
};

/// Blocking chat-completions client. Safe for concurrent use.
class ChatClient {
public:
    struct Options {
        std::string api_key;  // sent as a bearer token when nonempty
        std::chrono::milliseconds backoff_base{500};
        std::chrono::milliseconds backoff_max{8'000};
    };

    ChatClient() = default;
    explicit ChatClient(Options options) : options_(std::move(options)) {}

    /// Retries transport failures, timeouts, 429 and 5xx with exponential backoff
    /// up to request.max_retries; throws TransportError / TimeoutError /
    /// MalformedResponseError carrying the attempt count.
    ChatResult complete(const ChatRequest& request) const;

private:
    Options options_;
};

/// Name of the environment variable holding the remote API key.
inline constexpr const char* kApiKeyEnv = "PROMPTOPT_API_KEY";

/// The evaluation model as seen by the reward engine.
class Evaluator {
public:
    virtual ~Evaluator() = default;

    /// Answer `example.input` under `prompt`. `example.gold` is visible only to test doubles.
    virtual std::string evaluate(const std::string& prompt, const LabeledExample& example) const = 0;

    /// Upper bound on concurrent evaluate() calls the caller should issue.
    virtual int parallelism() const { return 1; }
};

/// User message sent to the evaluator for one example.
std::string compose_evaluator_message(std::string_view prompt, std::string_view input);

class RemoteEvaluator final : public Evaluator {
public:
    /// `request_template` supplies endpoint, model and decoding settings; its user field is ignored.
    RemoteEvaluator(ChatClient client, ChatRequest request_template, int parallelism = 8)
        : client_(std::move(client)), template_(std::move(request_template)), parallelism_(parallelism) {}

    std::string evaluate(const std::string& prompt, const LabeledExample& example) const override;
    int parallelism() const override { return parallelism_; }

private:
    ChatClient client_;
    ChatRequest template_;
    int parallelism_;
};

// ---------------------------------------------------------------------------
// Mock evaluator

enum class MockBehavior { echo_gold, fixed_text, corrupt_gold };

struct MockAction {
    MockBehavior behavior = MockBehavior::fixed_text;
    std::string text;  // fixed_text only
};

struct MockRule {
    std::vector<std::string> prompt_contains;  // every substring must occur in the prompt
    std::vector<std::string> input_contains;   // every substring must occur in the input
    int min_shots = 0;
    MockAction action;
};

struct MockRulebook {
    std::vector<MockRule> rules;  // first match wins
    MockAction fallback;          // the single default behaviour
    std::vector<std::string> label_set;  // used by corrupt_gold
};

/// Number of rendered demonstration lines (`"input" -> label`) in a prompt.
int count_demonstrations(std::string_view prompt);

/// Deterministic stand-in answer. corrupt_gold yields the first other label,
/// gold + 1 for numeric golds, and the gold minus its first word otherwise.
std::string mock_evaluate(const MockRulebook& book, std::string_view prompt, std::string_view input,
                          std::string_view gold);

MockRulebook parse_rulebook(const nlohmann::json& rules, const nlohmann::json& fallback);

class MockEvaluator final : public Evaluator {
public:
    explicit MockEvaluator(MockRulebook book) : book_(std::move(book)) {}

    std::string evaluate(const std::string& prompt, const LabeledExample& example) const override {
        return mock_evaluate(book_, prompt, example.input, example.gold);
    }

    const MockRulebook& rulebook() const noexcept { return book_; }

private:
    MockRulebook book_;
};

}  // namespace promptopt
