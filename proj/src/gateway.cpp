#include "promptopt/gateway.hpp"

#include <algorithm>
#include <regex>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "promptopt/errors.hpp"
#include "promptopt/metrics.hpp"

namespace promptopt {
namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_endpoint(const std::string& endpoint) {
    static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(endpoint, m, re)) throw ConfigError("evaluator endpoint is not an http(s) URL: " + endpoint);
    std::string path = m[2].matched ? m[2].str() : "";
    while (!path.empty() && path.back() == '/') path.pop_back();
    if (!path.ends_with("/chat/completions")) {
        if (!path.ends_with("/v1")) path += "/v1";
        path += "/chat/completions";
    }
    return {m[1].str(), path};
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

std::string corrupt(const MockRulebook& book, std::string_view gold) {
    const std::string folded = casefold(trim(gold));
    if (!book.label_set.empty()) {
        for (const auto& label : book.label_set)
            if (casefold(label) != folded) return label;
    }
    if (is_numeric_literal(gold)) {
        // Integer golds stay integers; anything else goes through long double.
        const std::string t(trim(gold));
        if (t.find('.') == std::string::npos) return std::to_string(std::stoll(t) + 1);
        std::ostringstream os;
        os << std::stold(t) + 1;
        return os.str();
    }
    const std::string_view t = trim(gold);
    const auto space = t.find_first_of(" \t\n");
    return space == std::string_view::npos ? std::string() : std::string(trim(t.substr(space)));
}

MockAction parse_action(const nlohmann::json& j) {
    MockAction a;
    const std::string name = j.at("behavior").get<std::string>();
    if (name == "echo_gold") {
        a.behavior = MockBehavior::echo_gold;
    } else if (name == "corrupt_gold") {
        a.behavior = MockBehavior::corrupt_gold;
    } else if (name == "fixed_text") {
        a.behavior = MockBehavior::fixed_text;
        a.text = j.at("text").get<std::string>();
    } else {
        throw ConfigError("mock rulebook: unknown behavior '" + name + "'");
    }
    return a;
}

std::vector<std::string> string_list(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) return {};
    const auto& v = j.at(key);
    if (v.is_string()) return {v.get<std::string>()};
    return v.get<std::vector<std::string>>();
}

}  // namespace

nlohmann::json chat_request_body(const ChatRequest& request) {
    nlohmann::json messages = nlohmann::json::array();
    if (request.system) messages.push_back({{"role", "system"}, {"content", *request.system}});
    messages.push_back({{"role", "user"}, {"content", request.user}});
    nlohmann::json body = {
        {"model", request.model_name},
        {"messages", std::move(messages)},
        {"max_tokens", request.max_tokens},
        {"temperature", request.temperature},
        {"stream", false},
    };
    if (request.seed) body["seed"] = *request.seed;
    return body;
}

std::string parse_chat_response(std::string_view body, int attempts) {
    const auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded()) throw MalformedResponseError("chat response is not JSON", attempts);
    try {
        const auto& content = j.at("choices").at(0).at("message").at("content");
        if (content.is_null()) return {};
        return content.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw MalformedResponseError(std::string("chat response lacks choices[0].message.content: ") + e.what(),
                                     attempts);
    }
}

ChatResult ChatClient::complete(const ChatRequest& request) const {
    if (request.max_tokens < 1) throw ConfigError("chat request: max_tokens must be >= 1");
    if (request.temperature < 0) throw ConfigError("chat request: temperature must be >= 0");
    if (request.max_retries < 0) throw ConfigError("chat request: max_retries must be >= 0");

    const SplitUrl url = split_endpoint(request.endpoint);
    const std::string body = chat_request_body(request).dump();
    httplib::Headers headers;
    if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);

    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(request.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(request.timeout - secs);

    const int max_attempts = request.max_retries + 1;
    std::string last_failure;
    bool last_was_timeout = false;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        if (attempt > 1) {
            auto delay = options_.backoff_base * (1LL << std::min(attempt - 2, 20));
            std::this_thread::sleep_for(std::min<std::chrono::milliseconds>(delay, options_.backoff_max));
        }
        httplib::Client cli(url.origin);
        cli.set_connection_timeout(secs.count(), usecs.count());
        cli.set_read_timeout(secs.count(), usecs.count());
        cli.set_write_timeout(secs.count(), usecs.count());

        const auto started = std::chrono::steady_clock::now();
        auto res = cli.Post(url.path, headers, body, "application/json");
        if (!res) {
            const auto err = res.error();
            const auto elapsed = std::chrono::steady_clock::now() - started;
            last_was_timeout = err == httplib::Error::ConnectionTimeout ||
                               (err == httplib::Error::Read && elapsed >= request.timeout);
            last_failure = "request to " + request.endpoint + " failed: " + httplib::to_string(err);
            continue;
        }
        if (res->status == 200) {
            return {parse_chat_response(res->body, attempt), attempt};
        }
        last_was_timeout = false;
        last_failure = "HTTP " + std::to_string(res->status) + " from " + request.endpoint;
        if (!retryable_status(res->status)) throw TransportError(last_failure, attempt);
    }
    if (last_was_timeout) throw TimeoutError(last_failure, max_attempts);
    throw TransportError(last_failure, max_attempts);
}

std::string compose_evaluator_message(std::string_view prompt, std::string_view input) {
    std::string out(prompt);
    out.append("\n\nInput: ").append(input);
    return out;
}

std::string RemoteEvaluator::evaluate(const std::string& prompt, const LabeledExample& example) const {
    ChatRequest req = template_;
    req.user = compose_evaluator_message(prompt, example.input);
    return client_.complete(req).text;
}

int count_demonstrations(std::string_view prompt) {
    int n = 0;
    std::size_t start = 0;
    while (start <= prompt.size()) {
        auto end = prompt.find('\n', start);
        if (end == std::string_view::npos) end = prompt.size();
        const std::string_view line = trim(prompt.substr(start, end - start));
        const auto arrow = line.rfind("\" -> ");
        if (line.size() > 6 && line.front() == '"' && arrow != std::string_view::npos && arrow > 1 &&
            arrow + 5 < line.size())
            ++n;
        start = end + 1;
    }
    return n;
}

std::string mock_evaluate(const MockRulebook& book, std::string_view prompt, std::string_view input,
                          std::string_view gold) {
    const MockAction* action = &book.fallback;
    for (const auto& rule : book.rules) {
        auto all_in = [](const std::vector<std::string>& needles, std::string_view hay) {
            return std::all_of(needles.begin(), needles.end(),
                               [&](const std::string& s) { return hay.find(s) != std::string_view::npos; });
        };
        if (!all_in(rule.prompt_contains, prompt) || !all_in(rule.input_contains, input)) continue;
        if (rule.min_shots > 0 && count_demonstrations(prompt) < rule.min_shots) continue;
        action = &rule.action;
        break;
    }
    switch (action->behavior) {
        case MockBehavior::echo_gold: return std::string(gold);
        case MockBehavior::corrupt_gold: return corrupt(book, gold);
        case MockBehavior::fixed_text: return action->text;
    }
    return action->text;
}

MockRulebook parse_rulebook(const nlohmann::json& rules, const nlohmann::json& fallback) {
    MockRulebook book;
    try {
        if (!rules.is_null()) {
            for (const auto& r : rules) {
                MockRule rule;
                rule.prompt_contains = string_list(r, "prompt_contains");
                rule.input_contains = string_list(r, "input_contains");
                rule.min_shots = r.value("min_shots", 0);
                rule.action = parse_action(r);
                book.rules.push_back(std::move(rule));
            }
        }
        if (fallback.is_null()) throw ConfigError("mock rulebook: a default behavior is required");
        book.fallback = parse_action(fallback);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("mock rulebook: ") + e.what());
    }
    return book;
}

}  // namespace promptopt
