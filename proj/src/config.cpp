#include "promptopt/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "promptopt/dataset.hpp"
#include "promptopt/errors.hpp"
#include "promptopt/policy.hpp"

namespace promptopt {
namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>> kKnownKeys = {
    {"run",
     {"iterations", "group_size", "batch_size", "selection_period", "n_test", "epsilon", "beta", "r_token",
      "r_structure", "learning_rate", "weight_decay", "seed", "advantage_std_floor", "train", "valid", "valid_cap",
      "out"}},
    {"task",
     {"kind", "labels", "metric", "r_format", "r_alignment", "base_prompt", "output_suffix", "strict_numeric",
      "description"}},
    {"evaluator",
     {"kind", "rules", "default", "endpoint", "model", "max_tokens", "temperature", "timeout_ms", "max_retries",
      "parallelism"}},
    {"policy",
     {"kind", "instructions", "template", "max_shots", "bank_size", "bank", "synthetic_examples", "endpoint", "model", "max_tokens",
      "temperature", "timeout_ms", "max_retries", "system_prompt", "user_template"}},
};

class Section {
public:
    Section(const pt::ptree& root, std::string name) : name_(std::move(name)) {
        if (auto child = root.get_child_optional(name_)) tree_ = *child;
    }

    std::optional<std::string> raw(const std::string& key) const {
        if (auto v = tree_.get_optional<std::string>(pt::ptree::path_type(key, '\0'))) return std::string(trim(*v));
        return std::nullopt;
    }

    /// Plain text, or a JSON string literal when the value starts with a quote.
    std::optional<std::string> text(const std::string& key) const {
        auto v = raw(key);
        if (!v || v->empty() || v->front() != '"') return v;
        const auto j = json(key);
        if (!j.is_string()) fail(key, "expected a quoted string");
        return j.get<std::string>();
    }

    nlohmann::json json(const std::string& key) const {
        auto v = raw(key);
        if (!v) return nullptr;
        try {
            return nlohmann::json::parse(*v);
        } catch (const nlohmann::json::parse_error& e) {
            fail(key, std::string("invalid JSON: ") + e.what());
        }
    }

    std::vector<std::string> strings(const std::string& key) const {
        const auto j = json(key);
        if (j.is_null()) return {};
        if (!j.is_array() || !std::all_of(j.begin(), j.end(), [](const auto& e) { return e.is_string(); }))
            fail(key, "expected a JSON list of strings");
        return j.get<std::vector<std::string>>();
    }

    template <class T>
    void number(const std::string& key, T& out) const {
        auto v = raw(key);
        if (!v) return;
        std::istringstream in(*v);
        T parsed{};
        in >> parsed;
        if (in.fail() || !in.eof()) fail(key, "expected a number, got '" + *v + "'");
        out = parsed;
    }

    void flag(const std::string& key, bool& out) const {
        auto v = raw(key);
        if (!v) return;
        const std::string s = casefold(*v);
        if (s == "true" || s == "1" || s == "yes") {
            out = true;
        } else if (s == "false" || s == "0" || s == "no") {
            out = false;
        } else {
            fail(key, "expected true or false");
        }
    }

    void check_keys() const {
        const auto& known = kKnownKeys.at(name_);
        for (const auto& [key, value] : tree_) {
            (void)value;
            if (!known.count(key)) fail(key, "unknown key");
        }
    }

    [[noreturn]] void fail(const std::string& key, const std::string& why) const {
        throw ConfigError("[" + name_ + "] " + key + ": " + why);
    }

private:
    std::string name_;
    pt::ptree tree_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

RemoteModelConfig read_remote(const Section& s, RemoteModelConfig out) {
    if (auto v = s.text("endpoint")) out.endpoint = *v;
    if (auto v = s.text("model")) out.model = *v;
    s.number("max_tokens", out.max_tokens);
    s.number("temperature", out.temperature);
    long long timeout_ms = out.timeout.count();
    s.number("timeout_ms", timeout_ms);
    out.timeout = std::chrono::milliseconds(timeout_ms);
    s.number("max_retries", out.max_retries);
    return out;
}

ChatRequest request_for(const RemoteModelConfig& m) {
    ChatRequest req;
    req.endpoint = m.endpoint;
    req.model_name = m.model;
    req.max_tokens = m.max_tokens;
    req.temperature = m.temperature;
    req.timeout = m.timeout;
    req.max_retries = m.max_retries;
    return req;
}

ChatClient client_from_env() {
    ChatClient::Options opts;
    if (const char* key = std::getenv(kApiKeyEnv)) opts.api_key = key;
    return ChatClient(std::move(opts));
}

std::vector<std::string> remote_problems(const std::string& section, const RemoteModelConfig& m) {
    std::vector<std::string> out;
    if (m.endpoint.empty()) out.push_back("[" + section + "] endpoint: required for kind = remote");
    if (m.model.empty()) out.push_back("[" + section + "] model: required for kind = remote");
    if (m.max_tokens < 1) out.push_back("[" + section + "] max_tokens: must be >= 1");
    if (m.timeout.count() < 1) out.push_back("[" + section + "] timeout_ms: must be >= 1");
    if (m.max_retries < 0) out.push_back("[" + section + "] max_retries: must be >= 0");
    return out;
}

}  // namespace

AppConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
    pt::ptree root;
    try {
        std::istringstream in{std::string(text)};
        pt::read_ini(in, root);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    for (const auto& [name, child] : root) {
        (void)child;
        if (!kKnownKeys.count(name)) throw ConfigError("config: unknown section [" + name + "]");
    }

    AppConfig cfg;
    const Section run(root, "run"), task(root, "task"), eval(root, "evaluator"), policy(root, "policy");
    for (const auto* s : {&run, &task, &eval, &policy}) s->check_keys();

    run.number("iterations", cfg.run.iterations);
    run.number("group_size", cfg.run.n);
    run.number("batch_size", cfg.run.k);
    run.number("selection_period", cfg.run.t);
    run.number("n_test", cfg.run.n_test);
    run.number("epsilon", cfg.run.epsilon);
    run.number("beta", cfg.run.beta);
    run.number("r_token", cfg.run.r_token);
    run.number("r_structure", cfg.run.r_structure);
    run.number("learning_rate", cfg.run.learning_rate);
    run.number("weight_decay", cfg.run.weight_decay);
    run.number("seed", cfg.run.seed);
    run.number("advantage_std_floor", cfg.run.advantage_std_floor);
    if (auto v = run.text("train")) cfg.train_path = resolve(base_dir, *v);
    if (auto v = run.text("valid")) cfg.valid_path = resolve(base_dir, *v);
    if (run.raw("valid_cap")) {
        long long cap = 0;
        run.number("valid_cap", cap);
        if (cap < 1) run.fail("valid_cap", "must be >= 1");
        cfg.valid_cap = static_cast<std::size_t>(cap);
    }
    if (auto v = run.text("out")) cfg.out_dir = resolve(base_dir, *v);

    const std::string kind = task.text("kind").value_or("classification");
    const auto task_kind = parse_task_kind(kind);
    if (!task_kind) task.fail("kind", "unknown task kind '" + kind + "'");
    cfg.spec.task_kind = *task_kind;
    cfg.spec.metric = metric_for(*task_kind);
    if (auto m = task.text("metric")) {
        const auto metric = parse_metric(*m);
        if (!metric) task.fail("metric", "unknown metric '" + *m + "'");
        cfg.spec.metric = *metric;
    }
    for (auto label : task.strings("labels")) cfg.spec.label_set.push_back(casefold(trim(label)));
    const bool free_text = *task_kind == TaskKind::summarization || *task_kind == TaskKind::simplification;
    cfg.spec.r_format = free_text ? 0.0 : 1.0;
    task.number("r_format", cfg.spec.r_format);
    task.number("r_alignment", cfg.spec.r_alignment);
    cfg.spec.base_prompt = task.text("base_prompt").value_or("");
    cfg.spec.output_suffix = task.text("output_suffix").value_or("");
    task.flag("strict_numeric", cfg.spec.strict_numeric);
    cfg.spec.description = task.text("description").value_or("");

    cfg.evaluator.kind = eval.text("kind").value_or("mock");
    cfg.evaluator.rules = eval.json("rules");
    cfg.evaluator.fallback = eval.json("default");
    cfg.evaluator.remote = read_remote(eval, {});
    eval.number("parallelism", cfg.evaluator.parallelism);

    cfg.policy.kind = policy.text("kind").value_or("slot");
    cfg.policy.instructions = policy.strings("instructions");
    if (auto v = policy.text("template")) cfg.policy.template_text = *v;
    policy.number("max_shots", cfg.policy.max_shots);
    policy.number("bank_size", cfg.policy.bank_size);
    if (auto v = policy.text("bank")) cfg.policy.bank_path = resolve(base_dir, *v);
    if (const auto synthetic = policy.json("synthetic_examples"); !synthetic.is_null()) {
        if (!synthetic.is_array()) policy.fail("synthetic_examples", "expected a JSON list of records");
        std::string lines;
        for (const auto& rec : synthetic) lines += rec.dump() + "\n";
        try {
            cfg.policy.synthetic_examples = parse_dataset(lines, cfg.spec, "[policy] synthetic_examples");
        } catch (const DataError& e) {
            throw ConfigError(e.what());
        }
    }
    RemoteModelConfig generator_defaults;
    generator_defaults.temperature = 1.0;
    generator_defaults.max_tokens = 512;
    cfg.policy.remote = read_remote(policy, generator_defaults);
    cfg.policy.system_prompt = policy.text("system_prompt").value_or(default_generator_system_prompt());
    cfg.policy.user_template = policy.text("user_template").value_or(default_generator_user_template());
    return cfg;
}

AppConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    AppConfig cfg = parse_config(buf.str(), std::filesystem::absolute(path).parent_path());
    cfg.source = path;
    return cfg;
}

std::vector<std::string> validate_app_config(const AppConfig& cfg) {
    std::vector<std::string> out;
    static const std::map<std::string, std::string> kRunKeys = {
        {"n", "group_size"}, {"k", "batch_size"}, {"t", "selection_period"}};
    for (auto& p : validate_run_config(cfg.run)) {
        const auto colon = p.find(':');
        if (auto it = kRunKeys.find(p.substr(0, colon)); it != kRunKeys.end()) p = it->second + p.substr(colon);
        out.push_back("[run] " + p);
    }
    for (auto& p : validate_task_spec(cfg.spec)) out.push_back("[task] " + p);
    if (cfg.train_path.empty()) out.emplace_back("[run] train: required");
    if (cfg.valid_path.empty()) out.emplace_back("[run] valid: required");

    if (cfg.evaluator.kind == "mock") {
        try {
            parse_rulebook(cfg.evaluator.rules, cfg.evaluator.fallback);
        } catch (const ConfigError& e) {
            out.push_back(std::string("[evaluator] ") + e.what());
        }
    } else if (cfg.evaluator.kind == "remote") {
        for (auto& p : remote_problems("evaluator", cfg.evaluator.remote)) out.push_back(p);
    } else {
        out.push_back("[evaluator] kind: expected mock or remote, got '" + cfg.evaluator.kind + "'");
    }
    if (cfg.evaluator.parallelism < 1) out.emplace_back("[evaluator] parallelism: must be >= 1");

    if (cfg.policy.kind == "slot") {
        if (cfg.policy.instructions.empty()) out.emplace_back("[policy] instructions: at least one is required");
        if (cfg.policy.max_shots < 0) out.emplace_back("[policy] max_shots: must be >= 0");
        if (cfg.policy.bank_size < 0) out.emplace_back("[policy] bank_size: must be >= 0");
        if (cfg.policy.max_shots > 0 && cfg.policy.bank_size + cfg.policy.synthetic_examples.size() < 1)
            out.emplace_back("[policy] bank_size: the bank is empty but max_shots > 0");
        if (static_cast<std::size_t>(std::max(cfg.policy.bank_size, 0)) + cfg.policy.synthetic_examples.size() >
            kMaxBankEntries)
            out.push_back("[policy] bank_size: bank_size plus synthetic_examples exceeds " +
                          std::to_string(kMaxBankEntries));
        if (cfg.policy.template_text.find("{instruction}") == std::string::npos)
            out.emplace_back("[policy] template: must contain the {instruction} hole");
    } else if (cfg.policy.kind == "remote") {
        for (auto& p : remote_problems("policy", cfg.policy.remote)) out.push_back(p);
    } else {
        out.push_back("[policy] kind: expected slot or remote, got '" + cfg.policy.kind + "'");
    }
    return out;
}

TaskData load_task_data(const AppConfig& cfg) {
    TaskData data;
    data.train = load_dataset(cfg.train_path, cfg.spec);
    data.valid = load_dataset(cfg.valid_path, cfg.spec);
    if (cfg.valid_cap && data.valid.size() > *cfg.valid_cap) data.valid.resize(*cfg.valid_cap);
    if (cfg.policy.kind != "slot" || cfg.policy.max_shots == 0) return data;

    const auto bank_size = static_cast<std::size_t>(cfg.policy.bank_size);
    if (bank_size == 0) {
        data.bank = cfg.policy.synthetic_examples;
        return data;
    }
    if (!cfg.policy.bank_path.empty()) {
        data.bank = load_dataset(cfg.policy.bank_path, cfg.spec);
        if (data.bank.size() > bank_size) data.bank.resize(bank_size);
    } else {
        if (data.train.size() <= bank_size)
            throw DataError(cfg.train_path.string() + ": needs more than bank_size = " +
                            std::to_string(bank_size) + " examples to hold out a demonstration bank");
        data.bank.assign(data.train.begin(), data.train.begin() + static_cast<std::ptrdiff_t>(bank_size));
        data.train.erase(data.train.begin(), data.train.begin() + static_cast<std::ptrdiff_t>(bank_size));
    }
    data.bank.insert(data.bank.end(), cfg.policy.synthetic_examples.begin(), cfg.policy.synthetic_examples.end());
    return data;
}

std::unique_ptr<Evaluator> make_evaluator(const AppConfig& cfg) {
    if (cfg.evaluator.kind == "mock") {
        MockRulebook book = parse_rulebook(cfg.evaluator.rules, cfg.evaluator.fallback);
        book.label_set = cfg.spec.label_set;
        return std::make_unique<MockEvaluator>(std::move(book));
    }
    if (cfg.evaluator.kind == "remote")
        return std::make_unique<RemoteEvaluator>(client_from_env(), request_for(cfg.evaluator.remote),
                                                 cfg.evaluator.parallelism);
    throw ConfigError("[evaluator] kind: expected mock or remote, got '" + cfg.evaluator.kind + "'");
}

std::unique_ptr<PromptGenerator> make_generator(const AppConfig& cfg, const std::vector<LabeledExample>& bank) {
    if (cfg.policy.kind == "slot") {
        return std::make_unique<SlotPromptGenerator>(
            build_slot_policy(cfg.policy.instructions, bank, cfg.policy.max_shots), cfg.policy.template_text,
            cfg.spec.output_suffix);
    }
    if (cfg.policy.kind == "remote") {
        ChatRequest req = request_for(cfg.policy.remote);
        req.system = cfg.policy.system_prompt;
        req.user = fill_generator_user_prompt(cfg.policy.user_template, cfg.spec);
        return std::make_unique<RemotePromptGenerator>(client_from_env(), std::move(req));
    }
    throw ConfigError("[policy] kind: expected slot or remote, got '" + cfg.policy.kind + "'");
}

}  // namespace promptopt
