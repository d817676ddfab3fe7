#include "echonle/llm_gateway.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace echonle {

namespace {

using nlohmann::json;

std::atomic<void (*)(const std::string&)> g_probe{nullptr};

// Process-wide in-flight limiter; each call enforces its own config bound.
std::mutex g_mu;
std::condition_variable g_cv;
int g_active = 0;

struct InFlightGuard {
    explicit InFlightGuard(int bound) {
        std::unique_lock lk(g_mu);
        g_cv.wait(lk, [&] { return g_active < std::max(1, bound); });
        ++g_active;
    }
    ~InFlightGuard() {
        {
            std::lock_guard lk(g_mu);
            --g_active;
        }
        g_cv.notify_one();
    }
};

// "http://host:port/prefix" → ("http://host:port", "/prefix")
std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
    std::string url = base_url;
    if (url.find("://") == std::string::npos) url = "http://" + url;
    size_t host_start = url.find("://") + 3;
    size_t slash = url.find('/', host_start);
    if (slash == std::string::npos) return {url, ""};
    std::string prefix = url.substr(slash);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {url.substr(0, slash), prefix};
}

std::string body_excerpt(const std::string& body) {
    std::string e = body.substr(0, 120);
    for (char& c : e)
        if (c == '\n' || c == '\r') c = ' ';
    return e;
}

void validate_messages(const std::vector<ChatMessage>& messages) {
    if (messages.empty()) throw std::invalid_argument("messages must be nonempty");
    for (const ChatMessage& m : messages)
        if (m.role != "system" && m.role != "user" && m.role != "assistant")
            throw std::invalid_argument("unknown message role '" + m.role + "'");
    if (messages.back().role != "user")
        throw std::invalid_argument("last message must have role user");
}

}  // namespace

void set_network_probe(void (*probe)(const std::string&)) { g_probe = probe; }

EndpointConfig endpoint_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::SchemaError, std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw Error(ErrorKind::SchemaError, "endpoint config must be an object");

    EndpointConfig c;
    for (auto& [key, value] : doc.items()) {
        auto str = [&, k = key]() {
            if (!value.is_string())
                throw Error(ErrorKind::SchemaError, "endpoint " + k + " must be a string");
            return value.get<std::string>();
        };
        auto num = [&, k = key]() {
            if (!value.is_number())
                throw Error(ErrorKind::SchemaError, "endpoint " + k + " must be a number");
            return value.get<double>();
        };
        auto boolean = [&, k = key]() {
            if (!value.is_boolean())
                throw Error(ErrorKind::SchemaError, "endpoint " + k + " must be a boolean");
            return value.get<bool>();
        };
        if (key == "base_url") c.base_url = str();
        else if (key == "model") c.model = str();
        else if (key == "api_key_env") c.api_key_env = str();
        else if (key == "timeout_s") c.timeout_s = num();
        else if (key == "max_retries") c.max_retries = static_cast<int>(num());
        else if (key == "temperature") c.temperature = num();
        else if (key == "max_tokens") c.max_tokens = static_cast<int>(num());
        else if (key == "backoff_ms") c.backoff_ms = static_cast<int>(num());
        else if (key == "max_in_flight") c.max_in_flight = static_cast<int>(num());
        else if (key == "mistral_inst_format") c.mistral_inst_format = boolean();
        else if (key == "online") c.online = boolean();
        else throw Error(ErrorKind::SchemaError, "unknown endpoint key " + key);
    }
    if (c.base_url.empty()) throw Error(ErrorKind::SchemaError, "endpoint base_url is required");
    if (!(c.timeout_s > 0)) throw Error(ErrorKind::SchemaError, "timeout_s must be > 0");
    if (c.max_retries < 0) throw Error(ErrorKind::SchemaError, "max_retries must be ≥ 0");
    return c;
}

std::string flatten_mistral(const std::vector<ChatMessage>& messages) {
    // <s>[INST] user [/INST] assistant</s><s>[INST] user [/INST]
    // system text is folded into the first user turn.
    std::string out;
    std::string pending;
    bool open = false;
    for (const ChatMessage& m : messages) {
        if (m.role == "system" || m.role == "user") {
            if (!pending.empty()) pending += " ";
            pending += m.content;
            if (m.role == "user") {
                out += "<s>[INST] " + pending + " [/INST]";
                pending.clear();
                open = true;
            }
        } else {  // assistant
            out += " " + m.content + "</s>";
            open = false;
        }
    }
    (void)open;
    return out;
}

std::string build_request_body(const EndpointConfig& config,
                               const std::vector<ChatMessage>& messages) {
    json body;
    body["model"] = config.model;
    json msgs = json::array();
    if (config.mistral_inst_format) {
        msgs.push_back({{"role", "user"}, {"content", flatten_mistral(messages)}});
    } else {
        for (const ChatMessage& m : messages)
            msgs.push_back({{"role", m.role}, {"content", m.content}});
    }
    body["messages"] = msgs;
    body["temperature"] = config.temperature.value_or(0.0);
    body["max_tokens"] = config.max_tokens;
    return body.dump();
}

ChatExchange complete_exchange(const EndpointConfig& config,
                               const std::vector<ChatMessage>& messages) {
    if (!config.online)
        throw Error(ErrorKind::NetworkDisabled,
                    "endpoint use requires the explicit online flag");
    validate_messages(messages);

    std::string api_key;
    if (!config.api_key_env.empty()) {
        const char* v = std::getenv(config.api_key_env.c_str());
        if (v == nullptr || *v == '\0')
            throw Error(ErrorKind::AuthMissing,
                        "environment variable " + config.api_key_env + " is not set");
        api_key = v;
    }

    auto [host, prefix] = split_base_url(config.base_url);
    std::string path = prefix + "/chat/completions";
    std::string body = build_request_body(config, messages);

    InFlightGuard guard(config.max_in_flight);
    if (auto probe = g_probe.load()) probe(host + path);

    auto start = std::chrono::steady_clock::now();
    int attempts = 0;
    std::string last_failure;
    bool transport_failure = false;

    for (int attempt = 0; attempt <= std::max(0, config.max_retries); ++attempt) {
        if (attempt > 0) {
            auto delay = std::chrono::milliseconds(
                static_cast<long>(config.backoff_ms) * (1L << (attempt - 1)));
            std::this_thread::sleep_for(delay);
        }
        ++attempts;

        httplib::Client cli(host);
        auto sec = static_cast<time_t>(config.timeout_s);
        auto usec = static_cast<long>((config.timeout_s - double(sec)) * 1e6);
        cli.set_connection_timeout(sec, usec);
        cli.set_read_timeout(sec, usec);
        cli.set_write_timeout(sec, usec);

        httplib::Headers headers;
        if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

        auto res = cli.Post(path, headers, body, "application/json");
        if (!res) {
            transport_failure = true;
            last_failure = "transport error " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || (res->status >= 500 && res->status < 600)) {
            transport_failure = false;
            last_failure = "status " + std::to_string(res->status) + ": " + body_excerpt(res->body);
            continue;
        }
        if (res->status != 200)
            throw Error(ErrorKind::HttpStatus, "status " + std::to_string(res->status) + ": " +
                                                   body_excerpt(res->body));

        std::string content;
        try {
            json doc = json::parse(res->body);
            content = doc.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception&) {
            throw Error(ErrorKind::MalformedResponse,
                        "cannot read choices[0].message.content from: " + body_excerpt(res->body));
        }
        if (content.empty())
            throw Error(ErrorKind::MalformedResponse, "endpoint returned an empty completion");

        ChatExchange ex;
        ex.messages = messages;
        ex.response_text = content;
        ex.attempts = attempts;
        ex.latency_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - start)
                            .count();
        return ex;
    }

    if (transport_failure)
        throw Error(ErrorKind::Timeout, "no response from " + host + path + " after " +
                                            std::to_string(attempts) + " attempts (" +
                                            last_failure + ")");
    throw Error(ErrorKind::HttpStatus,
                last_failure + " (after " + std::to_string(attempts) + " attempts)");
}

std::string complete(const EndpointConfig& config, const std::vector<ChatMessage>& messages) {
    return complete_exchange(config, messages).response_text;
}

std::string refine_explanation(const EndpointConfig& config, const RefinementPrompt& prompt) {
    EndpointConfig c = config;
    if (!c.temperature) c.temperature = 0.7;
    return complete(c, {{"user", prompt.instruction + "\n" + prompt.input}});
}

}  // namespace echonle
