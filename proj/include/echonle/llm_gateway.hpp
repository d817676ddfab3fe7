#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "echonle/error.hpp"
#include "echonle/narrative.hpp"

namespace echonle {

struct EndpointConfig {
    std::string base_url;     // e.g. "http://127.0.0.1:8080" or ".../v1"
    std::string model;
    std::string api_key_env;  // environment variable NAME; empty = no auth
    double timeout_s = 30.0;
    int max_retries = 2;
    // unset → role default: 0 for judging/completion, 0.7 for refinement
    std::optional<double> temperature;
    int max_tokens = 512;
    int backoff_ms = 250;       // first retry delay, doubled per attempt
    int max_in_flight = 4;
    bool mistral_inst_format = false;  // flatten messages into [INST] tags
    bool online = false;               // nothing is sent unless set
};

EndpointConfig endpoint_from_json(const std::string& text);

struct ChatMessage {
    std::string role;  // system | user | assistant
    std::string content;
};

struct ChatExchange {
    std::vector<ChatMessage> messages;
    std::string response_text;
    double latency_ms = 0;
    int attempts = 0;
};

// Deterministic request serialization (alphabetical keys).
std::string build_request_body(const EndpointConfig& config,
                               const std::vector<ChatMessage>& messages);

// Single prompt string in the Mistral instruction format:
// <s>[INST] sys + user [/INST] assistant</s>[INST] user [/INST]
std::string flatten_mistral(const std::vector<ChatMessage>& messages);

// POST {base_url}/chat/completions, Bearer key from the configured env var.
// Retries transport failures and 429/5xx with exponential backoff. Throws
// NetworkDisabled unless config.online, AuthMissing when the key env var is
// configured but unset, Timeout/HttpStatus/MalformedResponse per outcome.
ChatExchange complete_exchange(const EndpointConfig& config,
                               const std::vector<ChatMessage>& messages);

std::string complete(const EndpointConfig& config, const std::vector<ChatMessage>& messages);

// Sends instruction + "\n" + input as one user message at the refinement
// temperature default (0.7) when the config leaves temperature unset.
std::string refine_explanation(const EndpointConfig& config, const RefinementPrompt& prompt);

// Test/diagnostic hook: invoked with the URL right before any socket is
// opened. Used by the offline-guarantee tests to prove no traffic happens.
void set_network_probe(void (*probe)(const std::string& url));

}  // namespace echonle
