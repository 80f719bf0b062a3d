#include <httplib.h>

#include "mamr/gateway.hpp"

namespace mamr {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint URL needs a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

json http_post_json(const HttpEndpoint& endpoint, const json& body) {
    const auto [origin, path] = split_url(endpoint.url);
    httplib::Client client(origin);
    client.set_connection_timeout(endpoint.timeout);
    client.set_read_timeout(endpoint.timeout);
    client.set_write_timeout(endpoint.timeout);

    httplib::Headers headers;
    if (!endpoint.api_key.empty()) {
        const bool bearer = endpoint.auth_header == "Authorization";
        headers.emplace(endpoint.auth_header, bearer ? "Bearer " + endpoint.api_key : endpoint.api_key);
    }

    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) throw TransportError("HTTP request failed: " + httplib::to_string(res.error()));
    if (res->status >= 500)
        throw TransportError("HTTP " + std::to_string(res->status) + " from " + endpoint.url);
    if (res->status < 200 || res->status >= 300)
        throw BackendError("HTTP " + std::to_string(res->status) + " from " + endpoint.url, res->body);
    try {
        return json::parse(res->body);
    } catch (const json::exception&) {
        throw BackendError("malformed JSON response from " + endpoint.url, res->body);
    }
}

HttpChatBackend::HttpChatBackend(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {
    split_url(endpoint_.url);
}

json HttpChatBackend::request_body(const GenerationRequest& request) const {
    json body{{"model", endpoint_.model},
              {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
              {"temperature", request.params.temperature},
              {"max_tokens", request.params.max_tokens}};
    if (request.params.seed) body["seed"] = *request.params.seed;
    return body;
}

std::string HttpChatBackend::complete(const GenerationRequest& request) {
    const json reply = http_post_json(endpoint_, request_body(request));
    try {
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
        throw BackendError("response has no choices[0].message.content", reply.dump());
    }
}

HttpEmbeddingBackend::HttpEmbeddingBackend(HttpEndpoint endpoint, std::size_t dimension)
    : endpoint_(std::move(endpoint)), dimension_(dimension) {
    split_url(endpoint_.url);
    if (dimension_ == 0) throw ConfigError("embedding dimension must be positive");
}

std::vector<double> HttpEmbeddingBackend::embed(std::string_view text) {
    const json reply = http_post_json(endpoint_, json{{"model", endpoint_.model}, {"input", text}});
    try {
        return reply.at("data").at(0).at("embedding").get<std::vector<double>>();
    } catch (const json::exception&) {
        throw BackendError("response has no data[0].embedding", reply.dump());
    }
}

}  // namespace mamr
