#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "gooddrag/gscore.hpp"

namespace gooddrag {

namespace {

// Splits "https://host[:port]/path" into origin and path.
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    size_t scheme = endpoint.find("://");
    if (scheme == std::string::npos)
        throw GscoreNetworkError("gscore endpoint must include a scheme: " + endpoint);
    size_t path_start = endpoint.find('/', scheme + 3);
    if (path_start == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

class HttplibTransport final : public Transport {
public:
    HttpResponse post(const std::string& endpoint, const std::string& api_key,
                      const std::string& json_body) override {
        auto [origin, path] = split_endpoint(endpoint);
        httplib::Client client(origin);
        client.set_connection_timeout(10);
        client.set_read_timeout(60);
        httplib::Headers headers;
        if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
        auto res = client.Post(path, headers, json_body, "application/json");
        if (!res)
            throw GscoreNetworkError("gscore connection failed: " +
                                     httplib::to_string(res.error()));
        return {res->status, res->body};
    }
};

}  // namespace

std::shared_ptr<Transport> make_http_transport() {
    return std::make_shared<HttplibTransport>();
}

}  // namespace gooddrag
