#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gooddrag {

struct GscoreConfig {
    std::string endpoint;
    std::string api_key;
    std::string model;
    int max_retries = 3;        // extra attempts after the first
    int backoff_initial_ms = 250;
    int concurrency = 1;
};

// File values (JSON with keys GSCORE_ENDPOINT / GSCORE_API_KEY / GSCORE_MODEL)
// are overridden by environment variables of the same names.
GscoreConfig load_gscore_config(const std::optional<std::filesystem::path>& file);

struct GscoreRequest {
    std::string original_png_base64;
    std::string edited_png_base64;
    std::string prompt;
};

struct GscoreResult {
    double score = 0.0;
    std::string raw_response;
    std::string model_id;
};

struct GscoreNetworkError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct GscoreAuthError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct GscoreParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// First maximal numeric token in [0, 10] wins; negative numbers are skipped;
// no in-range token is a parse error.
double parse_score(const std::string& body);

struct HttpResponse {
    int status = 0;
    std::string body;
};

class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResponse post(const std::string& endpoint, const std::string& api_key,
                              const std::string& json_body) = 0;
};

// Real HTTPS transport. Constructed lazily so tests never touch it.
std::shared_ptr<Transport> make_http_transport();

// Records every request and replays canned responses; performs no network
// activity at all.
class MockTransport final : public Transport {
public:
    void enqueue(HttpResponse r) {
        std::lock_guard<std::mutex> lock(mu_);
        canned_.push_back(std::move(r));
    }
    HttpResponse post(const std::string& endpoint, const std::string& api_key,
                      const std::string& json_body) override;
    int request_count() const {
        std::lock_guard<std::mutex> lock(mu_);
        return static_cast<int>(bodies_.size());
    }
    std::vector<std::string> request_bodies() const {
        std::lock_guard<std::mutex> lock(mu_);
        return bodies_;
    }

private:
    mutable std::mutex mu_;
    std::vector<HttpResponse> canned_;
    std::vector<std::string> bodies_;
    size_t next_ = 0;
};

struct GscoreBatchEntry {
    bool ok = false;
    GscoreResult result;
    std::string error;
};

class GscoreClient {
public:
    GscoreClient(GscoreConfig cfg, std::shared_ptr<Transport> transport);

    GscoreResult score(const GscoreRequest& req);
    // Order-preserving; one request per pair on success. Failures land in
    // the entry instead of aborting the batch.
    std::vector<GscoreBatchEntry> score_batch(const std::vector<GscoreRequest>& reqs);

private:
    GscoreConfig cfg_;
    std::shared_ptr<Transport> transport_;
};

}  // namespace gooddrag
