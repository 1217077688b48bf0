#include "gooddrag/gscore.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

namespace gooddrag {

GscoreConfig load_gscore_config(const std::optional<std::filesystem::path>& file) {
    GscoreConfig cfg;
    if (file) {
        std::ifstream in(*file);
        if (!in) throw std::runtime_error("cannot open gscore config " + file->string());
        nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
        if (j.is_discarded())
            throw std::runtime_error("gscore config is not valid JSON: " + file->string());
        cfg.endpoint = j.value("GSCORE_ENDPOINT", "");
        cfg.api_key = j.value("GSCORE_API_KEY", "");
        cfg.model = j.value("GSCORE_MODEL", "");
        cfg.max_retries = j.value("max_retries", cfg.max_retries);
        cfg.backoff_initial_ms = j.value("backoff_initial_ms", cfg.backoff_initial_ms);
        cfg.concurrency = j.value("concurrency", cfg.concurrency);
    }
    if (const char* v = std::getenv("GSCORE_ENDPOINT")) cfg.endpoint = v;
    if (const char* v = std::getenv("GSCORE_API_KEY")) cfg.api_key = v;
    if (const char* v = std::getenv("GSCORE_MODEL")) cfg.model = v;
    return cfg;
}

double parse_score(const std::string& body) {
    size_t i = 0;
    while (i < body.size()) {
        bool digit = std::isdigit(static_cast<unsigned char>(body[i])) != 0;
        bool dot_digit = body[i] == '.' && i + 1 < body.size() &&
                         std::isdigit(static_cast<unsigned char>(body[i + 1]));
        if (!digit && !dot_digit) {
            ++i;
            continue;
        }
        size_t start = i;
        bool negative = start > 0 && body[start - 1] == '-';
        bool seen_dot = false;
        while (i < body.size()) {
            char c = body[i];
            if (std::isdigit(static_cast<unsigned char>(c))) {
                ++i;
            } else if (c == '.' && !seen_dot && i + 1 < body.size() &&
                       std::isdigit(static_cast<unsigned char>(body[i + 1]))) {
                seen_dot = true;
                ++i;
            } else {
                break;
            }
        }
        if (!negative) {
            double v = std::stod(body.substr(start, i - start));
            if (v >= 0.0 && v <= 10.0) return v;
        }
    }
    throw GscoreParseError("no number in [0,10] found in response: " + body);
}

HttpResponse MockTransport::post(const std::string&, const std::string&,
                                 const std::string& json_body) {
    std::lock_guard<std::mutex> lock(mu_);
    bodies_.push_back(json_body);
    if (next_ >= canned_.size())
        throw GscoreNetworkError("mock transport: no canned response left");
    return canned_[next_++];
}

GscoreClient::GscoreClient(GscoreConfig cfg, std::shared_ptr<Transport> transport)
    : cfg_(std::move(cfg)), transport_(std::move(transport)) {
    if (!transport_) throw std::invalid_argument("GscoreClient: null transport");
}

GscoreResult GscoreClient::score(const GscoreRequest& req) {
    if (req.prompt.empty()) throw std::invalid_argument("gscore request: empty prompt");
    if (req.original_png_base64.empty() || req.edited_png_base64.empty())
        throw std::invalid_argument("gscore request: missing image");

    nlohmann::json body{{"model", cfg_.model},
                        {"prompt", req.prompt},
                        {"images", {req.original_png_base64, req.edited_png_base64}}};
    std::string payload = body.dump();

    int backoff = cfg_.backoff_initial_ms;
    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
            backoff *= 2;
        }
        HttpResponse resp;
        try {
            resp = transport_->post(cfg_.endpoint, cfg_.api_key, payload);
        } catch (const GscoreNetworkError& e) {
            last_error = e.what();
            continue;  // transient
        }
        if (resp.status == 401 || resp.status == 403)
            throw GscoreAuthError("gscore endpoint rejected credentials (HTTP " +
                                  std::to_string(resp.status) + ")");
        if (resp.status == 408 || resp.status == 429 || resp.status >= 500) {
            last_error = "HTTP " + std::to_string(resp.status);
            continue;  // transient
        }
        if (resp.status < 200 || resp.status >= 300)
            throw GscoreNetworkError("gscore request failed with HTTP " +
                                     std::to_string(resp.status));
        GscoreResult result;
        result.score = parse_score(resp.body);  // throws GscoreParseError
        result.raw_response = resp.body;
        result.model_id = cfg_.model;
        return result;
    }
    throw GscoreNetworkError("gscore request failed after " +
                             std::to_string(cfg_.max_retries + 1) + " attempts: " + last_error);
}

std::vector<GscoreBatchEntry> GscoreClient::score_batch(const std::vector<GscoreRequest>& reqs) {
    std::vector<GscoreBatchEntry> out(reqs.size());
    auto worker = [&](size_t i) {
        try {
            out[i].result = score(reqs[i]);
            out[i].ok = true;
        } catch (const std::exception& e) {
            out[i].ok = false;
            out[i].error = e.what();
        }
    };
    int width = std::max(1, cfg_.concurrency);
    if (width == 1) {
        for (size_t i = 0; i < reqs.size(); ++i) worker(i);
        return out;
    }
    size_t next = 0;
    while (next < reqs.size()) {
        size_t batch = std::min(static_cast<size_t>(width), reqs.size() - next);
        std::vector<std::thread> threads;
        threads.reserve(batch);
        for (size_t j = 0; j < batch; ++j) threads.emplace_back(worker, next + j);
        for (std::thread& th : threads) th.join();
        next += batch;
    }
    return out;
}

}  // namespace gooddrag
