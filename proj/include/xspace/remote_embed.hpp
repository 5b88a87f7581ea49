#pragma once

// Embedding provider backed by an HTTP endpoint:
//   POST {texts: [...], kind} -> {vectors: [[...]], provider_id, dim}

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <future>
#include <string>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "xspace/error.hpp"
#include "xspace/pertinence.hpp"

namespace xspace {

struct RemoteEndpoint {
    std::string base;  // scheme://host[:port]
    std::string path;  // request path, "/" if absent

    static RemoteEndpoint parse(const std::string& url) {
        auto scheme = url.find("://");
        if (scheme == std::string::npos) throw InvalidArgument("endpoint needs a scheme: " + url);
        auto slash = url.find('/', scheme + 3);
        if (slash == std::string::npos) return {url, "/"};
        return {url.substr(0, slash), url.substr(slash)};
    }
};

struct RemoteEmbedOptions {
    std::chrono::milliseconds timeout{10000};
    std::size_t batch_size = 32;
    std::size_t max_in_flight = 4;
};

/// Sends one batch and validates the response. Vectors are re-normalized locally.
inline std::vector<EmbeddingVector> remote_embed(const std::vector<std::string>& texts, const std::string& endpoint,
                                                 EmbedKind kind = EmbedKind::answer,
                                                 std::chrono::milliseconds timeout = std::chrono::milliseconds(10000)) {
    if (texts.empty()) return {};
    auto ep = RemoteEndpoint::parse(endpoint);
    httplib::Client cli(ep.base);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    cli.set_connection_timeout(secs.count(), usecs.count());
    cli.set_read_timeout(secs.count(), usecs.count());
    cli.set_write_timeout(secs.count(), usecs.count());
    nlohmann::json body{{"texts", texts}, {"kind", to_string(kind)}};
    auto res = cli.Post(ep.path, body.dump(), "application/json");
    if (!res) throw ProviderError("remote embedding request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw ProviderError("remote embedding returned HTTP " + std::to_string(res->status));

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
        throw ProviderError(std::string("remote embedding response is not JSON: ") + e.what());
    }
    if (!j.contains("vectors") || !j["vectors"].is_array()) throw ProviderError("response lacks a vectors array");
    auto& vecs = j["vectors"];
    if (vecs.size() != texts.size())
        throw ProviderError("expected " + std::to_string(texts.size()) + " vectors, got " + std::to_string(vecs.size()));
    std::string pid = j.value("provider_id", std::string("remote"));
    std::size_t dim = j.contains("dim") ? j["dim"].get<std::size_t>() : vecs[0].size();

    std::vector<EmbeddingVector> out;
    for (auto& v : vecs) {
        if (!v.is_array() || v.size() != dim)
            throw ProviderError("dimension drift: expected " + std::to_string(dim) + ", got " + std::to_string(v.size()));
        EmbeddingVector e{v.get<std::vector<double>>(), pid};
        normalize(e);
        out.push_back(std::move(e));
    }
    return out;
}

/// Provider that splits requests into batches, keeps at most `max_in_flight` in
/// flight, and reassembles results in request order.
class RemoteProvider : public EmbeddingProvider {
public:
    RemoteProvider(std::string endpoint, std::string provider_id, RemoteEmbedOptions opts = {})
        : endpoint_(std::move(endpoint)), id_(std::move(provider_id)), opts_(opts) {
        if (opts_.batch_size == 0 || opts_.max_in_flight == 0) throw InvalidArgument("batch size and in-flight cap must be positive");
    }

    std::string id() const override { return id_; }

    std::vector<EmbeddingVector> embed_batch(const std::vector<EmbedRequest>& batch, EmbedKind kind) const override {
        std::vector<std::vector<std::string>> chunks;
        for (std::size_t i = 0; i < batch.size(); i += opts_.batch_size) {
            std::vector<std::string> c;
            for (std::size_t k = i; k < std::min(batch.size(), i + opts_.batch_size); ++k) {
                if (!has_word_char(batch[k].text)) throw InvalidArgument("embed: empty text");
                c.push_back(batch[k].context.empty() ? batch[k].text : batch[k].text + "\n" + batch[k].context);
            }
            chunks.push_back(std::move(c));
        }
        std::vector<EmbeddingVector> out;
        std::size_t dim = 0;
        for (std::size_t w = 0; w < chunks.size(); w += opts_.max_in_flight) {
            std::vector<std::future<std::vector<EmbeddingVector>>> wave;
            for (std::size_t k = w; k < std::min(chunks.size(), w + opts_.max_in_flight); ++k)
                wave.push_back(std::async(std::launch::async, [&, k] { return remote_embed(chunks[k], endpoint_, kind, opts_.timeout); }));
            for (auto& f : wave)
                for (auto& v : f.get()) {
                    if (dim == 0) dim = v.dim();
                    if (v.dim() != dim) throw ProviderError("dimension drift across batches");
                    v.provider_id = id_;
                    out.push_back(std::move(v));
                }
        }
        return out;
    }

private:
    std::string endpoint_;
    std::string id_;
    RemoteEmbedOptions opts_;
};

}  // namespace xspace
