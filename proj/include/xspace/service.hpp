#pragma once

// HTTP/JSON service over a loaded bundle. Routing lives in ExplorerService::handle
// so the CLI and tests can call it without a socket; serve() mounts it on httplib.

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "xspace/bundle.hpp"
#include "xspace/error.hpp"

namespace xspace {

struct ServiceConfig {
    std::string bind = "127.0.0.1:8080";
    std::string bundle;
    std::string profile;  // empty: the bundle's own profile
    std::size_t n = 0;    // 0: the bundle's default
    std::vector<std::string> cors_allow{"*"};

    /// XSPACE_BIND and XSPACE_BUNDLE override the corresponding fields.
    void apply_env() {
        if (const char* b = std::getenv("XSPACE_BIND")) bind = b;
        if (const char* b = std::getenv("XSPACE_BUNDLE")) bundle = b;
    }
};

struct Response {
    int status = 200;
    nlohmann::json body;
};

class ExplorerService {
public:
    explicit ExplorerService(QueryEngine engine, std::size_t n = 0) : engine_(std::move(engine)), n_(n ? n : engine_.default_n()) {}

    const QueryEngine& engine() const { return engine_; }

    /// Dispatches one request. Never throws; errors become structured JSON.
    Response handle(const std::string& method, const std::string& path, const std::string& body = "") const {
        ++requests_;
        Response r;
        try {
            r = route(method, path, body);
        } catch (const InvalidArgument& e) {
            r = error(400, e.what());
        } catch (const std::exception& e) {
            r = error(500, e.what());
        }
        r.body["schema_version"] = kSchemaVersion;
        return r;
    }

    std::size_t requests() const { return requests_.load(); }

private:
    static Response error(int status, const std::string& what, const std::string& uri = "") {
        nlohmann::json b{{"error", what}};
        if (!uri.empty()) b["uri"] = uri;
        return {status, b};
    }

    static std::string decode(const std::string& s) { return httplib::detail::decode_url(s, false); }

    Response route(const std::string& method, const std::string& raw_path, const std::string& body) const {
        std::string path = raw_path.substr(0, raw_path.find('?'));
        const auto& profile = engine_.profile();
        auto starts = [&](const std::string& p) { return path.rfind(p, 0) == 0; };

        if (path == "/api/ask") {
            if (method != "POST") return error(405, "method not allowed");
            if (!profile.open_qa) return error(403, "open question answering is disabled for profile " + profile.id);
            nlohmann::json req;
            try {
                req = nlohmann::json::parse(body);
            } catch (const nlohmann::json::parse_error&) {
                return error(400, "request body is not JSON");
            }
            if (!req.is_object() || !req.contains("question") || !req["question"].is_string())
                return error(400, "request body needs a string field question");
            auto q = req["question"].get<std::string>();
            if (!has_word_char(q)) return error(400, "empty question");
            std::size_t n = n_;
            if (req.contains("n")) {
                if (!req["n"].is_number_unsigned() || req["n"].get<std::size_t>() == 0) return error(400, "n must be a positive integer");
                n = req["n"].get<std::size_t>();
            }
            return {200, engine_.ask(q, n)};
        }
        if (method != "GET") return error(405, "method not allowed");

        if (path == "/api/health") return {200, engine_.health()};
        if (path == "/api/entry") return {200, engine_.entry_json()};
        if (starts("/api/overview/")) {
            auto uri = decode(path.substr(14));
            if (!profile.overviews) return error(403, "overviews are disabled for profile " + profile.id, uri);
            if (auto card = engine_.overview(uri)) return {200, *card};
            return error(404, "unknown concept", uri);
        }
        if (starts("/api/summary/")) {
            const std::string suffix = "/children";
            if (path.size() <= 13 + suffix.size() || path.compare(path.size() - suffix.size(), suffix.size(), suffix) != 0)
                return error(404, "not found");
            auto id = decode(path.substr(13, path.size() - 13 - suffix.size()));
            if (!profile.overviews) return error(403, "overviews are disabled for profile " + profile.id);
            if (auto c = engine_.summary_children(id)) return {200, *c};
            return error(404, "unknown summary node", id);
        }
        if (starts("/api/taxonomy/")) {
            auto uri = decode(path.substr(14));
            if (!profile.overviews) return error(403, "taxonomy is disabled for profile " + profile.id, uri);
            if (auto t = engine_.taxonomy(uri)) return {200, *t};
            return error(404, "unknown concept", uri);
        }
        if (path == "/api/docs" || starts("/api/docs/")) {
            if (!profile.documents) return error(403, "raw documents are served only under profile ose");
            if (path == "/api/docs") return {200, {{"documents", engine_.document_list()}}};
            auto id = decode(path.substr(10));
            if (auto d = engine_.document(id)) return {200, *d};
            return error(404, "unknown document", id);
        }
        return error(404, "not found");
    }

    QueryEngine engine_;
    std::size_t n_;
    mutable std::atomic<std::size_t> requests_{0};
};

/// Splits "host:port"; a bare port binds to 127.0.0.1.
inline std::pair<std::string, int> parse_bind(const std::string& bind) {
    auto colon = bind.rfind(':');
    std::string host = colon == std::string::npos ? "127.0.0.1" : bind.substr(0, colon);
    std::string port = colon == std::string::npos ? bind : bind.substr(colon + 1);
    try {
        std::size_t used = 0;
        int p = std::stoi(port, &used);
        if (used != port.size() || p < 0 || p > 65535) throw std::out_of_range("port");
        return {host.empty() ? "127.0.0.1" : host, p};
    } catch (const std::exception&) {
        throw InvalidArgument("bad bind address " + bind);
    }
}

/// Registers the API on an httplib server: CORS headers and one JSON log line per request.
inline void mount(httplib::Server& server, const ExplorerService& service, std::vector<std::string> cors_allow,
                  std::ostream* log = &std::cerr) {
    auto log_mutex = std::make_shared<std::mutex>();
    auto reply = [&service, cors_allow, log, log_mutex](const httplib::Request& req, httplib::Response& res) {
        auto t0 = std::chrono::steady_clock::now();
        auto r = service.handle(req.method, req.path, req.body);
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
        auto origin = req.get_header_value("Origin");
        bool any = std::find(cors_allow.begin(), cors_allow.end(), "*") != cors_allow.end();
        if (any) res.set_header("Access-Control-Allow-Origin", "*");
        else if (std::find(cors_allow.begin(), cors_allow.end(), origin) != cors_allow.end()) {
            res.set_header("Access-Control-Allow-Origin", origin);
            res.set_header("Vary", "Origin");
        }
        if (log) {
            auto us = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - t0).count();
            nlohmann::json line{{"method", req.method}, {"path", req.path}, {"status", r.status}, {"micros", us}};
            std::lock_guard lock(*log_mutex);
            *log << line.dump() << "\n";
        }
    };
    server.Get(R"(/api/.*)", reply);
    server.Post(R"(/api/.*)", reply);
    server.Options(R"(/api/.*)", [cors_allow](const httplib::Request&, httplib::Response& res) {
        res.status = 204;
        if (!cors_allow.empty()) res.set_header("Access-Control-Allow-Origin", cors_allow.front());
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
    });
}

}  // namespace xspace
