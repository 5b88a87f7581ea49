// xspace: build, query, serve and evaluate explanatory-space bundles.

#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "xspace.hpp"

#ifndef XSPACE_DEFAULT_CONFIG
#define XSPACE_DEFAULT_CONFIG "data/config/default.json"
#endif

namespace {

using namespace xspace;

constexpr int kExitFailure = 1;
constexpr int kExitUnknownUri = 2;
constexpr int kExitUsage = 64;

struct Options {
    std::string config = XSPACE_DEFAULT_CONFIG;
    bool json = false;
    BuildInputs build;
    std::string out;
    std::string bundle;
    std::string bind;
    std::string profile;
    std::string question;
    std::string uri;
    std::string quiz;
    std::string logs;
    std::size_t n = 0;
};

/// Optional `service` block of the config file: {bind, n, profile, cors_allow}.
ServiceConfig service_config(const Options& o) {
    ServiceConfig sc;
    if (std::filesystem::exists(o.config)) {
        auto j = nlohmann::json::parse(read_file(o.config));
        if (j.contains("service")) {
            auto& s = j.at("service");
            sc.bind = s.value("bind", sc.bind);
            sc.n = s.value("n", sc.n);
            sc.profile = s.value("profile", sc.profile);
            if (s.contains("cors_allow")) sc.cors_allow = s.at("cors_allow").get<std::vector<std::string>>();
        }
    }
    sc.apply_env();
    if (!o.bundle.empty()) sc.bundle = o.bundle;
    if (!o.bind.empty()) sc.bind = o.bind;
    if (!o.profile.empty()) sc.profile = o.profile;
    if (o.n) sc.n = o.n;
    if (sc.bundle.empty()) throw InvalidArgument("no bundle given (--bundle or XSPACE_BUNDLE)");
    return sc;
}

std::unique_ptr<ExplorerService> open_service(const Options& o) {
    auto sc = service_config(o);
    auto engine = QueryEngine::load(sc.bundle);
    engine.restrict_profile(sc.profile);
    return std::make_unique<ExplorerService>(std::move(engine), sc.n);
}

std::string underline(const AnnotatedText& t) {
    std::string out;
    std::size_t pos = 0;
    for (auto& l : t.links) {
        out += t.text.substr(pos, l.start - pos) + "[" + t.text.substr(l.start, l.end - l.start) + "](" + l.uri + ")";
        pos = l.end;
    }
    return out + t.text.substr(pos);
}

AnnotatedText annotated(const nlohmann::json& j, const std::string& text_key = "text") {
    AnnotatedText t{j.at(text_key).get<std::string>(), {}};
    for (auto& l : j.at("links")) t.links.push_back({l.at("start"), l.at("end"), l.at("uri")});
    return t;
}

int cmd_build(const Options& o) {
    auto cfg = BuildConfig::load(o.config);
    auto r = build_bundle(o.build, cfg);
    if (!o.out.empty()) write_file(o.out, r.text());
    if (o.json) {
        std::cout << nlohmann::json{{"stats", r.stats}, {"warnings", r.warnings}, {"out", o.out}}.dump(2) << "\n";
    } else {
        for (auto& [k, v] : r.stats.items()) std::cout << std::left << std::setw(24) << k << v.dump() << "\n";
        for (auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
        if (!o.out.empty()) std::cout << "wrote " << o.out << "\n";
    }
    return 0;
}

int cmd_ask(const Options& o) {
    if (!has_word_char(o.question)) {
        std::cerr << "usage: xspace ask --bundle FILE --question TEXT (question must not be empty)\n";
        return kExitUsage;
    }
    auto svc = open_service(o);
    nlohmann::json body{{"question", o.question}};
    auto r = svc->handle("POST", "/api/ask", body.dump());
    if (o.json) std::cout << r.body.dump(2) << "\n";
    if (r.status != 200) {
        if (!o.json) std::cerr << "error: " << r.body.value("error", "request failed") << "\n";
        return kExitFailure;
    }
    if (!o.json) {
        auto& answers = r.body.at("answers");
        if (answers.empty()) std::cout << "no answer above the pertinence threshold\n";
        int i = 1;
        for (auto& a : answers)
            std::cout << i++ << ". (" << std::fixed << std::setprecision(3) << a.at("score").get<double>() << ") "
                      << underline(annotated(a, "snippet")) << "\n   source: " << a.at("document_id").get<std::string>() << " / "
                      << a.at("paragraph_id").get<std::string>() << "\n";
    }
    return 0;
}

int cmd_overview(const Options& o) {
    auto svc = open_service(o);
    auto r = svc->handle("GET", "/api/overview/" + o.uri);
    if (r.status == 404) {
        auto near = svc->engine().nearest_labels(o.uri);
        if (o.json) std::cout << nlohmann::json{{"error", "unknown concept"}, {"uri", o.uri}, {"nearest", near}}.dump(2) << "\n";
        else {
            std::cerr << "unknown concept: " << o.uri << "\nnearest:";
            for (auto& n : near) std::cerr << " " << n;
            std::cerr << "\n";
        }
        return kExitUnknownUri;
    }
    if (o.json) std::cout << r.body.dump(2) << "\n";
    if (r.status != 200) {
        if (!o.json) std::cerr << "error: " << r.body.value("error", "request failed") << "\n";
        return kExitFailure;
    }
    if (!o.json) {
        auto& c = r.body;
        std::cout << c.at("label").get<std::string>() << "  <" << c.at("uri").get<std::string>() << ">\n";
        auto abs = annotated(c.at("abstract"));
        if (!abs.text.empty()) std::cout << "  " << underline(abs) << "\n";
        auto list = [&](const char* name, const nlohmann::json& v) {
            if (v.empty()) return;
            std::cout << "  " << name << ":";
            for (auto& x : v) std::cout << " " << x.get<std::string>();
            std::cout << "\n";
        };
        list("type", c.at("type_labels"));
        list("super-classes", c.at("super_classes"));
        list("sub-classes", c.at("sub_classes"));
        list("sub-types", c.at("sub_types"));
        for (auto& s : c.at("sections")) {
            std::cout << "\n  " << s.at("question").get<std::string>() << "\n";
            if (s.at("units").empty()) std::cout << "    (no answer)\n";
            for (auto& u : s.at("units"))
                std::cout << "    - " << underline(annotated(u, "snippet")) << "  (" << std::fixed << std::setprecision(3)
                          << u.at("score").get<double>() << ")\n";
        }
    }
    return 0;
}

int cmd_serve(const Options& o) {
    auto sc = service_config(o);
    auto engine = QueryEngine::load(sc.bundle);
    engine.restrict_profile(sc.profile);
    ExplorerService svc(std::move(engine), sc.n);
    auto [host, port] = parse_bind(sc.bind);
    httplib::Server server;
    mount(server, svc, sc.cors_allow);
    std::cerr << nlohmann::json{{"event", "listening"}, {"host", host}, {"port", port}, {"profile", svc.engine().profile().id},
                                {"bundle_hash", svc.engine().bundle_hash()}}
                     .dump()
              << "\n";
    if (!server.listen(host, port)) throw IoError(sc.bind, "cannot listen on");
    return 0;
}

int cmd_eval(const Options& o) {
    auto engine = QueryEngine::load(o.bundle);
    auto quiz = load_quiz(o.quiz);
    std::vector<ParticipantLog> logs;
    if (!o.logs.empty()) logs = parse_logs(read_file(o.logs));
    const auto& own = engine.profile();
    std::vector<NavModel> models;
    models.push_back(nav_model(engine, Profile{"ose", {}, false, false, true}));
    if (own.shows("why") && own.shows("how") && own.id != "hwn") {
        Profile hwn{"hwn", {}, true, false, false};
        for (auto& a : own.visible)
            if (a == "why" || a == "how") hwn.visible.push_back(a);
        models.push_back(nav_model(engine, hwn));
    }
    if (own.id != "ose") models.push_back(nav_model(engine, own));
    auto report = evaluate(quiz, models, logs);
    if (o.json) std::cout << report.json.dump(2) << "\n";
    else std::cout << report.table;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Build, query, serve and evaluate explanatory-space bundles"};
    app.require_subcommand(1);
    Options o;
    app.add_option("--config", o.config, "JSON config file")->capture_default_str();
    app.add_flag("--json", o.json, "machine-readable output");

    auto* build = app.add_subcommand("build", "run the pipeline and write a bundle");
    build->add_option("--manifest", o.build.manifest, "corpus manifest")->required();
    build->add_option("--lexicon", o.build.lexicon, "hypernym lexicon TSV")->required();
    build->add_option("--freq", o.build.freq, "reference word-frequency TSV")->required();
    build->add_option("--profile", o.build.profile, "ose | hwn | yai4hu")->capture_default_str();
    build->add_option("--out", o.out, "bundle output path")->required();

    auto* serve = app.add_subcommand("serve", "serve a bundle over HTTP");
    serve->add_option("--bundle", o.bundle, "bundle file");
    serve->add_option("--bind", o.bind, "host:port");
    serve->add_option("--profile", o.profile, "serve a narrower profile");
    serve->add_option("--n", o.n, "open-QA result count");

    auto* ask = app.add_subcommand("ask", "answer an open question");
    ask->add_option("--bundle", o.bundle, "bundle file");
    ask->add_option("--question", o.question, "question text")->required();
    ask->add_option("--profile", o.profile, "serve a narrower profile");
    ask->add_option("--n", o.n, "result count");

    auto* overview = app.add_subcommand("overview", "print a concept's overview card");
    overview->add_option("--bundle", o.bundle, "bundle file");
    overview->add_option("--uri", o.uri, "concept uri")->required();
    overview->add_option("--profile", o.profile, "serve a narrower profile");

    auto* eval = app.add_subcommand("eval", "navigation cost and usability metrics");
    eval->add_option("--bundle", o.bundle, "bundle file")->required();
    eval->add_option("--quiz", o.quiz, "quiz JSON")->required();
    eval->add_option("--logs", o.logs, "participant logs (JSON lines)");

    for (auto* sub : {build, serve, ask, overview, eval}) {
        sub->add_option("--config", o.config, "JSON config file");
        sub->add_flag("--json", o.json, "machine-readable output");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*build) return cmd_build(o);
        if (*serve) return cmd_serve(o);
        if (*ask) return cmd_ask(o);
        if (*overview) return cmd_overview(o);
        if (*eval) return cmd_eval(o);
    } catch (const StageError& e) {
        std::cerr << "error: stage " << e.what() << "\n";
        return kExitFailure;
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitFailure;
}
