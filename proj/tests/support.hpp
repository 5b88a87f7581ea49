#pragma once

// Shared helpers for the test binaries: fixture paths, in-process bundle builds
// and running the CLI as a subprocess.

#include <array>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "xspace.hpp"

namespace xtest {

inline std::string src(const std::string& rel) { return std::string(XSPACE_SOURCE_DIR) + "/" + rel; }

inline std::string cli() { return XSPACE_CLI; }

inline xspace::BuildConfig default_config() { return xspace::BuildConfig::load(src("data/config/default.json")); }

inline xspace::BuildInputs inputs(const std::string& theme, const std::string& profile = "yai4hu") {
    return {src("data/" + theme + "/manifest.json"), src("data/lexicon/fixture_lexicon.tsv"), src("data/freq/en_freq.tsv"), profile};
}

/// Built bundle text per (theme, profile), cached for the process.
inline const xspace::BuildResult& built(const std::string& theme, const std::string& profile = "yai4hu") {
    static std::map<std::string, std::unique_ptr<xspace::BuildResult>> cache;
    auto& slot = cache[theme + "/" + profile];
    if (!slot) slot = std::make_unique<xspace::BuildResult>(xspace::build_bundle(inputs(theme, profile), default_config()));
    return *slot;
}

inline xspace::QueryEngine engine(const std::string& theme, const std::string& profile = "yai4hu") {
    auto text = built(theme, profile).text();
    return xspace::QueryEngine(nlohmann::json::parse(text), xspace::hex64(xspace::fnv1a64(text)));
}

inline const xspace::Sentence* find_sentence(const xspace::Corpus& c, const std::string& id) {
    for (auto& d : c.documents)
        for (auto& p : d.paragraphs)
            for (auto& s : p.sentences)
                if (s.sentence_id == id) return &s;
    return nullptr;
}

/// Fresh directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
    static int counter = 0;
    auto p = std::filesystem::temp_directory_path() /
             ("xspace_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

struct Run {
    int code = -1;
    std::string out;  // stdout and stderr merged
};

inline std::string quote(const std::string& s) {
    std::string q = "'";
    for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return q + "'";
}

inline Run run(const std::string& args) {
    Run r;
    std::string cmd = quote(cli()) + " " + args + " 2>&1";
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    std::array<char, 4096> buf{};
    while (auto n = fread(buf.data(), 1, buf.size(), p)) r.out.append(buf.data(), n);
    int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

inline std::string build_args(const std::string& theme, const std::string& out, const std::string& profile = "yai4hu") {
    return "build --manifest " + quote(src("data/" + theme + "/manifest.json")) + " --lexicon " +
           quote(src("data/lexicon/fixture_lexicon.tsv")) + " --freq " + quote(src("data/freq/en_freq.tsv")) + " --profile " +
           profile + " --out " + quote(out);
}

}  // namespace xtest
