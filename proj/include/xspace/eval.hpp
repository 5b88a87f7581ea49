#pragma once

// Navigation cost of quiz answers (minimum number of user actions from the entry
// page) and the evaluation report over quizzes and participant logs.

#include <array>
#include <cstddef>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "xspace/bundle.hpp"
#include "xspace/error.hpp"
#include "xspace/stats.hpp"

namespace xspace {

/// Where the answer to a quiz question can be found. Several alternatives may be
/// given; the cheapest one counts.
struct AnswerLocation {
    bool entry = false;
    bool unreachable = false;
    std::optional<std::string> node;       // concept whose overview holds the answer
    std::optional<std::string> archetype;  // section of that overview
    bool expand = false;                   // answer sits below a summary that must be expanded
    std::optional<std::string> snippet;    // text the answer unit contains
    bool open_qa = false;                  // one open question retrieves the answer
    std::optional<std::string> document;   // raw second-level document

    static AnswerLocation from_json(const nlohmann::json& j) {
        AnswerLocation a;
        if (j.is_string()) {
            auto s = j.get<std::string>();
            if (s == "entry") a.entry = true;
            else if (s == "unreachable") a.unreachable = true;
            else throw ValidationError("answer_location must be \"entry\", \"unreachable\" or an object, got \"" + s + "\"");
            return a;
        }
        if (!j.is_object()) throw ValidationError("answer_location must be a string or an object");
        for (auto& [k, _] : j.items())
            if (k != "node" && k != "archetype" && k != "expand" && k != "snippet" && k != "open_qa" && k != "document")
                throw ValidationError("unknown answer_location field " + k);
        if (j.contains("node")) a.node = j.at("node").get<std::string>();
        if (j.contains("archetype")) a.archetype = j.at("archetype").get<std::string>();
        if (j.contains("snippet")) a.snippet = j.at("snippet").get<std::string>();
        if (j.contains("document")) a.document = j.at("document").get<std::string>();
        a.expand = j.value("expand", false);
        a.open_qa = j.value("open_qa", false);
        if (!a.node && !a.open_qa && !a.document) throw ValidationError("answer_location names no node, open_qa or document");
        if (a.archetype && !a.node) throw ValidationError("answer_location archetype without node");
        return a;
    }
};

struct QuizItem {
    std::string question;
    std::vector<std::string> types;
    AnswerLocation location;
    std::vector<std::string> choices;
    std::string correct;
};

namespace detail {

/// 1-based line where each top-level array element of a JSON text starts.
inline std::vector<std::size_t> element_lines(const std::string& text) {
    std::vector<std::size_t> out;
    std::size_t line = 1;
    int depth = 0;
    bool in_string = false, escape = false, expect = false;
    for (char c : text) {
        if (c == '\n') ++line;
        if (in_string) {
            if (escape) escape = false;
            else if (c == '\\') escape = true;
            else if (c == '"') in_string = false;
            continue;
        }
        bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r';
        if (depth == 1 && expect && !space && c != ']') {
            out.push_back(line);
            expect = false;
        }
        if (c == '"') in_string = true;
        else if (c == '[' || c == '{') {
            ++depth;
            if (depth == 1) expect = true;
        } else if (c == ']' || c == '}') --depth;
        else if (c == ',' && depth == 1) expect = true;
    }
    return out;
}

inline std::size_t line_of_offset(const std::string& text, std::size_t offset) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < std::min(offset, text.size()); ++i) line += text[i] == '\n' ? 1 : 0;
    return line;
}

}  // namespace detail

/// Quiz file: JSON list of {question, types[], answer_location, choices[], correct}.
inline std::vector<QuizItem> parse_quiz(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("quiz is not valid JSON: ") + e.what(), detail::line_of_offset(text, e.byte));
    }
    if (!j.is_array()) throw ParseError("quiz must be a JSON list", 1);
    auto lines = detail::element_lines(text);
    std::vector<QuizItem> items;
    for (std::size_t i = 0; i < j.size(); ++i) {
        std::size_t line = i < lines.size() ? lines[i] : 1;
        try {
            auto& x = j[i];
            QuizItem q;
            q.question = x.at("question").get<std::string>();
            q.types = x.at("types").get<std::vector<std::string>>();
            q.location = AnswerLocation::from_json(x.at("answer_location"));
            q.choices = x.at("choices").get<std::vector<std::string>>();
            q.correct = x.at("correct").get<std::string>();
            if (std::find(q.choices.begin(), q.choices.end(), q.correct) == q.choices.end())
                throw ValidationError("correct answer is not among the choices");
            items.push_back(std::move(q));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("quiz item " + std::to_string(i) + ": " + e.what(), line);
        } catch (const ValidationError& e) {
            throw ParseError("quiz item " + std::to_string(i) + ": " + e.what(), line);
        }
    }
    return items;
}

inline std::vector<QuizItem> load_quiz(const std::string& path) { return parse_quiz(read_file(path)); }

// ---------------------------------------------------------------- action graph

/// What a user can do under one profile: follow entry links, move between overviews
/// (annotation links and taxonomy links), ask one open question, open a document.
struct NavModel {
    std::string profile;
    bool overviews = true;
    bool open_qa = false;
    bool documents_on_entry = false;
    std::set<std::string> entry_links;
    std::map<std::string, std::set<std::string>> moves;
    std::map<std::string, std::map<std::string, std::vector<std::string>>> sections;  // uri -> archetype -> snippets
    std::set<std::string> documents;
    std::function<bool(const QuizItem&)> qa_retrieves;  // empty: a matching question always succeeds

    /// Overview distances from the entry page (entry links cost one step).
    std::map<std::string, int> distances() const {
        std::map<std::string, int> dist;
        if (!overviews) return dist;
        std::queue<std::string> q;
        for (auto& u : entry_links)
            if (dist.emplace(u, 1).second) q.push(u);
        while (!q.empty()) {
            auto u = q.front();
            q.pop();
            auto it = moves.find(u);
            if (it == moves.end()) continue;
            for (auto& v : it->second)
                if (dist.emplace(v, dist[u] + 1).second) q.push(v);
        }
        return dist;
    }
};

/// Action graph of a bundle served under `profile` (a restriction of the bundle's).
inline NavModel nav_model(const QueryEngine& engine, const Profile& profile) {
    NavModel m;
    m.profile = profile.id;
    m.overviews = profile.overviews;
    m.open_qa = profile.open_qa && engine.profile().open_qa;
    m.documents_on_entry = profile.documents;
    if (m.overviews) m.entry_links = engine.entry().linked_uris();
    for (auto& e : engine.edges()) {
        // Only links printed in a section the profile shows can be followed.
        auto slash = e.via.find('/');
        if (e.via == "abstract" || (slash != std::string::npos && profile.shows(e.via.substr(0, slash)))) m.moves[e.from].insert(e.to);
    }
    for (auto& [u, c] : engine.cards()) {
        auto& mv = m.moves[u];
        for (auto* list : {&c.super_classes, &c.sub_classes, &c.sub_types}) mv.insert(list->begin(), list->end());
        if (auto p = engine.forest().parent(u)) mv.insert(*p);
        for (auto& [arch, s] : c.sections) {
            if (!profile.shows(arch) || s.units.empty()) continue;
            auto& v = m.sections[u][arch];
            for (auto& unit : s.units) v.push_back(unit.snippet);
        }
    }
    for (auto& d : engine.document_list()) m.documents.insert(d.at("id").get<std::string>());
    if (m.open_qa)
        m.qa_retrieves = [&engine](const QuizItem& item) {
            auto answers = engine.ask_raw(item.question, engine.default_n());
            if (!item.location.snippet) return !answers.empty();
            for (auto& a : answers)
                if (a.snippet.find(*item.location.snippet) != std::string::npos) return true;
            return false;
        };
    return m;
}

/// Minimum number of actions to reach the answer; nullopt when no action sequence does.
inline std::optional<int> min_steps(const NavModel& m, const QuizItem& item) {
    const auto& loc = item.location;
    if (loc.entry) return 0;
    if (loc.unreachable) return std::nullopt;
    std::optional<int> best;
    auto offer = [&](int s) {
        if (!best || s < *best) best = s;
    };
    if (loc.node && m.overviews) {
        bool present = true;
        if (loc.archetype) {
            auto n = m.sections.find(*loc.node);
            present = n != m.sections.end() && n->second.count(*loc.archetype);
            if (present && loc.snippet) {
                const auto& units = n->second.at(*loc.archetype);
                present = std::any_of(units.begin(), units.end(),
                                      [&](const std::string& u) { return u.find(*loc.snippet) != std::string::npos; });
            }
        }
        if (present) {
            auto dist = m.distances();
            if (auto it = dist.find(*loc.node); it != dist.end()) offer(it->second + (loc.expand ? 1 : 0));
        }
    }
    if (loc.open_qa && m.open_qa && (!m.qa_retrieves || m.qa_retrieves(item))) offer(1);
    if (loc.document && m.documents_on_entry && m.documents.count(*loc.document)) offer(1);
    return best;
}

/// Report convention: unreachable is -1.
inline int steps_or_minus_one(const std::optional<int>& s) { return s ? *s : -1; }

// ---------------------------------------------------------------- participant logs

struct ParticipantLog {
    std::string participant;
    std::string tool;
    std::vector<std::string> answers;
    double elapsed_seconds = 0;
    std::optional<std::array<int, 6>> ncs;
    std::optional<double> satisfaction;
};

/// JSON lines, one participant per line.
inline std::vector<ParticipantLog> parse_logs(const std::string& text) {
    std::vector<ParticipantLog> out;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            ParticipantLog p;
            p.participant = j.at("participant").get<std::string>();
            p.tool = j.at("tool").get<std::string>();
            p.answers = j.at("answers").get<std::vector<std::string>>();
            p.elapsed_seconds = j.value("elapsed_seconds", 0.0);
            if (j.contains("ncs") && !j.at("ncs").is_null()) {
                auto v = j.at("ncs").get<std::vector<int>>();
                if (v.size() != 6) throw ValidationError("ncs needs six responses");
                std::array<int, 6> a{};
                std::copy(v.begin(), v.end(), a.begin());
                ncs_score(a);  // range check
                p.ncs = a;
            }
            if (j.contains("satisfaction") && !j.at("satisfaction").is_null()) p.satisfaction = j.at("satisfaction").get<double>();
            out.push_back(std::move(p));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("log: ") + e.what(), lineno);
        } catch (const Error& e) {
            throw ParseError(std::string("log: ") + e.what(), lineno);
        }
    }
    return out;
}

// ---------------------------------------------------------------- report

struct EvalReport {
    nlohmann::json json;
    std::string table;
};

/// Per-question steps under each navigation model and, with logs, per-tool
/// effectiveness, NCS quartiles and pairwise one-sided Mann-Whitney tests.
inline EvalReport evaluate(const std::vector<QuizItem>& quiz, const std::vector<NavModel>& models,
                           const std::vector<ParticipantLog>& logs) {
    EvalReport r;
    std::ostringstream t;
    nlohmann::json items = nlohmann::json::array();
    t << std::left << std::setw(4) << "#" << std::setw(60) << "question";
    for (auto& m : models) t << std::right << std::setw(8) << m.profile;
    t << "\n";
    for (std::size_t i = 0; i < quiz.size(); ++i) {
        nlohmann::json steps = nlohmann::json::object();
        std::string q = quiz[i].question.size() > 58 ? quiz[i].question.substr(0, 55) + "..." : quiz[i].question;
        t << std::left << std::setw(4) << i << std::setw(60) << q;
        for (auto& m : models) {
            int s = steps_or_minus_one(min_steps(m, quiz[i]));
            steps[m.profile] = s;
            t << std::right << std::setw(8) << s;
        }
        t << "\n";
        items.push_back({{"question", quiz[i].question}, {"types", quiz[i].types}, {"min_steps", steps}});
    }
    r.json["items"] = items;
    nlohmann::json reach = nlohmann::json::object();
    for (auto& m : models) {
        int n = 0;
        for (auto& it : items) n += it["min_steps"][m.profile].get<int>() >= 0 ? 1 : 0;
        reach[m.profile] = n;
    }
    r.json["reachable"] = reach;

    if (!logs.empty()) {
        std::vector<std::string> key;
        for (auto& q : quiz) key.push_back(q.correct);
        std::map<std::string, std::vector<double>> effectiveness;
        nlohmann::json tools = nlohmann::json::object();
        std::map<std::string, std::vector<const ParticipantLog*>> by_tool;
        for (auto& l : logs) by_tool[l.tool].push_back(&l);
        t << "\n" << std::left << std::setw(10) << "tool" << std::right << std::setw(8) << "n" << std::setw(8) << "pass"
          << std::setw(12) << "mean score" << std::setw(10) << "NCS Q1" << std::setw(10) << "median" << std::setw(10) << "Q3" << "\n";
        for (auto& [tool, ls] : by_tool) {
            std::vector<double> scores, ncs, seconds;
            std::vector<const ParticipantLog*> passed;
            for (auto* l : ls) {
                auto s = score_quiz(l->answers, key);
                if (!attention_check(s)) continue;
                passed.push_back(l);
                scores.push_back(s.total);
                seconds.push_back(l->elapsed_seconds);
                if (l->ncs) ncs.push_back(ncs_score(*l->ncs));
            }
            effectiveness[tool] = scores;
            auto mean = [](const std::vector<double>& v) {
                double s = 0;
                for (double x : v) s += x;
                return v.empty() ? 0.0 : s / static_cast<double>(v.size());
            };
            nlohmann::json x{{"respondents", ls.size()}, {"passed", passed.size()}, {"mean_score", mean(scores)},
                             {"mean_elapsed_seconds", mean(seconds)}};
            t << std::left << std::setw(10) << tool << std::right << std::setw(8) << ls.size() << std::setw(8) << passed.size()
              << std::setw(12) << std::fixed << std::setprecision(3) << mean(scores);
            if (!ncs.empty()) {
                auto f = normal_ncs_filter(ncs);
                std::vector<double> normal_scores;
                std::size_t k = 0;
                for (auto* l : passed)
                    if (l->ncs) {
                        if (std::find(f.kept.begin(), f.kept.end(), k) != f.kept.end()) normal_scores.push_back(score_quiz(l->answers, key).total);
                        ++k;
                    }
                x["ncs"] = {{"q1", f.q.q1}, {"median", f.q.median}, {"q3", f.q.q3}, {"normal", f.kept.size()},
                            {"normal_mean_score", mean(normal_scores)}};
                t << std::setw(10) << f.q.q1 << std::setw(10) << f.q.median << std::setw(10) << f.q.q3;
            }
            t << "\n";
            tools[tool] = x;
        }
        r.json["tools"] = tools;
        nlohmann::json tests = nlohmann::json::array();
        for (auto a = effectiveness.begin(); a != effectiveness.end(); ++a)
            for (auto b = std::next(a); b != effectiveness.end(); ++b) {
                if (a->second.empty() || b->second.empty()) continue;
                auto less = mann_whitney_u(a->second, b->second, Alternative::less);
                auto greater = mann_whitney_u(a->second, b->second, Alternative::greater);
                tests.push_back({{"a", a->first}, {"b", b->first}, {"u", less.u}, {"p_less", less.p}, {"p_greater", greater.p},
                                 {"exact", less.exact}});
                t << "MW " << a->first << " vs " << b->first << ": U=" << less.u << " p(less)=" << less.p
                  << " p(greater)=" << greater.p << "\n";
            }
        r.json["tests"] = tests;
    }
    r.table = t.str();
    return r;
}

}  // namespace xspace
