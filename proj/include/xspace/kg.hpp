#pragma once

// Knowledge-graph extraction: syntagms from dependency trees, template triples
// connecting them, lemma-derived URIs and composite -> component sub-class edges.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"
#include "xspace/corpus.hpp"
#include "xspace/error.hpp"
#include "xspace/text.hpp"

namespace xspace {

/// Which dependents attach to a nominal head, and which words are function words.
struct SyntagmGrammar {
    std::set<std::string> nominal_upos{"NOUN", "PROPN"};
    std::set<std::string> attach_deprels{"det", "amod", "compound", "flat", "nummod", "nmod"};
    // nmod dependents are attached only when introduced by one of these case markers.
    std::set<std::string> nmod_cases{"of"};
    std::set<std::string> determiners{"a", "an", "the", "this", "that", "these", "those"};
    // Lemmas never used as sub-class parents.
    std::set<std::string> stop_words{"a",    "an",  "the",  "this", "that", "these", "those", "of",
                                     "in",   "for", "to",   "on",   "with", "by",    "at",    "from",
                                     "and",  "or",  "no",   "'s"};
    // Dependents of connecting path words pulled into a template with their subtree.
    std::set<std::string> template_modifiers{"advmod", "aux",  "aux:pass",     "cop", "mark",
                                             "neg",    "punct", "compound:prt", "obl"};

    nlohmann::json to_json() const {
        auto arr = [](const std::set<std::string>& s) { return nlohmann::json(std::vector<std::string>(s.begin(), s.end())); };
        return {{"nominal_upos", arr(nominal_upos)},   {"attach_deprels", arr(attach_deprels)},
                {"nmod_cases", arr(nmod_cases)},       {"determiners", arr(determiners)},
                {"stop_words", arr(stop_words)},       {"template_modifiers", arr(template_modifiers)}};
    }

    static SyntagmGrammar from_json(const nlohmann::json& j) {
        SyntagmGrammar g;
        auto load = [&](const char* key, std::set<std::string>& dst) {
            if (j.contains(key)) dst = j.at(key).get<std::set<std::string>>();
        };
        load("nominal_upos", g.nominal_upos);
        load("attach_deprels", g.attach_deprels);
        load("nmod_cases", g.nmod_cases);
        load("determiners", g.determiners);
        load("stop_words", g.stop_words);
        load("template_modifiers", g.template_modifiers);
        return g;
    }
};

enum class SyntagmKind { maximal, core, bare };

/// A contiguous token span treated as a concept mention.
struct Syntagm {
    int head = 0;
    int first = 0;  // inclusive token indices
    int last = 0;
    SyntagmKind kind = SyntagmKind::bare;
    std::string label;                // surface, determiners included
    std::string core_label;           // surface without leading determiners
    std::vector<std::string> lemmas;  // determiners dropped

    bool overlaps(const Syntagm& o) const { return !(last < o.first || o.last < first); }
};

struct Mention {
    std::string sentence_id;
    int first = 0;
    int last = 0;
    friend bool operator==(const Mention&, const Mention&) = default;
};

struct Concept {
    std::string uri;
    std::string label;
    std::vector<std::string> lemma_seq;
    std::string head_lemma;
    std::vector<Mention> source_mentions;
};

struct SourceRecord {
    std::string sentence_id;
    std::string paragraph_id;
    friend bool operator==(const SourceRecord&, const SourceRecord&) = default;
};

struct TemplateTriple {
    std::string id;
    std::string subj;  // concept uris
    std::string obj;
    std::string subj_label;  // surfaces of the mentions the template was built from
    std::string obj_label;
    std::string template_text;
    SourceRecord source;
    std::vector<int> token_support;

    /// Substitutes the mention labels into the template.
    std::string realize() const { return realize_with(subj_label, obj_label); }

    std::string realize_with(const std::string& s, const std::string& o) const {
        std::string out = template_text;
        auto put = [&](const std::string& slot, const std::string& value) {
            auto pos = out.find(slot);
            if (pos != std::string::npos) out.replace(pos, slot.size(), value);
        };
        // Substitute the later placeholder first so the earlier offset stays valid.
        if (out.find("{subj}") > out.find("{obj}")) {
            put("{subj}", s);
            put("{obj}", o);
        } else {
            put("{obj}", o);
            put("{subj}", s);
        }
        return out;
    }
};

struct KnowledgeGraph {
    std::map<std::string, Concept> concepts;
    std::vector<TemplateTriple> triples;
    std::set<std::pair<std::string, std::string>> subclass_edges;  // (child, parent)
    std::map<std::string, std::vector<SourceRecord>> provenance;   // triple id -> sources

    const Concept& concept_at(const std::string& uri) const {
        auto it = concepts.find(uri);
        if (it == concepts.end()) throw InvalidArgument("unknown concept uri: " + uri);
        return it->second;
    }

    std::vector<std::string> parents_of(const std::string& uri) const {
        std::vector<std::string> out;
        for (auto& [c, p] : subclass_edges)
            if (c == uri) out.push_back(p);
        return out;
    }

    std::vector<std::string> children_of(const std::string& uri) const {
        std::vector<std::string> out;
        for (auto& [c, p] : subclass_edges)
            if (p == uri) out.push_back(c);
        return out;
    }
};

/// Lowercases lemmas, drops stop-determiners and joins with '_'.
/// Characters that would break a URL path segment are replaced by '-'.
inline std::string assign_uri(const std::vector<std::string>& label_lemmas,
                              const std::set<std::string>& determiners = SyntagmGrammar{}.determiners) {
    if (label_lemmas.empty()) throw InvalidArgument("assign_uri: empty lemma list");
    std::string uri;
    for (const auto& raw : label_lemmas) {
        std::string l = to_lower(raw);
        if (determiners.count(l)) continue;
        std::string clean;
        for (char c : l) {
            auto u = static_cast<unsigned char>(c);
            bool keep = is_word_byte(u) || c == '_' || c == '-' || c == '.' || c == '\'';
            clean += keep ? c : '-';
        }
        if (clean.empty() || !has_word_char(clean)) continue;
        if (!uri.empty()) uri += '_';
        uri += clean;
    }
    if (uri.empty()) throw InvalidArgument("assign_uri: no usable lemma (all determiners)");
    return uri;
}

namespace detail {

inline std::vector<std::vector<int>> children_lists(const Sentence& s) {
    std::vector<std::vector<int>> ch(static_cast<std::size_t>(s.size()) + 1);
    for (auto& t : s.tokens) ch[static_cast<std::size_t>(t.head)].push_back(t.index);
    return ch;
}

inline bool has_case_in(const Sentence& s, const std::vector<std::vector<int>>& ch, int tok,
                        const std::set<std::string>& cases) {
    for (int c : ch[static_cast<std::size_t>(tok)]) {
        const Token& t = s.token(c);
        if (t.deprel == "case" && cases.count(to_lower(t.lemma))) return true;
    }
    return false;
}

// Collects the phrase of `head` under the grammar: attached deprels recursively, the case
// marker of an included nmod, and adverbs modifying an included adjective.
inline void collect_phrase(const Sentence& s, const std::vector<std::vector<int>>& ch,
                           const SyntagmGrammar& g, int tok, std::set<int>& out, bool compounds_only) {
    out.insert(tok);
    for (int c : ch[static_cast<std::size_t>(tok)]) {
        const Token& t = s.token(c);
        if (compounds_only) {
            if (t.deprel == "compound" || t.deprel == "flat") collect_phrase(s, ch, g, c, out, true);
            continue;
        }
        if (!g.attach_deprels.count(t.deprel)) continue;
        if (t.deprel == "nmod" && !has_case_in(s, ch, c, g.nmod_cases)) continue;
        collect_phrase(s, ch, g, c, out, false);
        if (t.deprel == "nmod") {
            for (int cc : ch[static_cast<std::size_t>(c)])
                if (s.token(cc).deprel == "case") out.insert(cc);
        }
        if (t.deprel == "amod") {
            for (int cc : ch[static_cast<std::size_t>(c)])
                if (s.token(cc).deprel == "advmod") out.insert(cc);
        }
    }
}

inline std::pair<int, int> contiguous_run(const std::set<int>& toks, int head) {
    int first = head, last = head;
    while (toks.count(first - 1)) --first;
    while (toks.count(last + 1)) ++last;
    return {first, last};
}

inline bool is_determiner_token(const Token& t, const SyntagmGrammar& g) {
    return t.upos == "DET" || g.determiners.count(to_lower(t.lemma)) > 0;
}

inline std::optional<Syntagm> make_syntagm(const Sentence& s, const SyntagmGrammar& g, int head,
                                           int first, int last, SyntagmKind kind) {
    Syntagm sy;
    sy.head = head;
    sy.first = first;
    sy.last = last;
    sy.kind = kind;
    sy.label = detokenize(s, first, last);
    int core_first = first;
    while (core_first < head && is_determiner_token(s.token(core_first), g)) ++core_first;
    sy.core_label = detokenize(s, core_first, last);
    for (int i = first; i <= last; ++i) {
        const Token& t = s.token(i);
        if (is_determiner_token(t, g) || !has_word_char(t.lemma)) continue;
        sy.lemmas.push_back(to_lower(t.lemma));
    }
    if (sy.lemmas.empty()) return std::nullopt;
    return sy;
}

}  // namespace detail

/// Concept candidates of a sentence: maximal noun phrases, their compound cores,
/// and every nominal token on its own. Sorted by (first, last), deduplicated by span.
inline std::vector<Syntagm> extract_syntagms(const Sentence& s, const SyntagmGrammar& g = {}) {
    std::vector<Syntagm> out;
    if (s.tokens.empty()) return out;
    auto ch = detail::children_lists(s);
    std::set<std::pair<int, int>> seen;
    auto add = [&](std::optional<Syntagm> sy) {
        if (sy && seen.insert({sy->first, sy->last}).second) out.push_back(std::move(*sy));
    };
    for (const Token& t : s.tokens) {
        if (!g.nominal_upos.count(t.upos)) continue;
        bool governed_by_nominal = t.head != 0 && g.nominal_upos.count(s.token(t.head).upos);
        bool phrase_head = !g.attach_deprels.count(t.deprel) || !governed_by_nominal;
        if (phrase_head) {
            std::set<int> toks;
            detail::collect_phrase(s, ch, g, t.index, toks, false);
            auto [f, l] = detail::contiguous_run(toks, t.index);
            add(detail::make_syntagm(s, g, t.index, f, l, SyntagmKind::maximal));
        }
        // Compound cores also for nested nominals ("heart disease" inside "risk of heart disease").
        std::set<int> core;
        detail::collect_phrase(s, ch, g, t.index, core, true);
        auto [cf, cl] = detail::contiguous_run(core, t.index);
        add(detail::make_syntagm(s, g, t.index, cf, cl, SyntagmKind::core));
        add(detail::make_syntagm(s, g, t.index, t.index, t.index, SyntagmKind::bare));
    }
    std::sort(out.begin(), out.end(), [](const Syntagm& a, const Syntagm& b) {
        return std::pair(a.first, a.last) < std::pair(b.first, b.last);
    });
    return out;
}

struct TripleExtractionLog {
    std::size_t overlapping_pairs = 0;
    std::size_t empty_templates = 0;
};

namespace detail {

inline std::vector<int> path_to_root(const Sentence& s, int tok) {
    std::vector<int> p;
    for (int cur = tok; cur != 0; cur = s.token(cur).head) p.push_back(cur);
    return p;
}

inline bool is_subject_rel(const std::string& rel) {
    return rel == "nsubj" || rel == "nsubj:pass" || rel == "csubj" || rel == "csubj:pass" || rel == "expl";
}

inline void subtree(const std::vector<std::vector<int>>& ch, int tok, std::set<int>& out) {
    out.insert(tok);
    for (int c : ch[static_cast<std::size_t>(tok)]) subtree(ch, c, out);
}

}  // namespace detail

/// Builds one template triple per pair of disjoint syntagms. The template keeps the
/// tokens on the dependency path between the two heads, every token lying between
/// the two spans, and modifier subtrees of non-span path words; the spans become
/// `{subj}` / `{obj}`.
inline std::vector<TemplateTriple> build_template_triples(const Sentence& s,
                                                          const std::vector<Syntagm>& syntagms,
                                                          const SyntagmGrammar& g = {},
                                                          TripleExtractionLog* log = nullptr) {
    std::vector<TemplateTriple> out;
    if (syntagms.size() < 2) return out;
    auto ch = detail::children_lists(s);

    for (std::size_t i = 0; i < syntagms.size(); ++i) {
        for (std::size_t j = i + 1; j < syntagms.size(); ++j) {
            const Syntagm* a = &syntagms[i];
            const Syntagm* b = &syntagms[j];
            if (a->overlaps(*b)) {
                if (log) ++log->overlapping_pairs;
                continue;
            }
            auto pa = detail::path_to_root(s, a->head);
            auto pb = detail::path_to_root(s, b->head);
            std::set<int> on_b(pb.begin(), pb.end());
            int lca = 0;
            for (int x : pa)
                if (on_b.count(x)) {
                    lca = x;
                    break;
                }
            std::set<int> path;
            int entry_a = 0, entry_b = 0;  // child of the LCA through which each side arrives
            for (int x : pa) {
                path.insert(x);
                if (x == lca) break;
                entry_a = x;
            }
            for (int x : pb) {
                path.insert(x);
                if (x == lca) break;
                entry_b = x;
            }

            auto in_span = [](const Syntagm* sy, int t) { return t >= sy->first && t <= sy->last; };
            // Subject: the side attached to the governing predicate as a subject; otherwise the
            // span containing the LCA; otherwise the earlier span.
            bool a_subj = entry_a && detail::is_subject_rel(s.token(entry_a).deprel);
            bool b_subj = entry_b && detail::is_subject_rel(s.token(entry_b).deprel);
            const Syntagm* subj = a;
            const Syntagm* obj = b;
            if (b_subj && !a_subj) std::swap(subj, obj);
            else if (!a_subj && !b_subj && in_span(b, lca) && !in_span(a, lca)) std::swap(subj, obj);

            std::set<int> support;
            for (int t = a->first; t <= a->last; ++t) support.insert(t);
            for (int t = b->first; t <= b->last; ++t) support.insert(t);
            for (int t : path) support.insert(t);
            const Syntagm* left = a->first < b->first ? a : b;
            const Syntagm* right = left == a ? b : a;
            for (int t = left->last + 1; t < right->first; ++t) support.insert(t);
            for (int p : path) {
                if (in_span(a, p) || in_span(b, p)) continue;
                for (int c : ch[static_cast<std::size_t>(p)]) {
                    if (path.count(c) || !g.template_modifiers.count(s.token(c).deprel)) continue;
                    std::set<int> sub;
                    detail::subtree(ch, c, sub);
                    bool touches = false;
                    for (int t : sub)
                        if (in_span(a, t) || in_span(b, t)) touches = true;
                    if (!touches) support.insert(sub.begin(), sub.end());
                }
            }

            std::string tmpl;
            bool has_words = false;
            int prev = -1;
            auto append = [&](const std::string& piece, int first_tok, int last_tok) {
                if (prev != -1 && space_between(s.token(prev), s.token(first_tok))) tmpl += ' ';
                tmpl += piece;
                prev = last_tok;
            };
            for (auto it = support.begin(); it != support.end(); ++it) {
                int t = *it;
                if (in_span(subj, t)) {
                    if (t == subj->first) append("{subj}", subj->first, subj->last);
                    continue;
                }
                if (in_span(obj, t)) {
                    if (t == obj->first) append("{obj}", obj->first, obj->last);
                    continue;
                }
                has_words = has_words || has_word_char(s.token(t).surface);
                append(s.token(t).surface, t, t);
            }
            if (!has_words) {
                if (log) ++log->empty_templates;
                continue;
            }
            TemplateTriple tr;
            tr.subj = assign_uri(subj->lemmas, g.determiners);
            tr.obj = assign_uri(obj->lemmas, g.determiners);
            tr.subj_label = subj->label;
            tr.obj_label = obj->label;
            tr.template_text = std::move(tmpl);
            tr.source = {s.sentence_id, s.paragraph_ref};
            tr.token_support.assign(support.begin(), support.end());
            out.push_back(std::move(tr));
        }
    }
    return out;
}

/// Adds (composite ⊑ component) edges for every composite concept, creating missing
/// single-lemma concepts. Stop words never become parents.
inline void add_subclass_edges(KnowledgeGraph& kg, const SyntagmGrammar& g = {}) {
    std::vector<std::string> composites;
    for (auto& [uri, c] : kg.concepts)
        if (c.lemma_seq.size() >= 2) composites.push_back(uri);
    for (const auto& uri : composites) {
        const auto lemmas = kg.concepts.at(uri).lemma_seq;
        for (const auto& l : lemmas) {
            if (g.stop_words.count(l) || !has_word_char(l)) continue;
            std::string parent = assign_uri({l}, g.determiners);
            if (parent == uri) continue;
            auto it = kg.concepts.find(parent);
            if (it == kg.concepts.end()) {
                Concept c;
                c.uri = parent;
                c.label = l;
                c.lemma_seq = {l};
                c.head_lemma = l;
                kg.concepts.emplace(parent, std::move(c));
            } else if (it->second.lemma_seq.size() >= kg.concepts.at(uri).lemma_seq.size()) {
                continue;  // only strictly shorter parents keep the relation acyclic
            }
            kg.subclass_edges.insert({uri, parent});
        }
    }
}

/// True if the sub-class relation has no directed cycle.
inline bool subclass_acyclic(const KnowledgeGraph& kg) {
    std::map<std::string, std::vector<std::string>> up;
    for (auto& [c, p] : kg.subclass_edges) up[c].push_back(p);
    std::map<std::string, int> state;  // 1 = on stack, 2 = done
    std::function<bool(const std::string&)> dfs = [&](const std::string& u) {
        state[u] = 1;
        for (auto& v : up[u]) {
            if (state[v] == 1) return false;
            if (state[v] == 0 && !dfs(v)) return false;
        }
        state[u] = 2;
        return true;
    };
    for (auto& [u, _] : up)
        if (state[u] == 0 && !dfs(u)) return false;
    return true;
}

struct KgBuildLog {
    TripleExtractionLog triples;
    std::size_t sentences = 0;
};

/// Per-sentence extraction reduced into one graph in (document, paragraph, sentence,
/// pair) order. Triples sharing (subject, template, object) merge and accumulate provenance.
inline KnowledgeGraph build_kg(const Corpus& corpus, const SyntagmGrammar& g = {}, KgBuildLog* log = nullptr) {
    KnowledgeGraph kg;
    std::map<std::string, std::map<std::string, std::size_t>> label_votes;  // uri -> label -> count
    std::map<std::string, std::vector<std::string>> label_order;
    std::map<std::tuple<std::string, std::string, std::string>, std::size_t> triple_index;

    for (const auto& doc : corpus.documents) {
        for (const auto& par : doc.paragraphs) {
            for (const auto& s : par.sentences) {
                if (log) ++log->sentences;
                auto syntagms = extract_syntagms(s, g);
                std::vector<Syntagm> maximal;
                for (const auto& sy : syntagms) {
                    std::string uri = assign_uri(sy.lemmas, g.determiners);
                    auto& c = kg.concepts[uri];
                    if (c.uri.empty()) {
                        c.uri = uri;
                        c.lemma_seq = sy.lemmas;
                        c.head_lemma = to_lower(s.token(sy.head).lemma);
                    }
                    c.source_mentions.push_back({s.sentence_id, sy.first, sy.last});
                    if (!label_votes[uri].count(sy.core_label)) label_order[uri].push_back(sy.core_label);
                    ++label_votes[uri][sy.core_label];
                    if (sy.kind == SyntagmKind::maximal) maximal.push_back(sy);
                }
                for (auto& tr : build_template_triples(s, maximal, g, log ? &log->triples : nullptr)) {
                    auto key = std::make_tuple(tr.subj, tr.template_text, tr.obj);
                    auto it = triple_index.find(key);
                    if (it != triple_index.end()) {
                        kg.provenance[kg.triples[it->second].id].push_back(tr.source);
                        continue;
                    }
                    tr.id = "t" + std::to_string(kg.triples.size());
                    kg.provenance[tr.id].push_back(tr.source);
                    triple_index.emplace(key, kg.triples.size());
                    kg.triples.push_back(std::move(tr));
                }
            }
        }
    }
    // Preferred label: most frequent determiner-free mention surface, first seen wins ties.
    for (auto& [uri, c] : kg.concepts) {
        std::size_t best = 0;
        for (const auto& l : label_order[uri]) {
            auto n = label_votes[uri][l];
            if (n > best) {
                best = n;
                c.label = l;
            }
        }
    }
    add_subclass_edges(kg, g);
    if (!subclass_acyclic(kg)) throw ValidationError("sub-class edges contain a cycle");
    return kg;
}

// ---------------------------------------------------------------- serialization

inline nlohmann::json to_json(const KnowledgeGraph& kg) {
    using nlohmann::json;
    json concepts = json::array();
    for (auto& [uri, c] : kg.concepts) {
        json mentions = json::array();
        for (auto& m : c.source_mentions) mentions.push_back({{"sentence_id", m.sentence_id}, {"first", m.first}, {"last", m.last}});
        concepts.push_back({{"uri", c.uri}, {"label", c.label}, {"lemma_seq", c.lemma_seq},
                            {"head_lemma", c.head_lemma}, {"mentions", mentions}});
    }
    json triples = json::array();
    for (auto& t : kg.triples) {
        triples.push_back({{"id", t.id},
                           {"subj", t.subj},
                           {"obj", t.obj},
                           {"subj_label", t.subj_label},
                           {"obj_label", t.obj_label},
                           {"template", t.template_text},
                           {"sentence_id", t.source.sentence_id},
                           {"paragraph_id", t.source.paragraph_id},
                           {"token_support", t.token_support}});
    }
    json edges = json::array();
    for (auto& [c, p] : kg.subclass_edges) edges.push_back({c, p});
    json prov = json::array();
    for (auto& t : kg.triples) {
        json sources = json::array();
        for (auto& r : kg.provenance.at(t.id)) sources.push_back({{"sentence_id", r.sentence_id}, {"paragraph_id", r.paragraph_id}});
        prov.push_back({{"triple", t.id}, {"sources", sources}});
    }
    return {{"concepts", concepts}, {"triples", triples}, {"subclass_edges", edges}, {"provenance", prov}};
}

inline KnowledgeGraph kg_from_json(const nlohmann::json& j) {
    KnowledgeGraph kg;
    for (auto& c : j.at("concepts")) {
        Concept x;
        x.uri = c.at("uri");
        x.label = c.at("label");
        x.lemma_seq = c.at("lemma_seq").get<std::vector<std::string>>();
        x.head_lemma = c.value("head_lemma", "");
        for (auto& m : c.at("mentions")) x.source_mentions.push_back({m.at("sentence_id"), m.at("first"), m.at("last")});
        kg.concepts.emplace(x.uri, std::move(x));
    }
    for (auto& t : j.at("triples")) {
        TemplateTriple x;
        x.id = t.at("id");
        x.subj = t.at("subj");
        x.obj = t.at("obj");
        x.subj_label = t.at("subj_label");
        x.obj_label = t.at("obj_label");
        x.template_text = t.at("template");
        x.source = {t.at("sentence_id"), t.at("paragraph_id")};
        x.token_support = t.at("token_support").get<std::vector<int>>();
        kg.triples.push_back(std::move(x));
    }
    for (auto& e : j.at("subclass_edges")) kg.subclass_edges.insert({e.at(0).get<std::string>(), e.at(1).get<std::string>()});
    for (auto& p : j.at("provenance")) {
        auto& v = kg.provenance[p.at("triple").get<std::string>()];
        for (auto& r : p.at("sources")) v.push_back({r.at("sentence_id"), r.at("paragraph_id")});
    }
    return kg;
}

}  // namespace xspace
