#pragma once

// Overview cards: candidate snippets per concept, exclusive priority-ordered
// assignment to archetypal questions, expandable summary trees, open QA.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "xspace/corpus.hpp"
#include "xspace/error.hpp"
#include "xspace/kg.hpp"
#include "xspace/pertinence.hpp"
#include "xspace/taxonomy.hpp"

namespace xspace {

struct Archetype {
    std::string id;
    int priority = 0;
    std::vector<std::string> templates;  // each contains {X}

    std::string realize(const std::string& label, std::size_t which = 0) const {
        std::string t = templates.at(which);
        for (auto pos = t.find("{X}"); pos != std::string::npos; pos = t.find("{X}", pos + label.size()))
            t.replace(pos, 3, label);
        return t;
    }
};

/// Archetypes sorted by priority (lower value = assigned first).
struct ArchetypeCatalog {
    std::vector<Archetype> archetypes;

    static ArchetypeCatalog from_json(const nlohmann::json& j) {
        if (!j.is_array()) throw ValidationError("archetype config must be a JSON list");
        ArchetypeCatalog c;
        std::set<int> priorities;
        std::set<std::string> ids;
        for (auto& a : j) {
            Archetype x;
            x.id = a.at("id").get<std::string>();
            x.priority = a.at("priority").get<int>();
            x.templates = a.at("templates").get<std::vector<std::string>>();
            if (x.templates.empty()) throw ValidationError("archetype " + x.id + " has no surface template");
            for (auto& t : x.templates)
                if (t.find("{X}") == std::string::npos) throw ValidationError("template without {X}: " + t);
            if (!priorities.insert(x.priority).second) throw ValidationError("duplicate archetype priority " + std::to_string(x.priority));
            if (!ids.insert(x.id).second) throw ValidationError("duplicate archetype id " + x.id);
            c.archetypes.push_back(std::move(x));
        }
        std::sort(c.archetypes.begin(), c.archetypes.end(),
                  [](const Archetype& a, const Archetype& b) { return a.priority < b.priority; });
        return c;
    }

    nlohmann::json to_json() const {
        nlohmann::json out = nlohmann::json::array();
        for (auto& a : archetypes) out.push_back({{"id", a.id}, {"priority", a.priority}, {"templates", a.templates}});
        return out;
    }

    std::vector<std::string> ids() const {
        std::vector<std::string> out;
        for (auto& a : archetypes) out.push_back(a.id);
        return out;
    }

    const Archetype* find(const std::string& id) const {
        for (auto& a : archetypes)
            if (a.id == id) return &a;
        return nullptr;
    }
};

/// A snippet that may answer an archetypal question about a concept.
struct Candidate {
    std::string snippet;
    std::string paragraph_id;
    std::string source_triple;  // triple id; for label snippets, the triple that carried the label
};

/// Realizations of the triples touching the concept or a sub-class descendant,
/// followed by their subject/object labels. Deduplicated by snippet text.
inline std::vector<Candidate> collect_candidates(const std::string& uri, const KnowledgeGraph& kg) {
    kg.concept_at(uri);
    std::set<std::string> family{uri};
    std::vector<std::string> stack{uri};
    while (!stack.empty()) {
        auto u = stack.back();
        stack.pop_back();
        for (auto& c : kg.children_of(u))
            if (family.insert(c).second) stack.push_back(c);
    }
    std::vector<Candidate> out;
    std::set<std::string> seen;
    auto add = [&](const std::string& text, const TemplateTriple& t) {
        if (seen.insert(text).second) out.push_back({text, t.source.paragraph_id, t.id});
    };
    for (auto& t : kg.triples)
        if (family.count(t.subj) || family.count(t.obj)) add(t.realize(), t);
    for (auto& t : kg.triples)
        if (family.count(t.subj) || family.count(t.obj)) {
            add(t.subj_label, t);
            add(t.obj_label, t);
        }
    return out;
}

struct AnswerUnit {
    std::string snippet;
    std::string paragraph_id;
    std::string source_triple;
    double score = 0;
    std::string archetype;
    std::size_t candidate = 0;  // index into the candidate list
};

/// Score table: scores[a][c] = pertinence of candidate c to archetype a (catalog order).
using ScoreTable = std::vector<std::vector<double>>;

struct SweepSettings {
    double theta = 0.15;
    std::map<std::string, double> theta_per_archetype;

    double threshold(const std::string& archetype) const {
        auto it = theta_per_archetype.find(archetype);
        return it == theta_per_archetype.end() ? theta : it->second;
    }
};

/// Priority sweep: each archetype in turn takes every still-unassigned candidate scoring
/// at least its threshold; clusters are ordered by score descending, stable on candidate order.
inline std::map<std::string, std::vector<AnswerUnit>> cluster_by_archetype(const std::vector<Candidate>& candidates,
                                                                           const ArchetypeCatalog& catalog,
                                                                           const ScoreTable& scores,
                                                                           const SweepSettings& settings) {
    if (scores.size() != catalog.archetypes.size()) throw InvalidArgument("score table rows != archetype count");
    std::map<std::string, std::vector<AnswerUnit>> clusters;
    std::vector<bool> assigned(candidates.size(), false);
    for (std::size_t a = 0; a < catalog.archetypes.size(); ++a) {
        const auto& arch = catalog.archetypes[a];
        if (scores[a].size() != candidates.size()) throw InvalidArgument("score table columns != candidate count");
        auto& cluster = clusters[arch.id];
        double theta = settings.threshold(arch.id);
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            if (assigned[c] || scores[a][c] < theta) continue;
            assigned[c] = true;
            cluster.push_back({candidates[c].snippet, candidates[c].paragraph_id, candidates[c].source_triple, scores[a][c], arch.id, c});
        }
        std::stable_sort(cluster.begin(), cluster.end(), [](const AnswerUnit& x, const AnswerUnit& y) { return x.score > y.score; });
    }
    return clusters;
}

/// Archetype pertinence of a concept's candidates: for each archetype the best
/// inner product over its realized templates. With `mask_aspect`, the concept's
/// own lemmas are removed from questions and answers first, so the score reflects
/// the interrogative cue rather than the shared topic word.
struct ArchetypeScorer {
    const EmbeddingProvider* provider = nullptr;
    const LexicalModel* lexical = nullptr;  // lemmatizer used for masking
    bool mask_aspect = true;

    ScoreTable score(const Concept& concept_, const std::vector<Candidate>& candidates, const ArchetypeCatalog& catalog,
                     const std::map<std::string, std::string>& paragraph_text) const {
        ScoreTable table(catalog.archetypes.size(), std::vector<double>(candidates.size(), 0.0));
        if (candidates.empty()) return table;
        std::set<std::string> mask;
        if (mask_aspect && lexical)
            for (auto& l : concept_.lemma_seq) mask.insert(l);
        auto masked = [&](const std::string& s) { return lexical ? lexical->mask_text(s, mask) : s; };

        std::vector<EmbedRequest> answers;
        std::vector<std::size_t> answer_of(candidates.size(), SIZE_MAX);
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            std::string text = masked(candidates[c].snippet);
            if (!has_word_char(text)) continue;  // nothing left to match: unassignable
            auto it = paragraph_text.find(candidates[c].paragraph_id);
            answer_of[c] = answers.size();
            answers.push_back({text, it == paragraph_text.end() ? "" : masked(it->second)});
        }
        auto avecs = provider->embed_batch(answers, EmbedKind::answer);

        for (std::size_t a = 0; a < catalog.archetypes.size(); ++a) {
            const auto& arch = catalog.archetypes[a];
            std::vector<EmbedRequest> qs;
            for (std::size_t t = 0; t < arch.templates.size(); ++t) {
                std::string q = masked(arch.realize(concept_.label, t));
                if (has_word_char(q)) qs.push_back({q, ""});
            }
            auto qvecs = provider->embed_batch(qs, EmbedKind::question);
            for (std::size_t c = 0; c < candidates.size(); ++c) {
                if (answer_of[c] == SIZE_MAX) continue;
                double best = 0.0;
                for (auto& q : qvecs) best = std::max(best, pertinence(q, avecs[answer_of[c]]));
                table[a][c] = best;
            }
        }
        return table;
    }
};

// ---------------------------------------------------------------- summary trees

struct SummaryNode {
    std::string id;  // path within the tree: "r", "r.0", "r.0.2", ...
    std::string text;
    std::vector<std::size_t> children;
    std::optional<std::size_t> unit;  // leaves: index into the cluster's units
};

struct SummaryTree {
    std::vector<SummaryNode> nodes;
    std::optional<std::size_t> root;  // none for an empty cluster

    bool empty() const { return !root.has_value(); }

    std::size_t height() const {
        if (!root) return 0;
        std::size_t h = 0;
        for (auto cur = *root; !nodes[cur].children.empty(); cur = nodes[cur].children.front()) ++h;
        return h;
    }

    /// Unit indices in left-to-right leaf order.
    std::vector<std::size_t> leaf_units() const {
        std::vector<std::size_t> out;
        if (!root) return out;
        std::vector<std::size_t> stack{*root};
        while (!stack.empty()) {
            auto n = stack.back();
            stack.pop_back();
            if (nodes[n].unit) out.push_back(*nodes[n].unit);
            for (auto it = nodes[n].children.rbegin(); it != nodes[n].children.rend(); ++it) stack.push_back(*it);
        }
        return out;
    }

    const SummaryNode* find(const std::string& id) const {
        for (auto& n : nodes)
            if (n.id == id) return &n;
        return nullptr;
    }
};

/// First sentence of a text: up to the first '.', '!' or '?' followed by a space or the end.
inline std::string first_sentence(const std::string& text) {
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if ((c == '.' || c == '!' || c == '?') && (i + 1 == text.size() || text[i + 1] == ' ')) return text.substr(0, i + 1);
    }
    return text;
}

/// Cuts at the last space within `budget` bytes and appends "...". Never splits a UTF-8 sequence.
inline std::string truncate_text(const std::string& text, std::size_t budget) {
    if (text.size() <= budget) return text;
    std::size_t cut = budget;
    while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80) --cut;
    auto space = text.rfind(' ', cut);
    if (space != std::string::npos && space > 0) cut = space;
    return text.substr(0, cut) + "...";
}

/// Groups of at most k consecutive nodes get an extractive parent (first sentence
/// of each child, truncated to `budget`), level by level until one root remains.
inline SummaryTree build_summary_tree(const std::vector<AnswerUnit>& units, std::size_t k, std::size_t budget = 280) {
    if (k < 2) throw InvalidArgument("summary group size must be at least 2");
    SummaryTree tree;
    if (units.empty()) return tree;
    std::vector<std::size_t> level;
    for (std::size_t i = 0; i < units.size(); ++i) {
        tree.nodes.push_back({"", units[i].snippet, {}, i});
        level.push_back(i);
    }
    while (level.size() > 1) {
        std::vector<std::size_t> next;
        for (std::size_t i = 0; i < level.size(); i += k) {
            SummaryNode parent;
            std::string joined;
            for (std::size_t j = i; j < std::min(level.size(), i + k); ++j) {
                parent.children.push_back(level[j]);
                auto s = first_sentence(tree.nodes[level[j]].text);
                if (!joined.empty()) joined += ' ';
                joined += s;
            }
            parent.text = truncate_text(joined, budget);
            next.push_back(tree.nodes.size());
            tree.nodes.push_back(std::move(parent));
        }
        level = std::move(next);
    }
    tree.root = level.front();
    std::vector<std::size_t> stack{*tree.root};
    tree.nodes[*tree.root].id = "r";
    while (!stack.empty()) {
        auto n = stack.back();
        stack.pop_back();
        for (std::size_t i = 0; i < tree.nodes[n].children.size(); ++i) {
            auto c = tree.nodes[n].children[i];
            tree.nodes[c].id = tree.nodes[n].id + "." + std::to_string(i);
            stack.push_back(c);
        }
    }
    return tree;
}

// ---------------------------------------------------------------- cards

struct Section {
    std::vector<AnswerUnit> units;
    SummaryTree tree;
};

struct OverviewCard {
    std::string uri;
    std::string label;
    std::string abstract_text;
    std::vector<std::string> type_labels;
    std::vector<std::string> super_classes;
    std::vector<std::string> sub_classes;
    std::vector<std::string> sub_types;
    std::map<std::string, Section> sections;  // every catalog archetype, possibly empty

    bool has_content() const {
        for (auto& [_, s] : sections)
            if (!s.units.empty()) return true;
        return !abstract_text.empty();
    }
};

inline OverviewCard compose_overview(const std::string& uri, const KnowledgeGraph& kg, const TaxonomyForest& forest,
                                     std::map<std::string, std::vector<AnswerUnit>> clusters, std::size_t k = 3,
                                     std::size_t budget = 280) {
    const Concept& c = kg.concept_at(uri);
    OverviewCard card;
    card.uri = uri;
    card.label = c.label;
    if (auto it = clusters.find("what"); it != clusters.end() && !it->second.empty())
        card.abstract_text = it->second.front().snippet;
    if (auto* tree = forest.tree_of(uri)) {
        card.type_labels.push_back(tree->root_label);
        if (auto p = forest.parent(uri)) card.type_labels.push_back(*p);
    }
    card.super_classes = kg.parents_of(uri);
    card.sub_classes = kg.children_of(uri);
    card.sub_types = forest.children(uri);
    for (auto& [arch, units] : clusters) {
        Section s;
        s.tree = build_summary_tree(units, k, budget);
        s.units = std::move(units);
        card.sections.emplace(arch, std::move(s));
    }
    return card;
}

// ---------------------------------------------------------------- open QA

struct ScoredSnippet {
    std::string snippet;
    std::string paragraph_id;
    double score = 0;
    std::string source_triple;
};

/// Every triple realization and label in the graph, deduplicated by text.
inline std::vector<Candidate> all_snippets(const KnowledgeGraph& kg) {
    std::vector<Candidate> out;
    std::set<std::string> seen;
    for (auto& t : kg.triples)
        if (seen.insert(t.realize()).second) out.push_back({t.realize(), t.source.paragraph_id, t.id});
    for (auto& t : kg.triples) {
        if (seen.insert(t.subj_label).second) out.push_back({t.subj_label, t.source.paragraph_id, t.id});
        if (seen.insert(t.obj_label).second) out.push_back({t.obj_label, t.source.paragraph_id, t.id});
    }
    return out;
}

/// Ranks precomputed answer embeddings against a question; ties keep snippet order.
inline std::vector<ScoredSnippet> answer_open_question(const std::string& question, const std::vector<Candidate>& pool,
                                                       const std::vector<EmbeddingVector>& pool_vectors,
                                                       const EmbeddingProvider& provider, double theta, std::size_t n) {
    if (!has_word_char(question)) throw InvalidArgument("empty question");
    if (pool.size() != pool_vectors.size()) throw InvalidArgument("pool and vectors differ in size");
    auto q = provider.embed(question, "", EmbedKind::question);
    std::vector<ScoredSnippet> scored;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        double s = pertinence(q, pool_vectors[i]);
        if (s >= theta) scored.push_back({pool[i].snippet, pool[i].paragraph_id, s, pool[i].source_triple});
    }
    std::stable_sort(scored.begin(), scored.end(), [](const ScoredSnippet& a, const ScoredSnippet& b) { return a.score > b.score; });
    if (scored.size() > n) scored.resize(n);
    return scored;
}

}  // namespace xspace
