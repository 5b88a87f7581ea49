#pragma once

// Lexicon alignment (gloss-overlap word-sense disambiguation) and the forest of
// taxonomies derived from the FCA lattice over hypernym closures.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "xspace/corpus.hpp"
#include "xspace/error.hpp"
#include "xspace/fca.hpp"
#include "xspace/kg.hpp"
#include "xspace/text.hpp"

namespace xspace {

struct SenseEntry {
    std::string lemma;
    std::string sense_id;
    std::string parent;  // empty for roots
    std::string gloss;
    std::vector<std::string> hypernyms;  // parent chain up to the root
};

class Lexicon {
public:
    /// Reads `lemma<TAB>sense_id<TAB>parent<TAB>gloss` lines. Blank lines and `#` comments are skipped.
    static Lexicon parse(std::istream& in) {
        Lexicon lex;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || line[0] == '#') continue;
            auto cols = detail::split_tabs(line);
            if (cols.size() != 4) throw ParseError("expected 4 tab-separated columns, got " + std::to_string(cols.size()), lineno);
            SenseEntry e{to_lower(cols[0]), cols[1], cols[2], cols[3], {}};
            if (e.lemma.empty() || e.sense_id.empty()) throw ParseError("empty lemma or sense id", lineno);
            if (lex.senses_.count(e.sense_id)) throw ParseError("duplicate sense id " + e.sense_id, lineno);
            lex.by_lemma_[e.lemma].push_back(e.sense_id);
            lex.order_.push_back(e.sense_id);
            lex.senses_.emplace(e.sense_id, std::move(e));
        }
        lex.resolve_chains();
        return lex;
    }

    static Lexicon parse(const std::string& text) {
        std::istringstream in(text);
        return parse(in);
    }

    static Lexicon load(const std::string& path) { return parse(read_file(path)); }

    const SenseEntry* sense(const std::string& id) const {
        auto it = senses_.find(id);
        return it == senses_.end() ? nullptr : &it->second;
    }

    /// Senses of a lemma in file order (most frequent first).
    const std::vector<std::string>& senses_of(const std::string& lemma) const {
        static const std::vector<std::string> none;
        auto it = by_lemma_.find(lemma);
        return it == by_lemma_.end() ? none : it->second;
    }

    /// The sense itself followed by its hypernym chain.
    std::vector<std::string> closure(const std::string& id) const {
        const SenseEntry* e = sense(id);
        if (!e) return {};
        std::vector<std::string> out{id};
        out.insert(out.end(), e->hypernyms.begin(), e->hypernyms.end());
        return out;
    }

    std::size_t depth(const std::string& id) const {
        const SenseEntry* e = sense(id);
        return e ? e->hypernyms.size() : 0;
    }

    std::size_t size() const { return senses_.size(); }

private:
    void resolve_chains() {
        for (auto& id : order_) {
            auto& e = senses_.at(id);
            std::set<std::string> seen{id};
            std::string cur = e.parent;
            while (!cur.empty()) {
                auto it = senses_.find(cur);
                if (it == senses_.end()) throw ValidationError("sense " + id + ": unknown hypernym " + cur);
                if (!seen.insert(cur).second) throw ValidationError("hypernym cycle through " + cur);
                e.hypernyms.push_back(cur);
                cur = it->second.parent;
            }
        }
    }

    std::map<std::string, SenseEntry> senses_;
    std::map<std::string, std::vector<std::string>> by_lemma_;
    std::vector<std::string> order_;
};

/// Content words of a gloss.
inline std::set<std::string> gloss_words(const std::string& gloss) {
    std::set<std::string> out;
    for (auto& w : words(gloss))
        if (!gloss_stop_words().count(w)) out.insert(w);
    return out;
}

/// Simplified Lesk: the sense whose gloss shares the most words with the context
/// bag; ties go to the earlier sense in lexicon order.
inline std::optional<std::string> disambiguate_lemma(const std::string& lemma, const std::set<std::string>& context,
                                                     const Lexicon& lex) {
    const auto& senses = lex.senses_of(lemma);
    if (senses.empty()) return std::nullopt;
    std::size_t best_overlap = 0;
    const std::string* best = &senses.front();
    for (const auto& id : senses) {
        std::size_t overlap = 0;
        for (auto& w : gloss_words(lex.sense(id)->gloss))
            if (context.count(w)) ++overlap;
        if (overlap > best_overlap) {
            best_overlap = overlap;
            best = &id;
        }
    }
    return *best;
}

/// Words and lemmas of the paragraphs mentioning `uri` or one of its sub-class descendants.
inline std::set<std::string> concept_context(const std::string& uri, const KnowledgeGraph& kg, const Corpus& corpus) {
    std::set<std::string> family{uri};
    std::vector<std::string> stack{uri};
    while (!stack.empty()) {
        auto u = stack.back();
        stack.pop_back();
        for (auto& c : kg.children_of(u))
            if (family.insert(c).second) stack.push_back(c);
    }
    std::set<std::string> sentence_ids;
    for (auto& u : family) {
        auto it = kg.concepts.find(u);
        if (it == kg.concepts.end()) continue;
        for (auto& m : it->second.source_mentions) sentence_ids.insert(m.sentence_id);
    }
    std::set<std::string> bag;
    for (auto& d : corpus.documents)
        for (auto& p : d.paragraphs) {
            bool hit = false;
            for (auto& s : p.sentences)
                if (sentence_ids.count(s.sentence_id)) hit = true;
            if (!hit) continue;
            for (auto& w : words(p.text)) bag.insert(w);
            for (auto& s : p.sentences)
                for (auto& t : s.tokens) bag.insert(to_lower(t.lemma));
        }
    return bag;
}

/// Sense of a concept: the whole uri is looked up first (lexicalized composites such
/// as bank_account), then the head lemma.
inline std::optional<std::string> disambiguate(const Concept& c, const std::set<std::string>& context, const Lexicon& lex) {
    if (auto s = disambiguate_lemma(c.uri, context, lex)) return s;
    if (!c.head_lemma.empty()) return disambiguate_lemma(c.head_lemma, context, lex);
    return std::nullopt;
}

inline std::map<std::string, std::string> disambiguate_all(const KnowledgeGraph& kg, const Corpus& corpus,
                                                           const Lexicon& lex) {
    std::map<std::string, std::string> out;
    for (auto& [uri, c] : kg.concepts)
        if (auto s = disambiguate(c, concept_context(uri, kg, corpus), lex)) out.emplace(uri, *s);
    return out;
}

/// Objects = concepts with a sense (uri order); attributes = union of hypernym closures (id order).
inline FormalContext build_formal_context(const std::map<std::string, std::string>& senses, const Lexicon& lex) {
    FormalContext ctx;
    std::set<std::string> attrs;
    for (auto& [uri, s] : senses) {
        ctx.objects.push_back(uri);
        for (auto& a : lex.closure(s)) attrs.insert(a);
    }
    ctx.attributes.assign(attrs.begin(), attrs.end());
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < ctx.attributes.size(); ++i) col[ctx.attributes[i]] = i;
    for (auto& [uri, s] : senses) {
        std::vector<bool> row(ctx.attributes.size(), false);
        for (auto& a : lex.closure(s)) row[col.at(a)] = true;
        ctx.incidence.push_back(std::move(row));
    }
    return ctx;
}

struct TaxonomyTree {
    std::string root_label;                          // sense id
    std::vector<std::string> nodes;                  // concept uris, sorted
    std::map<std::string, std::string> parent_of;    // child uri -> parent uri; top nodes absent
};

struct TaxonomyForest {
    std::vector<TaxonomyTree> trees;

    const TaxonomyTree* tree_of(const std::string& uri) const {
        for (auto& t : trees)
            if (std::binary_search(t.nodes.begin(), t.nodes.end(), uri)) return &t;
        return nullptr;
    }

    std::optional<std::string> parent(const std::string& uri) const {
        if (auto* t = tree_of(uri)) {
            auto it = t->parent_of.find(uri);
            if (it != t->parent_of.end()) return it->second;
        }
        return std::nullopt;
    }

    std::vector<std::string> children(const std::string& uri) const {
        std::vector<std::string> out;
        if (auto* t = tree_of(uri))
            for (auto& [c, p] : t->parent_of)
                if (p == uri) out.push_back(c);
        return out;
    }
};

/// Clusters objects sharing any attribute, roots each cluster at its most abstract
/// common hypernym, and derives parent links from a spanning tree of the cover relation.
inline TaxonomyForest lattice_to_forest(const std::vector<FormalConcept>& lattice, const FormalContext& ctx,
                                        const Lexicon& lex) {
    TaxonomyForest forest;
    const std::size_t n = ctx.n_objects();
    if (n == 0 || lattice.empty()) return forest;
    Derivation d(ctx);

    std::vector<std::size_t> uf(n);
    std::iota(uf.begin(), uf.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) { return uf[x] == x ? x : uf[x] = find(uf[x]); };
    std::vector<bool> covered(n, false);
    for (auto& c : lattice) {
        if (c.intent.empty() || c.extent.empty()) continue;
        for (int o : c.extent) covered[static_cast<std::size_t>(o)] = true;
        for (std::size_t k = 1; k < c.extent.size(); ++k) {
            auto a = find(static_cast<std::size_t>(c.extent[0])), b = find(static_cast<std::size_t>(c.extent[k]));
            if (a != b) uf[std::max(a, b)] = std::min(a, b);
        }
    }

    // Spanning tree of the Hasse diagram: each concept keeps its largest-extent upper cover.
    auto covers = upper_covers(lattice, n);
    std::vector<std::optional<std::size_t>> up(lattice.size());
    for (std::size_t i = 0; i < lattice.size(); ++i) {
        for (auto j : covers[i]) {
            if (!up[i]) {
                up[i] = j;
                continue;
            }
            auto& cur = lattice[*up[i]].extent;
            auto& cand = lattice[j].extent;
            if (cand.size() > cur.size() || (cand.size() == cur.size() && cand < cur)) up[i] = j;
        }
    }

    // Objects sharing an object concept share a sense. Their representative is the object
    // named by the sense's own lemma, else the shortest uri, else the smallest uri.
    std::map<std::vector<int>, std::size_t> index_of;
    for (std::size_t i = 0; i < lattice.size(); ++i) index_of[lattice[i].extent] = i;
    auto sense_lemma = [&](std::size_t concept_index) {
        std::string lemma;
        std::size_t deepest = 0;
        for (int a : lattice[concept_index].intent) {
            auto& id = ctx.attributes[static_cast<std::size_t>(a)];
            auto* e = lex.sense(id);
            if (e && (lemma.empty() || e->hypernyms.size() >= deepest)) {
                deepest = e->hypernyms.size();
                lemma = e->lemma;
            }
        }
        return lemma;
    };
    auto rep_key = [&](std::size_t o, const std::string& lemma) {
        const auto& uri = ctx.objects[o];
        return std::make_tuple(uri != lemma, uri.size(), uri);
    };
    std::vector<std::size_t> obj_concept(n);
    std::map<std::size_t, std::size_t> representative;
    for (std::size_t o = 0; o < n; ++o) {
        Bitset single(n);
        single.set(o);
        obj_concept[o] = index_of.at(d.close_extent(single).indices());
        auto it = representative.find(obj_concept[o]);
        if (it == representative.end()) {
            representative[obj_concept[o]] = o;
            continue;
        }
        auto lemma = sense_lemma(obj_concept[o]);
        if (rep_key(o, lemma) < rep_key(it->second, lemma)) it->second = o;
    }

    std::map<std::size_t, TaxonomyTree> by_cluster;
    for (std::size_t o = 0; o < n; ++o) {
        if (!covered[o]) continue;
        auto& tree = by_cluster[find(o)];
        tree.nodes.push_back(ctx.objects[o]);
        std::size_t rep = representative.at(obj_concept[o]);
        if (rep != o) {
            tree.parent_of[ctx.objects[o]] = ctx.objects[rep];
            continue;
        }
        for (auto cur = up[obj_concept[o]]; cur; cur = up[*cur]) {
            auto it = representative.find(*cur);
            if (it != representative.end()) {
                tree.parent_of[ctx.objects[o]] = ctx.objects[it->second];
                break;
            }
        }
    }

    for (auto& [root, tree] : by_cluster) {
        Bitset members(n);
        for (std::size_t o = 0; o < n; ++o)
            if (covered[o] && find(o) == root) members.set(o);
        auto shared = d.intent_of(members).indices();
        // Most abstract shared hypernym: shortest chain to a lexicon root; ties by id.
        std::string label;
        std::size_t best = SIZE_MAX;
        for (int a : shared) {
            auto& id = ctx.attributes[static_cast<std::size_t>(a)];
            auto dep = lex.depth(id);
            if (dep < best) {
                best = dep;
                label = id;
            }
        }
        tree.root_label = label;
        std::sort(tree.nodes.begin(), tree.nodes.end());
        forest.trees.push_back(std::move(tree));
    }
    std::sort(forest.trees.begin(), forest.trees.end(), [](const TaxonomyTree& a, const TaxonomyTree& b) {
        return std::tie(a.root_label, a.nodes) < std::tie(b.root_label, b.nodes);
    });
    return forest;
}

inline nlohmann::json to_json(const TaxonomyForest& f) {
    nlohmann::json trees = nlohmann::json::array();
    for (auto& t : f.trees) {
        nlohmann::json edges = nlohmann::json::array();
        for (auto& [c, p] : t.parent_of) edges.push_back({c, p});
        trees.push_back({{"root_label", t.root_label}, {"nodes", t.nodes}, {"parent_of", edges}});
    }
    return {{"trees", trees}};
}

inline TaxonomyForest forest_from_json(const nlohmann::json& j) {
    TaxonomyForest f;
    for (auto& t : j.at("trees")) {
        TaxonomyTree x;
        x.root_label = t.at("root_label");
        x.nodes = t.at("nodes").get<std::vector<std::string>>();
        for (auto& e : t.at("parent_of")) x.parent_of[e.at(0)] = e.at(1);
        f.trees.push_back(std::move(x));
    }
    return f;
}

}  // namespace xspace
