#pragma once

// The explanatory space: overview cards as nodes, annotation links as edges,
// frequency/centrality node filtering, and longest-match text annotation.

#include <algorithm>
#include <cstddef>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "xspace/error.hpp"
#include "xspace/graph.hpp"
#include "xspace/kg.hpp"
#include "xspace/overview.hpp"
#include "xspace/pertinence.hpp"
#include "xspace/text.hpp"

namespace xspace {

struct Link {
    std::size_t start = 0;  // byte offsets, end exclusive
    std::size_t end = 0;
    std::string uri;
    friend bool operator==(const Link&, const Link&) = default;
};

struct AnnotatedText {
    std::string text;
    std::vector<Link> links;  // sorted, non-overlapping
};

/// Finds concept mentions in free text by lemma sequence. Determiners may be skipped
/// inside a match ("credit score of the applicant" matches credit_score_of_applicant).
class ConceptMatcher {
public:
    ConceptMatcher(const LexicalModel* lexicon = nullptr, std::set<std::string> determiners = SyntagmGrammar{}.determiners)
        : lexicon_(lexicon), determiners_(std::move(determiners)) {}

    void add(const std::string& uri, const std::vector<std::string>& lemmas) {
        if (lemmas.empty()) return;
        entries_[lemmas.front()].push_back({lemmas, uri});
    }

    /// All matches, then greedy selection: longest span first, then leftmost.
    std::vector<Link> match(const std::string& text) const {
        auto spans = word_spans(text);
        std::vector<std::string> lemmas;
        for (auto& w : spans) lemmas.push_back(lexicon_ ? lexicon_->lemmatize(w.word) : w.word);
        std::vector<Link> found;
        for (std::size_t i = 0; i < spans.size(); ++i) {
            auto it = entries_.find(lemmas[i]);
            if (it == entries_.end()) continue;
            for (auto& e : it->second) {
                std::size_t j = i, k = 0;
                while (k < e.lemmas.size() && j < spans.size()) {
                    if (lemmas[j] == e.lemmas[k]) {
                        ++j;
                        ++k;
                    } else if (k > 0 && determiners_.count(spans[j].word)) {
                        ++j;
                    } else {
                        break;
                    }
                }
                if (k == e.lemmas.size()) found.push_back({spans[i].begin, spans[j - 1].end, e.uri});
            }
        }
        std::sort(found.begin(), found.end(), [](const Link& a, const Link& b) {
            auto la = a.end - a.start, lb = b.end - b.start;
            if (la != lb) return la > lb;
            if (a.start != b.start) return a.start < b.start;
            return a.uri < b.uri;
        });
        std::vector<Link> chosen;
        for (auto& l : found) {
            bool clash = false;
            for (auto& c : chosen)
                if (l.start < c.end && c.start < l.end) clash = true;
            if (!clash) chosen.push_back(l);
        }
        std::sort(chosen.begin(), chosen.end(), [](const Link& a, const Link& b) { return a.start < b.start; });
        return chosen;
    }

private:
    struct Entry {
        std::vector<std::string> lemmas;
        std::string uri;
    };
    const LexicalModel* lexicon_;
    std::set<std::string> determiners_;
    std::map<std::string, std::vector<Entry>> entries_;
};

inline AnnotatedText annotate(const std::string& text, const ConceptMatcher& matcher) {
    return {text, matcher.match(text)};
}

/// Matcher over a set of concepts of the graph.
inline ConceptMatcher make_matcher(const KnowledgeGraph& kg, const std::set<std::string>& uris, const LexicalModel* lexicon,
                                   const SyntagmGrammar& g = {}) {
    ConceptMatcher m(lexicon, g.determiners);
    for (auto& u : uris)
        if (auto it = kg.concepts.find(u); it != kg.concepts.end()) m.add(u, it->second.lemma_seq);
    return m;
}

struct EntryBlock {
    std::string kind;  // context, input, output, explanation, ...
    AnnotatedText text;
};

/// The authored first-level explanation.
struct InitialExplanation {
    std::string title;
    std::vector<EntryBlock> blocks;

    static InitialExplanation from_json(const nlohmann::json& j) {
        InitialExplanation e;
        e.title = j.value("title", "");
        for (auto& b : j.at("blocks")) e.blocks.push_back({b.value("kind", "text"), {b.at("text").get<std::string>(), {}}});
        return e;
    }

    bool empty() const {
        for (auto& b : blocks)
            if (has_word_char(b.text.text)) return false;
        return true;
    }

    std::set<std::string> linked_uris() const {
        std::set<std::string> out;
        for (auto& b : blocks)
            for (auto& l : b.text.links) out.insert(l.uri);
        return out;
    }

    void annotate_with(const ConceptMatcher& m) {
        for (auto& b : blocks) b.text.links = m.match(b.text.text);
    }
};

struct EsEdge {
    std::string from;
    std::string to;
    std::string via;  // "abstract" or "<archetype>/<unit index>"
    auto operator<=>(const EsEdge&) const = default;
};

struct ExplanatorySpace {
    std::set<std::string> nodes;
    std::set<EsEdge> edges;
    InitialExplanation entry;
    std::string profile;

    std::set<std::string> successors(const std::string& uri) const {
        std::set<std::string> out;
        for (auto& e : edges)
            if (e.from == uri) out.insert(e.to);
        return out;
    }
};

/// Texts a card shows under a set of visible archetypes, keyed by their edge `via`.
inline std::vector<std::pair<std::string, std::string>> shown_texts(const OverviewCard& card,
                                                                    const std::set<std::string>& visible) {
    std::vector<std::pair<std::string, std::string>> out;
    if (!card.abstract_text.empty()) out.emplace_back("abstract", card.abstract_text);
    for (auto& [arch, sec] : card.sections) {
        if (!visible.count(arch)) continue;
        for (std::size_t i = 0; i < sec.units.size(); ++i) out.emplace_back(arch + "/" + std::to_string(i), sec.units[i].snippet);
    }
    return out;
}

/// One node per card; an edge A -> B for every mention of B in a text shown on A's card.
inline ExplanatorySpace assemble(const std::map<std::string, OverviewCard>& cards, const ConceptMatcher& matcher,
                                 InitialExplanation entry, const std::set<std::string>& visible, std::string profile) {
    if (cards.empty()) throw ValidationError("no cards: the explanatory space would be empty");
    if (entry.empty()) throw ValidationError("initial explanation is empty");
    ExplanatorySpace es;
    es.profile = std::move(profile);
    for (auto& [uri, _] : cards) es.nodes.insert(uri);
    for (auto& [uri, card] : cards)
        for (auto& [via, text] : shown_texts(card, visible))
            for (auto& l : matcher.match(text))
                if (l.uri != uri && es.nodes.count(l.uri)) es.edges.insert({uri, l.uri, via});
    entry.annotate_with(matcher);
    es.entry = std::move(entry);
    return es;
}

/// Betweenness of every node of the space.
inline std::map<std::string, double> centrality(const ExplanatorySpace& es) {
    std::vector<std::string> ids(es.nodes.begin(), es.nodes.end());
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = i;
    Digraph g(ids.size());
    for (auto& e : es.edges) g.add_edge(index.at(e.from), index.at(e.to));
    g.normalize();
    auto b = betweenness(g);
    std::map<std::string, double> out;
    for (std::size_t i = 0; i < ids.size(); ++i) out[ids[i]] = b[i];
    return out;
}

/// Reference-corpus word frequencies, `word<TAB>count`, sorted by count descending.
class FrequencyTable {
public:
    static FrequencyTable parse(std::istream& in) {
        FrequencyTable t;
        std::string line;
        std::size_t lineno = 0;
        long long prev = -1;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || line[0] == '#') continue;
            auto tab = line.find('\t');
            if (tab == std::string::npos) throw ParseError("expected word<TAB>count", lineno);
            long long count = 0;
            try {
                std::size_t used = 0;
                count = std::stoll(line.substr(tab + 1), &used);
                if (used != line.size() - tab - 1) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw ParseError("count is not an integer", lineno);
            }
            if (prev >= 0 && count > prev) throw ParseError("frequency table not sorted by count descending", lineno);
            prev = count;
            t.words_.push_back(to_lower(line.substr(0, tab)));
        }
        return t;
    }

    static FrequencyTable load(const std::string& path) {
        std::istringstream in(read_file(path));
        return parse(in);
    }

    /// The `f` most frequent words.
    std::set<std::string> top(std::size_t f) const {
        return {words_.begin(), words_.begin() + static_cast<std::ptrdiff_t>(std::min(f, words_.size()))};
    }

    std::size_t size() const { return words_.size(); }

private:
    std::vector<std::string> words_;
};

struct FilterResult {
    ExplanatorySpace es;
    std::map<std::string, std::string> removed;  // uri -> "frequent" | "betweenness"
};

/// Removes (a) concepts whose every lemma is a top-frequency word and (b) concepts
/// with zero pre-filter betweenness, except entry concepts with non-empty cards.
inline FilterResult filter_nodes(const ExplanatorySpace& es, const KnowledgeGraph& kg, const std::set<std::string>& frequent,
                                 const std::map<std::string, double>& centrality_scores,
                                 const std::map<std::string, OverviewCard>& cards) {
    FilterResult r;
    auto entry_uris = es.entry.linked_uris();
    for (auto& uri : es.nodes) {
        const auto& lemmas = kg.concept_at(uri).lemma_seq;
        bool all_frequent = !lemmas.empty() && std::all_of(lemmas.begin(), lemmas.end(), [&](const std::string& l) { return frequent.count(l) > 0; });
        if (all_frequent) {
            r.removed[uri] = "frequent";
            continue;
        }
        auto c = centrality_scores.find(uri);
        bool zero = c == centrality_scores.end() || c->second == 0.0;
        auto card = cards.find(uri);
        bool exempt = entry_uris.count(uri) && card != cards.end() && card->second.has_content();
        if (zero && !exempt) r.removed[uri] = "betweenness";
    }
    r.es.profile = es.profile;
    r.es.entry = es.entry;
    for (auto& u : es.nodes)
        if (!r.removed.count(u)) r.es.nodes.insert(u);
    for (auto& e : es.edges)
        if (r.es.nodes.count(e.from) && r.es.nodes.count(e.to)) r.es.edges.insert(e);
    return r;
}

inline nlohmann::json to_json(const AnnotatedText& t) {
    nlohmann::json links = nlohmann::json::array();
    for (auto& l : t.links) links.push_back({{"start", l.start}, {"end", l.end}, {"uri", l.uri}});
    return {{"text", t.text}, {"links", links}};
}

inline AnnotatedText annotated_from_json(const nlohmann::json& j) {
    AnnotatedText t{j.at("text"), {}};
    for (auto& l : j.at("links")) t.links.push_back({l.at("start"), l.at("end"), l.at("uri")});
    return t;
}

}  // namespace xspace
