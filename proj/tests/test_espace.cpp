#include <gtest/gtest.h>

#include <chrono>
#include <random>

#include "oracles.hpp"
#include "support.hpp"

using namespace xspace;
using namespace xtest;

namespace {

LexicalModel tiny_lexicon() {
    LexicalModel m;
    m.lemma_of = {{"accounts", "account"}, {"banks", "bank"}};
    m.df = {{"account", 1}, {"bank", 1}, {"score", 1}, {"credit", 1}};
    return m;
}

OverviewCard card(const std::string& uri, const std::string& abstract, std::map<std::string, std::vector<std::string>> sections = {}) {
    OverviewCard c;
    c.uri = uri;
    c.label = uri;
    c.abstract_text = abstract;
    for (auto& [arch, texts] : sections)
        for (auto& t : texts) c.sections[arch].units.push_back({t, "p", "t", 1.0, arch, 0});
    return c;
}

InitialExplanation entry(const std::string& text) {
    InitialExplanation e;
    e.blocks.push_back({"context", {text, {}}});
    return e;
}

KnowledgeGraph kg_of(const std::vector<std::vector<std::string>>& lemma_seqs) {
    KnowledgeGraph kg;
    for (auto& l : lemma_seqs) {
        auto uri = assign_uri(l);
        kg.concepts[uri] = {uri, uri, l, l.back(), {}};
    }
    return kg;
}

}  // namespace

TEST(Betweenness, DirectedPath) {
    Digraph g(3);
    g.add_edge(0, 1);
    g.add_edge(1, 2);
    auto b = betweenness(g);
    EXPECT_EQ(b, (std::vector<double>{0, 1, 0}));
    EXPECT_EQ(brute_betweenness(g), b);
}

TEST(Betweenness, IsolatedNodeIsZero) {
    Digraph g(1);
    EXPECT_EQ(betweenness(g), std::vector<double>{0});
}

TEST(Betweenness, MatchesBruteForceOnRandomDigraphs) {
    std::mt19937 rng(99);
    auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < 80; ++i) {
        auto g = random_digraph(rng);
        auto fast = betweenness(g), slow = brute_betweenness(g);
        ASSERT_EQ(fast.size(), slow.size());
        for (std::size_t v = 0; v < fast.size(); ++v) ASSERT_NEAR(fast[v], slow[v], 1e-9) << "graph " << i << " node " << v;
    }
    EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 10.0);
}

TEST(Betweenness, SelfLoopsAndDuplicatesAreIgnored) {
    Digraph g(3);
    g.add_edge(0, 0);
    g.add_edge(0, 1);
    g.add_edge(0, 1);
    g.add_edge(1, 2);
    g.normalize();
    EXPECT_EQ(betweenness(g), (std::vector<double>{0, 1, 0}));
}

TEST(Matcher, LongestMatchWins) {
    auto lex = tiny_lexicon();
    ConceptMatcher m(&lex);
    m.add("bank", {"bank"});
    m.add("account", {"account"});
    m.add("bank_account", {"bank", "account"});
    auto links = m.match("She opened a bank account.");
    ASSERT_EQ(links.size(), 1u);
    EXPECT_EQ(links[0].uri, "bank_account");
    EXPECT_EQ(std::string("She opened a bank account.").substr(links[0].start, links[0].end - links[0].start), "bank account");
}

TEST(Matcher, LemmatizesAndSkipsDeterminers) {
    auto lex = tiny_lexicon();
    ConceptMatcher m(&lex);
    m.add("score_of_bank", {"score", "of", "bank"});
    std::string text = "The score of the banks rose.";
    auto links = m.match(text);
    ASSERT_EQ(links.size(), 1u);
    EXPECT_EQ(text.substr(links[0].start, links[0].end - links[0].start), "score of the banks");
}

TEST(Matcher, NoMentionNoLinks) {
    ConceptMatcher m;
    m.add("bank", {"bank"});
    EXPECT_TRUE(m.match("Nothing relevant here.").empty());
}

TEST(Matcher, LinksAreSortedAndDisjoint) {
    auto engine = xtest::engine("credit");
    for (auto& [u, c] : engine.cards())
        for (auto& [arch, s] : c.sections)
            for (auto& unit : s.units) {
                auto t = engine.annotate_text(unit.snippet);
                for (std::size_t i = 0; i < t.links.size(); ++i) {
                    EXPECT_LT(t.links[i].start, t.links[i].end);
                    EXPECT_LE(t.links[i].end, t.text.size());
                    if (i) EXPECT_LE(t.links[i - 1].end, t.links[i].start);
                    EXPECT_TRUE(engine.nodes().count(t.links[i].uri));
                }
            }
}

TEST(Assemble, NoCardsIsAnError) {
    ConceptMatcher m;
    EXPECT_THROW(assemble({}, m, entry("text"), {}, "yai4hu"), ValidationError);
}

TEST(Assemble, EmptyEntryIsAnError) {
    ConceptMatcher m;
    std::map<std::string, OverviewCard> cards{{"a", card("a", "x")}};
    EXPECT_THROW(assemble(cards, m, entry("  "), {}, "yai4hu"), ValidationError);
}

TEST(Assemble, OneMentionOneEdge) {
    ConceptMatcher m;
    m.add("alpha", {"alpha"});
    m.add("beta", {"beta"});
    std::map<std::string, OverviewCard> cards{{"alpha", card("alpha", "Alpha relates to beta.")}, {"beta", card("beta", "")}};
    auto es = assemble(cards, m, entry("alpha"), {}, "yai4hu");
    ASSERT_EQ(es.edges.size(), 1u);
    EXPECT_EQ(*es.edges.begin(), (EsEdge{"alpha", "beta", "abstract"}));
    EXPECT_EQ(es.entry.linked_uris(), std::set<std::string>{"alpha"});
}

TEST(Assemble, HiddenSectionsAddNoEdges) {
    ConceptMatcher m;
    m.add("alpha", {"alpha"});
    m.add("beta", {"beta"});
    std::map<std::string, OverviewCard> cards{{"alpha", card("alpha", "", {{"what", {"about beta"}}, {"why", {"because beta"}}})},
                                              {"beta", card("beta", "")}};
    auto es = assemble(cards, m, entry("alpha"), {"why"}, "hwn");
    ASSERT_EQ(es.edges.size(), 1u);
    EXPECT_EQ(es.edges.begin()->via, "why/0");
}

TEST(Filter, FrequentConceptIsRemoved) {
    auto kg = kg_of({{"day"}, {"credit"}, {"score"}});
    ExplanatorySpace es;
    es.nodes = {"credit", "day", "score"};
    es.edges = {{"credit", "day", "abstract"}, {"day", "score", "abstract"}};
    es.entry = entry("credit");
    auto b = centrality(es);
    EXPECT_EQ(b.at("day"), 1.0);
    auto r = filter_nodes(es, kg, {"day", "time"}, b, {});
    EXPECT_EQ(r.removed.at("day"), "frequent");
    EXPECT_FALSE(r.es.nodes.count("day"));
    for (auto& e : r.es.edges) EXPECT_TRUE(e.from != "day" && e.to != "day");
}

TEST(Filter, CompositeWithOneRareLemmaSurvivesRuleA) {
    auto kg = kg_of({{"credit", "day"}, {"alpha"}, {"beta"}});
    ExplanatorySpace es;
    es.nodes = {"alpha", "beta", "credit_day"};
    es.edges = {{"alpha", "credit_day", "abstract"}, {"credit_day", "beta", "abstract"}};
    auto r = filter_nodes(es, kg, {"day"}, centrality(es), {});
    EXPECT_TRUE(r.es.nodes.count("credit_day"));
}

TEST(Filter, HubRetainedLeavesRemovedEntryExempt) {
    auto kg = kg_of({{"hub"}, {"x"}, {"y"}, {"z"}});
    ExplanatorySpace es;
    es.nodes = {"hub", "x", "y", "z"};
    es.edges = {{"x", "hub", "abstract"}, {"y", "hub", "abstract"}, {"hub", "z", "abstract"}};
    ConceptMatcher m;
    m.add("x", {"x"});
    es.entry = entry("see x");
    es.entry.annotate_with(m);
    std::map<std::string, OverviewCard> cards{{"x", card("x", "x goes to hub")}, {"y", card("y", "")}, {"hub", card("hub", "")}, {"z", card("z", "")}};
    auto r = filter_nodes(es, kg, {}, centrality(es), cards);
    EXPECT_TRUE(r.es.nodes.count("hub"));
    EXPECT_TRUE(r.es.nodes.count("x"));  // zero betweenness, but linked from the entry with content
    EXPECT_EQ(r.removed.at("y"), "betweenness");
    EXPECT_EQ(r.removed.at("z"), "betweenness");
}

TEST(Filter, FixturePostconditions) {
    for (auto theme : {"credit", "heart"}) {
        auto b = nlohmann::json::parse(xtest::built(theme).text());
        auto freq = FrequencyTable::load(xtest::src("data/freq/en_freq.tsv")).top(xtest::default_config().top_f);
        auto engine = xtest::engine(theme);
        auto entry_uris = engine.entry().linked_uris();
        for (auto& u : engine.nodes()) {
            const auto& lemmas = engine.kg().concept_at(u).lemma_seq;
            bool all = std::all_of(lemmas.begin(), lemmas.end(), [&](const std::string& l) { return freq.count(l) > 0; });
            EXPECT_FALSE(all) << u;
            double bc = b["espace"]["betweenness"][u].get<double>();
            if (bc == 0.0) EXPECT_TRUE(entry_uris.count(u) && engine.cards().at(u).has_content()) << u;
        }
        for (auto& e : engine.edges()) EXPECT_TRUE(engine.nodes().count(e.from) && engine.nodes().count(e.to));
        for (auto& u : entry_uris) EXPECT_TRUE(engine.nodes().count(u));
    }
}

TEST(Filter, FixtureNodesNeverDeadEnd) {
    for (auto theme : {"credit", "heart"}) {
        auto engine = xtest::engine(theme);
        for (auto& u : engine.nodes()) {
            auto& c = engine.cards().at(u);
            bool linked = !c.super_classes.empty() || !c.sub_classes.empty() || !c.sub_types.empty() || !c.type_labels.empty();
            EXPECT_TRUE(c.has_content() || linked) << u;
        }
        EXPECT_TRUE(xtest::built(theme).warnings.empty());
    }
}

TEST(Filter, FixtureSurvivorsAndEntryLinksMatchGolden) {
    auto golden = nlohmann::json::parse(read_file(xtest::src("tests/golden/espace.json")));
    for (auto& [theme, g] : golden.items()) {
        auto engine = xtest::engine(theme);
        EXPECT_EQ(nlohmann::json(engine.nodes()), g.at("survivors")) << theme;
        EXPECT_EQ(nlohmann::json(engine.entry().linked_uris()), g.at("entry_links")) << theme;
        EXPECT_EQ(engine.edges().size(), g.at("surviving_edges").get<std::size_t>()) << theme;
    }
}

TEST(Filter, HwnReachableSubsetOfYai4hu) {
    for (auto theme : {"credit", "heart"}) {
        auto reach = [](const QueryEngine& e) {
            std::set<std::string> seen = e.entry().linked_uris();
            std::vector<std::string> stack(seen.begin(), seen.end());
            while (!stack.empty()) {
                auto u = stack.back();
                stack.pop_back();
                for (auto& ed : e.edges())
                    if (ed.from == u && seen.insert(ed.to).second) stack.push_back(ed.to);
            }
            return seen;
        };
        auto hwn = reach(xtest::engine(theme, "hwn")), yai = reach(xtest::engine(theme, "yai4hu"));
        for (auto& u : hwn) EXPECT_TRUE(yai.count(u)) << theme << ": " << u;
    }
}

TEST(FrequencyTable, ParsesAndRanks) {
    std::istringstream in("the\t100\nbank\t50\n\nday\t10\n");
    auto t = FrequencyTable::parse(in);
    EXPECT_EQ(t.size(), 3u);
    EXPECT_EQ(t.top(2), (std::set<std::string>{"bank", "the"}));
}

TEST(FrequencyTable, UnsortedInputReportsLine) {
    std::istringstream in("the\t100\nday\t500\n");
    try {
        FrequencyTable::parse(in);
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}
