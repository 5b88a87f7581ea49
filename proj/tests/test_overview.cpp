#include <gtest/gtest.h>

#include "oracles.hpp"
#include "support.hpp"

using namespace xspace;
using namespace xtest;

namespace {

ArchetypeCatalog catalog() {
    return ArchetypeCatalog::from_json(nlohmann::json::parse(read_file(xtest::src("data/profiles/yai4hu.json"))));
}

std::vector<AnswerUnit> units(std::size_t n) {
    std::vector<AnswerUnit> u;
    for (std::size_t i = 0; i < n; ++i) u.push_back({"Unit " + std::to_string(i) + ". Tail text.", "p", "t", 1.0, "what", i});
    return u;
}

std::vector<Candidate> candidates(std::size_t n) {
    std::vector<Candidate> c;
    for (std::size_t i = 0; i < n; ++i) c.push_back({"snippet " + std::to_string(i), "p0", "t" + std::to_string(i)});
    return c;
}

}  // namespace

TEST(Catalog, SortedByPriorityAndValidated) {
    auto c = catalog();
    ASSERT_EQ(c.archetypes.size(), 7u);
    EXPECT_EQ(c.archetypes.front().id, "what");
    EXPECT_EQ(c.archetypes.back().id, "when");
    EXPECT_THROW(ArchetypeCatalog::from_json(nlohmann::json::parse(R"([{"id":"a","priority":0,"templates":["no slot"]}])")), ValidationError);
    EXPECT_THROW(ArchetypeCatalog::from_json(nlohmann::json::parse(R"([{"id":"a","priority":0,"templates":[]}])")), ValidationError);
    EXPECT_THROW(ArchetypeCatalog::from_json(
                     nlohmann::json::parse(R"([{"id":"a","priority":0,"templates":["{X}?"]},{"id":"b","priority":0,"templates":["{X}?"]}])")),
                 ValidationError);
    EXPECT_EQ(c.archetypes[1].realize("a stroke"), "Why a stroke?");
}

TEST(Candidates, SubclassTriplesAreIncluded) {
    auto kg = build_kg(load_corpus(xtest::src("data/credit/manifest.json")));
    auto cands = collect_candidates("account", kg);
    std::set<std::string> snippets;
    for (auto& c : cands) snippets.insert(c.snippet);
    for (auto& t : kg.triples)
        if (t.subj == "bank_account" || t.obj == "bank_account") EXPECT_TRUE(snippets.count(t.realize())) << t.realize();
    EXPECT_EQ(snippets.size(), cands.size());
    EXPECT_THROW(collect_candidates("no_such_concept", kg), InvalidArgument);
}

TEST(Candidates, IsolatedConceptHasNone) {
    KnowledgeGraph kg;
    kg.concepts["lonely"] = {"lonely", "lonely", {"lonely"}, "lonely", {}};
    EXPECT_TRUE(collect_candidates("lonely", kg).empty());
}

TEST(Candidates, CholesterolCountMatchesGolden) {
    auto golden = nlohmann::json::parse(read_file(xtest::src("tests/golden/kg_counts.json")));
    auto kg = build_kg(load_corpus(xtest::src("data/heart/manifest.json")));
    EXPECT_EQ(collect_candidates("cholesterol", kg).size(), golden.at("heart").at("cholesterol_candidates").get<std::size_t>());
}

TEST(Sweep, NothingAboveThresholdLeavesSectionsEmpty) {
    auto cat = catalog();
    auto cands = candidates(4);
    ScoreTable t(cat.archetypes.size(), std::vector<double>(4, 0.1));
    for (auto& [_, v] : cluster_by_archetype(cands, cat, t, {})) EXPECT_TRUE(v.empty());
}

TEST(Sweep, EarlierPriorityWinsACandidate) {
    auto cat = catalog();
    auto cands = candidates(1);
    ScoreTable t(cat.archetypes.size(), std::vector<double>(1, 0.0));
    t[0][0] = 0.4;  // what
    t[3][0] = 0.9;  // how
    auto cl = cluster_by_archetype(cands, cat, t, {});
    EXPECT_EQ(cl["what"].size(), 1u);
    EXPECT_TRUE(cl["how"].empty());
}

TEST(Sweep, SixCandidatesMatchReferenceSweep) {
    auto cat = catalog();
    auto cands = candidates(6);
    ScoreTable t{{0.10, 0.20, 0.05, 0.16, 0.00, 0.15},  // what
                 {0.30, 0.10, 0.40, 0.50, 0.00, 0.90},  // why
                 {0.00, 0.00, 0.00, 0.00, 0.00, 0.00},  // what-for
                 {0.90, 0.90, 0.90, 0.90, 0.14, 0.90},  // how
                 {0.00, 0.00, 0.00, 0.00, 0.15, 0.00},  // who
                 {0.00, 0.00, 0.00, 0.00, 0.00, 0.00},  // where
                 {0.00, 0.00, 0.00, 0.00, 0.00, 0.00}};
    SweepSettings st;
    auto got = cluster_by_archetype(cands, cat, t, st);
    auto want = reference_sweep(t, cat, st);
    for (auto& [arch, idx] : want) {
        std::vector<std::size_t> g;
        for (auto& u : got[arch]) g.push_back(u.candidate);
        EXPECT_EQ(g, idx) << arch;
    }
    EXPECT_EQ(want["what"], (std::vector<std::size_t>{1, 3, 5}));
    EXPECT_EQ(want["why"], (std::vector<std::size_t>{2, 0}));
    EXPECT_EQ(want["who"], (std::vector<std::size_t>{4}));
}

TEST(Sweep, PerArchetypeThresholds) {
    auto cat = catalog();
    auto cands = candidates(1);
    ScoreTable t(cat.archetypes.size(), std::vector<double>(1, 0.2));
    SweepSettings st{0.15, {{"what", 0.5}}};
    auto cl = cluster_by_archetype(cands, cat, t, st);
    EXPECT_TRUE(cl["what"].empty());
    EXPECT_EQ(cl["why"].size(), 1u);
}

TEST(Sweep, MalformedScoreTableIsRejected) {
    auto cat = catalog();
    EXPECT_THROW(cluster_by_archetype(candidates(2), cat, ScoreTable(2, std::vector<double>(2)), {}), InvalidArgument);
}

TEST(Sweep, FixtureCardsMatchReferenceAndInvariants) {
    auto cfg = xtest::default_config();
    auto corpus = load_corpus(xtest::src("data/credit/manifest.json"));
    auto kg = build_kg(corpus);
    auto cat = catalog();
    auto lm = make_lexical_model(corpus, cfg, cat);
    LexicalProvider provider(lm);
    ArchetypeScorer scorer{&provider, lm.get(), cfg.mask_aspect};
    auto ptext = paragraph_texts(corpus);
    SweepSettings st{cfg.theta, cfg.theta_per_archetype};
    auto engine = xtest::engine("credit");
    std::size_t checked = 0;
    for (auto& [uri, c] : kg.concepts) {
        auto cands = collect_candidates(uri, kg);
        auto table = scorer.score(c, cands, cat, ptext);
        auto want = reference_sweep(table, cat, st);
        const auto& card = engine.cards().at(uri);
        std::set<std::string> seen;
        for (std::size_t a = 0; a < cat.archetypes.size(); ++a) {
            const auto& arch = cat.archetypes[a].id;
            const auto& got = card.sections.at(arch).units;
            ASSERT_EQ(got.size(), want[arch].size()) << uri << "/" << arch;
            for (std::size_t i = 0; i < got.size(); ++i) {
                EXPECT_EQ(got[i].snippet, cands[want[arch][i]].snippet);
                EXPECT_TRUE(seen.insert(got[i].snippet).second) << "snippet in two sections: " << got[i].snippet;
                EXPECT_GE(got[i].score, st.threshold(arch));
                if (i) EXPECT_GE(got[i - 1].score, got[i].score);
            }
        }
        // Unassigned candidates scored below the threshold of every archetype.
        for (std::size_t ci = 0; ci < cands.size(); ++ci)
            if (!seen.count(cands[ci].snippet))
                for (std::size_t a = 0; a < cat.archetypes.size(); ++a) EXPECT_LT(table[a][ci], st.threshold(cat.archetypes[a].id));
        ++checked;
    }
    EXPECT_EQ(checked, kg.concepts.size());
}

TEST(SummaryTree, EmptyUnitsGiveEmptyTree) { EXPECT_TRUE(build_summary_tree({}, 3).empty()); }

TEST(SummaryTree, SingleUnitIsTheRoot) {
    auto t = build_summary_tree(units(1), 3);
    ASSERT_FALSE(t.empty());
    EXPECT_EQ(t.height(), 0u);
    EXPECT_EQ(t.nodes[*t.root].unit, std::optional<std::size_t>(0));
}

TEST(SummaryTree, NineUnitsThreeWide) {
    auto t = build_summary_tree(units(9), 3);
    EXPECT_EQ(t.height(), 2u);
    std::size_t internal = 0;
    for (auto& n : t.nodes) internal += n.children.empty() ? 0 : 1;
    EXPECT_EQ(internal, 4u);  // three group nodes plus the root
    EXPECT_EQ(t.nodes[*t.root].children.size(), 3u);
    EXPECT_EQ(t.leaf_units(), (std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8}));
}

TEST(SummaryTree, FiveUnitsSplitThreeAndTwo) {
    auto t = build_summary_tree(units(5), 3);
    const auto& root = t.nodes[*t.root];
    ASSERT_EQ(root.children.size(), 2u);
    EXPECT_EQ(t.nodes[root.children[0]].children.size(), 3u);
    EXPECT_EQ(t.nodes[root.children[1]].children.size(), 2u);
    EXPECT_EQ(root.id, "r");
    EXPECT_EQ(t.nodes[root.children[1]].id, "r.1");
    EXPECT_NE(t.find("r.1.1"), nullptr);
}

TEST(SummaryTree, ParentsJoinFirstSentences) {
    auto t = build_summary_tree(units(2), 3);
    EXPECT_EQ(t.nodes[*t.root].text, "Unit 0. Unit 1.");
}

TEST(SummaryTree, GroupSizeBelowTwoIsRejected) { EXPECT_THROW(build_summary_tree(units(3), 1), InvalidArgument); }

TEST(SummaryTree, SummariesRespectTheBudget) {
    std::vector<AnswerUnit> u;
    for (int i = 0; i < 6; ++i) u.push_back({std::string(100, 'a') + " word word word", "p", "t", 1, "what", 0});
    auto t = build_summary_tree(u, 3, 60);
    for (auto& n : t.nodes)
        if (!n.children.empty()) EXPECT_LE(n.text.size(), 63u);
}

TEST(Text, TruncationNeverSplitsUtf8) {
    std::string s = "caf\xc3\xa9 caf\xc3\xa9 caf\xc3\xa9";
    for (std::size_t b = 1; b < s.size(); ++b) {
        auto t = truncate_text(s, b);
        // A truncated string never ends inside a multi-byte sequence.
        auto body = t.size() >= 3 && t.compare(t.size() - 3, 3, "...") == 0 ? t.substr(0, t.size() - 3) : t;
        if (!body.empty()) EXPECT_NE(static_cast<unsigned char>(body.back()), 0xc3u) << b;
    }
    EXPECT_EQ(first_sentence("One. Two."), "One.");
    EXPECT_EQ(first_sentence("No stop"), "No stop");
}

TEST(Card, BankAccountSuperClasses) {
    auto engine = xtest::engine("credit");
    const auto& c = engine.cards().at("bank_account");
    std::set<std::string> sup(c.super_classes.begin(), c.super_classes.end());
    EXPECT_TRUE(sup.count("bank"));
    EXPECT_TRUE(sup.count("account"));
}

TEST(Card, AbstractIsTheTopWhatUnit) {
    auto engine = xtest::engine("credit");
    for (auto& [u, c] : engine.cards()) {
        const auto& what = c.sections.at("what").units;
        EXPECT_EQ(c.abstract_text, what.empty() ? "" : what.front().snippet) << u;
    }
}

TEST(Card, BareConceptHasOnlyLabel) {
    KnowledgeGraph kg;
    kg.concepts["lonely"] = {"lonely", "lonely", {"lonely"}, "lonely", {}};
    auto card = compose_overview("lonely", kg, TaxonomyForest{}, {{"what", {}}, {"why", {}}});
    EXPECT_EQ(card.label, "lonely");
    EXPECT_FALSE(card.has_content());
    EXPECT_TRUE(card.type_labels.empty());
    EXPECT_TRUE(card.sections.at("what").tree.empty());
}

TEST(OpenQa, InquiryQuestionTopAnswerFromInquiryParagraph) {
    auto engine = xtest::engine("credit");
    auto answers = engine.ask_raw("What is an inquiry?", 10);
    ASSERT_FALSE(answers.empty());
    EXPECT_NE(to_lower(answers.front().snippet).find("inquir"), std::string::npos) << answers.front().snippet;
    for (std::size_t i = 1; i < answers.size(); ++i) EXPECT_GE(answers[i - 1].score, answers[i].score);
}

TEST(OpenQa, EmptyQuestionIsRejected) {
    auto engine = xtest::engine("credit");
    EXPECT_THROW(engine.ask_raw("   ", 5), InvalidArgument);
}

TEST(OpenQa, ResultCountIsCapped) {
    auto engine = xtest::engine("credit");
    EXPECT_LE(engine.ask_raw("credit score", 3).size(), 3u);
}
