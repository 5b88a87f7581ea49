#include <gtest/gtest.h>

#include <algorithm>

#include "support.hpp"

using namespace xspace;

namespace {

Sentence customer() { return parse_conllu(read_file(xtest::src("tests/data/customer.conllu"))).at(0); }

std::vector<Syntagm> maximal(const Sentence& s) {
    std::vector<Syntagm> out;
    for (auto& sy : extract_syntagms(s))
        if (sy.kind == SyntagmKind::maximal) out.push_back(sy);
    return out;
}

}  // namespace

TEST(Uri, JoinsLemmasWithoutDeterminers) {
    EXPECT_EQ(assign_uri({"bank", "account"}), "bank_account");
    EXPECT_EQ(assign_uri({"the", "applicable", "law"}), "applicable_law");
    EXPECT_THROW(assign_uri({"the"}), InvalidArgument);
    EXPECT_THROW(assign_uri({}), InvalidArgument);
}

TEST(Syntagm, CustomerSentenceHasSubjectAndObjectPhrases) {
    auto m = maximal(customer());
    std::vector<std::string> labels;
    for (auto& s : m) labels.push_back(s.label);
    EXPECT_NE(std::find(labels.begin(), labels.end(), "the customer"), labels.end());
    EXPECT_NE(std::find(labels.begin(), labels.end(), "a new bank account"), labels.end());
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = i + 1; j < m.size(); ++j) EXPECT_FALSE(m[i].overlaps(m[j]));
}

TEST(Syntagm, NestedCoresAreExtracted) {
    std::set<std::string> uris;
    for (auto& s : extract_syntagms(customer())) uris.insert(assign_uri(s.lemmas));
    EXPECT_TRUE(uris.count("bank_account"));
    EXPECT_TRUE(uris.count("customer"));
}

TEST(Syntagm, ApplicableLawExampleCandidates) {
    auto corpus = load_corpus(xtest::src("data/credit/manifest.json"));
    const Sentence* s = xtest::find_sentence(corpus, "regulation_p0_s0");
    ASSERT_NE(s, nullptr);
    std::set<std::string> labels;
    for (auto& sy : extract_syntagms(*s)) labels.insert(sy.label);
    EXPECT_TRUE(labels.count("the applicable law"));
    EXPECT_TRUE(labels.count("that Member State"));
}

TEST(Triples, CustomerOpenedBankAccount) {
    auto s = customer();
    auto triples = build_template_triples(s, maximal(s));
    auto it = std::find_if(triples.begin(), triples.end(), [](const TemplateTriple& t) { return t.subj == "customer"; });
    ASSERT_NE(it, triples.end());
    EXPECT_EQ(it->template_text, "{subj} opened {obj}");
    EXPECT_EQ(it->obj, "new_bank_account");
    EXPECT_EQ(it->realize(), s.text);
}

TEST(Triples, SurprisinglyTemplateVerbatim) {
    auto kg = build_kg(load_corpus(xtest::src("data/credit/manifest.json")));
    auto it = std::find_if(kg.triples.begin(), kg.triples.end(), [](const TemplateTriple& t) {
        return t.subj_label == "the applicable law" && t.obj_label == "that Member State";
    });
    ASSERT_NE(it, kg.triples.end());
    EXPECT_EQ(it->template_text, "Surprisingly {subj} is considered to be clearly more related to {obj} rather than to something else.");
    EXPECT_EQ(it->subj, "applicable_law");
    EXPECT_EQ(it->obj, "member_state");
}

TEST(Triples, EveryTripleRealizesItsSupportingTokens) {
    for (auto theme : {"credit", "heart"}) {
        auto corpus = load_corpus(xtest::src(std::string("data/") + theme + "/manifest.json"));
        auto kg = build_kg(corpus);
        ASSERT_FALSE(kg.triples.empty());
        for (auto& t : kg.triples) {
            const Sentence* s = xtest::find_sentence(corpus, t.source.sentence_id);
            ASSERT_NE(s, nullptr);
            std::vector<const Token*> toks;
            for (int i : t.token_support) toks.push_back(&s->token(i));
            EXPECT_EQ(t.realize(), detokenize(toks)) << t.id;
        }
    }
}

TEST(Triples, SingleSyntagmYieldsNothing) {
    auto s = customer();
    auto m = maximal(s);
    m.resize(1);
    EXPECT_TRUE(build_template_triples(s, m).empty());
}

TEST(Subclass, CompositeLinksToItsParts) {
    KnowledgeGraph kg;
    kg.concepts["bank_account"] = {"bank_account", "bank account", {"bank", "account"}, "account", {}};
    add_subclass_edges(kg);
    EXPECT_TRUE(kg.subclass_edges.count({"bank_account", "bank"}));
    EXPECT_TRUE(kg.subclass_edges.count({"bank_account", "account"}));
    EXPECT_TRUE(kg.concepts.count("bank"));
    EXPECT_TRUE(kg.concepts.count("account"));
}

TEST(Subclass, SingleLemmaGraphUnchanged) {
    KnowledgeGraph kg;
    kg.concepts["bank"] = {"bank", "bank", {"bank"}, "bank", {}};
    kg.concepts["loan"] = {"loan", "loan", {"loan"}, "loan", {}};
    add_subclass_edges(kg);
    EXPECT_TRUE(kg.subclass_edges.empty());
    EXPECT_EQ(kg.concepts.size(), 2u);
}

TEST(Subclass, StopWordsAreDropped) {
    KnowledgeGraph kg;
    kg.concepts["home_equity_line_of_credit"] = {
        "home_equity_line_of_credit", "home equity line of credit", {"home", "equity", "line", "of", "credit"}, "line", {}};
    add_subclass_edges(kg);
    std::set<std::pair<std::string, std::string>> expected{{"home_equity_line_of_credit", "home"},
                                                           {"home_equity_line_of_credit", "equity"},
                                                           {"home_equity_line_of_credit", "line"},
                                                           {"home_equity_line_of_credit", "credit"}};
    EXPECT_EQ(kg.subclass_edges, expected);
}

TEST(Kg, EmptyCorpusEmptyGraph) {
    auto kg = build_kg(Corpus{});
    EXPECT_TRUE(kg.concepts.empty());
    EXPECT_TRUE(kg.triples.empty());
}

TEST(Kg, DuplicateSentencesMergeWithTwoProvenanceRecords) {
    auto s = customer();
    Corpus c;
    for (int d = 0; d < 2; ++d) {
        Document doc;
        doc.document_id = "d" + std::to_string(d);
        Paragraph p;
        p.paragraph_id = doc.document_id + "_p0";
        p.text = s.text;
        Sentence copy = s;
        copy.sentence_id = doc.document_id + "_s0";
        copy.paragraph_ref = p.paragraph_id;
        p.sentences.push_back(copy);
        doc.paragraphs.push_back(p);
        c.documents.push_back(doc);
    }
    auto single = build_kg(Corpus{{c.documents[0]}, ""});
    auto kg = build_kg(c);
    EXPECT_EQ(kg.concepts.size(), single.concepts.size());
    EXPECT_EQ(kg.triples.size(), single.triples.size());
    for (auto& t : kg.triples) EXPECT_EQ(kg.provenance.at(t.id).size(), 2u);
}

TEST(Kg, SubclassRelationIsAcyclicOnFixtures) {
    for (auto theme : {"credit", "heart"}) EXPECT_TRUE(subclass_acyclic(build_kg(load_corpus(xtest::src(std::string("data/") + theme + "/manifest.json")))));
}

TEST(Kg, JsonRoundTrip) {
    auto kg = build_kg(load_corpus(xtest::src("data/credit/manifest.json")));
    auto again = kg_from_json(nlohmann::json::parse(to_json(kg).dump()));
    EXPECT_EQ(to_json(again), to_json(kg));
}

TEST(Kg, CountsMatchGolden) {
    auto golden = nlohmann::json::parse(read_file(xtest::src("tests/golden/kg_counts.json")));
    for (auto& [theme, expected] : golden.items()) {
        auto kg = build_kg(load_corpus(xtest::src("data/" + theme + "/manifest.json")));
        EXPECT_EQ(kg.concepts.size(), expected.at("concepts").get<std::size_t>()) << theme;
        EXPECT_EQ(kg.triples.size(), expected.at("triples").get<std::size_t>()) << theme;
        EXPECT_EQ(kg.subclass_edges.size(), expected.at("subclass_edges").get<std::size_t>()) << theme;
    }
}
