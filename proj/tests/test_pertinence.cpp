#include <gtest/gtest.h>

#include <cmath>
#include <thread>

#include "support.hpp"

using namespace xspace;

namespace {

std::shared_ptr<LexicalModel> heart_model() {
    static auto m = [] {
        auto cfg = xtest::default_config();
        auto corpus = load_corpus(xtest::src("data/heart/manifest.json"));
        auto catalog = ArchetypeCatalog::from_json(nlohmann::json::parse(read_file(cfg.catalog)));
        return make_lexical_model(corpus, cfg, catalog);
    }();
    return m;
}

/// Cosine over lemma-keyed sparse weights; no hashing involved.
double sparse_cosine(const std::map<std::string, double>& a, const std::map<std::string, double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (auto& [k, v] : a) {
        na += v * v;
        auto it = b.find(k);
        if (it != b.end()) dot += v * it->second;
    }
    for (auto& [_, v] : b) nb += v * v;
    return dot / std::sqrt(na * nb);
}

/// Minimal embedding endpoint for the remote provider tests.
class MockEndpoint {
public:
    explicit MockEndpoint(std::function<void(const nlohmann::json&, httplib::Response&)> reply) {
        server_.Post("/embed", [reply](const httplib::Request& req, httplib::Response& res) { reply(nlohmann::json::parse(req.body), res); });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~MockEndpoint() {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/embed"; }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

/// Vector [len(text), 1, 0] per text: unnormalized on purpose.
void length_vectors(const nlohmann::json& body, httplib::Response& res) {
    nlohmann::json vecs = nlohmann::json::array();
    for (auto& t : body.at("texts")) vecs.push_back({static_cast<double>(t.get<std::string>().size()), 1.0, 0.0});
    res.set_content(nlohmann::json{{"vectors", vecs}, {"provider_id", "mock"}, {"dim", 3}}.dump(), "application/json");
}

}  // namespace

TEST(Pertinence, SelfInnerProductIsOne) {
    LexicalProvider p(heart_model());
    for (auto text : {"A stroke happens when a blood clot blocks an artery.", "cholesterol", "Why is exercise useful?"}) {
        auto v = p.embed(text, "", EmbedKind::answer);
        EXPECT_NEAR(pertinence(v, v), 1.0, 1e-12);
        EXPECT_NEAR(v.norm(), 1.0, 1e-12);
    }
}

TEST(Pertinence, TokenDisjointTextsAreOrthogonal) {
    auto m = heart_model();
    std::string a = "blood clot artery", b = "exercise diet cholesterol";
    std::set<std::size_t> ba, bb;
    for (auto& l : m->lemmas(a)) ba.insert(m->bucket(l));
    for (auto& l : m->lemmas(b)) bb.insert(m->bucket(l));
    for (auto x : ba) ASSERT_FALSE(bb.count(x)) << "hash collision in fixture vocabulary";
    LexicalProvider p(m);
    EXPECT_EQ(pertinence(p.embed(a, "", EmbedKind::question), p.embed(b, "", EmbedKind::answer)), 0.0);
}

TEST(Pertinence, VocabularySlotsAreDistinct) {
    auto m = heart_model();
    std::set<std::size_t> used;
    for (auto& [lemma, slot] : m->slots) EXPECT_TRUE(used.insert(slot).second) << lemma;
}

TEST(Pertinence, ProviderMismatchIsRejected) {
    EmbeddingVector a{{1.0, 0.0}, "x"}, b{{1.0, 0.0}, "y"}, c{{1.0}, "x"};
    EXPECT_THROW(pertinence(a, b), InvalidArgument);
    EXPECT_THROW(pertinence(a, c), InvalidArgument);
}

TEST(Pertinence, EmptyTextIsRejected) {
    LexicalProvider p(heart_model());
    EXPECT_THROW(p.embed("  ?! ", "", EmbedKind::question), InvalidArgument);
}

TEST(Pertinence, StrokeRankingMatchesSparseCosine) {
    auto m = heart_model();
    LexicalProvider p(m);
    std::vector<std::string> snippets{"A stroke happens when a blood clot blocks an artery in the brain.",
                                      "The patient can prevent a stroke by controlling the blood pressure.",
                                      "A stroke is dangerous because the brain cells die without oxygen."};
    std::string q = "Why a stroke?";
    auto qv = p.embed(q, "", EmbedKind::question);
    auto qw = m->term_weights(q);
    std::vector<std::pair<double, std::size_t>> got, want;
    for (std::size_t i = 0; i < snippets.size(); ++i) {
        double s = pertinence(qv, p.embed(snippets[i], "", EmbedKind::answer));
        double o = sparse_cosine(qw, m->term_weights(snippets[i]));
        EXPECT_NEAR(s, o, 1e-12) << snippets[i];
        got.emplace_back(-s, i);
        want.emplace_back(-o, i);
    }
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i].second, want[i].second);
}

TEST(Pertinence, ContextWeightScalesContextTerms) {
    auto m = heart_model();
    auto w = m->term_weights("stroke", "brain");
    EXPECT_NEAR(w.at("brain"), m->context_weight * m->idf("brain"), 1e-12);
    EXPECT_NEAR(w.at("stroke"), m->idf("stroke"), 1e-12);
}

TEST(Pertinence, LemmatizerFallsBackToKnownStems) {
    auto m = heart_model();
    EXPECT_EQ(m->lemmatize("strokes"), "stroke");
    EXPECT_EQ(m->lemmatize("zzzz"), "zzzz");
}

TEST(Pertinence, LexicalModelJsonRoundTrip) {
    auto m = heart_model();
    auto again = LexicalModel::from_json(m->to_json());
    EXPECT_EQ(again.slots, m->slots);
    LexicalProvider a(m), b(std::make_shared<LexicalModel>(again));
    EXPECT_EQ(a.embed("blood pressure", "", EmbedKind::answer).values, b.embed("blood pressure", "", EmbedKind::answer).values);
}

TEST(RemoteProvider, VectorsAreRenormalized) {
    MockEndpoint ep(length_vectors);
    auto v = remote_embed({"abc", "abcdefg"}, ep.url());
    ASSERT_EQ(v.size(), 2u);
    EXPECT_NEAR(v[0].norm(), 1.0, 1e-12);
    EXPECT_NEAR(v[0].values[0], 3.0 / std::sqrt(10.0), 1e-12);
    EXPECT_EQ(v[1].provider_id, "mock");
}

TEST(RemoteProvider, EmptyBatchMakesNoRequest) {
    int calls = 0;
    MockEndpoint ep([&](const nlohmann::json& b, httplib::Response& r) {
        ++calls;
        length_vectors(b, r);
    });
    EXPECT_TRUE(remote_embed({}, ep.url()).empty());
    RemoteProvider p(ep.url(), "mock");
    EXPECT_TRUE(p.embed_batch({}, EmbedKind::answer).empty());
    EXPECT_EQ(calls, 0);
}

TEST(RemoteProvider, DimensionMismatchIsAProviderError) {
    MockEndpoint ep([](const nlohmann::json&, httplib::Response& res) {
        res.set_content(R"({"vectors": [[1, 0, 0], [1, 0]], "dim": 3})", "application/json");
    });
    EXPECT_THROW(remote_embed({"a", "b"}, ep.url()), ProviderError);
}

TEST(RemoteProvider, WrongVectorCountIsAProviderError) {
    MockEndpoint ep([](const nlohmann::json&, httplib::Response& res) { res.set_content(R"({"vectors": [[1, 0]]})", "application/json"); });
    EXPECT_THROW(remote_embed({"a", "b"}, ep.url()), ProviderError);
}

TEST(RemoteProvider, HttpErrorIsAProviderError) {
    MockEndpoint ep([](const nlohmann::json&, httplib::Response& res) { res.status = 500; });
    EXPECT_THROW(remote_embed({"a"}, ep.url()), ProviderError);
}

TEST(RemoteProvider, BatchesKeepRequestOrder) {
    MockEndpoint ep(length_vectors);
    RemoteProvider p(ep.url(), "mock", {std::chrono::milliseconds(5000), 2, 2});
    std::vector<EmbedRequest> reqs;
    for (int i = 1; i <= 7; ++i) reqs.push_back({std::string(static_cast<std::size_t>(i), 'x'), ""});
    auto v = p.embed_batch(reqs, EmbedKind::answer);
    ASSERT_EQ(v.size(), 7u);
    for (int i = 1; i <= 7; ++i) {
        double n = std::sqrt(i * i + 1.0);
        EXPECT_NEAR(v[static_cast<std::size_t>(i - 1)].values[0], i / n, 1e-12);
        EXPECT_EQ(v[static_cast<std::size_t>(i - 1)].provider_id, "mock");
    }
}

TEST(RemoteProvider, UnreachableEndpointIsAProviderError) {
    EXPECT_THROW(remote_embed({"a"}, "http://127.0.0.1:1/embed", EmbedKind::answer, std::chrono::milliseconds(500)), ProviderError);
}
