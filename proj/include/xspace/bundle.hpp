#pragma once

// Build configuration, explanatory profiles, the end-to-end build pipeline and the
// bundle it writes, and the read-only query engine over a loaded bundle.

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "xspace/corpus.hpp"
#include "xspace/error.hpp"
#include "xspace/espace.hpp"
#include "xspace/fca.hpp"
#include "xspace/kg.hpp"
#include "xspace/overview.hpp"
#include "xspace/pertinence.hpp"
#include "xspace/remote_embed.hpp"
#include "xspace/taxonomy.hpp"
#include "xspace/text.hpp"

namespace xspace {

inline constexpr int kSchemaVersion = 1;

struct ProviderConfig {
    std::string kind = "lexical";  // lexical | remote
    std::size_t dim = 1024;        // lexical only
    std::string endpoint;          // remote only
    std::string id = "remote";
    std::size_t timeout_ms = 10000;
    std::size_t batch_size = 32;
    std::size_t max_in_flight = 4;
};

struct BuildConfig {
    double theta = 0.15;
    std::map<std::string, double> theta_per_archetype;
    double context_weight = 0.25;
    bool mask_aspect = true;
    std::size_t k = 3;
    std::size_t budget = 280;
    std::size_t top_f = 1000;
    std::size_t n = 10;
    std::string catalog;      // archetype list; resolved path
    std::string profile_dir;  // directory of profile archetype lists; resolved path
    SyntagmGrammar grammar;
    ProviderConfig provider;

    /// Parses a config object. Relative paths resolve against `base_dir`.
    static BuildConfig from_json(const nlohmann::json& j, const std::string& base_dir = ".") {
        namespace fs = std::filesystem;
        BuildConfig c;
        auto resolve = [&](const std::string& p) {
            fs::path fp(p);
            return (fp.is_absolute() ? fp : fs::path(base_dir) / fp).lexically_normal().string();
        };
        try {
            c.theta = j.value("theta", c.theta);
            if (j.contains("theta_per_archetype")) c.theta_per_archetype = j.at("theta_per_archetype").get<std::map<std::string, double>>();
            c.context_weight = j.value("context_weight", c.context_weight);
            c.mask_aspect = j.value("mask_aspect", c.mask_aspect);
            c.k = j.value("k", c.k);
            c.budget = j.value("budget", c.budget);
            c.top_f = j.value("top_f", c.top_f);
            c.n = j.value("n", c.n);
            if (j.contains("catalog")) c.catalog = resolve(j.at("catalog").get<std::string>());
            if (j.contains("profile_dir")) c.profile_dir = resolve(j.at("profile_dir").get<std::string>());
            if (j.contains("grammar")) c.grammar = SyntagmGrammar::from_json(j.at("grammar"));
            if (j.contains("provider")) {
                auto& p = j.at("provider");
                c.provider.kind = p.value("kind", c.provider.kind);
                c.provider.dim = p.value("dim", c.provider.dim);
                c.provider.endpoint = p.value("endpoint", c.provider.endpoint);
                c.provider.id = p.value("id", c.provider.id);
                c.provider.timeout_ms = p.value("timeout_ms", c.provider.timeout_ms);
                c.provider.batch_size = p.value("batch_size", c.provider.batch_size);
                c.provider.max_in_flight = p.value("max_in_flight", c.provider.max_in_flight);
            }
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(std::string("config: ") + e.what());
        }
        if (c.k < 2) throw ValidationError("config: k must be at least 2");
        if (c.n == 0) throw ValidationError("config: n must be positive");
        if (c.provider.kind != "lexical" && c.provider.kind != "remote")
            throw ValidationError("config: unknown provider kind " + c.provider.kind);
        if (c.provider.kind == "remote" && c.provider.endpoint.empty()) throw ValidationError("config: remote provider needs an endpoint");
        return c;
    }

    static BuildConfig load(const std::string& path) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_file(path));
        } catch (const nlohmann::json::parse_error& e) {
            throw ValidationError("config " + path + ": " + e.what());
        }
        return from_json(j, std::filesystem::path(path).parent_path().string());
    }

    /// Settings that affect bundle content; file paths are excluded so builds from
    /// different checkouts hash identically.
    nlohmann::json to_json() const {
        nlohmann::json p{{"kind", provider.kind}};
        if (provider.kind == "lexical") p["dim"] = provider.dim;
        else p.update({{"endpoint", provider.endpoint}, {"id", provider.id}, {"timeout_ms", provider.timeout_ms},
                       {"batch_size", provider.batch_size}, {"max_in_flight", provider.max_in_flight}});
        return {{"theta", theta}, {"theta_per_archetype", theta_per_archetype}, {"context_weight", context_weight},
                {"mask_aspect", mask_aspect}, {"k", k}, {"budget", budget}, {"top_f", top_f}, {"n", n},
                {"grammar", grammar.to_json()}, {"provider", p}};
    }

    std::string hash() const { return hex64(fnv1a64(to_json().dump())); }
};

/// Tool behavior: which archetype sections are shown and which actions exist.
struct Profile {
    std::string id;
    std::vector<std::string> visible;  // archetype ids, catalog order
    bool overviews = true;
    bool open_qa = true;
    bool documents = false;

    bool shows(const std::string& archetype) const {
        return std::find(visible.begin(), visible.end(), archetype) != visible.end();
    }

    /// `ose`: static entry plus raw documents. `hwn`: overviews without open QA.
    /// Others (`yai4hu`, custom): overviews and open QA. Non-ose profiles read their
    /// archetype list from `<profile_dir>/<name>.json`.
    static Profile named(const std::string& name, const ArchetypeCatalog& catalog, const std::string& profile_dir) {
        Profile p;
        p.id = name;
        if (name == "ose") {
            p.overviews = false;
            p.open_qa = false;
            p.documents = true;
            return p;
        }
        std::string path = (std::filesystem::path(profile_dir) / (name + ".json")).string();
        if (!std::filesystem::exists(path)) throw InvalidArgument("unknown profile " + name + " (no " + path + ")");
        auto listed = ArchetypeCatalog::from_json(nlohmann::json::parse(read_file(path)));
        std::set<std::string> ids;
        for (auto& a : listed.archetypes) {
            if (!catalog.find(a.id)) throw ValidationError("profile " + name + " names unknown archetype " + a.id);
            ids.insert(a.id);
        }
        for (auto& a : catalog.archetypes)
            if (ids.count(a.id)) p.visible.push_back(a.id);
        p.open_qa = name != "hwn";
        return p;
    }

    nlohmann::json to_json() const {
        return {{"id", id}, {"visible", visible}, {"overviews", overviews}, {"open_qa", open_qa}, {"documents", documents}};
    }

    static Profile from_json(const nlohmann::json& j) {
        Profile p;
        p.id = j.at("id");
        p.visible = j.at("visible").get<std::vector<std::string>>();
        p.overviews = j.at("overviews");
        p.open_qa = j.at("open_qa");
        p.documents = j.at("documents");
        return p;
    }
};

// ---------------------------------------------------------------- card serialization

inline nlohmann::json to_json(const SummaryTree& t) {
    nlohmann::json nodes = nlohmann::json::array();
    for (auto& n : t.nodes) {
        nlohmann::json x{{"id", n.id}, {"text", n.text}, {"children", n.children}};
        if (n.unit) x["unit"] = *n.unit;
        nodes.push_back(std::move(x));
    }
    return {{"nodes", nodes}, {"root", t.root ? nlohmann::json(*t.root) : nlohmann::json(nullptr)}};
}

inline SummaryTree summary_tree_from_json(const nlohmann::json& j) {
    SummaryTree t;
    for (auto& n : j.at("nodes")) {
        SummaryNode x{n.at("id"), n.at("text"), n.at("children").get<std::vector<std::size_t>>(), std::nullopt};
        if (n.contains("unit")) x.unit = n.at("unit").get<std::size_t>();
        t.nodes.push_back(std::move(x));
    }
    if (!j.at("root").is_null()) t.root = j.at("root").get<std::size_t>();
    return t;
}

inline nlohmann::json to_json(const OverviewCard& c) {
    nlohmann::json sections = nlohmann::json::object();
    for (auto& [arch, s] : c.sections) {
        nlohmann::json units = nlohmann::json::array();
        for (auto& u : s.units)
            units.push_back({{"snippet", u.snippet}, {"paragraph_id", u.paragraph_id}, {"source_triple", u.source_triple},
                             {"score", u.score}, {"candidate", u.candidate}});
        sections[arch] = {{"units", units}, {"tree", to_json(s.tree)}};
    }
    return {{"uri", c.uri}, {"label", c.label}, {"abstract", c.abstract_text}, {"type_labels", c.type_labels},
            {"super_classes", c.super_classes}, {"sub_classes", c.sub_classes}, {"sub_types", c.sub_types},
            {"sections", sections}};
}

inline OverviewCard card_from_json(const nlohmann::json& j) {
    OverviewCard c;
    c.uri = j.at("uri");
    c.label = j.at("label");
    c.abstract_text = j.at("abstract");
    c.type_labels = j.at("type_labels").get<std::vector<std::string>>();
    c.super_classes = j.at("super_classes").get<std::vector<std::string>>();
    c.sub_classes = j.at("sub_classes").get<std::vector<std::string>>();
    c.sub_types = j.at("sub_types").get<std::vector<std::string>>();
    for (auto& [arch, s] : j.at("sections").items()) {
        Section sec;
        for (auto& u : s.at("units"))
            sec.units.push_back({u.at("snippet"), u.at("paragraph_id"), u.at("source_triple"), u.at("score"), arch, u.at("candidate")});
        sec.tree = summary_tree_from_json(s.at("tree"));
        c.sections.emplace(arch, std::move(sec));
    }
    return c;
}

/// Keeps only the sections a profile shows.
inline OverviewCard restrict_card(OverviewCard card, const Profile& profile) {
    for (auto it = card.sections.begin(); it != card.sections.end();)
        it = profile.shows(it->first) ? std::next(it) : card.sections.erase(it);
    return card;
}

// ---------------------------------------------------------------- build

struct BuildInputs {
    std::string manifest;
    std::string lexicon;
    std::string freq;
    std::string profile = "yai4hu";
};

struct BuildResult {
    nlohmann::json bundle;
    nlohmann::json stats;
    std::vector<std::string> warnings;

    std::string text() const { return bundle.dump(1) + "\n"; }
};

/// Reads the manifest's `entry` field (path relative to the manifest).
inline InitialExplanation load_entry(const std::string& manifest_path) {
    auto manifest = nlohmann::json::parse(read_file(manifest_path));
    if (!manifest.contains("entry")) throw ValidationError("manifest " + manifest_path + " has no entry document");
    auto p = std::filesystem::path(manifest_path).parent_path() / manifest.at("entry").get<std::string>();
    try {
        return InitialExplanation::from_json(nlohmann::json::parse(read_file(p.string())));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("entry " + p.string() + ": " + e.what());
    }
}

inline std::unique_ptr<EmbeddingProvider> make_provider(const ProviderConfig& pc, std::shared_ptr<const LexicalModel> lexical) {
    if (pc.kind == "remote") {
        RemoteEmbedOptions o;
        o.timeout = std::chrono::milliseconds(pc.timeout_ms);
        o.batch_size = pc.batch_size;
        o.max_in_flight = pc.max_in_flight;
        return std::make_unique<RemoteProvider>(pc.endpoint, pc.id, o);
    }
    return std::make_unique<LexicalProvider>(std::move(lexical));
}

/// Corpus lexical model with the catalog's template words added to the vocabulary.
inline std::shared_ptr<LexicalModel> make_lexical_model(const Corpus& corpus, const BuildConfig& cfg, const ArchetypeCatalog& catalog) {
    auto lm = std::make_shared<LexicalModel>(LexicalModel::from_corpus(corpus, cfg.provider.dim));
    lm->context_weight = cfg.context_weight;
    std::vector<std::string> extra;
    for (auto& a : catalog.archetypes)
        for (auto& t : a.templates)
            for (auto& l : lm->lemmas(t)) extra.push_back(l);
    lm->add_vocabulary(extra);
    lm->assign_slots();
    return lm;
}

inline std::map<std::string, std::string> paragraph_texts(const Corpus& corpus) {
    std::map<std::string, std::string> out;
    for (auto& d : corpus.documents)
        for (auto& p : d.paragraphs) out[p.paragraph_id] = p.text;
    return out;
}

inline nlohmann::json corpus_json(const Corpus& corpus) {
    nlohmann::json docs = nlohmann::json::array();
    for (auto& d : corpus.documents) {
        nlohmann::json paras = nlohmann::json::array();
        for (auto& p : d.paragraphs) paras.push_back({{"id", p.paragraph_id}, {"order", p.order}, {"text", p.text}});
        docs.push_back({{"id", d.document_id}, {"title", d.title}, {"url", d.url ? nlohmann::json(*d.url) : nlohmann::json(nullptr)},
                        {"paragraphs", paras}});
    }
    return {{"documents", docs}};
}

inline nlohmann::json to_json(const InitialExplanation& e) {
    nlohmann::json blocks = nlohmann::json::array();
    for (auto& b : e.blocks) {
        auto t = to_json(b.text);
        t["kind"] = b.kind;
        blocks.push_back(std::move(t));
    }
    return {{"title", e.title}, {"blocks", blocks}};
}

inline InitialExplanation entry_from_json(const nlohmann::json& j) {
    InitialExplanation e;
    e.title = j.at("title");
    for (auto& b : j.at("blocks")) e.blocks.push_back({b.at("kind"), annotated_from_json(b)});
    return e;
}

/// Runs every stage; a failing stage raises StageError naming it.
inline BuildResult build_bundle(const BuildInputs& in, const BuildConfig& cfg) {
    auto stage = [](const char* name, auto&& fn) {
        try {
            return fn();
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError(name, e.what());
        }
    };
    BuildResult r;

    auto corpus = stage("corpus", [&] {
        auto c = load_corpus(in.manifest);
        if (c.documents.empty()) throw ValidationError("no documents");
        return c;
    });
    auto entry = stage("entry", [&] { return load_entry(in.manifest); });
    auto catalog = stage("config", [&] {
        if (cfg.catalog.empty()) throw ValidationError("no archetype catalog configured");
        return ArchetypeCatalog::from_json(nlohmann::json::parse(read_file(cfg.catalog)));
    });
    auto profile = stage("config", [&] { return Profile::named(in.profile, catalog, cfg.profile_dir); });

    KgBuildLog kg_log;
    auto kg = stage("kg", [&] { return build_kg(corpus, cfg.grammar, &kg_log); });

    std::size_t n_formal = 0;
    std::map<std::string, std::string> senses;
    auto forest = stage("taxonomy", [&] {
        auto lex = Lexicon::load(in.lexicon);
        senses = disambiguate_all(kg, corpus, lex);
        auto ctx = build_formal_context(senses, lex);
        auto lattice = fca_lattice(ctx);
        n_formal = lattice.size();
        return lattice_to_forest(lattice, ctx, lex);
    });

    auto lm = make_lexical_model(corpus, cfg, catalog);
    auto cards = stage("overview", [&] {
        auto provider = make_provider(cfg.provider, lm);
        ArchetypeScorer scorer{provider.get(), lm.get(), cfg.mask_aspect};
        auto ptext = paragraph_texts(corpus);
        SweepSettings sweep{cfg.theta, cfg.theta_per_archetype};
        std::map<std::string, OverviewCard> out;
        for (auto& [uri, c] : kg.concepts) {
            auto cands = collect_candidates(uri, kg);
            auto table = scorer.score(c, cands, catalog, ptext);
            auto clusters = cluster_by_archetype(cands, catalog, table, sweep);
            out.emplace(uri, restrict_card(compose_overview(uri, kg, forest, std::move(clusters), cfg.k, cfg.budget), profile));
        }
        return out;
    });

    std::map<std::string, double> between;
    FilterResult filtered;
    std::size_t pre_edges = 0;
    stage("espace", [&] {
        std::set<std::string> all;
        for (auto& [u, _] : cards) all.insert(u);
        auto matcher = make_matcher(kg, all, lm.get(), cfg.grammar);
        std::set<std::string> visible(profile.visible.begin(), profile.visible.end());
        auto es = assemble(cards, matcher, entry, visible, profile.id);
        pre_edges = es.edges.size();
        between = centrality(es);
        auto freq = FrequencyTable::load(in.freq);
        filtered = filter_nodes(es, kg, freq.top(cfg.top_f), between, cards);
        auto survivors = make_matcher(kg, filtered.es.nodes, lm.get(), cfg.grammar);
        filtered.es.entry.annotate_with(survivors);

        for (auto& u : filtered.es.nodes) {
            auto& c = cards.at(u);
            bool linked = !c.super_classes.empty() || !c.sub_classes.empty() || !c.sub_types.empty() || !c.type_labels.empty();
            if (!c.has_content() && !linked) r.warnings.push_back("dead end: " + u + " has an empty card and no taxonomy links");
        }
        auto entry_uris = filtered.es.entry.linked_uris();
        if (entry_uris.empty()) r.warnings.push_back("entry has no links to surviving concepts");
        else if (filtered.es.nodes.size() > entry_uris.size()) {
            bool reaches = false;
            for (auto& u : entry_uris)
                for (auto& v : filtered.es.successors(u))
                    if (!entry_uris.count(v)) reaches = true;
            if (!reaches) r.warnings.push_back("entry concepts reach no other surviving node");
        }
        return 0;
    });

    std::size_t with_content = 0;
    for (auto& [_, c] : cards) with_content += c.has_content() ? 1 : 0;
    std::size_t by_freq = 0, by_between = 0;
    for (auto& [_, why] : filtered.removed) (why == "frequent" ? by_freq : by_between)++;
    std::size_t entry_links = 0;
    for (auto& b : filtered.es.entry.blocks) entry_links += b.text.links.size();

    r.stats = {{"documents", corpus.documents.size()},
               {"paragraphs", corpus.paragraph_count()},
               {"sentences", corpus.sentence_count()},
               {"concepts", kg.concepts.size()},
               {"triples", kg.triples.size()},
               {"subclass_edges", kg.subclass_edges.size()},
               {"senses", senses.size()},
               {"formal_concepts", n_formal},
               {"taxonomy_trees", forest.trees.size()},
               {"cards", cards.size()},
               {"cards_with_content", with_content},
               {"es_nodes", cards.size()},
               {"es_edges", pre_edges},
               {"filtered_frequent", by_freq},
               {"filtered_betweenness", by_between},
               {"surviving_nodes", filtered.es.nodes.size()},
               {"surviving_edges", filtered.es.edges.size()},
               {"entry_links", entry_links}};

    nlohmann::json jcards = nlohmann::json::object();
    for (auto& [u, c] : cards) jcards[u] = to_json(c);
    nlohmann::json edges = nlohmann::json::array();
    for (auto& e : filtered.es.edges) edges.push_back({{"from", e.from}, {"to", e.to}, {"via", e.via}});
    nlohmann::json jsenses = senses;

    r.bundle = {{"schema_version", kSchemaVersion},
                {"profile", profile.to_json()},
                {"config", cfg.to_json()},
                {"config_hash", cfg.hash()},
                {"corpus", corpus_json(corpus)},
                {"kg", to_json(kg)},
                {"senses", jsenses},
                {"taxonomy", to_json(forest)},
                {"lexical", lm->to_json()},
                {"catalog", catalog.to_json()},
                {"cards", jcards},
                {"espace",
                 {{"nodes", filtered.es.nodes}, {"edges", edges}, {"removed", filtered.removed}, {"betweenness", between}}},
                {"entry", to_json(filtered.es.entry)},
                {"warnings", r.warnings},
                {"stats", r.stats}};
    return r;
}

// ---------------------------------------------------------------- query engine

/// Read-only view over a built bundle. Safe for concurrent queries.
class QueryEngine {
public:
    /// `bundle_hash` is the FNV-1a hash of the serialized bundle bytes.
    QueryEngine(const nlohmann::json& b, std::string bundle_hash) : bundle_hash_(std::move(bundle_hash)) {
        try {
            if (b.at("schema_version").get<int>() != kSchemaVersion)
                throw ValidationError("unsupported bundle schema_version " + b.at("schema_version").dump());
            config_ = b.at("config");
            auto stored = b.at("config_hash").get<std::string>();
            if (stored != hex64(fnv1a64(config_.dump()))) throw ValidationError("bundle config_hash does not match its config");
            config_hash_ = stored;
            profile_ = Profile::from_json(b.at("profile"));
            kg_ = kg_from_json(b.at("kg"));
            forest_ = forest_from_json(b.at("taxonomy"));
            catalog_ = ArchetypeCatalog::from_json(b.at("catalog"));
            lexical_ = std::make_shared<LexicalModel>(LexicalModel::from_json(b.at("lexical")));
            for (auto& [u, c] : b.at("cards").items()) cards_.emplace(u, card_from_json(c));
            nodes_ = b.at("espace").at("nodes").get<std::set<std::string>>();
            for (auto& e : b.at("espace").at("edges")) edges_.insert(EsEdge{e.at("from"), e.at("to"), e.at("via")});
            entry_ = entry_from_json(b.at("entry"));
            documents_ = b.at("corpus").at("documents");
            theta_ = config_.at("theta");
            n_ = config_.at("n");
            ProviderConfig pc;
            auto& p = config_.at("provider");
            pc.kind = p.at("kind");
            if (pc.kind == "remote") {
                pc.endpoint = p.at("endpoint");
                pc.id = p.at("id");
                pc.timeout_ms = p.at("timeout_ms");
                pc.batch_size = p.at("batch_size");
                pc.max_in_flight = p.at("max_in_flight");
            }
            grammar_ = SyntagmGrammar::from_json(config_.at("grammar"));
            provider_ = make_provider(pc, lexical_);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(std::string("malformed bundle: ") + e.what());
        }
        for (auto& u : nodes_)
            if (!cards_.count(u)) throw ValidationError("bundle node without card: " + u);
        matcher_ = std::make_unique<ConceptMatcher>(make_matcher(kg_, nodes_, lexical_.get(), grammar_));
        for (auto& d : documents_)
            for (auto& p : d.at("paragraphs")) {
                paragraph_doc_[p.at("id")] = d.at("id");
                paragraph_text_[p.at("id")] = p.at("text");
            }
        if (profile_.open_qa) {
            pool_ = all_snippets(kg_);
            std::vector<EmbedRequest> reqs;
            for (auto& c : pool_) reqs.push_back({c.snippet, paragraph_text_.count(c.paragraph_id) ? paragraph_text_.at(c.paragraph_id) : ""});
            pool_vectors_ = provider_->embed_batch(reqs, EmbedKind::answer);
        }
    }

    static QueryEngine load(const std::string& path) {
        auto text = read_file(path);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw ValidationError("bundle " + path + ": " + e.what());
        }
        return QueryEngine(j, hex64(fnv1a64(text)));
    }

    const Profile& profile() const { return profile_; }
    const KnowledgeGraph& kg() const { return kg_; }
    const TaxonomyForest& forest() const { return forest_; }
    const ArchetypeCatalog& catalog() const { return catalog_; }
    const std::map<std::string, OverviewCard>& cards() const { return cards_; }
    const std::set<std::string>& nodes() const { return nodes_; }
    const std::set<EsEdge>& edges() const { return edges_; }
    const InitialExplanation& entry() const { return entry_; }
    const std::string& bundle_hash() const { return bundle_hash_; }
    const std::string& config_hash() const { return config_hash_; }
    std::size_t default_n() const { return n_; }

    /// Narrows the serving profile. Only sections already in the bundle can be shown.
    void restrict_profile(const std::string& name) {
        if (name.empty() || name == profile_.id) return;
        if (name == "ose") {
            profile_ = {"ose", {}, false, false, true};
            return;
        }
        Profile p{name, {}, profile_.overviews, profile_.open_qa && name != "hwn", false};
        std::vector<std::string> wanted = name == "hwn" ? std::vector<std::string>{"why", "how"} : catalog_.ids();
        if (name != "hwn" && name != "yai4hu") throw InvalidArgument("cannot serve unknown profile " + name);
        for (auto& a : catalog_.ids())
            if (std::find(wanted.begin(), wanted.end(), a) != wanted.end()) {
                if (!profile_.shows(a)) throw InvalidArgument("bundle built for " + profile_.id + " lacks section " + a + " needed by " + name);
                p.visible.push_back(a);
            }
        if (p.open_qa && pool_.empty()) throw InvalidArgument("bundle built for " + profile_.id + " cannot serve open questions");
        profile_ = std::move(p);
    }

    AnnotatedText annotate_text(const std::string& text) const { return annotate(text, *matcher_); }

    nlohmann::json annotated(const std::string& text) const { return to_json(annotate_text(text)); }

    nlohmann::json health() const {
        return {{"status", "ok"}, {"profile", profile_.id}, {"bundle_hash", bundle_hash_}, {"config_hash", config_hash_},
                {"open_qa", profile_.open_qa}, {"nodes", nodes_.size()}};
    }

    nlohmann::json entry_json() const {
        nlohmann::json blocks = nlohmann::json::array();
        for (auto& b : entry_.blocks) {
            auto t = to_json(b.text);
            if (!profile_.overviews) t["links"] = nlohmann::json::array();  // static page
            t["kind"] = b.kind;
            blocks.push_back(std::move(t));
        }
        nlohmann::json out{{"title", entry_.title}, {"profile", profile_.id}, {"blocks", blocks}};
        if (profile_.documents) out["documents"] = document_list();
        return out;
    }

    std::optional<nlohmann::json> overview(const std::string& uri) const {
        auto it = cards_.find(uri);
        if (it == cards_.end()) return std::nullopt;
        const auto& c = it->second;
        nlohmann::json sections = nlohmann::json::array();
        for (auto& arch : catalog_.archetypes) {
            if (!profile_.shows(arch.id)) continue;
            auto s = c.sections.find(arch.id);
            nlohmann::json units = nlohmann::json::array();
            nlohmann::json summary = nullptr;
            if (s != c.sections.end()) {
                for (auto& u : s->second.units) {
                    auto t = annotated(u.snippet);
                    units.push_back({{"snippet", u.snippet}, {"links", t["links"]}, {"paragraph_id", u.paragraph_id},
                                     {"document_id", document_of(u.paragraph_id)}, {"score", u.score},
                                     {"source_triple", u.source_triple}});
                }
                if (!s->second.tree.empty()) summary = summary_node_json(uri, arch.id, s->second.tree, *s->second.tree.root);
            }
            sections.push_back({{"archetype", arch.id}, {"question", arch.realize(c.label)}, {"units", units}, {"summary", summary}});
        }
        return nlohmann::json{{"uri", c.uri},
                              {"label", c.label},
                              {"abstract", annotated(c.abstract_text)},
                              {"type_labels", c.type_labels},
                              {"super_classes", c.super_classes},
                              {"sub_classes", c.sub_classes},
                              {"sub_types", c.sub_types},
                              {"in_space", nodes_.count(uri) > 0},
                              {"sections", sections}};
    }

    /// Children of a summary node addressed as `<uri>~<archetype>~<path>`.
    std::optional<nlohmann::json> summary_children(const std::string& node_id) const {
        auto a = node_id.find('~');
        auto b = a == std::string::npos ? a : node_id.find('~', a + 1);
        if (b == std::string::npos) return std::nullopt;
        std::string uri = node_id.substr(0, a), arch = node_id.substr(a + 1, b - a - 1), path = node_id.substr(b + 1);
        auto c = cards_.find(uri);
        if (c == cards_.end() || !profile_.shows(arch)) return std::nullopt;
        auto s = c->second.sections.find(arch);
        if (s == c->second.sections.end()) return std::nullopt;
        auto* n = s->second.tree.find(path);
        if (!n) return std::nullopt;
        nlohmann::json children = nlohmann::json::array();
        for (auto ch : n->children) children.push_back(summary_node_json(uri, arch, s->second.tree, ch));
        return nlohmann::json{{"id", node_id}, {"children", children}};
    }

    std::vector<ScoredSnippet> ask_raw(const std::string& question, std::size_t n) const {
        if (!profile_.open_qa) throw InvalidArgument("open question answering is disabled for profile " + profile_.id);
        return answer_open_question(question, pool_, pool_vectors_, *provider_, theta_, n);
    }

    nlohmann::json ask(const std::string& question, std::size_t n) const {
        nlohmann::json answers = nlohmann::json::array();
        for (auto& s : ask_raw(question, n)) {
            auto t = annotated(s.snippet);
            answers.push_back({{"snippet", s.snippet}, {"links", t["links"]}, {"score", s.score}, {"paragraph_id", s.paragraph_id},
                               {"document_id", document_of(s.paragraph_id)}, {"context", paragraph_text_.at(s.paragraph_id)},
                               {"source_triple", s.source_triple}});
        }
        return {{"question", question}, {"answers", answers}};
    }

    std::optional<nlohmann::json> taxonomy(const std::string& uri) const {
        auto it = cards_.find(uri);
        if (it == cards_.end()) return std::nullopt;
        nlohmann::json out{{"uri", uri}, {"label", it->second.label}, {"tree", nullptr}, {"parent", nullptr},
                           {"children", forest_.children(uri)}, {"siblings", nlohmann::json::array()},
                           {"super_classes", it->second.super_classes}, {"sub_classes", it->second.sub_classes}};
        if (auto* t = forest_.tree_of(uri)) {
            out["tree"] = t->root_label;
            if (auto p = forest_.parent(uri)) {
                out["parent"] = *p;
                nlohmann::json sib = nlohmann::json::array();
                for (auto& s : forest_.children(*p))
                    if (s != uri) sib.push_back(s);
                out["siblings"] = sib;
            }
        }
        return out;
    }

    nlohmann::json document_list() const {
        nlohmann::json out = nlohmann::json::array();
        for (auto& d : documents_)
            out.push_back({{"id", d.at("id")}, {"title", d.at("title")}, {"url", d.at("url")}, {"paragraphs", d.at("paragraphs").size()}});
        return out;
    }

    std::optional<nlohmann::json> document(const std::string& id) const {
        for (auto& d : documents_)
            if (d.at("id") == id) return d;
        return std::nullopt;
    }

    /// Labels closest to `query` by edit distance over uris and labels.
    std::vector<std::string> nearest_labels(const std::string& query, std::size_t k = 5) const {
        std::vector<std::pair<std::size_t, std::string>> scored;
        for (auto& [u, c] : cards_) scored.emplace_back(std::min(edit_distance(query, u), edit_distance(to_lower(query), to_lower(c.label))), u);
        std::sort(scored.begin(), scored.end());
        std::vector<std::string> out;
        for (std::size_t i = 0; i < std::min(k, scored.size()); ++i) out.push_back(scored[i].second);
        return out;
    }

    std::string document_of(const std::string& paragraph_id) const {
        auto it = paragraph_doc_.find(paragraph_id);
        return it == paragraph_doc_.end() ? "" : it->second;
    }

private:
    nlohmann::json summary_node_json(const std::string& uri, const std::string& arch, const SummaryTree& t, std::size_t i) const {
        const auto& n = t.nodes[i];
        auto a = annotated(n.text);
        nlohmann::json out{{"id", uri + "~" + arch + "~" + n.id}, {"text", n.text}, {"links", a["links"]},
                           {"has_children", !n.children.empty()}};
        if (n.unit) out["unit"] = *n.unit;
        return out;
    }

    nlohmann::json config_;
    std::string config_hash_;
    std::string bundle_hash_;
    Profile profile_;
    KnowledgeGraph kg_;
    TaxonomyForest forest_;
    ArchetypeCatalog catalog_;
    std::shared_ptr<LexicalModel> lexical_;
    std::unique_ptr<EmbeddingProvider> provider_;
    SyntagmGrammar grammar_;
    std::map<std::string, OverviewCard> cards_;
    std::set<std::string> nodes_;
    std::set<EsEdge> edges_;
    InitialExplanation entry_;
    nlohmann::json documents_;
    std::map<std::string, std::string> paragraph_doc_;
    std::map<std::string, std::string> paragraph_text_;
    std::unique_ptr<ConceptMatcher> matcher_;
    std::vector<Candidate> pool_;
    std::vector<EmbeddingVector> pool_vectors_;
    double theta_ = 0.15;
    std::size_t n_ = 10;
};

}  // namespace xspace
