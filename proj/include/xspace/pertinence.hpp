#pragma once

// Pertinence scoring: unit-norm embeddings compared by inner product. The built-in
// provider hashes IDF-weighted lemmas into a fixed 1024-dimension space.

#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "xspace/corpus.hpp"
#include "xspace/error.hpp"
#include "xspace/text.hpp"

namespace xspace {

enum class EmbedKind { question, answer };

inline const char* to_string(EmbedKind k) { return k == EmbedKind::question ? "question" : "answer"; }

struct EmbeddingVector {
    std::vector<double> values;
    std::string provider_id;

    double norm() const {
        double s = 0;
        for (double v : values) s += v * v;
        return std::sqrt(s);
    }

    std::size_t dim() const { return values.size(); }
};

/// Scales to unit L2 norm. A zero vector cannot be normalized.
inline void normalize(EmbeddingVector& v) {
    double n = v.norm();
    if (n == 0.0 || !std::isfinite(n)) throw ProviderError("cannot normalize a zero or non-finite vector");
    for (double& x : v.values) x /= n;
}

/// Inner product of two embeddings from the same provider.
inline double pertinence(const EmbeddingVector& q, const EmbeddingVector& a) {
    if (q.provider_id != a.provider_id)
        throw InvalidArgument("provider mismatch: " + q.provider_id + " vs " + a.provider_id);
    if (q.dim() != a.dim()) throw InvalidArgument("dimension mismatch");
    double s = 0;
    for (std::size_t i = 0; i < q.values.size(); ++i) s += q.values[i] * a.values[i];
    return s;
}

struct EmbedRequest {
    std::string text;
    std::string context;  // empty for questions
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::string id() const = 0;
    /// Embeds each request; output order equals input order.
    virtual std::vector<EmbeddingVector> embed_batch(const std::vector<EmbedRequest>& batch, EmbedKind kind) const = 0;

    EmbeddingVector embed(const std::string& text, const std::string& context, EmbedKind kind) const {
        return embed_batch({{text, context}}, kind).at(0);
    }
};

/// Corpus statistics frozen at build time: paragraph-level IDF over lemmas and a
/// surface -> lemma map used to lemmatize free text.
struct LexicalModel {
    std::size_t dim = 1024;
    double context_weight = 1.0;  // weight of the context paragraph relative to the snippet
    std::size_t n_paragraphs = 0;
    std::map<std::string, std::size_t> df;
    std::map<std::string, std::string> lemma_of;  // lowercased surface -> lemma
    std::set<std::string> stop_words{"a",    "an",   "the",   "be",    "is",  "are",  "was", "were", "am",
                                     "been", "of",   "and",   "or",    "this", "that", "these", "those", "it",
                                     "its",  "do",   "does",  "have",  "has", "can",  "will", "would", "should",
                                     "may",  "might", "must", "to",    "for", "in",   "on",  "at",   "by",
                                     "with", "from", "as",    "not",   "no"};

    static LexicalModel from_corpus(const Corpus& corpus, std::size_t dim = 1024) {
        LexicalModel m;
        m.dim = dim;
        std::map<std::string, std::map<std::string, std::size_t>> votes;
        for (auto& d : corpus.documents)
            for (auto& p : d.paragraphs) {
                ++m.n_paragraphs;
                std::set<std::string> seen;
                for (auto& s : p.sentences)
                    for (auto& t : s.tokens) {
                        std::string lemma = to_lower(t.lemma);
                        if (!has_word_char(lemma)) continue;
                        ++votes[to_lower(t.surface)][lemma];
                        seen.insert(lemma);
                    }
                for (auto& w : seen) ++m.df[w];
            }
        for (auto& [surface, counts] : votes) {
            std::size_t best = 0;
            for (auto& [lemma, n] : counts)
                if (n > best) {
                    best = n;
                    m.lemma_of[surface] = lemma;
                }
        }
        m.assign_slots();
        return m;
    }

    /// Smoothed IDF; unseen lemmas get the maximum weight.
    double idf(const std::string& lemma) const {
        auto it = df.find(lemma);
        double d = it == df.end() ? 0.0 : static_cast<double>(it->second);
        return std::log((1.0 + static_cast<double>(n_paragraphs)) / (1.0 + d)) + 1.0;
    }

    /// Corpus lemma of a surface form. Unknown forms fall back to the first suffix-stripped
    /// variant that is a known lemma ("measured" -> "measure"), else the form itself.
    std::string lemmatize(const std::string& word) const {
        auto it = lemma_of.find(word);
        if (it != lemma_of.end()) return it->second;
        if (df.count(word)) return word;
        static const std::pair<const char*, const char*> rules[] = {
            {"ies", "y"}, {"es", ""}, {"s", ""}, {"ied", "y"}, {"ed", ""}, {"ed", "e"}, {"d", ""}, {"ing", ""}, {"ing", "e"}};
        for (auto& [suffix, repl] : rules) {
            std::string suf(suffix);
            if (word.size() > suf.size() + 2 && word.compare(word.size() - suf.size(), suf.size(), suf) == 0) {
                std::string cand = word.substr(0, word.size() - suf.size()) + repl;
                auto f = df.find(cand);
                if (f != df.end() && f->second > 0) return cand;
            }
        }
        return word;
    }

    std::vector<std::string> lemmas(const std::string& text) const {
        std::vector<std::string> out;
        for (auto& w : words(text)) out.push_back(lemmatize(w));
        return out;
    }

    // Vocabulary lemmas get distinct slots: home bucket fnv1a64 % dim, linear probing in
    // lemma order. Other words probe to the first bucket no vocabulary lemma occupies,
    // so they can never match corpus text. Without room, plain hashing applies.
    std::map<std::string, std::size_t> slots;
    std::vector<bool> occupied;

    void add_vocabulary(const std::vector<std::string>& extra) {
        for (auto& w : extra) df.try_emplace(w, 0);
    }

    void assign_slots() {
        slots.clear();
        occupied.assign(dim, false);
        if (df.size() > dim) return;
        for (auto& [lemma, _] : df) {
            auto b = static_cast<std::size_t>(fnv1a64(lemma) % dim);
            while (occupied[b]) b = (b + 1) % dim;
            occupied[b] = true;
            slots[lemma] = b;
        }
    }

    std::size_t bucket(const std::string& lemma) const {
        auto it = slots.find(lemma);
        if (it != slots.end()) return it->second;
        auto b = static_cast<std::size_t>(fnv1a64(lemma) % dim);
        if (slots.empty() || slots.size() >= dim) return b;
        while (occupied[b]) b = (b + 1) % dim;
        return b;
    }

    /// Term frequencies of content lemmas; stop words count only when nothing else remains.
    std::map<std::string, double> term_counts(const std::string& text) const {
        auto ls = lemmas(text);
        std::map<std::string, double> w;
        for (auto& l : ls)
            if (!stop_words.count(l)) w[l] += 1.0;
        if (w.empty())
            for (auto& l : ls) w[l] += 1.0;
        return w;
    }

    /// Raw (unnormalized) weights: (tf(text) + context_weight * tf(context)) * idf.
    std::map<std::string, double> term_weights(const std::string& text, const std::string& context = "") const {
        auto w = term_counts(text);
        if (!context.empty())
            for (auto& [l, v] : term_counts(context)) w[l] += context_weight * v;
        for (auto& [l, v] : w) v *= idf(l);
        return w;
    }

    /// Removes words whose lemma is in `mask`.
    std::string mask_text(const std::string& text, const std::set<std::string>& mask) const {
        if (mask.empty()) return text;
        std::string out;
        for (auto& w : words(text)) {
            if (mask.count(lemmatize(w))) continue;
            if (!out.empty()) out += ' ';
            out += w;
        }
        return out;
    }

    nlohmann::json to_json() const {
        return {{"dim", dim}, {"context_weight", context_weight}, {"n_paragraphs", n_paragraphs}, {"df", df}, {"lemma_of", lemma_of},
                {"stop_words", std::vector<std::string>(stop_words.begin(), stop_words.end())}};
    }

    static LexicalModel from_json(const nlohmann::json& j) {
        LexicalModel m;
        m.dim = j.at("dim");
        m.context_weight = j.at("context_weight");
        m.n_paragraphs = j.at("n_paragraphs");
        m.df = j.at("df").get<std::map<std::string, std::size_t>>();
        m.lemma_of = j.at("lemma_of").get<std::map<std::string, std::string>>();
        m.stop_words = j.at("stop_words").get<std::set<std::string>>();
        m.assign_slots();
        return m;
    }
};

/// Built-in deterministic provider: IDF-weighted bag of lemmas hashed by FNV-1a.
class LexicalProvider : public EmbeddingProvider {
public:
    explicit LexicalProvider(std::shared_ptr<const LexicalModel> model) : model_(std::move(model)) {}

    std::string id() const override { return "lexical-fnv1a-" + std::to_string(model_->dim); }

    std::vector<EmbeddingVector> embed_batch(const std::vector<EmbedRequest>& batch, EmbedKind) const override {
        std::vector<EmbeddingVector> out;
        out.reserve(batch.size());
        for (auto& r : batch) {
            if (!has_word_char(r.text)) throw InvalidArgument("embed: empty text");
            EmbeddingVector v{std::vector<double>(model_->dim, 0.0), id()};
            for (auto& [l, w] : model_->term_weights(r.text, r.context)) v.values[model_->bucket(l)] += w;
            normalize(v);
            out.push_back(std::move(v));
        }
        return out;
    }

    const LexicalModel& model() const { return *model_; }

private:
    std::shared_ptr<const LexicalModel> model_;
};

}  // namespace xspace
