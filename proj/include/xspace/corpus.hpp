#pragma once

// Corpus model: CoNLL-U sentences grouped into paragraphs and documents.

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <future>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "xspace/error.hpp"
#include "xspace/text.hpp"

namespace xspace {

struct Token {
    int index = 0;  // 1-based
    std::string surface;
    std::string lemma;
    std::string upos;
    std::string xpos = "_";
    std::string feats = "_";
    int head = 0;  // 0 = root
    std::string deprel;
    std::string deps = "_";
    std::string misc = "_";

    bool space_after() const { return misc.find("SpaceAfter=No") == std::string::npos; }

    friend bool operator==(const Token&, const Token&) = default;
};

struct CharSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
    friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

struct Sentence {
    std::string sentence_id;
    std::string paragraph_ref;
    std::string text;
    std::vector<Token> tokens;
    CharSpan char_span;  // offsets into the owning paragraph; set by load_corpus

    const Token& token(int index) const { return tokens.at(static_cast<std::size_t>(index - 1)); }
    int size() const { return static_cast<int>(tokens.size()); }

    friend bool operator==(const Sentence&, const Sentence&) = default;
};

struct Paragraph {
    std::string paragraph_id;
    std::string text;
    std::string document_ref;
    int order = 0;
    std::vector<Sentence> sentences;
};

struct Document {
    std::string document_id;
    std::string title;
    std::optional<std::string> url;
    std::vector<Paragraph> paragraphs;
};

struct Corpus {
    std::vector<Document> documents;
    std::string config_hash;

    std::size_t paragraph_count() const {
        std::size_t n = 0;
        for (auto& d : documents) n += d.paragraphs.size();
        return n;
    }

    std::size_t sentence_count() const {
        std::size_t n = 0;
        for (auto& d : documents)
            for (auto& p : d.paragraphs) n += p.sentences.size();
        return n;
    }

    const Paragraph* find_paragraph(std::string_view id) const {
        for (auto& d : documents)
            for (auto& p : d.paragraphs)
                if (p.paragraph_id == id) return &p;
        return nullptr;
    }
};

inline bool is_closing_punct(std::string_view s) {
    return s == "." || s == "," || s == ";" || s == ":" || s == "!" || s == "?" || s == ")";
}

/// Whether a space separates `prev` and `next` when joining a token subsequence:
/// adjacent tokens follow SpaceAfter=No; across a gap only closing punctuation attaches.
inline bool space_between(const Token& prev, const Token& next) {
    if (next.index == prev.index + 1) return prev.space_after();
    return !is_closing_punct(next.surface);
}

/// Joins token surfaces honouring SpaceAfter=No.
inline std::string detokenize(const std::vector<const Token*>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0 && space_between(*tokens[i - 1], *tokens[i])) out += ' ';
        out += tokens[i]->surface;
    }
    return out;
}

inline std::string detokenize(const Sentence& s, int first, int last) {
    std::vector<const Token*> span;
    for (int i = first; i <= last; ++i) span.push_back(&s.token(i));
    return detokenize(span);
}

/// Checks index contiguity, head range, single root and acyclicity.
inline void validate_sentence(const Sentence& s) {
    const int n = s.size();
    int roots = 0;
    for (int i = 0; i < n; ++i) {
        const Token& t = s.tokens[static_cast<std::size_t>(i)];
        if (t.index != i + 1)
            throw ValidationError("sentence " + s.sentence_id + ": token ids are not contiguous");
        if (t.head < 0 || t.head > n)
            throw ValidationError("sentence " + s.sentence_id + ": head out of range at token " +
                                  std::to_string(t.index));
        if (t.head == 0) ++roots;
        if (t.lemma.empty() && !t.surface.empty())
            throw ValidationError("sentence " + s.sentence_id + ": empty lemma");
    }
    for (int i = 1; i <= n; ++i) {
        int cur = i;
        for (int steps = 0; cur != 0; ++steps) {
            if (steps > n)
                throw ValidationError("sentence " + s.sentence_id + ": cyclic head graph at token " +
                                      std::to_string(i));
            cur = s.token(cur).head;
        }
    }
    if (n > 0 && roots != 1)
        throw ValidationError("sentence " + s.sentence_id + ": expected exactly one root, found " +
                              std::to_string(roots));
}

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find('\t', start);
        cols.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return cols;
}

inline std::optional<int> parse_int(const std::string& s) {
    if (s.empty()) return std::nullopt;
    int v = 0;
    for (char c : s) {
        if (c < '0' || c > '9') return std::nullopt;
        v = v * 10 + (c - '0');
        if (v > 1000000) return std::nullopt;
    }
    return v;
}

inline std::optional<std::string> comment_value(const std::string& line, std::string_view key) {
    // "# key = value" or "# key" (value empty)
    std::string body = trim(std::string_view(line).substr(1));
    if (body.rfind(key, 0) != 0) return std::nullopt;
    std::string rest = trim(std::string_view(body).substr(key.size()));
    if (rest.empty()) return std::string{};
    if (rest[0] != '=') return std::nullopt;
    return trim(std::string_view(rest).substr(1));
}

}  // namespace detail

/// Parses a CoNLL-U stream. `doc_index` seeds synthesized ids (d<doc>_p<par>_s<idx>).
inline std::vector<Sentence> parse_conllu(std::istream& in, int doc_index = 0) {
    std::vector<Sentence> out;
    std::string line;
    std::size_t line_no = 0;

    int par_counter = -1;  // index of the current paragraph group
    std::string current_par;
    int sent_in_par = 0;

    Sentence cur;
    std::optional<std::string> pending_sent_id, pending_text, pending_par;
    bool pending_newpar = false;
    std::size_t block_start = 0;

    auto flush = [&]() {
        if (cur.tokens.empty()) {
            pending_sent_id.reset();
            pending_text.reset();
            return;
        }
        if (pending_newpar || par_counter < 0) {
            ++par_counter;
            sent_in_par = 0;
            current_par = (pending_par && !pending_par->empty())
                              ? *pending_par
                              : "d" + std::to_string(doc_index) + "_p" + std::to_string(par_counter);
        }
        pending_newpar = false;
        pending_par.reset();
        cur.paragraph_ref = current_par;
        cur.sentence_id = pending_sent_id && !pending_sent_id->empty()
                              ? *pending_sent_id
                              : current_par + "_s" + std::to_string(sent_in_par);
        ++sent_in_par;
        if (pending_text) {
            cur.text = *pending_text;
        } else {
            std::vector<const Token*> all;
            for (auto& t : cur.tokens) all.push_back(&t);
            cur.text = detokenize(all);
        }
        for (std::size_t i = 0; i < cur.tokens.size(); ++i) {
            if (cur.tokens[i].index != static_cast<int>(i) + 1)
                throw ParseError("sentence " + cur.sentence_id + ": token ids are not contiguous",
                                 block_start);
        }
        validate_sentence(cur);
        out.push_back(std::move(cur));
        cur = Sentence{};
        pending_sent_id.reset();
        pending_text.reset();
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) {
            flush();
            continue;
        }
        if (line[0] == '#') {
            if (auto v = detail::comment_value(line, "sent_id")) pending_sent_id = *v;
            else if (auto v2 = detail::comment_value(line, "text")) pending_text = *v2;
            else if (auto v3 = detail::comment_value(line, "newpar id")) {
                pending_newpar = true;
                pending_par = *v3;
            } else if (auto v4 = detail::comment_value(line, "newpar")) {
                pending_newpar = true;
                pending_par = std::string{};
            }
            continue;
        }
        if (cur.tokens.empty()) block_start = line_no;
        auto cols = detail::split_tabs(line);
        if (cols.size() != 10)
            throw ParseError("expected 10 tab-separated columns, found " + std::to_string(cols.size()),
                             line_no);
        const std::string& id = cols[0];
        if (id.find('-') != std::string::npos || id.find('.') != std::string::npos) continue;
        auto index = detail::parse_int(id);
        if (!index) throw ParseError("non-integer token id '" + id + "'", line_no);
        auto head = detail::parse_int(cols[6]);
        if (!head) throw ParseError("non-integer head '" + cols[6] + "'", line_no);

        Token t;
        t.index = *index;
        t.surface = cols[1];
        t.lemma = (cols[2] == "_" && cols[1] != "_") ? to_lower(cols[1]) : cols[2];
        t.upos = cols[3];
        t.xpos = cols[4];
        t.feats = cols[5];
        t.head = *head;
        t.deprel = cols[7];
        t.deps = cols[8];
        t.misc = cols[9];
        cur.tokens.push_back(std::move(t));
    }
    flush();
    return out;
}

inline std::vector<Sentence> parse_conllu(std::string_view text, int doc_index = 0) {
    std::istringstream in{std::string(text)};
    return parse_conllu(in, doc_index);
}

/// Serializes sentences back to CoNLL-U (ids, paragraph markers and text as comments).
inline void write_conllu(std::ostream& out, const std::vector<Sentence>& sentences) {
    std::string last_par;
    bool first = true;
    for (auto& s : sentences) {
        if (first || s.paragraph_ref != last_par) out << "# newpar id = " << s.paragraph_ref << '\n';
        first = false;
        last_par = s.paragraph_ref;
        out << "# sent_id = " << s.sentence_id << '\n';
        out << "# text = " << s.text << '\n';
        for (auto& t : s.tokens) {
            out << t.index << '\t' << t.surface << '\t' << t.lemma << '\t' << t.upos << '\t' << t.xpos
                << '\t' << t.feats << '\t' << t.head << '\t' << t.deprel << '\t' << t.deps << '\t'
                << t.misc << '\n';
        }
        out << '\n';
    }
}

inline std::string to_conllu(const std::vector<Sentence>& sentences) {
    std::ostringstream out;
    write_conllu(out, sentences);
    return out.str();
}

/// Splits a text file into blank-line separated paragraphs (internal newlines become spaces).
inline std::vector<std::string> split_paragraphs(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in{std::string(text)};
    std::string line;
    auto push = [&] {
        auto t = trim(cur);
        if (!t.empty()) out.push_back(t);
        cur.clear();
    };
    while (std::getline(in, line)) {
        if (trim(line).empty()) {
            push();
        } else {
            if (!cur.empty()) cur += ' ';
            cur += trim(line);
        }
    }
    push();
    return out;
}

namespace detail {

struct ManifestEntry {
    std::string id;
    std::string title;
    std::optional<std::string> url;
    std::string text_file;
    std::string conllu_file;
};

/// Assigns parsed sentences to text paragraphs by sequential search and fixes char spans.
inline Document assemble_document(const ManifestEntry& entry, const std::string& text,
                                  std::vector<Sentence> sentences) {
    Document doc;
    doc.document_id = entry.id;
    doc.title = entry.title;
    doc.url = entry.url;
    auto paras = split_paragraphs(text);
    for (std::size_t k = 0; k < paras.size(); ++k) {
        Paragraph p;
        p.text = paras[k];
        p.document_ref = entry.id;
        p.order = static_cast<int>(k);
        doc.paragraphs.push_back(std::move(p));
    }
    std::vector<std::optional<std::string>> explicit_ref(paras.size());
    std::size_t par = 0, cursor = 0;
    std::string prev_ref;
    for (auto& s : sentences) {
        // A new CoNLL-U paragraph group starts searching in the next text paragraph.
        if (!prev_ref.empty() && s.paragraph_ref != prev_ref && par < paras.size() && cursor > 0) {
            ++par;
            cursor = 0;
        }
        prev_ref = s.paragraph_ref;
        std::size_t found = std::string::npos;
        while (par < paras.size()) {
            found = paras[par].find(s.text, cursor);
            if (found != std::string::npos) break;
            ++par;
            cursor = 0;
        }
        if (found == std::string::npos)
            throw ValidationError("document " + entry.id + ": sentence " + s.sentence_id +
                                  " has a char_span outside its paragraph");
        s.char_span = {found, found + s.text.size()};
        cursor = s.char_span.end;
        auto& ref = explicit_ref[par];
        if (!ref) ref = s.paragraph_ref;
        else if (*ref != s.paragraph_ref)
            throw ValidationError("document " + entry.id + ": paragraph " + *ref +
                                  " and " + s.paragraph_ref + " map to the same text paragraph");
        doc.paragraphs[par].sentences.push_back(std::move(s));
    }
    std::map<std::string, int> ref_uses;
    for (auto& r : explicit_ref)
        if (r) ++ref_uses[*r];
    for (std::size_t k = 0; k < doc.paragraphs.size(); ++k) {
        auto& p = doc.paragraphs[k];
        // A ref spanning several text paragraphs (no newpar markers) falls back to positional ids.
        bool unique_ref = explicit_ref[k] && ref_uses[*explicit_ref[k]] == 1;
        p.paragraph_id = unique_ref ? *explicit_ref[k] : entry.id + "_p" + std::to_string(k);
        for (auto& s : p.sentences) s.paragraph_ref = p.paragraph_id;
    }
    return doc;
}

}  // namespace detail

/// Loads a JSON manifest `{documents: [{id, title, url?, text_file, conllu_file}]}`.
/// Relative paths resolve against the manifest's directory.
inline Corpus load_corpus(const std::string& manifest_path) {
    namespace fs = std::filesystem;
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_file(manifest_path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("manifest " + manifest_path + ": " + e.what());
    }
    const fs::path base = fs::path(manifest_path).parent_path();
    auto resolve = [&](const std::string& p) {
        fs::path fp(p);
        return (fp.is_absolute() ? fp : base / fp).string();
    };

    std::vector<detail::ManifestEntry> entries;
    std::set<std::string> ids;
    const auto& docs = manifest.value("documents", nlohmann::json::array());
    if (!docs.is_array()) throw ValidationError("manifest " + manifest_path + ": documents must be an array");
    for (const auto& d : docs) {
        detail::ManifestEntry e;
        try {
            e.id = d.at("id").get<std::string>();
            e.title = d.value("title", e.id);
            if (d.contains("url") && d["url"].is_string()) e.url = d["url"].get<std::string>();
            e.text_file = resolve(d.at("text_file").get<std::string>());
            e.conllu_file = resolve(d.at("conllu_file").get<std::string>());
        } catch (const nlohmann::json::exception& ex) {
            throw ValidationError("manifest " + manifest_path + ": " + ex.what());
        }
        if (!ids.insert(e.id).second) throw ValidationError("duplicate document id " + e.id);
        entries.push_back(std::move(e));
    }

    // Documents parse independently; results are merged in manifest order.
    std::vector<std::future<Document>> jobs;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        jobs.push_back(std::async(std::launch::async, [&entries, i] {
            const auto& e = entries[i];
            std::string text = read_file(e.text_file);
            std::string conllu = read_file(e.conllu_file);
            auto sentences = parse_conllu(conllu, static_cast<int>(i));
            return detail::assemble_document(e, text, std::move(sentences));
        }));
    }
    Corpus corpus;
    for (auto& j : jobs) corpus.documents.push_back(j.get());

    std::set<std::string> par_ids, sent_ids;
    for (auto& d : corpus.documents)
        for (auto& p : d.paragraphs) {
            if (!par_ids.insert(p.paragraph_id).second)
                throw ValidationError("duplicate paragraph id " + p.paragraph_id);
            for (auto& s : p.sentences)
                if (!sent_ids.insert(s.sentence_id).second)
                    throw ValidationError("duplicate sentence id " + s.sentence_id);
        }
    return corpus;
}

}  // namespace xspace
