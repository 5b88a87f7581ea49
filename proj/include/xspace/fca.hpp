#pragma once

// Formal concept analysis: contexts, Galois derivation operators, and the complete
// concept lattice by NextClosure (Ganter's lectic enumeration of closed intents).

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "xspace/error.hpp"

namespace xspace {

/// Fixed-size bitset with dynamic width.
class Bitset {
public:
    Bitset() = default;
    explicit Bitset(std::size_t n) : n_(n), w_((n + 63) / 64, 0) {}

    static Bitset full(std::size_t n) {
        Bitset b(n);
        for (std::size_t i = 0; i < n; ++i) b.set(i);
        return b;
    }

    std::size_t size() const noexcept { return n_; }
    bool test(std::size_t i) const { return (w_[i / 64] >> (i % 64)) & 1U; }
    void set(std::size_t i) { w_[i / 64] |= std::uint64_t{1} << (i % 64); }
    void reset(std::size_t i) { w_[i / 64] &= ~(std::uint64_t{1} << (i % 64)); }

    std::size_t count() const {
        std::size_t c = 0;
        for (auto w : w_) c += static_cast<std::size_t>(std::popcount(w));
        return c;
    }

    bool subset_of(const Bitset& o) const {
        for (std::size_t i = 0; i < w_.size(); ++i)
            if (w_[i] & ~o.w_[i]) return false;
        return true;
    }

    Bitset& operator&=(const Bitset& o) {
        for (std::size_t i = 0; i < w_.size(); ++i) w_[i] &= o.w_[i];
        return *this;
    }
    Bitset& operator|=(const Bitset& o) {
        for (std::size_t i = 0; i < w_.size(); ++i) w_[i] |= o.w_[i];
        return *this;
    }

    std::vector<int> indices() const {
        std::vector<int> out;
        for (std::size_t i = 0; i < n_; ++i)
            if (test(i)) out.push_back(static_cast<int>(i));
        return out;
    }

    friend bool operator==(const Bitset&, const Bitset&) = default;

private:
    std::size_t n_ = 0;
    std::vector<std::uint64_t> w_;
};

struct FormalContext {
    std::vector<std::string> objects;
    std::vector<std::string> attributes;
    std::vector<std::vector<bool>> incidence;  // objects x attributes

    void validate() const {
        if (incidence.size() != objects.size()) throw ValidationError("incidence rows != object count");
        for (auto& row : incidence)
            if (row.size() != attributes.size()) throw ValidationError("incidence columns != attribute count");
    }

    std::size_t n_objects() const { return objects.size(); }
    std::size_t n_attributes() const { return attributes.size(); }
};

struct FormalConcept {
    std::vector<int> extent;  // sorted object indices
    std::vector<int> intent;  // sorted attribute indices
    friend bool operator==(const FormalConcept&, const FormalConcept&) = default;
};

/// Derivation operators of a context, precomputed as row/column bitsets.
class Derivation {
public:
    explicit Derivation(const FormalContext& ctx) : n_obj_(ctx.n_objects()), n_att_(ctx.n_attributes()) {
        ctx.validate();
        rows_.assign(n_obj_, Bitset(n_att_));
        cols_.assign(n_att_, Bitset(n_obj_));
        for (std::size_t o = 0; o < n_obj_; ++o)
            for (std::size_t a = 0; a < n_att_; ++a)
                if (ctx.incidence[o][a]) {
                    rows_[o].set(a);
                    cols_[a].set(o);
                }
    }

    /// Objects having every attribute in `attrs`.
    Bitset extent_of(const Bitset& attrs) const {
        Bitset e = Bitset::full(n_obj_);
        for (std::size_t a = 0; a < n_att_; ++a)
            if (attrs.test(a)) e &= cols_[a];
        return e;
    }

    /// Attributes shared by every object in `objs`.
    Bitset intent_of(const Bitset& objs) const {
        Bitset i = Bitset::full(n_att_);
        for (std::size_t o = 0; o < n_obj_; ++o)
            if (objs.test(o)) i &= rows_[o];
        return i;
    }

    Bitset close_intent(const Bitset& attrs) const { return intent_of(extent_of(attrs)); }
    Bitset close_extent(const Bitset& objs) const { return extent_of(intent_of(objs)); }

    std::size_t n_objects() const { return n_obj_; }
    std::size_t n_attributes() const { return n_att_; }

private:
    std::size_t n_obj_, n_att_;
    std::vector<Bitset> rows_, cols_;
};

/// Canonical lattice order: extent size ascending, then extent index sequence lexicographically.
inline void sort_concepts(std::vector<FormalConcept>& cs) {
    std::sort(cs.begin(), cs.end(), [](const FormalConcept& a, const FormalConcept& b) {
        if (a.extent.size() != b.extent.size()) return a.extent.size() < b.extent.size();
        return a.extent < b.extent;
    });
}

/// All formal concepts of `ctx`, enumerated by NextClosure over attributes.
inline std::vector<FormalConcept> fca_lattice(const FormalContext& ctx) {
    Derivation d(ctx);
    const std::size_t m = d.n_attributes();
    std::vector<FormalConcept> out;
    auto emit = [&](const Bitset& intent) { out.push_back({d.extent_of(intent).indices(), intent.indices()}); };

    Bitset a = d.close_intent(Bitset(m));
    emit(a);
    while (true) {
        bool advanced = false;
        for (std::size_t i = m; i-- > 0;) {
            if (a.test(i)) {
                a.reset(i);
                continue;
            }
            // a now holds A ∩ {0..i-1}
            Bitset candidate = a;
            candidate.set(i);
            Bitset b = d.close_intent(candidate);
            bool lectic_ok = true;
            for (std::size_t j = 0; j < i; ++j)
                if (b.test(j) && !a.test(j)) {
                    lectic_ok = false;
                    break;
                }
            if (lectic_ok) {
                a = b;
                emit(a);
                advanced = true;
                break;
            }
        }
        if (!advanced) break;
    }
    sort_concepts(out);
    return out;
}

/// Indices of the upper covers of each concept (concepts directly above in the lattice).
inline std::vector<std::vector<std::size_t>> upper_covers(const std::vector<FormalConcept>& lattice,
                                                          std::size_t n_objects) {
    std::vector<Bitset> ext;
    for (auto& c : lattice) {
        Bitset b(n_objects);
        for (int o : c.extent) b.set(static_cast<std::size_t>(o));
        ext.push_back(std::move(b));
    }
    auto strictly_below = [&](std::size_t x, std::size_t y) { return ext[x].subset_of(ext[y]) && !(ext[x] == ext[y]); };
    std::vector<std::vector<std::size_t>> covers(lattice.size());
    for (std::size_t x = 0; x < lattice.size(); ++x) {
        for (std::size_t y = 0; y < lattice.size(); ++y) {
            if (!strictly_below(x, y)) continue;
            bool direct = true;
            for (std::size_t z = 0; z < lattice.size() && direct; ++z)
                if (strictly_below(x, z) && strictly_below(z, y)) direct = false;
            if (direct) covers[x].push_back(y);
        }
    }
    return covers;
}

}  // namespace xspace
