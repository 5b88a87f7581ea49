#pragma once

// Usability statistics: quiz effectiveness, attention check, NCS-6 scoring,
// interquartile filtering and the one-sided Mann-Whitney U test.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "xspace/error.hpp"

namespace xspace {

struct QuizScore {
    std::vector<int> per_question;  // 0 or 1
    int total = 0;
    double fraction = 0;
};

/// 1 per answer equal to the key, else 0 ("I don't know" included).
inline QuizScore score_quiz(const std::vector<std::string>& answers, const std::vector<std::string>& key) {
    if (answers.size() > key.size()) throw InvalidArgument("more answers than key entries");
    QuizScore s;
    for (std::size_t i = 0; i < key.size(); ++i) {
        int ok = i < answers.size() && answers[i] == key[i] ? 1 : 0;
        s.per_question.push_back(ok);
        s.total += ok;
    }
    s.fraction = key.empty() ? 0.0 : static_cast<double>(s.total) / static_cast<double>(key.size());
    return s;
}

/// Participants with fewer than one correct answer are discarded.
inline bool attention_check(const QuizScore& s) { return s.total >= 1; }

/// NCS-6: items 1, 2, 5, 6 count their value; items 3 and 4 are reversed to -5..-1.
inline int ncs_score(const std::array<int, 6>& r) {
    for (int v : r)
        if (v < 1 || v > 5) throw InvalidArgument("NCS response out of range 1..5: " + std::to_string(v));
    return r[0] + r[1] + r[4] + r[5] + (r[2] - 6) + (r[3] - 6);
}

struct Quartiles {
    double q1 = 0, median = 0, q3 = 0;
};

/// Linear interpolation between order statistics (Hyndman-Fan type 7):
/// position h = (n - 1) p over the sorted sample.
inline double quantile(std::vector<double> xs, double p) {
    if (xs.empty()) throw InvalidArgument("quantile of an empty sample");
    std::sort(xs.begin(), xs.end());
    double h = (static_cast<double>(xs.size()) - 1.0) * p;
    auto lo = static_cast<std::size_t>(std::floor(h));
    auto hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

inline Quartiles quartiles(const std::vector<double>& xs) {
    return {quantile(xs, 0.25), quantile(xs, 0.5), quantile(xs, 0.75)};
}

struct NcsFilter {
    std::vector<std::size_t> kept;  // indices into the input, in input order
    Quartiles q;
};

/// Keeps scores inside the interquartile range, bounds included.
inline NcsFilter normal_ncs_filter(const std::vector<double>& scores) {
    NcsFilter f;
    f.q = quartiles(scores);
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (scores[i] >= f.q.q1 && scores[i] <= f.q.q3) f.kept.push_back(i);
    return f;
}

enum class Alternative { less, greater };

struct MannWhitney {
    double u = 0;  // statistic of sample a
    double p = 1;
    bool exact = false;
};

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Midranks (1-based) of the pooled sample.
inline std::vector<double> midranks(const std::vector<double>& pooled) {
    std::vector<std::size_t> order(pooled.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return pooled[x] < pooled[y]; });
    std::vector<double> rank(pooled.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && pooled[order[j + 1]] == pooled[order[i]]) ++j;
        double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = r;
        i = j + 1;
    }
    return rank;
}

/// One-sided Mann-Whitney U. `less`: a tends to be smaller than b. Exact by
/// enumerating every split of the pooled midranks when n_a + n_b <= 12, otherwise
/// the normal approximation with tie and continuity corrections.
inline MannWhitney mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b, Alternative alt) {
    if (a.empty() || b.empty()) throw InvalidArgument("Mann-Whitney needs two non-empty samples");
    std::vector<double> pooled(a);
    pooled.insert(pooled.end(), b.begin(), b.end());
    auto rank = midranks(pooled);
    const std::size_t na = a.size(), nb = b.size(), n = pooled.size();
    auto u_of = [&](double rank_sum) { return rank_sum - static_cast<double>(na * (na + 1)) / 2.0; };
    double ra = 0;
    for (std::size_t i = 0; i < na; ++i) ra += rank[i];
    MannWhitney r;
    r.u = u_of(ra);
    const double eps = 1e-9;

    if (n <= 12) {
        r.exact = true;
        std::size_t hits = 0, total = 0;
        for (unsigned mask = 0; mask < (1U << n); ++mask) {
            if (static_cast<std::size_t>(std::popcount(mask)) != na) continue;
            double s = 0;
            for (std::size_t i = 0; i < n; ++i)
                if (mask & (1U << i)) s += rank[i];
            double u = u_of(s);
            ++total;
            if (alt == Alternative::less ? u <= r.u + eps : u >= r.u - eps) ++hits;
        }
        r.p = static_cast<double>(hits) / static_cast<double>(total);
        return r;
    }

    std::vector<double> sorted(pooled);
    std::sort(sorted.begin(), sorted.end());
    double ties = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && sorted[j] == sorted[i]) ++j;
        auto t = static_cast<double>(j - i);
        ties += t * t * t - t;
        i = j;
    }
    const double dn = static_cast<double>(n), dna = static_cast<double>(na), dnb = static_cast<double>(nb);
    double mu = dna * dnb / 2.0;
    double var = dna * dnb / 12.0 * ((dn + 1.0) - ties / (dn * (dn - 1.0)));
    if (var <= 0) {
        r.p = 1.0;
        return r;
    }
    double sd = std::sqrt(var);
    r.p = alt == Alternative::less ? normal_cdf((r.u - mu + 0.5) / sd) : 1.0 - normal_cdf((r.u - mu - 0.5) / sd);
    return r;
}

}  // namespace xspace
