#pragma once

// Directed graphs over dense integer ids and exact betweenness centrality.

#include <algorithm>
#include <cstddef>
#include <queue>
#include <stack>
#include <vector>

#include "xspace/error.hpp"

namespace xspace {

struct Digraph {
    std::vector<std::vector<std::size_t>> out;

    explicit Digraph(std::size_t n = 0) : out(n) {}

    std::size_t size() const { return out.size(); }

    void add_edge(std::size_t u, std::size_t v) {
        if (u >= out.size() || v >= out.size()) throw InvalidArgument("edge endpoint out of range");
        out[u].push_back(v);
    }

    /// Sorts adjacency lists and drops parallel edges.
    void normalize() {
        for (auto& a : out) {
            std::sort(a.begin(), a.end());
            a.erase(std::unique(a.begin(), a.end()), a.end());
        }
    }
};

/// Unnormalized betweenness of every node (Brandes 2001, unweighted directed):
/// sum over ordered pairs s != t != v of sigma_st(v) / sigma_st.
inline std::vector<double> betweenness(const Digraph& g) {
    const std::size_t n = g.size();
    std::vector<double> cb(n, 0.0);
    std::vector<std::vector<std::size_t>> pred(n);
    std::vector<double> sigma(n), delta(n);
    std::vector<long> dist(n);
    for (std::size_t s = 0; s < n; ++s) {
        std::stack<std::size_t> order;
        for (std::size_t i = 0; i < n; ++i) {
            pred[i].clear();
            sigma[i] = 0;
            dist[i] = -1;
            delta[i] = 0;
        }
        sigma[s] = 1;
        dist[s] = 0;
        std::queue<std::size_t> q;
        q.push(s);
        while (!q.empty()) {
            auto v = q.front();
            q.pop();
            order.push(v);
            for (auto w : g.out[v]) {
                if (w == v) continue;
                if (dist[w] < 0) {
                    dist[w] = dist[v] + 1;
                    q.push(w);
                }
                if (dist[w] == dist[v] + 1) {
                    sigma[w] += sigma[v];
                    pred[w].push_back(v);
                }
            }
        }
        while (!order.empty()) {
            auto w = order.top();
            order.pop();
            for (auto v : pred[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            if (w != s) cb[w] += delta[w];
        }
    }
    return cb;
}

/// Nodes reachable from `sources` (sources included).
inline std::vector<bool> reachable(const Digraph& g, const std::vector<std::size_t>& sources) {
    std::vector<bool> seen(g.size(), false);
    std::queue<std::size_t> q;
    for (auto s : sources)
        if (!seen[s]) {
            seen[s] = true;
            q.push(s);
        }
    while (!q.empty()) {
        auto v = q.front();
        q.pop();
        for (auto w : g.out[v])
            if (!seen[w]) {
                seen[w] = true;
                q.push(w);
            }
    }
    return seen;
}

}  // namespace xspace
