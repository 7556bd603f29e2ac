#pragma once

// Test-only oracles, independent of the library's solver paths.

#include "armor/fdiv.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace oracles {

using armor::kInf;
using armor::Mat;
using armor::Vec;

/// sup_x { z x - f(x) } by dense grid search.
inline double legendre_sup(const std::function<double(double)>& f, double z, double x_lo,
                           double x_hi, double step) {
    double best = -kInf;
    for (double x = x_lo; x <= x_hi + 1e-15; x += step) {
        const double fx = f(x);
        if (!std::isfinite(fx)) continue;
        best = std::max(best, z * x - fx);
    }
    return best;
}

/// Exact OT value by enumerating the basic feasible solutions of the
/// transportation polytope: every vertex is a spanning tree of the bipartite
/// support graph with n + m - 1 cells, whose flows are forced by the
/// marginals (leaf peeling).
inline double ot_enumerate(const Mat& cost, const Vec& mu, const Vec& nu) {
    const int n = static_cast<int>(mu.size());
    const int m = static_cast<int>(nu.size());
    const int cells = n * m;
    const int basis_size = n + m - 1;

    std::vector<int> pick(basis_size);
    double best = kInf;

    std::function<void(int, int)> recurse = [&](int start, int depth) {
        if (depth == basis_size) {
            // Solve the tree flows by repeatedly peeling degree-1 nodes.
            std::vector<double> row_rem(mu.data(), mu.data() + n);
            std::vector<double> col_rem(nu.data(), nu.data() + m);
            std::vector<bool> used(basis_size, false);
            std::vector<double> flow(basis_size, 0.0);
            std::vector<int> row_deg(n, 0), col_deg(m, 0);
            for (int k : pick) {
                ++row_deg[k / m];
                ++col_deg[k % m];
            }
            for (int it = 0; it < basis_size; ++it) {
                int found = -1;
                for (int e = 0; e < basis_size && found < 0; ++e) {
                    if (used[e]) continue;
                    const int r = pick[e] / m, c = pick[e] % m;
                    if (row_deg[r] == 1 || col_deg[c] == 1) found = e;
                }
                if (found < 0) return;  // has a cycle; not a tree basis
                const int r = pick[found] / m, c = pick[found] % m;
                const double f = row_deg[r] == 1 ? row_rem[r] : col_rem[c];
                flow[found] = f;
                row_rem[r] -= f;
                col_rem[c] -= f;
                --row_deg[r];
                --col_deg[c];
                used[found] = true;
            }
            double value = 0.0;
            for (int e = 0; e < basis_size; ++e) {
                if (flow[e] < -1e-10) return;  // infeasible vertex
                if (flow[e] > 0.0) {
                    const double c = cost(pick[e] / m, pick[e] % m);
                    if (!std::isfinite(c)) return;
                    value += flow[e] * c;
                }
            }
            best = std::min(best, value);
            return;
        }
        for (int cell = start; cell < cells; ++cell) {
            pick[depth] = cell;
            recurse(cell + 1, depth + 1);
        }
    };
    recurse(0, 0);
    return best;
}

}  // namespace oracles
