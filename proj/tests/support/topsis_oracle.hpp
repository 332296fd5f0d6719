#pragma once

// Straight-line TOPSIS written from the formulas alone, sharing no code with
// the library. Used to cross-check rank().

#include <cmath>
#include <cstddef>
#include <vector>

namespace vsfleet::testing {

struct OracleResult {
    std::vector<double> closeness;
    std::vector<std::size_t> order;
};

inline OracleResult oracle_topsis(const std::vector<std::vector<double>>& q, const std::vector<bool>& maximize) {
    const std::size_t n = q.size();
    const std::size_t m = maximize.size();

    std::vector<std::vector<double>> r(n, std::vector<double>(m, 0.0));
    for (std::size_t j = 0; j < m; ++j) {
        double sum_sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum_sq += q[i][j] * q[i][j];
        const double norm = std::sqrt(sum_sq);
        for (std::size_t i = 0; i < n; ++i) r[i][j] = norm == 0.0 ? 0.0 : q[i][j] / norm;
    }

    std::vector<double> best(m), worst(m);
    for (std::size_t j = 0; j < m; ++j) {
        double hi = r[0][j], lo = r[0][j];
        for (std::size_t i = 1; i < n; ++i) {
            if (r[i][j] > hi) hi = r[i][j];
            if (r[i][j] < lo) lo = r[i][j];
        }
        best[j] = maximize[j] ? hi : lo;
        worst[j] = maximize[j] ? lo : hi;
    }

    OracleResult out;
    for (std::size_t i = 0; i < n; ++i) {
        double dp = 0.0, dn = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            dp += (r[i][j] - best[j]) * (r[i][j] - best[j]);
            dn += (r[i][j] - worst[j]) * (r[i][j] - worst[j]);
        }
        dp = std::sqrt(dp);
        dn = std::sqrt(dn);
        out.closeness.push_back(dp + dn == 0.0 ? 0.5 : dn / (dp + dn));
    }

    // Selection sort: largest closeness first, lowest index on ties.
    std::vector<bool> taken(n, false);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t pick = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (taken[i]) continue;
            if (pick == n || out.closeness[i] > out.closeness[pick]) pick = i;
        }
        taken[pick] = true;
        out.order.push_back(pick);
    }
    return out;
}

}  // namespace vsfleet::testing
