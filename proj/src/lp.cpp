#include "persuasion/lp.hpp"

#include "persuasion/errors.hpp"

#include <limits>
#include <optional>

namespace persuasion::lp {

namespace {

using Matrix = std::vector<std::vector<Rational>>;

struct Tableau {
    Matrix T;                        // rows 0..m-1 constraints, last column is rhs
    std::vector<std::size_t> basis;  // basic column per row
    std::size_t cols = 0;            // structural + artificial columns

    const Rational& rhs(std::size_t i) const { return T[i][cols]; }

    void pivot(std::size_t r, std::size_t col) {
        const Rational p = T[r][col];
        for (auto& v : T[r]) v /= p;
        for (std::size_t i = 0; i < T.size(); ++i) {
            if (i == r || T[i][col].is_zero()) continue;
            const Rational f = T[i][col];
            for (std::size_t j = 0; j <= cols; ++j)
                if (!T[r][j].is_zero()) T[i][j] -= f * T[r][j];
        }
        basis[r] = col;
    }

    Rational reduced_cost(const std::vector<Rational>& cost, std::size_t col) const {
        Rational z;
        for (std::size_t i = 0; i < T.size(); ++i)
            if (!T[i][col].is_zero()) z += cost[basis[i]] * T[i][col];
        return cost[col] - z;
    }

    // Maximizes cost over the current feasible basis restricted to `allowed` columns.
    bool optimize(const std::vector<Rational>& cost, const std::vector<bool>& allowed) {
        for (;;) {
            std::optional<std::size_t> enter;
            for (std::size_t j = 0; j < cols && !enter; ++j)
                if (allowed[j] && reduced_cost(cost, j).sign() > 0) enter = j;
            if (!enter) return true;
            std::optional<std::size_t> leave;
            Rational best;
            for (std::size_t i = 0; i < T.size(); ++i) {
                if (T[i][*enter].sign() <= 0) continue;
                const Rational ratio = rhs(i) / T[i][*enter];
                if (!leave || ratio < best || (ratio == best && basis[i] < basis[*leave])) {
                    leave = i;
                    best = ratio;
                }
            }
            if (!leave) return false;
            pivot(*leave, *enter);
        }
    }
};

} // namespace

bool solve_square(Matrix M, std::vector<Rational> r, std::vector<Rational>& x) {
    const std::size_t n = M.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        while (p < n && M[p][c].is_zero()) ++p;
        if (p == n) return false;
        std::swap(M[p], M[c]);
        std::swap(r[p], r[c]);
        for (std::size_t i = 0; i < n; ++i) {
            if (i == c || M[i][c].is_zero()) continue;
            const Rational f = M[i][c] / M[c][c];
            for (std::size_t j = c; j < n; ++j)
                if (!M[c][j].is_zero()) M[i][j] -= f * M[c][j];
            r[i] -= f * r[c];
        }
    }
    x.assign(n, Rational(0));
    for (std::size_t i = 0; i < n; ++i) x[i] = r[i] / M[i][i];
    return true;
}

Result maximize(const Matrix& A, const std::vector<Rational>& b, const std::vector<Rational>& c) {
    const std::size_t m = A.size();
    const std::size_t n = c.size();
    if (b.size() != m) throw StructuralError("lp: rhs length does not match row count");
    for (const auto& row : A)
        if (row.size() != n) throw StructuralError("lp: ragged constraint matrix");

    Tableau tab;
    tab.cols = n + m;
    tab.T.assign(m, std::vector<Rational>(n + m + 1));
    tab.basis.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const bool flip = b[i].sign() < 0;
        for (std::size_t j = 0; j < n; ++j) tab.T[i][j] = flip ? -A[i][j] : A[i][j];
        tab.T[i][n + i] = Rational(1);
        tab.T[i][n + m] = flip ? -b[i] : b[i];
        tab.basis[i] = n + i;
    }

    std::vector<Rational> phase1(n + m);
    for (std::size_t i = 0; i < m; ++i) phase1[n + i] = Rational(-1);
    tab.optimize(phase1, std::vector<bool>(n + m, true));

    Result res;
    for (std::size_t i = 0; i < m; ++i)
        if (tab.basis[i] >= n && !tab.rhs(i).is_zero()) return res;

    // Drive zero-level artificials out of the basis; rows where that is
    // impossible are linearly dependent and get dropped.
    std::vector<bool> redundant(m, false);
    for (std::size_t i = 0; i < m; ++i) {
        if (tab.basis[i] < n) continue;
        std::optional<std::size_t> col;
        for (std::size_t j = 0; j < n && !col; ++j)
            if (!tab.T[i][j].is_zero()) col = j;
        if (col) tab.pivot(i, *col);
        else redundant[i] = true;
    }

    std::vector<Rational> cost(n + m);
    for (std::size_t j = 0; j < n; ++j) cost[j] = c[j];
    std::vector<bool> allowed(n + m, false);
    for (std::size_t j = 0; j < n; ++j) allowed[j] = true;
    if (!tab.optimize(cost, allowed)) {
        res.status = Status::Unbounded;
        return res;
    }

    res.status = Status::Optimal;
    res.x.assign(n, Rational(0));
    for (std::size_t i = 0; i < m; ++i)
        if (tab.basis[i] < n) res.x[tab.basis[i]] = tab.rhs(i);
    for (std::size_t j = 0; j < n; ++j) res.objective += c[j] * res.x[j];

    // Dual prices from B^T y = c_B on the non-redundant rows of the original system.
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < m; ++i)
        if (!redundant[i]) rows.push_back(i);
    std::vector<std::size_t> bcols;
    for (std::size_t i = 0; i < m; ++i)
        if (!redundant[i]) bcols.push_back(tab.basis[i]);
    Matrix BT(rows.size(), std::vector<Rational>(rows.size()));
    std::vector<Rational> cb(rows.size());
    for (std::size_t k = 0; k < bcols.size(); ++k) {
        for (std::size_t r = 0; r < rows.size(); ++r) BT[k][r] = A[rows[r]][bcols[k]];
        cb[k] = c[bcols[k]];
    }
    std::vector<Rational> y;
    if (!solve_square(BT, cb, y)) throw InternalConsistencyError("lp: final basis is singular");
    res.dual.assign(m, Rational(0));
    for (std::size_t r = 0; r < rows.size(); ++r) res.dual[rows[r]] = y[r];
    for (std::size_t i = 0; i < m; ++i)
        if (!redundant[i]) res.basis.push_back(tab.basis[i]);
    return res;
}

bool feasible(const Matrix& A, const std::vector<Rational>& b) {
    const std::size_t n = A.empty() ? 0 : A.front().size();
    return maximize(A, b, std::vector<Rational>(n)).status == Status::Optimal;
}

} // namespace persuasion::lp
