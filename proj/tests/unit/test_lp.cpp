#include <doctest.h>

#include "persuasion/lp.hpp"

#include <optional>
#include <random>

using namespace persuasion;
using Matrix = std::vector<std::vector<Rational>>;

namespace {

Rational dot(const std::vector<Rational>& a, const std::vector<Rational>& b) {
    Rational s;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

Rational column_dot(const Matrix& A, const std::vector<Rational>& y, std::size_t j) {
    Rational s;
    for (std::size_t i = 0; i < A.size(); ++i) s += y[i] * A[i][j];
    return s;
}

// Best basic feasible solution by listing every square column subset.
std::optional<Rational> vertex_optimum(const Matrix& A, const std::vector<Rational>& b, const std::vector<Rational>& c) {
    const std::size_t m = A.size(), n = c.size();
    std::optional<Rational> best;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != m) continue;
        std::vector<std::size_t> cols;
        for (std::size_t j = 0; j < n; ++j)
            if (mask & (1u << j)) cols.push_back(j);
        Matrix M(m, std::vector<Rational>(m));
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t k = 0; k < m; ++k) M[i][k] = A[i][cols[k]];
        std::vector<Rational> xb;
        if (!lp::solve_square(M, b, xb)) continue;
        bool nonneg = true;
        for (const auto& v : xb) nonneg = nonneg && v.sign() >= 0;
        if (!nonneg) continue;
        Rational obj;
        for (std::size_t k = 0; k < m; ++k) obj += c[cols[k]] * xb[k];
        if (!best || obj > *best) best = obj;
    }
    return best;
}

} // namespace

TEST_CASE("textbook maximum with duals") {
    const Matrix A{{Rational(1), Rational(2), Rational(1), Rational(0)},
                   {Rational(3), Rational(1), Rational(0), Rational(1)}};
    const std::vector<Rational> b{Rational(4), Rational(6)};
    const std::vector<Rational> c{Rational(1), Rational(1), Rational(0), Rational(0)};
    const auto res = lp::maximize(A, b, c);
    REQUIRE(res.status == lp::Status::Optimal);
    CHECK(res.objective == Rational(14, 5));
    CHECK(res.x[0] == Rational(8, 5));
    CHECK(res.x[1] == Rational(6, 5));
    CHECK(dot(res.dual, b) == res.objective);
    for (std::size_t j = 0; j < c.size(); ++j) CHECK(column_dot(A, res.dual, j) >= c[j]);
}

TEST_CASE("infeasible and unbounded programs") {
    const Matrix A{{Rational(1), Rational(1)}};
    CHECK(lp::maximize(A, {Rational(-1)}, {Rational(1), Rational(0)}).status == lp::Status::Infeasible);
    CHECK_FALSE(lp::feasible(A, {Rational(-1)}));
    CHECK(lp::feasible(A, {Rational(1)}));

    const Matrix B{{Rational(1), Rational(-1)}};
    CHECK(lp::maximize(B, {Rational(0)}, {Rational(1), Rational(0)}).status == lp::Status::Unbounded);
}

TEST_CASE("Beale's cycling example terminates") {
    const Matrix A{
        {Rational(1), Rational(0), Rational(0), Rational(1, 4), Rational(-60), Rational(-1, 25), Rational(9)},
        {Rational(0), Rational(1), Rational(0), Rational(1, 2), Rational(-90), Rational(-1, 50), Rational(3)},
        {Rational(0), Rational(0), Rational(1), Rational(0), Rational(0), Rational(1), Rational(0)},
    };
    const std::vector<Rational> b{Rational(0), Rational(0), Rational(1)};
    const std::vector<Rational> c{Rational(0), Rational(0), Rational(0), Rational(3, 4), Rational(-150), Rational(1, 50),
                                  Rational(-6)};
    const auto res = lp::maximize(A, b, c);
    REQUIRE(res.status == lp::Status::Optimal);
    CHECK(res.objective == Rational(1, 20));
}

TEST_CASE("random bounded programs match vertex enumeration") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> coef(-4, 6);
    for (int trial = 0; trial < 150; ++trial) {
        const std::size_t m = 3, n = 6;
        Matrix A(m, std::vector<Rational>(n));
        std::vector<Rational> b(m), c(n);
        for (std::size_t i = 0; i + 1 < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) A[i][j] = Rational(coef(rng));
            b[i] = Rational(coef(rng));
        }
        for (std::size_t j = 0; j < n; ++j) A[m - 1][j] = Rational(1);
        b[m - 1] = Rational(10);
        for (auto& v : c) v = Rational(coef(rng));

        const auto res = lp::maximize(A, b, c);
        const auto brute = vertex_optimum(A, b, c);
        CHECK((res.status == lp::Status::Optimal) == brute.has_value());
        CHECK(lp::feasible(A, b) == brute.has_value());
        if (res.status == lp::Status::Optimal && brute) {
            CHECK(res.objective == *brute);
            CHECK(dot(c, res.x) == res.objective);
            for (std::size_t i = 0; i < m; ++i) CHECK(dot(A[i], res.x) == b[i]);
            CHECK(dot(res.dual, b) == res.objective);
        }
    }
}

TEST_CASE("square solve") {
    std::vector<Rational> x;
    CHECK(lp::solve_square({{Rational(2), Rational(1)}, {Rational(1), Rational(3)}}, {Rational(3), Rational(5)}, x));
    CHECK(x == std::vector<Rational>{Rational(4, 5), Rational(7, 5)});
    CHECK_FALSE(lp::solve_square({{Rational(1), Rational(2)}, {Rational(2), Rational(4)}}, {Rational(1), Rational(2)}, x));
}
