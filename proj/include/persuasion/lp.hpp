#pragma once

#include "persuasion/rational.hpp"

#include <vector>

namespace persuasion::lp {

enum class Status { Optimal, Infeasible, Unbounded };

struct Result {
    Status status = Status::Infeasible;
    Rational objective;
    std::vector<Rational> x;
    // One price per equality row; at an optimum y·A_j >= c_j for every column.
    std::vector<Rational> dual;
    std::vector<std::size_t> basis;
};

// maximize c·x  subject to  A x = b,  x >= 0.
// Dense two-phase primal simplex over exact rationals with Bland's rule, so the
// returned basis and dual prices are a deterministic function of the input.
Result maximize(const std::vector<std::vector<Rational>>& A, const std::vector<Rational>& b,
                const std::vector<Rational>& c);

// Feasibility of A x = b, x >= 0.
bool feasible(const std::vector<std::vector<Rational>>& A, const std::vector<Rational>& b);

// Solves the square system M x = r exactly; returns false when M is singular.
bool solve_square(std::vector<std::vector<Rational>> M, std::vector<Rational> r, std::vector<Rational>& x);

} // namespace persuasion::lp
