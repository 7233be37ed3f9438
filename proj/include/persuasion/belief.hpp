#pragma once

#include "persuasion/rational.hpp"

#include <compare>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace persuasion {

/// Probability vector over the finite state set. Equality is exact; no
/// tolerance is ever applied to belief identity.
class Belief {
public:
    Belief() = default;

    /// Validates non-negativity and exact unit mass. Throws ValidationError.
    explicit Belief(std::vector<Rational> coords);

    /// Point mass on state `index` in a space of `dim` states.
    static Belief vertex(std::size_t dim, std::size_t index);
    static Belief uniform(std::size_t dim);
    /// Binary belief with p(state 0) = t.
    static Belief binary(const Rational& t);

    std::size_t dim() const noexcept { return coords_.size(); }
    const Rational& operator[](std::size_t i) const { return coords_[i]; }
    std::span<const Rational> coords() const noexcept { return coords_; }
    std::vector<double> to_doubles() const;

    std::string str() const;

    friend bool operator==(const Belief&, const Belief&) = default;
    friend auto operator<=>(const Belief& a, const Belief& b) { return a.coords_ <=> b.coords_; }

private:
    std::vector<Rational> coords_;
};

struct Atom {
    Rational weight;
    Belief belief;

    friend bool operator==(const Atom&, const Atom&) = default;
};

/// Finite-support distribution over beliefs: strictly positive weights
/// summing to one, pairwise distinct support beliefs of equal dimension.
class Experiment {
public:
    Experiment() = default;

    /// Validates the invariants; throws ValidationError naming the atom.
    explicit Experiment(std::vector<Atom> atoms);

    static Experiment trivial(const Belief& p) { return Experiment({Atom{Rational(1), p}}); }

    std::span<const Atom> atoms() const noexcept { return atoms_; }
    std::size_t size() const noexcept { return atoms_.size(); }
    std::size_t dim() const { return atoms_.front().belief.dim(); }

    /// Weight assigned to `p`, zero when p is outside the support.
    Rational weight_of(const Belief& p) const;

    friend bool operator==(const Experiment&, const Experiment&) = default;

private:
    std::vector<Atom> atoms_;
};

Belief expectation(const Experiment& e);
std::vector<Belief> support(const Experiment& e);
bool is_trivial(const Experiment& e);

/// Shannon entropy in nats with 0 log 0 = 0. Each term is evaluated in
/// double precision from the rounded coordinate, so the result carries at
/// most a few ulps of error per state.
double entropy(const Belief& p);

/// H(expectation) - sum_j w_j H(p_j); non-negative up to rounding.
double entropy_gap(const Experiment& e);

/// Half the L1 distance, exact. Throws StructuralError on dimension mismatch.
Rational total_variation(const Belief& p, const Belief& q);

/// Two-stage composition: each support belief listed in `followups` is spread
/// further by its follow-up experiment. Atoms landing on equal beliefs are
/// coalesced. Throws BayesPlausibilityError when a follow-up does not average
/// to the belief it is attached to.
Experiment merge_spread(const Experiment& e, const std::map<Belief, Experiment>& followups);

} // namespace persuasion
