#include "persuasion/belief.hpp"

#include "persuasion/errors.hpp"

#include <cmath>
#include <set>

namespace persuasion {

Belief::Belief(std::vector<Rational> coords) : coords_(std::move(coords)) {
    if (coords_.empty()) throw ValidationError("", "belief has no coordinates");
    Rational total;
    for (std::size_t i = 0; i < coords_.size(); ++i) {
        if (coords_[i].sign() < 0)
            throw ValidationError("/" + std::to_string(i), "negative probability " + coords_[i].str());
        total += coords_[i];
    }
    if (total != Rational(1))
        throw ValidationError("", "belief coordinates sum to " + total.str() + ", not 1");
}

Belief Belief::vertex(std::size_t dim, std::size_t index) {
    std::vector<Rational> c(dim);
    c.at(index) = Rational(1);
    return Belief(std::move(c));
}

Belief Belief::uniform(std::size_t dim) {
    return Belief(std::vector<Rational>(dim, Rational(1, static_cast<long>(dim))));
}

Belief Belief::binary(const Rational& t) { return Belief({t, Rational(1) - t}); }

std::vector<double> Belief::to_doubles() const {
    std::vector<double> out;
    out.reserve(coords_.size());
    for (const auto& c : coords_) out.push_back(c.to_double());
    return out;
}

std::string Belief::str() const {
    std::string s = "(";
    for (std::size_t i = 0; i < coords_.size(); ++i) {
        if (i) s += ", ";
        s += coords_[i].str();
    }
    return s + ")";
}

Experiment::Experiment(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw ValidationError("/atoms", "experiment has no atoms");
    const std::size_t dim = atoms_.front().belief.dim();
    Rational total;
    std::set<Belief> seen;
    for (std::size_t j = 0; j < atoms_.size(); ++j) {
        const auto path = "/atoms/" + std::to_string(j);
        if (atoms_[j].weight.sign() <= 0)
            throw ValidationError(path + "/w", "weight must be positive, got " + atoms_[j].weight.str());
        if (atoms_[j].belief.dim() != dim)
            throw ValidationError(path + "/p", "support beliefs have different dimensions");
        if (!seen.insert(atoms_[j].belief).second)
            throw ValidationError(path + "/p", "duplicate support belief " + atoms_[j].belief.str());
        total += atoms_[j].weight;
    }
    if (total != Rational(1))
        throw ValidationError("/atoms", "weights sum to " + total.str() + ", not 1");
}

Rational Experiment::weight_of(const Belief& p) const {
    for (const auto& a : atoms_)
        if (a.belief == p) return a.weight;
    return Rational(0);
}

Belief expectation(const Experiment& e) {
    std::vector<Rational> acc(e.dim());
    for (const auto& a : e.atoms())
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += a.weight * a.belief[i];
    return Belief(std::move(acc));
}

std::vector<Belief> support(const Experiment& e) {
    std::vector<Belief> out;
    out.reserve(e.size());
    for (const auto& a : e.atoms()) out.push_back(a.belief);
    return out;
}

bool is_trivial(const Experiment& e) { return e.size() == 1; }

double entropy(const Belief& p) {
    // Binary beliefs are evaluated through min(t, 1-t) so that mirror images
    // get bit-identical entropies.
    if (p.dim() == 2) {
        const Rational m = min(p[0], p[1]);
        if (m.is_zero()) return 0.0;
        const double x = m.to_double();
        return -x * std::log(x) - (1.0 - x) * std::log1p(-x);
    }
    double h = 0.0;
    for (const auto& c : p.coords()) {
        if (c.is_zero()) continue;
        const double x = c.to_double();
        h -= x * std::log(x);
    }
    return h;
}

namespace {

// (1+d) log(1+d) - d, nonnegative for d >= -1.
double kl_term(double d) {
    if (d <= -1.0) return 1.0;
    if (std::abs(d) < 1e-4) return d * d * (0.5 - d / 6.0 + d * d / 12.0);
    return (1.0 + d) * std::log1p(d) - d;
}

} // namespace

// H(mean) - sum w H(q) written as sum w KL(q || mean) so small spreads keep precision.
double entropy_gap(const Experiment& e) {
    const Belief mean = expectation(e);
    double gap = 0.0;
    for (const auto& a : e.atoms()) {
        double kl = 0.0;
        for (std::size_t i = 0; i < mean.dim(); ++i) {
            if (mean[i].is_zero()) continue;
            kl += mean[i].to_double() * kl_term(((a.belief[i] - mean[i]) / mean[i]).to_double());
        }
        gap += a.weight.to_double() * kl;
    }
    return gap;
}

Rational total_variation(const Belief& p, const Belief& q) {
    if (p.dim() != q.dim())
        throw StructuralError("total_variation: dimension " + std::to_string(p.dim()) + " vs " +
                              std::to_string(q.dim()));
    Rational sum;
    for (std::size_t i = 0; i < p.dim(); ++i) sum += (p[i] - q[i]).abs();
    return sum / Rational(2);
}

Experiment merge_spread(const Experiment& e, const std::map<Belief, Experiment>& followups) {
    std::map<Belief, Rational> merged;
    std::vector<Belief> order;
    auto add = [&](const Belief& b, const Rational& w) {
        auto [it, inserted] = merged.try_emplace(b, w);
        if (inserted) order.push_back(b);
        else it->second += w;
    };
    for (const auto& a : e.atoms()) {
        const auto f = followups.find(a.belief);
        if (f == followups.end()) {
            add(a.belief, a.weight);
            continue;
        }
        if (expectation(f->second) != a.belief)
            throw BayesPlausibilityError("follow-up at " + a.belief.str() + " averages to " +
                                         expectation(f->second).str());
        for (const auto& b : f->second.atoms()) add(b.belief, a.weight * b.weight);
    }
    std::vector<Atom> atoms;
    atoms.reserve(order.size());
    for (const auto& b : order) atoms.push_back(Atom{merged.at(b), b});
    return Experiment(std::move(atoms));
}

} // namespace persuasion
