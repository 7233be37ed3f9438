#include "persuasion/generators.hpp"

#include "persuasion/errors.hpp"

#include <cmath>
#include <map>
#include <numbers>

namespace persuasion {

namespace {

const std::map<std::string, GeneratorKind>& registry() {
    static const std::map<std::string, GeneratorKind> kinds = {
        {"binary_entropy_halving", {"binary_entropy_halving", 2, 1}},
        {"triangle_ladder", {"triangle_ladder", 2, 2}},
        {"triangle_w_spread", {"triangle_w_spread", 2, 1}},
    };
    return kinds;
}

double binary_entropy(double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return -x * std::log(x) - (1.0 - x) * std::log1p(-x);
}

Experiment w_spread(const Belief& w, int i) {
    // weights 1/(1+4^{i-1}) on W and 4^{i-1}/(1+4^{i-1}) on D_i
    const Rational q = pow2(2L * (i - 1));
    return Experiment({Atom{Rational(1) / (Rational(1) + q), w}, Atom{q / (Rational(1) + q), triangle_d(i)}});
}

std::vector<LabeledExperiment> emit_halving(const GeneratorSpec& spec, const Belief& p) {
    if (p.dim() != 2 || p[0].is_zero() || p[1].is_zero()) return {};
    const double threshold = 1.5 * std::numbers::ln2 * std::ldexp(1.0, -spec.resolution);
    if (entropy(p) < threshold) return {};
    const Rational s = entropy_halving_endpoint(p[0]);
    const Rational one(1);
    const Rational lambda = (one - s - p[0]) / (one - s - s);
    return {{"halve", Experiment({Atom{lambda, Belief::binary(s)}, Atom{one - lambda, Belief::binary(one - s)}})}};
}

std::vector<LabeledExperiment> emit_ladder(const GeneratorSpec& spec, const Belief& p) {
    if (p.dim() != 3) return {};
    const auto levels = triangle_levels(spec.resolution);
    std::vector<LabeledExperiment> out;
    for (int i = 1; i <= spec.resolution; ++i)
        for (int k = 0; k < 3; ++k) {
            if (levels[i][k] != p) continue;
            const Rational half(1, 2);
            out.push_back({"e_" + std::to_string(i) + "^(" + std::to_string(k + 1) + ")",
                           Experiment({Atom{half, levels[i - 1][k]}, Atom{half, levels[i - 1][(k + 1) % 3]}})});
        }
    return out;
}

std::vector<LabeledExperiment> emit_w_spread(const GeneratorSpec& spec, const Belief& p) {
    if (p.dim() != 3) return {};
    const Belief w = belief_from_json(spec.params.at("W"), "/params/W");
    if (expectation(w_spread(w, 0)) != p) return {};
    std::vector<LabeledExperiment> out;
    for (int i = 0; i <= spec.resolution; ++i)
        out.push_back({"e_" + std::to_string(i) + "^(4)", w_spread(w, i)});
    return out;
}

} // namespace

const GeneratorKind& generator_kind(const std::string& id) {
    const auto it = registry().find(id);
    if (it == registry().end()) throw ValidationError("/kind", "unknown generator '" + id + "'");
    return it->second;
}

std::vector<std::string> generator_ids() {
    std::vector<std::string> ids;
    for (const auto& [id, kind] : registry()) ids.push_back(id);
    return ids;
}

void validate_generator(const GeneratorSpec& spec, std::size_t dim, const std::string& path) {
    try {
        generator_kind(spec.kind);
    } catch (const ValidationError& e) {
        throw ValidationError(path + "/kind", e.detail());
    }
    if (spec.resolution < 1) throw ValidationError(path + "/resolution", "resolution must be positive");
    if (!spec.params.is_object()) throw ValidationError(path + "/params", "params must be an object");
    if (spec.kind == "binary_entropy_halving") {
        if (dim != 2) throw ValidationError(path, "binary_entropy_halving needs exactly two states");
    } else if (spec.kind == "triangle_ladder") {
        if (dim != 3) throw ValidationError(path, "triangle_ladder needs exactly three states");
    } else if (spec.kind == "triangle_w_spread") {
        if (dim != 3) throw ValidationError(path, "triangle_w_spread needs exactly three states");
        if (!spec.params.contains("W")) throw ValidationError(path + "/params/W", "missing W");
        Belief w;
        try {
            w = belief_from_json(spec.params.at("W"), "");
        } catch (const ValidationError& e) {
            throw e.under(path + "/params/W");
        }
        if (w.dim() != 3) throw ValidationError(path + "/params/W", "W must have three coordinates");
        for (int i = 0; i <= 1; ++i)
            if (w == triangle_d(i)) throw ValidationError(path + "/params/W", "W coincides with D_" + std::to_string(i));
        if (expectation(w_spread(w, 0)) != expectation(w_spread(w, 1)))
            throw ValidationError(path + "/params/W", "spreads into W and D_i do not share a common mean; W = " +
                                                          w.str() + " is not (5/12, 1/6, 5/12)-consistent");
    }
}

std::vector<LabeledExperiment> generate(const GeneratorSpec& spec, const Belief& p) {
    if (spec.kind == "binary_entropy_halving") return emit_halving(spec, p);
    if (spec.kind == "triangle_ladder") return emit_ladder(spec, p);
    if (spec.kind == "triangle_w_spread") return emit_w_spread(spec, p);
    throw ValidationError("/kind", "unknown generator '" + spec.kind + "'");
}

GeneratorSpec refine(const GeneratorSpec& spec, int steps) {
    GeneratorSpec out = spec;
    out.resolution += steps * generator_kind(spec.kind).refine_unit;
    return out;
}

std::vector<std::array<Belief, 3>> triangle_levels(int levels) {
    std::vector<std::array<Belief, 3>> out;
    out.push_back({Belief::vertex(3, 2), Belief::vertex(3, 1), Belief::vertex(3, 0)});
    const Rational half(1, 2);
    for (int i = 1; i <= levels; ++i) {
        const auto& prev = out.back();
        std::array<Belief, 3> next;
        for (int k = 0; k < 3; ++k) {
            std::vector<Rational> c(3);
            for (std::size_t s = 0; s < 3; ++s) c[s] = half * prev[k][s] + half * prev[(k + 1) % 3][s];
            next[k] = Belief(std::move(c));
        }
        out.push_back(std::move(next));
    }
    return out;
}

Belief triangle_d(int i) {
    const Rational third(1, 3);
    const Rational step = third * pow2(-2L * i);
    return Belief({third - step, third + step + step, third - step});
}

Rational entropy_halving_endpoint(const Rational& t) {
    const double m = min(t, Rational(1) - t).to_double();
    const double target = binary_entropy(m) / 2.0;
    double lo = 0.0, hi = 0.5;
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        (binary_entropy(mid) < target ? lo : hi) = mid;
    }
    const double scale = std::ldexp(1.0, 48);
    const double snapped = std::round(0.5 * (lo + hi) * scale);
    const mpz_class den = mpz_class(1) << 48;
    return Rational(mpq_class(mpz_class(static_cast<unsigned long>(std::max(snapped, 1.0))), den));
}

} // namespace persuasion
