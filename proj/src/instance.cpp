#include "persuasion/instance.hpp"

#include "persuasion/errors.hpp"
#include "persuasion/generators.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace persuasion {

using nlohmann::json;

namespace {

struct Builtin {
    std::size_t dim;
    double lo, hi;
    double (*fn)(const Belief&);
};

double two_abs_dist_half(const Belief& p) { return 2.0 * std::abs(p[0].to_double() - 0.5); }

const std::map<std::string, Builtin>& builtins() {
    static const std::map<std::string, Builtin> reg = {
        {"binary_two_abs_dist_half", {2, 0.0, 1.0, &two_abs_dist_half}},
    };
    return reg;
}

const Builtin& builtin(const std::string& name) {
    const auto it = builtins().find(name);
    if (it == builtins().end()) throw ValidationError("/utility/name", "unknown builtin utility '" + name + "'");
    return it->second;
}

const json& require(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object() || !obj.contains(key)) throw ValidationError(path + "/" + key, "missing field");
    return obj.at(key);
}

std::vector<std::vector<double>> table_from_json(const json& j, std::size_t rows, std::size_t cols,
                                                 const std::string& path) {
    if (!j.is_array() || j.size() != rows)
        throw ValidationError(path, "expected " + std::to_string(rows) + " rows (one per state)");
    std::vector<std::vector<double>> out(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const auto rp = path + "/" + std::to_string(r);
        if (!j[r].is_array() || j[r].size() != cols)
            throw ValidationError(rp, "expected " + std::to_string(cols) + " entries (one per action)");
        for (std::size_t c = 0; c < cols; ++c) {
            if (!j[r][c].is_number()) throw ValidationError(rp + "/" + std::to_string(c), "expected a number");
            out[r].push_back(j[r][c].get<double>());
            if (!std::isfinite(out[r].back())) throw ValidationError(rp + "/" + std::to_string(c), "non-finite");
        }
    }
    return out;
}

UtilitySpec utility_from_json(const json& j, std::size_t dim) {
    const std::string path = "/utility";
    UtilitySpec u;
    const auto& kind = require(j, "kind", path);
    if (!kind.is_string()) throw ValidationError(path + "/kind", "expected a string");
    const auto k = kind.get<std::string>();
    if (k == "point_indicator") {
        u.kind = UtilitySpec::Kind::PointIndicator;
        const auto& pts = require(j, "points", path);
        if (!pts.is_array() || pts.empty()) throw ValidationError(path + "/points", "needs at least one belief");
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const auto pp = path + "/points/" + std::to_string(i);
            u.points.push_back(belief_from_json(pts[i], pp));
            if (u.points.back().dim() != dim) throw ValidationError(pp, "dimension differs from states");
        }
        if (j.contains("hi")) u.hi = rational_from_json(j.at("hi"), path + "/hi");
        if (j.contains("lo")) u.lo = rational_from_json(j.at("lo"), path + "/lo");
        if (u.hi == u.lo) throw ValidationError(path + "/hi", "hi must differ from lo");
    } else if (k == "finite_action") {
        u.kind = UtilitySpec::Kind::FiniteAction;
        const auto& acts = require(j, "actions", path);
        if (!acts.is_array() || acts.empty()) throw ValidationError(path + "/actions", "needs at least one action");
        for (std::size_t i = 0; i < acts.size(); ++i) {
            if (!acts[i].is_string()) throw ValidationError(path + "/actions/" + std::to_string(i), "expected a string");
            u.actions.push_back(acts[i].get<std::string>());
        }
        u.receiver = table_from_json(require(j, "receiver", path), dim, u.actions.size(), path + "/receiver");
        u.sender = table_from_json(require(j, "sender", path), dim, u.actions.size(), path + "/sender");
        if (j.contains("tie_eps")) {
            if (!j.at("tie_eps").is_number() || j.at("tie_eps").get<double>() <= 0.0)
                throw ValidationError(path + "/tie_eps", "must be a positive number");
            u.tie_eps = j.at("tie_eps").get<double>();
        }
    } else if (k == "builtin") {
        u.kind = UtilitySpec::Kind::Builtin;
        const auto& name = require(j, "name", path);
        if (!name.is_string()) throw ValidationError(path + "/name", "expected a string");
        u.name = name.get<std::string>();
        if (builtin(u.name).dim != dim) throw ValidationError(path + "/name", "builtin expects a different state count");
    } else {
        throw ValidationError(path + "/kind", "unknown utility kind '" + k + "'");
    }
    return u;
}

json utility_to_json(const UtilitySpec& u) {
    json j;
    switch (u.kind) {
    case UtilitySpec::Kind::PointIndicator:
        j["kind"] = "point_indicator";
        j["points"] = json::array();
        for (const auto& p : u.points) j["points"].push_back(belief_to_json(p));
        j["hi"] = rational_to_json(u.hi);
        j["lo"] = rational_to_json(u.lo);
        break;
    case UtilitySpec::Kind::FiniteAction:
        j["kind"] = "finite_action";
        j["actions"] = u.actions;
        j["receiver"] = u.receiver;
        j["sender"] = u.sender;
        j["tie_eps"] = u.tie_eps;
        break;
    case UtilitySpec::Kind::Builtin:
        j["kind"] = "builtin";
        j["name"] = u.name;
        break;
    }
    return j;
}

} // namespace

json rational_to_json(const Rational& r) { return r.str(); }

Rational rational_from_json(const json& j, const std::string& path) {
    if (!j.is_string()) throw ValidationError(path, "rational must be a string \"n/d\"");
    try {
        return Rational::parse(j.get<std::string>());
    } catch (const ValidationError& e) {
        throw e.under(path);
    }
}

json belief_to_json(const Belief& p) {
    json arr = json::array();
    for (const auto& c : p.coords()) arr.push_back(c.str());
    return arr;
}

Belief belief_from_json(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw ValidationError(path, "belief must be a nonempty array of rationals");
    std::vector<Rational> coords;
    for (std::size_t i = 0; i < j.size(); ++i) coords.push_back(rational_from_json(j[i], path + "/" + std::to_string(i)));
    try {
        return Belief(std::move(coords));
    } catch (const ValidationError& e) {
        throw e.under(path);
    }
}

json experiment_to_json(const Experiment& e) {
    json arr = json::array();
    for (const auto& a : e.atoms()) arr.push_back({{"w", a.weight.str()}, {"p", belief_to_json(a.belief)}});
    return arr;
}

Experiment experiment_from_json(const json& j, const std::string& path) {
    const json* atoms = &j;
    std::string apath = path;
    if (j.is_object()) {
        atoms = &require(j, "atoms", path);
        apath = path + "/atoms";
    }
    if (!atoms->is_array() || atoms->empty()) throw ValidationError(apath, "experiment needs a nonempty atom list");
    std::vector<Atom> list;
    for (std::size_t i = 0; i < atoms->size(); ++i) {
        const auto ap = apath + "/" + std::to_string(i);
        const auto& a = (*atoms)[i];
        list.push_back(Atom{rational_from_json(require(a, "w", ap), ap + "/w"), belief_from_json(require(a, "p", ap), ap + "/p")});
    }
    try {
        return Experiment(std::move(list));
    } catch (const ValidationError& e) {
        // Experiment reports paths of the form /atoms/...; rebase onto the document.
        std::string sub = e.path();
        if (sub.rfind("/atoms", 0) == 0) sub = sub.substr(6);
        throw ValidationError(apath + sub, e.detail());
    }
}

void validate_instance(const Instance& inst) {
    const std::size_t dim = inst.dim();
    if (dim == 0) throw ValidationError("/states", "needs at least one state");
    if (inst.prior.dim() != dim) throw ValidationError("/prior", "dimension differs from states");
    for (std::size_t i = 0; i < inst.experiments.size(); ++i)
        if (inst.experiments[i].experiment.dim() != dim)
            throw ValidationError("/experiments/" + std::to_string(i), "dimension differs from states");
    for (std::size_t i = 0; i < inst.generators.size(); ++i)
        validate_generator(inst.generators[i], dim, "/generators/" + std::to_string(i));
    if (inst.h && *inst.h < 1) throw ValidationError("/h", "h must be positive");
    if (inst.delta && !(*inst.delta > 0.0)) throw ValidationError("/delta", "delta must be positive");

    const auto& u = inst.utility;
    double vmin = 0.0, vmax = 0.0;
    switch (u.kind) {
    case UtilitySpec::Kind::PointIndicator:
        vmin = min(u.hi, u.lo).to_double();
        vmax = max(u.hi, u.lo).to_double();
        break;
    case UtilitySpec::Kind::FiniteAction:
        vmin = vmax = u.sender.at(0).at(0);
        for (const auto& row : u.sender)
            for (double x : row) vmin = std::min(vmin, x), vmax = std::max(vmax, x);
        break;
    case UtilitySpec::Kind::Builtin:
        vmin = builtin(u.name).lo;
        vmax = builtin(u.name).hi;
        break;
    }
    if (inst.v_bounds) {
        if (inst.v_bounds->first > inst.v_bounds->second) throw ValidationError("/v_bounds", "lower bound exceeds upper");
        if (vmin < inst.v_bounds->first || vmax > inst.v_bounds->second)
            throw ValidationError("/v_bounds", "utility values leave the declared bounds");
    }
    const double lower = inst.v_bounds ? inst.v_bounds->first : vmin;
    if (inst.assume_positive && !(lower > 0.0))
        throw ValidationError("/assume_positive", "declared positive utility but lower bound is " + std::to_string(lower));
    if (inst.product_structure && dim != 4)
        throw ValidationError("/product_structure", "product structure needs exactly four states");
}

Instance load_instance(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError("", std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ValidationError("", "instance document must be an object");

    Instance inst;
    if (doc.contains("name")) inst.name = doc.at("name").get<std::string>();
    if (doc.contains("notes")) inst.notes = doc.at("notes").get<std::string>();
    const auto& states = require(doc, "states", "");
    if (!states.is_array() || states.empty()) throw ValidationError("/states", "needs at least one state");
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (!states[i].is_string()) throw ValidationError("/states/" + std::to_string(i), "expected a string");
        inst.states.push_back(states[i].get<std::string>());
    }
    inst.prior = belief_from_json(require(doc, "prior", ""), "/prior");
    inst.utility = utility_from_json(require(doc, "utility", ""), inst.states.size());
    if (doc.contains("experiments")) {
        const auto& ex = doc.at("experiments");
        if (!ex.is_array()) throw ValidationError("/experiments", "expected an array");
        for (std::size_t i = 0; i < ex.size(); ++i) {
            const auto path = "/experiments/" + std::to_string(i);
            LabeledExperiment le{"e" + std::to_string(i + 1), experiment_from_json(ex[i], path)};
            if (ex[i].is_object() && ex[i].contains("label")) le.label = ex[i].at("label").get<std::string>();
            inst.experiments.push_back(std::move(le));
        }
    }
    if (doc.contains("generators")) {
        const auto& gens = doc.at("generators");
        if (!gens.is_array()) throw ValidationError("/generators", "expected an array");
        for (std::size_t i = 0; i < gens.size(); ++i) {
            const auto path = "/generators/" + std::to_string(i);
            GeneratorSpec g;
            const auto& kind = require(gens[i], "kind", path);
            if (!kind.is_string()) throw ValidationError(path + "/kind", "expected a string");
            g.kind = kind.get<std::string>();
            if (gens[i].contains("params")) g.params = gens[i].at("params");
            if (gens[i].contains("resolution")) {
                if (!gens[i].at("resolution").is_number_integer())
                    throw ValidationError(path + "/resolution", "expected an integer");
                g.resolution = gens[i].at("resolution").get<int>();
            }
            inst.generators.push_back(std::move(g));
        }
    }
    if (doc.contains("h")) {
        if (!doc.at("h").is_number_integer()) throw ValidationError("/h", "expected an integer");
        inst.h = doc.at("h").get<int>();
    }
    if (doc.contains("delta")) {
        if (!doc.at("delta").is_number()) throw ValidationError("/delta", "expected a number");
        inst.delta = doc.at("delta").get<double>();
    }
    if (doc.contains("v_bounds")) {
        const auto& vb = doc.at("v_bounds");
        if (!vb.is_array() || vb.size() != 2 || !vb[0].is_number() || !vb[1].is_number())
            throw ValidationError("/v_bounds", "expected [lo, hi]");
        inst.v_bounds = std::make_pair(vb[0].get<double>(), vb[1].get<double>());
    }
    if (doc.contains("assume_positive")) inst.assume_positive = doc.at("assume_positive").get<bool>();
    if (doc.contains("product_structure")) inst.product_structure = doc.at("product_structure").get<bool>();
    validate_instance(inst);
    return inst;
}

Instance load_instance_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("", "cannot open instance file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return load_instance(ss.str());
}

json instance_to_json(const Instance& inst) {
    json doc;
    doc["name"] = inst.name;
    if (!inst.notes.empty()) doc["notes"] = inst.notes;
    doc["states"] = inst.states;
    doc["prior"] = belief_to_json(inst.prior);
    doc["utility"] = utility_to_json(inst.utility);
    doc["experiments"] = json::array();
    for (const auto& le : inst.experiments)
        doc["experiments"].push_back({{"label", le.label}, {"atoms", experiment_to_json(le.experiment)}});
    doc["generators"] = json::array();
    for (const auto& g : inst.generators)
        doc["generators"].push_back({{"kind", g.kind}, {"params", g.params}, {"resolution", g.resolution}});
    if (inst.h) doc["h"] = *inst.h;
    if (inst.delta) doc["delta"] = *inst.delta;
    if (inst.v_bounds) doc["v_bounds"] = {inst.v_bounds->first, inst.v_bounds->second};
    if (inst.assume_positive) doc["assume_positive"] = true;
    if (inst.product_structure) doc["product_structure"] = true;
    return doc;
}

std::string save_instance(const Instance& inst) { return instance_to_json(inst).dump(2) + "\n"; }

std::vector<LabeledExperiment> feasible_edges(const Instance& inst, const Belief& p) {
    std::vector<LabeledExperiment> out;
    for (const auto& le : inst.experiments)
        if (expectation(le.experiment) == p) out.push_back(le);
    for (const auto& g : inst.generators)
        for (auto& le : generate(g, p)) {
            if (expectation(le.experiment) != p)
                throw InternalConsistencyError("generator " + g.kind + " emitted a spread not centred at " + p.str());
            const bool dup = std::any_of(out.begin(), out.end(),
                                         [&](const LabeledExperiment& x) { return x.experiment == le.experiment; });
            if (!dup) out.push_back(std::move(le));
        }
    out.push_back({"trivial", Experiment::trivial(p)});
    return out;
}

std::vector<Experiment> feasible_at(const Instance& inst, const Belief& p) {
    std::vector<Experiment> out;
    for (auto& le : feasible_edges(inst, p)) out.push_back(std::move(le.experiment));
    return out;
}

double eval_v(const Instance& inst, const Belief& p) {
    const auto& u = inst.utility;
    switch (u.kind) {
    case UtilitySpec::Kind::PointIndicator:
        return (std::find(u.points.begin(), u.points.end(), p) != u.points.end() ? u.hi : u.lo).to_double();
    case UtilitySpec::Kind::Builtin:
        return builtin(u.name).fn(p);
    case UtilitySpec::Kind::FiniteAction: {
        const auto x = p.to_doubles();
        const std::size_t na = u.actions.size();
        std::vector<double> eu(na, 0.0), ev(na, 0.0);
        for (std::size_t a = 0; a < na; ++a)
            for (std::size_t s = 0; s < x.size(); ++s) {
                eu[a] += x[s] * u.receiver[s][a];
                ev[a] += x[s] * u.sender[s][a];
            }
        const double best = *std::max_element(eu.begin(), eu.end());
        double value = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < na; ++a)
            if (eu[a] >= best - u.tie_eps) value = std::max(value, ev[a]);
        return value;
    }
    }
    return 0.0;
}

std::optional<Rational> eval_v_exact(const Instance& inst, const Belief& p) {
    const auto& u = inst.utility;
    if (u.kind != UtilitySpec::Kind::PointIndicator) return std::nullopt;
    return std::find(u.points.begin(), u.points.end(), p) != u.points.end() ? u.hi : u.lo;
}

bool has_exact_utility(const Instance& inst) { return inst.utility.kind == UtilitySpec::Kind::PointIndicator; }

std::pair<double, double> utility_bounds(const Instance& inst) {
    if (inst.v_bounds) return *inst.v_bounds;
    const auto& u = inst.utility;
    switch (u.kind) {
    case UtilitySpec::Kind::PointIndicator:
        return {min(u.hi, u.lo).to_double(), max(u.hi, u.lo).to_double()};
    case UtilitySpec::Kind::Builtin:
        return {builtin(u.name).lo, builtin(u.name).hi};
    case UtilitySpec::Kind::FiniteAction: {
        double lo = u.sender[0][0], hi = lo;
        for (const auto& row : u.sender)
            for (double x : row) lo = std::min(lo, x), hi = std::max(hi, x);
        return {lo, hi};
    }
    }
    return {0.0, 0.0};
}

SupportBoundReport check_support_bound(const Instance& inst) {
    SupportBoundReport rep;
    rep.witness = "trivial";
    for (const auto& le : inst.experiments)
        if (le.experiment.size() > rep.h) rep.h = le.experiment.size(), rep.witness = le.label;
    for (const auto& g : inst.generators) {
        const auto bound = generator_kind(g.kind).support_bound;
        if (bound > rep.h) rep.h = bound, rep.witness = "generator " + g.kind;
    }
    if (inst.h && static_cast<std::size_t>(*inst.h) < rep.h)
        throw AssumptionError("support bound h = " + std::to_string(*inst.h) + " violated by " + rep.witness +
                              " with " + std::to_string(rep.h) + " atoms");
    return rep;
}

EntropyGapReport check_entropy_gap(const Instance& inst, const std::vector<Belief>& sample, double delta_floor) {
    EntropyGapReport rep;
    auto inspect = [&](const LabeledExperiment& le) {
        if (is_trivial(le.experiment)) return;
        const double gap = entropy_gap(le.experiment);
        if (rep.vacuous || gap < rep.infimum) {
            rep.infimum = gap;
            rep.witness = le.label;
            rep.witness_at = expectation(le.experiment);
        }
        rep.vacuous = false;
    };
    for (const auto& le : inst.experiments) inspect(le);
    const std::vector<Belief> points = sample.empty() ? std::vector<Belief>{inst.prior} : sample;
    for (const auto& g : inst.generators)
        for (const auto& p : points)
            for (const auto& le : generate(g, p)) inspect(le);
    if (rep.vacuous) rep.delta = std::numeric_limits<double>::infinity();
    else if (rep.infimum > delta_floor) rep.delta = rep.infimum;
    return rep;
}

Instance refined(const Instance& inst, int steps) {
    Instance out = inst;
    for (auto& g : out.generators) g = refine(g, steps);
    return out;
}

Instance with_prior(const Instance& inst, const Belief& prior) {
    if (prior.dim() != inst.dim()) throw StructuralError("prior dimension differs from states");
    Instance out = inst;
    out.prior = prior;
    return out;
}

} // namespace persuasion
