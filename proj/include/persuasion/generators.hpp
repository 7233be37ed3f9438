#pragma once

#include "persuasion/instance.hpp"

#include <array>
#include <string>
#include <vector>

namespace persuasion {

/// Registered parametric families of experiments. Every family is nested in
/// its resolution: the output at resolution R is a subset of the output at R+1.
struct GeneratorKind {
    std::string id;
    std::size_t support_bound = 2;
    int refine_unit = 1;  // resolution increment of one refinement step
};

const GeneratorKind& generator_kind(const std::string& id);
std::vector<std::string> generator_ids();

/// Throws ValidationError (path under `path`) for bad params or dimension.
void validate_generator(const GeneratorSpec& spec, std::size_t dim, const std::string& path);

/// Experiments the generator offers at p; each has expectation exactly p.
std::vector<LabeledExperiment> generate(const GeneratorSpec& spec, const Belief& p);

GeneratorSpec refine(const GeneratorSpec& spec, int steps);

/// Beliefs A_i, B_i, C_i of the triangle ladder, index [level][0..2].
std::vector<std::array<Belief, 3>> triangle_levels(int levels);

/// The belief D_i = (1/3 - 1/(3*4^i), 1/3 + 2/(3*4^i), 1/3 - 1/(3*4^i)).
Belief triangle_d(int i);

/// Endpoint s in (0, 1/2) of the symmetric spread of t that halves binary entropy.
Rational entropy_halving_endpoint(const Rational& t);

} // namespace persuasion
