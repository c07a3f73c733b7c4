#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fo2tree/formula.hpp"

namespace fo2tree {

using ColorPair = std::pair<std::string, std::string>;

// Exponential-grid tiling instances as FO2 sentences. Signature
// {ZeroX_i, OneX_i, ZeroY_i, OneY_i : i <= n} plus one predicate per color;
// the sentence is satisfiable over trees iff the 2^n x 2^n grid admits a
// tiling meeting the horizontal constraint H and vertical constraint V.
//
// The parent-only variant encodes every grid cell as one node carrying its
// address bits and color; adjacency and same-address consistency are pure
// unary-bit comparisons, so the sentence has no binary atoms at all and is in
// particular admitted by V_parOf.
FoFormula gen_tiling_parof(int n, const std::set<std::string>& colors,
                           const std::set<ColorPair>& h, const std::set<ColorPair>& v);

// The ancestor-only variant codes each cell as a root-to-leaf branch of
// 2n + 2 nodes (root marker r, X bits, Y bits, color leaf) over UAR trees.
FoFormula gen_tiling_ancof(int n, const std::set<std::string>& colors,
                           const std::set<ColorPair>& h, const std::set<ColorPair>& v);

// V_ancOf sentences over {b, s, a_1..a_n} whose minimal binary UAR models
// have depth growing as 2^n: a comparable b-spine, pairwise incomparable
// s-nodes carrying n-bit addresses as a_i descendants, address zero present,
// and a successor address for every address below all-ones.
FoFormula gen_counter_depth(int n);

// Exhaustive tiling oracle; guard: 2^n <= 4.
bool solve_tiling_brute(int n, const std::set<std::string>& colors,
                        const std::set<ColorPair>& h, const std::set<ColorPair>& v);

// Signatures of the generated families, for driving solvers and tests.
std::vector<std::string> tiling_signature(int n, const std::set<std::string>& colors);
std::vector<std::string> tiling_ancof_signature(int n, const std::set<std::string>& colors);
std::vector<std::string> counter_signature(int n);

}  // namespace fo2tree
