#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "congruence/corpus.hpp"
#include "congruence/scoring.hpp"

namespace congruence {

// Direction-adjusted answer counts for one dimension. A score of 4 counts
// toward both sides, so at_or_above_4 + at_or_below_4 >= n_items.
struct DimensionTally {
  Dimension dimension = Dimension::Neuroticism;
  std::size_t n_items = 0;
  std::size_t at_or_above_4 = 0;
  std::size_t at_or_below_4 = 0;

  std::size_t consistent() const { return std::max(at_or_above_4, at_or_below_4); }
};

// Throws InvariantError (rule "missing-item") when the profile lacks a layout item.
std::vector<DimensionTally> tally_dimensions(const ScoreProfile& profile, const ScaleLayout& layout);

// Lowest attainable share of direction-consistent answers: sum(ceil(N_i/2)) / N_t.
double min_consistent_share(const ScaleLayout& layout);

// Logical consistency rescaled so the attainable minimum maps to 0 and full
// one-sidedness within every dimension maps to 1.
double consistency(const ScoreProfile& profile, const ScaleLayout& layout);

// Same rescaling from a raw consistent share N_c / N_t.
double consistency_from_share(double share, double min_share);

struct SplitPlan {
  std::vector<std::string> half_a;
  std::vector<std::string> half_b;
  // Within-dimension (half_a item, half_b item) pairs.
  std::vector<std::pair<std::string, std::string>> pairing;
};

// Odd-even split within each dimension (forward ids then reverse ids, in
// layout order). Surplus items of odd-sized dimensions alternate halves so
// the halves differ in size by at most one overall; the seed's parity picks
// the half that takes the first surplus. Leftover surplus items are unpaired.
SplitPlan split_plan(const ScaleLayout& layout, std::uint64_t seed = 0);

// Spearman-Brown step-up 2r / (1 + r). Throws DegenerateError at r = -1.
double spearman_brown(double corr);

// Spearman correlation between half-A and half-B direction-adjusted scores
// over the plan's pairs. Throws DegenerateError when either side is constant.
double split_half_correlation(const ScoreProfile& profile, const SplitPlan& plan, const ScaleLayout& layout);

double split_half_reliability(const ScoreProfile& profile, const SplitPlan& plan, const ScaleLayout& layout);

}  // namespace congruence
