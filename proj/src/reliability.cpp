#include "congruence/reliability.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "congruence/metrics.hpp"

namespace congruence {
namespace {

int adjusted_score(const std::unordered_map<std::string_view, int>& scores, const std::string& id,
                   Direction dir, const std::string& respondent) {
  auto it = scores.find(id);
  if (it == scores.end()) {
    throw InvariantError(respondent, "missing-item", fmt::format("profile has no score for {}", id));
  }
  return adjust_direction(it->second, dir);
}

std::unordered_map<std::string_view, int> index_scores(const ScoreProfile& profile) {
  std::unordered_map<std::string_view, int> out;
  for (const auto& s : profile.scores) out.emplace(s.item_id, s.score);
  return out;
}

}  // namespace

std::vector<DimensionTally> tally_dimensions(const ScoreProfile& profile, const ScaleLayout& layout) {
  const auto scores = index_scores(profile);
  std::vector<DimensionTally> out;
  for (const auto& dim : layout.dimensions) {
    DimensionTally t;
    t.dimension = dim.dimension;
    t.n_items = dim.size();
    for (Direction dir : {Direction::Forward, Direction::Reverse}) {
      for (const auto& id : dir == Direction::Forward ? dim.forward : dim.reverse) {
        const int s = adjusted_score(scores, id, dir, profile.respondent_id);
        if (s >= 4) ++t.at_or_above_4;
        if (s <= 4) ++t.at_or_below_4;
      }
    }
    out.push_back(t);
  }
  return out;
}

double min_consistent_share(const ScaleLayout& layout) {
  std::size_t floor_count = 0;
  for (const auto& dim : layout.dimensions) floor_count += (dim.size() + 1) / 2;
  const auto total = layout.item_count();
  if (total == 0) throw PreconditionError("layout has no items");
  return static_cast<double>(floor_count) / static_cast<double>(total);
}

double consistency_from_share(double share, double min_share) {
  if (min_share >= 1.0) throw DegenerateError("consistency undefined: minimum share is 1");
  return (share - min_share) / (1.0 - min_share);
}

double consistency(const ScoreProfile& profile, const ScaleLayout& layout) {
  std::size_t consistent = 0;
  for (const auto& t : tally_dimensions(profile, layout)) consistent += t.consistent();
  const double share = static_cast<double>(consistent) / static_cast<double>(layout.item_count());
  return consistency_from_share(share, min_consistent_share(layout));
}

SplitPlan split_plan(const ScaleLayout& layout, std::uint64_t seed) {
  SplitPlan plan;
  // 0 -> half A takes the next surplus item, 1 -> half B.
  int surplus_half = static_cast<int>(seed % 2);
  for (const auto& dim : layout.dimensions) {
    const auto ids = dim.ordered_ids();
    const int start = ids.size() % 2 == 1 ? surplus_half : 0;
    if (ids.size() % 2 == 1) surplus_half ^= 1;
    std::vector<std::string> a, b;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      ((static_cast<int>(k % 2) ^ start) == 0 ? a : b).push_back(ids[k]);
    }
    for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) plan.pairing.emplace_back(a[k], b[k]);
    plan.half_a.insert(plan.half_a.end(), a.begin(), a.end());
    plan.half_b.insert(plan.half_b.end(), b.begin(), b.end());
  }
  return plan;
}

double spearman_brown(double corr) {
  if (corr <= -1.0) throw DegenerateError("Spearman-Brown undefined at corr = -1");
  return 2.0 * corr / (1.0 + corr);
}

double split_half_correlation(const ScoreProfile& profile, const SplitPlan& plan, const ScaleLayout& layout) {
  const auto scores = index_scores(profile);
  std::vector<double> a, b;
  a.reserve(plan.pairing.size());
  b.reserve(plan.pairing.size());
  for (const auto& [ida, idb] : plan.pairing) {
    const auto da = layout.direction_of(ida);
    const auto db = layout.direction_of(idb);
    if (!da || !db) {
      throw InvariantError(!da ? ida : idb, "layout-unresolved", "split item is not in the layout");
    }
    a.push_back(adjusted_score(scores, ida, *da, profile.respondent_id));
    b.push_back(adjusted_score(scores, idb, *db, profile.respondent_id));
  }
  return spearman(a, b);
}

double split_half_reliability(const ScoreProfile& profile, const SplitPlan& plan, const ScaleLayout& layout) {
  return spearman_brown(split_half_correlation(profile, plan, layout));
}

}  // namespace congruence
