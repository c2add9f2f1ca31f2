#include "congruence/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "congruence/rng.hpp"

namespace congruence {
namespace {

void require_paired(std::span<const double> x, std::span<const double> y, const char* op,
                    std::size_t min_len = 1) {
  if (x.size() != y.size()) {
    throw PreconditionError(fmt::format("{}: length mismatch ({} vs {})", op, x.size(), y.size()));
  }
  if (x.size() < min_len) {
    throw PreconditionError(fmt::format("{}: needs at least {} pairs, got {}", op, min_len, x.size()));
  }
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DegenerateError("correlation undefined: constant vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

bool is_constant(std::span<const double> v) {
  return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end();
}

}  // namespace

double cosine(std::span<const double> x, std::span<const double> y) {
  require_paired(x, y, "cosine");
  double dot = 0.0, xx = 0.0, yy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += x[i] * y[i];
    xx += x[i] * x[i];
    yy += y[i] * y[i];
  }
  if (xx == 0.0 || yy == 0.0) throw DegenerateError("cosine: zero-norm vector");
  // One rounding in the product keeps cosine(x, x) exactly 1.
  return dot / std::sqrt(xx * yy);
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&v](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    // Positions i..j (0-based) share the mean of ranks i+1..j+1.
    const double rank = (static_cast<double>(i + j) + 2.0) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  require_paired(x, y, "spearman", 2);
  if (is_constant(x) || is_constant(y)) throw DegenerateError("spearman: constant vector");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

double spearman_closed_form(std::span<const double> x, std::span<const double> y) {
  require_paired(x, y, "spearman_closed_form", 2);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  double d2 = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  const double n = static_cast<double>(rx.size());
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

double vmd(std::span<const double> x, std::span<const double> y) {
  require_paired(x, y, "vmd");
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) total += std::abs(x[i] - y[i]);
  return total / static_cast<double>(x.size());
}

double consistent_proportion(std::span<const double> x, std::span<const double> y) {
  require_paired(x, y, "consistent_proportion");
  std::size_t consistent = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::abs(x[i] - y[i]) <= 1.0) ++consistent;
  }
  return static_cast<double>(consistent) / static_cast<double>(x.size());
}

MetricsRow compute_metrics(const PairedVectors& pairs, const std::string& respondent_id) {
  MetricsRow row;
  row.respondent_id = respondent_id;
  row.n_pairs = pairs.knowledge.size();
  row.cosine = cosine(pairs.knowledge, pairs.behavior);
  row.spearman = spearman(pairs.knowledge, pairs.behavior);
  row.spearman_closed_form = spearman_closed_form(pairs.knowledge, pairs.behavior);
  row.vmd = vmd(pairs.knowledge, pairs.behavior);
  row.consistent_proportion = consistent_proportion(pairs.knowledge, pairs.behavior);
  return row;
}

GroupStats group_stats(std::span<const double> values) {
  if (values.empty()) throw PreconditionError("group_stats: empty input");
  GroupStats g;
  g.n = values.size();
  const double n = static_cast<double>(g.n);
  g.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - g.mean) * (v - g.mean);
  g.sd = std::sqrt(ss / n);
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  g.min = *lo;
  g.max = *hi;
  // Keep min <= mean <= max under rounding.
  g.mean = std::clamp(g.mean, g.min, g.max);
  return g;
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 result = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // Each partial product is itself a binomial coefficient, so the division is exact.
    result = result * (n - k + i) / i;
    if (result > UINT64_MAX) return UINT64_MAX;
  }
  return static_cast<std::uint64_t>(result);
}

std::string_view to_string(Side side) {
  return side == Side::TwoSided ? "two-sided" : "one-sided";
}

PermutationResult permutation_test(std::span<const double> group_a, std::span<const double> group_b,
                                   const PermutationOptions& options) {
  if (group_a.empty() || group_b.empty()) throw PreconditionError("permutation_test: empty group");

  std::vector<double> pooled(group_a.begin(), group_a.end());
  pooled.insert(pooled.end(), group_b.begin(), group_b.end());
  const std::size_t n = group_a.size();
  const std::size_t m = group_b.size();
  const std::size_t total_size = n + m;

  // mean_a - mean_b = S_a * (1/n + 1/m) - T/m is increasing in S_a, so the
  // extremeness test can run on group-a sums.
  long double total = 0.0L, abs_total = 0.0L;
  for (double v : pooled) {
    total += v;
    abs_total += std::abs(static_cast<long double>(v));
  }
  const long double inv_n = 1.0L / static_cast<long double>(n);
  const long double inv_m = 1.0L / static_cast<long double>(m);
  auto statistic = [&](long double sum_a) { return sum_a * inv_n - (total - sum_a) * inv_m; };

  long double observed_sum = 0.0L;
  for (double v : group_a) observed_sum += v;
  const long double observed = statistic(observed_sum);
  const long double tol = 1e-9L * std::max<long double>(1.0L, abs_total);

  auto is_extreme = [&](long double sum_a) {
    if (options.side == Side::TwoSided) {
      return std::abs(statistic(sum_a)) >= std::abs(observed) - tol * (inv_n + inv_m);
    }
    return observed >= 0 ? sum_a >= observed_sum - tol : sum_a <= observed_sum + tol;
  };

  PermutationResult result;
  result.observed = static_cast<double>(observed);
  result.side = options.side;
  result.exact = options.exact;

  if (options.exact) {
    const std::uint64_t combos = binomial(total_size, n);
    if (combos > options.exact_cap) {
      throw PreconditionError(fmt::format("permutation_test: C({}, {}) = {} assignments exceed the exact "
                                          "cap of {}; use Monte-Carlo mode",
                                          total_size, n, combos, options.exact_cap));
    }
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::uint64_t extreme = 0, seen = 0;
    while (true) {
      long double sum = 0.0L;
      for (auto i : idx) sum += pooled[i];
      if (is_extreme(sum)) ++extreme;
      ++seen;
      // Next combination in lexicographic order.
      std::size_t pos = n;
      while (pos > 0 && idx[pos - 1] == total_size - n + pos - 1) --pos;
      if (pos == 0) break;
      ++idx[pos - 1];
      for (std::size_t k = pos; k < n; ++k) idx[k] = idx[k - 1] + 1;
    }
    result.extreme_count = extreme;
    result.total = seen;
    result.p_value = static_cast<double>(extreme) / static_cast<double>(seen);
    return result;
  }

  if (options.resamples == 0) throw PreconditionError("permutation_test: resamples must be positive");
  Rng rng(options.seed);
  std::vector<double> shuffled = pooled;
  std::uint64_t extreme = 0;
  for (std::uint64_t r = 0; r < options.resamples; ++r) {
    rng.shuffle(shuffled);
    long double sum = 0.0L;
    for (std::size_t i = 0; i < n; ++i) sum += shuffled[i];
    if (is_extreme(sum)) ++extreme;
  }
  result.extreme_count = extreme;
  result.total = options.resamples;
  result.seed = options.seed;
  result.p_value = static_cast<double>(extreme + 1) / static_cast<double>(options.resamples + 1);
  return result;
}

}  // namespace congruence
