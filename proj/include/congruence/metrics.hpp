#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "congruence/scoring.hpp"

namespace congruence {

// Cosine of the angle between x and y. Throws PreconditionError on length
// mismatch or empty input, DegenerateError when either norm is zero.
double cosine(std::span<const double> x, std::span<const double> y);

// Ranks 1..n with ties sharing their mean rank.
std::vector<double> average_ranks(std::span<const double> v);

// Spearman's rho as the Pearson correlation of average ranks. Equal to the
// 1 - 6*sum(d^2)/(n(n^2-1)) closed form when there are no ties. Throws
// DegenerateError when either vector is constant, PreconditionError when
// lengths differ or n < 2.
double spearman(std::span<const double> x, std::span<const double> y);

// The textbook closed form on average ranks; biased under ties. Reported
// alongside spearman() for diagnostics.
double spearman_closed_form(std::span<const double> x, std::span<const double> y);

// Value mean difference: mean |x_i - y_i|.
double vmd(std::span<const double> x, std::span<const double> y);

// Share of pairs with |x_i - y_i| <= 1.
double consistent_proportion(std::span<const double> x, std::span<const double> y);

struct MetricsRow {
  std::string respondent_id;
  double cosine = 0.0;
  double spearman = 0.0;
  double spearman_closed_form = 0.0;
  double vmd = 0.0;
  double consistent_proportion = 0.0;
  std::size_t n_pairs = 0;
};

// All four metrics from one set of paired vectors.
MetricsRow compute_metrics(const PairedVectors& pairs, const std::string& respondent_id = {});

struct GroupStats {
  double mean = 0.0;
  double sd = 0.0;  // population (divide by n)
  double min = 0.0;
  double max = 0.0;
  std::size_t n = 0;
};

// Throws PreconditionError on empty input.
GroupStats group_stats(std::span<const double> values);

enum class Side { OneSidedObservedDirection, TwoSided };

struct PermutationOptions {
  Side side = Side::OneSidedObservedDirection;
  bool exact = true;
  // Largest C(n+m, n) enumerated in exact mode.
  std::uint64_t exact_cap = 1'000'000;
  // Monte-Carlo mode.
  std::uint64_t resamples = 100'000;
  std::uint64_t seed = 0;
};

struct PermutationResult {
  std::string statistic = "mean_difference";
  // mean(group_a) - mean(group_b)
  double observed = 0.0;
  double p_value = 1.0;
  bool exact = true;
  Side side = Side::OneSidedObservedDirection;
  // Exact: assignments at least as extreme (observed one included) and
  // C(n+m, n). Monte-Carlo: resamples at least as extreme and resamples.
  std::uint64_t extreme_count = 0;
  std::uint64_t total = 0;
  std::uint64_t seed = 0;
};

std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

// Two-sample permutation test on the difference of group means. Exact mode
// enumerates every assignment of the pooled values to a group of size n;
// p = extreme / C(n+m, n). Monte-Carlo mode uses (extreme + 1) / (R + 1).
// Throws PreconditionError for an empty group or when exact enumeration
// would exceed exact_cap (use Monte-Carlo instead).
PermutationResult permutation_test(std::span<const double> group_a, std::span<const double> group_b,
                                   const PermutationOptions& options = {});

std::string_view to_string(Side side);

}  // namespace congruence
