#pragma once

// Two-group hypothesis tests and single-variable ROC analysis.
//
// Group conventions: "a" is the faller group and "b" the non-faller group
// throughout; labels are 1 for faller (the positive class) and 0 otherwise.

#include "tugfall/errors.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tugfall {

enum class TestKind { mann_whitney_u, welch_t, fisher_exact };
enum class UMethod { exact, normal_approx };

std::string_view to_string(TestKind kind);
std::string_view to_string(UMethod method);

struct GroupComparison {
  std::string variable;
  double mean_faller = 0.0;
  double sd_faller = 0.0;
  double mean_nonfaller = 0.0;
  double sd_nonfaller = 0.0;
  long n_faller = 0;
  long n_nonfaller = 0;
  TestKind test = TestKind::mann_whitney_u;
  /// U of the faller group, Welch t, or the sample odds ratio for Fisher.
  double statistic = 0.0;
  double p_value = 1.0;
  /// Welch-Satterthwaite degrees of freedom (Welch only).
  std::optional<double> degrees_of_freedom;
  /// Which null distribution the U test used.
  std::optional<UMethod> method;
};

/// Two-sided Mann-Whitney U test. Exact null distribution when the smaller
/// group has at most 12 members and there are no ties, otherwise the normal
/// approximation with tie and continuity corrections.
GroupComparison mann_whitney_u(const Eigen::Ref<const Eigen::VectorXd>& faller,
                               const Eigen::Ref<const Eigen::VectorXd>& nonfaller);

/// Number of ways to reach each U value (0 .. n_a * n_b) when n_a of the
/// n_a + n_b distinct ranks go to group a. Entries are exact integers while
/// below 2^53.
std::vector<double> mann_whitney_exact_counts(long n_a, long n_b);

/// Two-sided exact p for an observed U: min(1, 2 * min(P(U <= u), P(U >= u))).
double mann_whitney_exact_p(double u, long n_a, long n_b);

/// Two-sided Welch unequal-variance t test.
GroupComparison welch_t_test(const Eigen::Ref<const Eigen::VectorXd>& faller,
                             const Eigen::Ref<const Eigen::VectorXd>& nonfaller);

/// Two-sided Student t tail probability P(|T| >= |t|).
double student_t_two_sided_p(double t, double degrees_of_freedom);

/// Two-sided Fisher exact test on {{a, b}, {c, d}}: sum of the probabilities
/// of all tables with the same margins that are no more likely than the
/// observed one.
GroupComparison fisher_exact(const std::array<std::array<long, 2>, 2>& table);

// ---------------------------------------------------------------------------
// ROC

enum class Polarity { higher_is_faller, lower_is_faller };
std::string_view to_string(Polarity polarity);

/// One operating point: predict faller when the value is on the faller side
/// of `value_cutoff` (>= for higher_is_faller, <= for lower_is_faller).
struct RocPoint {
  /// +/-infinity for the all-negative and all-positive sentinels.
  double value_cutoff = 0.0;
  long true_pos = 0;
  long false_pos = 0;
  long true_neg = 0;
  long false_neg = 0;

  double tpr() const;
  double fpr() const;
  double sensitivity() const { return tpr(); }
  double specificity() const;
  double precision() const;
  double f1() const;
};

struct OptimalCutoff {
  double prob_cutoff = 0.5;
  double value_cutoff = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double f1 = 0.0;
};

struct RocResult {
  std::string variable;
  Polarity polarity = Polarity::higher_is_faller;
  /// From (0, 0) to (1, 1), fpr and tpr non-decreasing.
  std::vector<RocPoint> points;
  double auc = 0.5;
  double value_min = 0.0;
  double value_max = 0.0;
  OptimalCutoff optimal;
  std::pair<double, double> auc_ci_95{0.5, 0.5};
  long bootstrap_resamples = 0;
  std::uint64_t bootstrap_seed = 0;

  /// Min-max position of a value cutoff within the observed range.
  double prob_of(double value_cutoff) const;
};

/// Swept over every distinct value with tied scores grouped into one step;
/// the polarity is chosen so that AUC >= 0.5. Fills points, auc, range and
/// the optimal cutoff.
RocResult roc_curve(const Eigen::Ref<const Eigen::VectorXd>& values, const std::vector<int>& labels,
                    std::string variable = {});

/// Trapezoid area under (fpr, tpr).
double trapezoid_auc(const std::vector<RocPoint>& points);

/// P(faller > nonfaller) + 0.5 P(tie), from mid-ranks.
double rank_auc(const Eigen::Ref<const Eigen::VectorXd>& values, const std::vector<int>& labels);

/// Cutoff minimizing |sensitivity - specificity|, ties broken by the largest
/// Youden J, then by the earliest point in sweep order.
OptimalCutoff optimal_cutoff(const RocResult& roc);

/// Stratified percentile bootstrap of the AUC in the full-sample polarity.
/// Deterministic for a given seed.
std::pair<double, double> bootstrap_auc_ci(const Eigen::Ref<const Eigen::VectorXd>& values,
                                           const std::vector<int>& labels, long resamples, std::uint64_t seed);

/// Seed for one variable's independent bootstrap stream.
std::uint64_t variable_seed(std::uint64_t base_seed, std::string_view variable);

/// Mid-ranks (1-based) of the values; ties share the mean rank.
Eigen::VectorXd midranks(const Eigen::Ref<const Eigen::VectorXd>& values);

}  // namespace tugfall
