#include "tugfall/stats.hpp"

#include <unsupported/Eigen/SpecialFunctions>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace tugfall {

std::string_view to_string(TestKind kind) {
  switch (kind) {
    case TestKind::mann_whitney_u: return "mann_whitney_u";
    case TestKind::welch_t: return "welch_t";
    case TestKind::fisher_exact: return "fisher_exact";
  }
  return "?";
}

std::string_view to_string(UMethod method) { return method == UMethod::exact ? "exact" : "normal_approx"; }

std::string_view to_string(Polarity polarity) {
  return polarity == Polarity::higher_is_faller ? "higher_is_faller" : "lower_is_faller";
}

namespace {

double sample_sd(const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() < 2) return 0.0;
  const double mean = x.mean();
  return std::sqrt((x.array() - mean).square().sum() / static_cast<double>(x.size() - 1));
}

GroupComparison describe(const Eigen::Ref<const Eigen::VectorXd>& faller,
                         const Eigen::Ref<const Eigen::VectorXd>& nonfaller, TestKind kind) {
  GroupComparison g;
  g.test = kind;
  g.n_faller = static_cast<long>(faller.size());
  g.n_nonfaller = static_cast<long>(nonfaller.size());
  g.mean_faller = faller.mean();
  g.mean_nonfaller = nonfaller.mean();
  g.sd_faller = sample_sd(faller);
  g.sd_nonfaller = sample_sd(nonfaller);
  return g;
}

void require_groups(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                    const char* who) {
  if (a.size() == 0 || b.size() == 0) throw ValidationError(std::string(who) + ": empty group");
  if (a.size() < 2 || b.size() < 2) throw ValidationError(std::string(who) + ": each group needs >= 2 values");
  if (!a.allFinite() || !b.allFinite()) throw ValidationError(std::string(who) + ": non-finite value");
}

double normal_two_sided(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

}  // namespace

Eigen::VectorXd midranks(const Eigen::Ref<const Eigen::VectorXd>& values) {
  const Eigen::Index n = values.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return values[i] < values[j]; });
  Eigen::VectorXd ranks(n);
  for (Eigen::Index i = 0; i < n;) {
    Eigen::Index j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Eigen::Index k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

std::vector<double> mann_whitney_exact_counts(long n_a, long n_b) {
  // Scan the pooled order left to right. Picking position i (1-based) as the
  // j-th member of group a adds i - j (the b members before it) to U.
  const long n = n_a + n_b;
  const long u_max = n_a * n_b;
  std::vector<std::vector<double>> dp(static_cast<std::size_t>(n_a + 1),
                                      std::vector<double>(static_cast<std::size_t>(u_max + 1), 0.0));
  dp[0][0] = 1.0;
  for (long i = 1; i <= n; ++i) {
    for (long j = std::min(i, n_a); j >= 1; --j) {
      const long add = i - j;
      if (add > n_b) continue;
      auto& dst = dp[static_cast<std::size_t>(j)];
      const auto& src = dp[static_cast<std::size_t>(j - 1)];
      for (long u = u_max; u >= add; --u) dst[static_cast<std::size_t>(u)] += src[static_cast<std::size_t>(u - add)];
    }
  }
  return dp[static_cast<std::size_t>(n_a)];
}

double mann_whitney_exact_p(double u, long n_a, long n_b) {
  const auto counts = mann_whitney_exact_counts(n_a, n_b);
  double total = 0.0, le = 0.0, ge = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const double uk = static_cast<double>(k);
    total += counts[k];
    if (uk <= u) le += counts[k];
    if (uk >= u) ge += counts[k];
  }
  return std::min(1.0, 2.0 * std::min(le, ge) / total);
}

GroupComparison mann_whitney_u(const Eigen::Ref<const Eigen::VectorXd>& faller,
                               const Eigen::Ref<const Eigen::VectorXd>& nonfaller) {
  require_groups(faller, nonfaller, "mann_whitney_u");
  GroupComparison g = describe(faller, nonfaller, TestKind::mann_whitney_u);
  const long na = g.n_faller, nb = g.n_nonfaller;
  const double n = static_cast<double>(na + nb);

  Eigen::VectorXd pooled(na + nb);
  pooled << faller, nonfaller;
  const Eigen::VectorXd ranks = midranks(pooled);
  const double rank_sum_a = ranks.head(na).sum();
  const double u = rank_sum_a - 0.5 * static_cast<double>(na) * static_cast<double>(na + 1);
  g.statistic = u;

  // Tie term sum(t^3 - t) over groups of equal values.
  std::vector<double> sorted(pooled.data(), pooled.data() + pooled.size());
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }

  if (std::min(na, nb) <= 12 && tie_term == 0.0) {
    g.method = UMethod::exact;
    g.p_value = mann_whitney_exact_p(u, na, nb);
    return g;
  }

  g.method = UMethod::normal_approx;
  const double mu = 0.5 * static_cast<double>(na) * static_cast<double>(nb);
  const double var = static_cast<double>(na) * static_cast<double>(nb) / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (!(var > 0.0)) {
    g.p_value = 1.0;
    return g;
  }
  const double diff = std::max(0.0, std::abs(u - mu) - 0.5);
  g.p_value = std::min(1.0, normal_two_sided(diff / std::sqrt(var)));
  return g;
}

double student_t_two_sided_p(double t, double degrees_of_freedom) {
  if (std::isinf(t)) return 0.0;
  const double x = degrees_of_freedom / (degrees_of_freedom + t * t);
  return std::clamp(Eigen::numext::betainc(0.5 * degrees_of_freedom, 0.5, x), 0.0, 1.0);
}

GroupComparison welch_t_test(const Eigen::Ref<const Eigen::VectorXd>& faller,
                             const Eigen::Ref<const Eigen::VectorXd>& nonfaller) {
  require_groups(faller, nonfaller, "welch_t_test");
  GroupComparison g = describe(faller, nonfaller, TestKind::welch_t);
  const double va = g.sd_faller * g.sd_faller / static_cast<double>(g.n_faller);
  const double vb = g.sd_nonfaller * g.sd_nonfaller / static_cast<double>(g.n_nonfaller);
  const double diff = g.mean_faller - g.mean_nonfaller;

  if (va + vb == 0.0) {
    g.statistic = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
    g.p_value = diff == 0.0 ? 1.0 : 0.0;
    return g;
  }
  g.statistic = diff / std::sqrt(va + vb);
  const double df = (va + vb) * (va + vb) /
                    (va * va / static_cast<double>(g.n_faller - 1) + vb * vb / static_cast<double>(g.n_nonfaller - 1));
  g.degrees_of_freedom = df;
  g.p_value = student_t_two_sided_p(g.statistic, df);
  return g;
}

GroupComparison fisher_exact(const std::array<std::array<long, 2>, 2>& table) {
  const long a = table[0][0], b = table[0][1], c = table[1][0], d = table[1][1];
  if (a < 0 || b < 0 || c < 0 || d < 0) throw ValidationError("fisher_exact: negative count");
  const long row1 = a + b, row2 = c + d, col1 = a + c, n = row1 + row2;
  if (row1 == 0 || row2 == 0 || col1 == 0 || col1 == n) throw ValidationError("fisher_exact: zero margin");

  auto log_choose = [](long n_, long k_) {
    return std::lgamma(static_cast<double>(n_ + 1)) - std::lgamma(static_cast<double>(k_ + 1)) -
           std::lgamma(static_cast<double>(n_ - k_ + 1));
  };
  // Hypergeometric probability of x in the top-left cell.
  auto log_prob = [&](long x) { return log_choose(row1, x) + log_choose(row2, col1 - x) - log_choose(n, col1); };

  const long lo = std::max(0L, col1 - row2);
  const long hi = std::min(row1, col1);
  const double observed = log_prob(a);
  // Relative slack so tables equal in probability to the observed one are not
  // lost to rounding.
  const double cutoff = observed + 1e-7;
  double p = 0.0;
  bool all_included = true;
  for (long x = lo; x <= hi; ++x) {
    const double lp = log_prob(x);
    if (lp <= cutoff) {
      p += std::exp(lp);
    } else {
      all_included = false;
    }
  }

  GroupComparison g;
  g.test = TestKind::fisher_exact;
  g.n_faller = row1;
  g.n_nonfaller = row2;
  g.mean_faller = static_cast<double>(a) / static_cast<double>(row1);
  g.mean_nonfaller = static_cast<double>(c) / static_cast<double>(row2);
  g.sd_faller = std::numeric_limits<double>::quiet_NaN();
  g.sd_nonfaller = std::numeric_limits<double>::quiet_NaN();
  g.statistic = (b * c == 0) ? std::numeric_limits<double>::infinity()
                             : static_cast<double>(a * d) / static_cast<double>(b * c);
  g.p_value = all_included ? 1.0 : std::min(1.0, p);
  return g;
}

// ---------------------------------------------------------------------------
// ROC

double RocPoint::tpr() const {
  const long pos = true_pos + false_neg;
  return pos == 0 ? 0.0 : static_cast<double>(true_pos) / static_cast<double>(pos);
}

double RocPoint::fpr() const {
  const long neg = false_pos + true_neg;
  return neg == 0 ? 0.0 : static_cast<double>(false_pos) / static_cast<double>(neg);
}

double RocPoint::specificity() const {
  const long neg = false_pos + true_neg;
  return neg == 0 ? 1.0 : static_cast<double>(true_neg) / static_cast<double>(neg);
}

double RocPoint::precision() const {
  const long predicted = true_pos + false_pos;
  return predicted == 0 ? 0.0 : static_cast<double>(true_pos) / static_cast<double>(predicted);
}

double RocPoint::f1() const {
  const long denom = 2 * true_pos + false_pos + false_neg;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(true_pos) / static_cast<double>(denom);
}

double RocResult::prob_of(double value_cutoff) const {
  if (!(value_max > value_min)) return 0.5;
  return (value_cutoff - value_min) / (value_max - value_min);
}

double trapezoid_auc(const std::vector<RocPoint>& points) {
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double dx = points[i].fpr() - points[i - 1].fpr();
    area += 0.5 * dx * (points[i].tpr() + points[i - 1].tpr());
  }
  return area;
}

namespace {

void require_labels(const Eigen::Ref<const Eigen::VectorXd>& values, const std::vector<int>& labels,
                    long& n_pos, long& n_neg) {
  if (static_cast<std::size_t>(values.size()) != labels.size()) throw ValidationError("roc: values/labels length mismatch");
  if (!values.allFinite()) throw ValidationError("roc: non-finite value");
  n_pos = 0;
  n_neg = 0;
  for (int l : labels) {
    if (l == 1) ++n_pos;
    else if (l == 0) ++n_neg;
    else throw ValidationError("roc: labels must be 0 or 1");
  }
  if (n_pos == 0 || n_neg == 0) throw ValidationError("roc: both classes must be present");
}

std::vector<RocPoint> sweep(const Eigen::Ref<const Eigen::VectorXd>& values, const std::vector<int>& labels,
                            Polarity polarity, long n_pos, long n_neg) {
  const double sign = polarity == Polarity::higher_is_faller ? 1.0 : -1.0;
  std::vector<std::pair<double, int>> scored;  // oriented score, label
  scored.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) scored.emplace_back(sign * values[static_cast<Eigen::Index>(i)], labels[i]);
  std::sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) { return x.first > y.first; });

  std::vector<RocPoint> points;
  points.push_back({sign * std::numeric_limits<double>::infinity(), 0, 0, n_neg, n_pos});
  long tp = 0, fp = 0;
  for (std::size_t i = 0; i < scored.size();) {
    std::size_t j = i;
    while (j < scored.size() && scored[j].first == scored[i].first) {
      if (scored[j].second == 1) ++tp; else ++fp;
      ++j;
    }
    // Cut halfway to the next distinct value; after the last one every
    // subject is predicted positive.
    const double cut = j < scored.size() ? sign * 0.5 * (scored[i].first + scored[j].first)
                                         : -sign * std::numeric_limits<double>::infinity();
    points.push_back({cut, tp, fp, n_neg - fp, n_pos - tp});
    i = j;
  }
  return points;
}

}  // namespace

double rank_auc(const Eigen::Ref<const Eigen::VectorXd>& values, const std::vector<int>& labels) {
  long n_pos = 0, n_neg = 0;
  require_labels(values, labels, n_pos, n_neg);
  const Eigen::VectorXd ranks = midranks(values);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) rank_sum += ranks[static_cast<Eigen::Index>(i)];
  }
  const double u = rank_sum - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

RocResult roc_curve(const Eigen::Ref<const Eigen::VectorXd>& values, const std::vector<int>& labels,
                    std::string variable) {
  long n_pos = 0, n_neg = 0;
  require_labels(values, labels, n_pos, n_neg);

  RocResult roc;
  roc.variable = std::move(variable);
  roc.value_min = values.minCoeff();
  roc.value_max = values.maxCoeff();
  roc.points = sweep(values, labels, Polarity::higher_is_faller, n_pos, n_neg);
  roc.auc = trapezoid_auc(roc.points);
  if (roc.auc < 0.5) {
    roc.polarity = Polarity::lower_is_faller;
    roc.points = sweep(values, labels, Polarity::lower_is_faller, n_pos, n_neg);
    roc.auc = trapezoid_auc(roc.points);
  }
  roc.optimal = optimal_cutoff(roc);
  return roc;
}

OptimalCutoff optimal_cutoff(const RocResult& roc) {
  if (roc.points.size() < 2) throw ValidationError("optimal_cutoff: curve has fewer than two points");

  // Compare in integer arithmetic: with P positives and N negatives,
  // |sens - spec| * P * N = |tp * N - tn * P| and (J + 1) * P * N = tp * N + tn * P.
  const RocPoint& ref = roc.points.front();
  const long n_pos = ref.true_pos + ref.false_neg;
  const long n_neg = ref.false_pos + ref.true_neg;
  const bool degenerate = roc.points.size() == 2;  // one distinct value: only the sentinels

  std::size_t best = 0;
  long best_gap = std::numeric_limits<long>::max();
  long best_j = std::numeric_limits<long>::min();
  for (std::size_t i = 0; i < roc.points.size(); ++i) {
    const RocPoint& p = roc.points[i];
    if (!degenerate && !std::isfinite(p.value_cutoff)) continue;
    const long gap = std::labs(p.true_pos * n_neg - p.true_neg * n_pos);
    const long j = p.true_pos * n_neg + p.true_neg * n_pos;
    if (gap < best_gap || (gap == best_gap && j > best_j)) {
      best = i;
      best_gap = gap;
      best_j = j;
    }
  }

  const RocPoint& p = roc.points[best];
  OptimalCutoff out;
  out.value_cutoff = degenerate ? roc.value_min : p.value_cutoff;
  out.prob_cutoff = degenerate ? 0.5 : roc.prob_of(p.value_cutoff);
  out.sensitivity = p.sensitivity();
  out.specificity = p.specificity();
  out.f1 = p.f1();
  return out;
}

std::uint64_t variable_seed(std::uint64_t base_seed, std::string_view variable) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char ch : variable) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  // splitmix64 finalizer
  std::uint64_t z = base_seed ^ h;
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::pair<double, double> bootstrap_auc_ci(const Eigen::Ref<const Eigen::VectorXd>& values,
                                           const std::vector<int>& labels, long resamples, std::uint64_t seed) {
  if (resamples < 1) throw ConfigError("bootstrap: resamples must be >= 1");
  const double point = rank_auc(values, labels);
  const double sign = point < 0.5 ? -1.0 : 1.0;

  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (labels[i] == 1 ? pos : neg).push_back(sign * values[static_cast<Eigen::Index>(i)]);
  }

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_pos(0, pos.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_neg(0, neg.size() - 1);
  Eigen::VectorXd sample(static_cast<Eigen::Index>(pos.size() + neg.size()));
  std::vector<int> sample_labels(pos.size(), 1);
  sample_labels.resize(pos.size() + neg.size(), 0);

  std::vector<double> aucs(static_cast<std::size_t>(resamples));
  for (auto& auc : aucs) {
    Eigen::Index k = 0;
    for (std::size_t i = 0; i < pos.size(); ++i) sample[k++] = pos[pick_pos(rng)];
    for (std::size_t i = 0; i < neg.size(); ++i) sample[k++] = neg[pick_neg(rng)];
    auc = rank_auc(sample, sample_labels);
  }
  std::sort(aucs.begin(), aucs.end());

  // Linear interpolation between order statistics.
  auto quantile = [&](double q) {
    const double h = q * static_cast<double>(aucs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, aucs.size() - 1);
    return aucs[lo] + (h - static_cast<double>(lo)) * (aucs[hi] - aucs[lo]);
  };
  const double oriented = std::max(point, 1.0 - point);
  return {std::min(quantile(0.025), oriented), std::max(quantile(0.975), oriented)};
}

}  // namespace tugfall
