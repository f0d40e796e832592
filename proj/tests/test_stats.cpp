#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "oracles.hpp"
#include "tugfall/stats.hpp"

#include <random>

using namespace tugfall;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.begin(), static_cast<Eigen::Index>(v.size()));
}

std::vector<int> labels_of(std::initializer_list<int> v) { return std::vector<int>(v); }

}  // namespace

TEST_CASE("U test: fully separated groups of three give exact p = 0.1") {
  const auto g = mann_whitney_u(vec({1, 2, 3}), vec({4, 5, 6}));
  CHECK(g.statistic == 0.0);
  REQUIRE(g.method.has_value());
  CHECK(*g.method == UMethod::exact);
  CHECK(g.p_value == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(mann_whitney_u(vec({4, 5, 6}), vec({1, 2, 3})).statistic == 9.0);
}

TEST_CASE("U test: identical samples give p = 1") {
  const auto g = mann_whitney_u(vec({1, 2, 3, 4}), vec({1, 2, 3, 4}));
  CHECK(*g.method == UMethod::normal_approx);
  CHECK(g.p_value == 1.0);
}

TEST_CASE("U test: exact counts match enumeration") {
  for (int na = 1; na <= 6; ++na) {
    for (int nb = 1; nb <= 6; ++nb) {
      const auto dp = mann_whitney_exact_counts(na, nb);
      const auto bf = oracle::brute_force_u_counts(na, nb);
      REQUIRE(dp.size() == static_cast<std::size_t>(na * nb + 1));
      for (std::size_t u = 0; u < dp.size(); ++u) {
        const auto it = bf.find(static_cast<long>(u));
        CHECK(dp[u] == static_cast<double>(it == bf.end() ? 0 : it->second));
      }
    }
  }
}

TEST_CASE("U test: exhaustive sweep over every rank assignment with n_a + n_b <= 10") {
  long checked = 0;
  for (int n = 4; n <= 10; ++n) {
    for (int na = 2; na <= n - 2; ++na) {
      const int nb = n - na;
      for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (__builtin_popcount(mask) != na) continue;
        Eigen::VectorXd a(na), b(nb);
        Eigen::Index ia = 0, ib = 0;
        long u = 0;
        for (int pos = 0; pos < n; ++pos) {
          if (mask & (1u << pos)) {
            a[ia++] = pos;
            u += ib;
          } else {
            b[ib++] = pos;
          }
        }
        const auto g = mann_whitney_u(a, b);
        REQUIRE(g.statistic == static_cast<double>(u));
        REQUIRE(g.p_value == oracle::brute_force_u_p(u, na, nb));
        ++checked;
      }
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("U test: swapping groups leaves p unchanged") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g;
  for (int t = 0; t < 50; ++t) {
    Eigen::VectorXd a(7 + t % 10), b(5 + t % 15);
    for (auto& v : a) v = std::round(g(rng) * 3);
    for (auto& v : b) v = std::round(g(rng) * 3 + 0.5);
    const auto ab = mann_whitney_u(a, b), ba = mann_whitney_u(b, a);
    CHECK(ab.p_value == doctest::Approx(ba.p_value).epsilon(1e-12));
    CHECK(ab.statistic + ba.statistic == doctest::Approx(static_cast<double>(a.size() * b.size())));
    CHECK(ab.statistic == doctest::Approx(oracle::pairwise_u(a, b)));
    CHECK(ab.p_value >= 0.0);
    CHECK(ab.p_value <= 1.0);
  }
}

TEST_CASE("U test: rejection rate at alpha 0.05 is calibrated for n = 18 per group") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> g;
  int rejected = 0;
  for (int sim = 0; sim < 1000; ++sim) {
    Eigen::VectorXd a(18), b(18);
    for (auto& v : a) v = g(rng);
    for (auto& v : b) v = g(rng);
    if (mann_whitney_u(a, b).p_value <= 0.05) ++rejected;
  }
  CHECK(rejected >= 30);
  CHECK(rejected <= 70);
}

TEST_CASE("U test: groups smaller than two are rejected") {
  CHECK_THROWS_AS(mann_whitney_u(Eigen::VectorXd(0), vec({1, 2})), ValidationError);
  CHECK_THROWS_AS(mann_whitney_u(vec({1}), vec({1, 2})), ValidationError);
}

TEST_CASE("Welch t test") {
  CHECK(welch_t_test(vec({1, 2, 3, 4}), vec({1, 2, 3, 4})).p_value == doctest::Approx(1.0));
  Eigen::VectorXd a(10), b(10);
  for (int i = 0; i < 10; ++i) {
    a[i] = 1e-3 * i;
    b[i] = 100 + 1e-3 * (9 - i);
  }
  CHECK(welch_t_test(a, b).p_value < 1e-6);
  CHECK(welch_t_test(vec({2, 2, 2}), vec({2, 2})).p_value == 1.0);
  CHECK(welch_t_test(vec({2, 2, 2}), vec({3, 3})).p_value == 0.0);
}

TEST_CASE("Welch t test matches a worked example") {
  // scipy.stats.ttest_ind(equal_var=False): t = -2.455356, df = 24.988529, p = 0.021378
  const auto g = welch_t_test(vec({27.5, 21.0, 19.0, 23.6, 17.0, 17.9, 16.9, 20.1, 21.9, 22.6, 23.1, 19.6, 19.0, 21.7, 21.4}),
                              vec({27.1, 22.0, 20.8, 23.4, 23.4, 23.5, 25.8, 22.0, 24.8, 20.2, 21.9, 22.1, 22.9, 20.5, 24.4}));
  CHECK(g.statistic == doctest::Approx(-2.455356398).epsilon(1e-8));
  CHECK(*g.degrees_of_freedom == doctest::Approx(24.98852929).epsilon(1e-8));
  CHECK(g.p_value == doctest::Approx(0.021378001).epsilon(1e-6));
}

TEST_CASE("Student t tail probability") {
  CHECK(student_t_two_sided_p(0.0, 5.0) == doctest::Approx(1.0));
  CHECK(student_t_two_sided_p(2.0, 10.0) == doctest::Approx(0.0733880).epsilon(1e-5));
  CHECK(student_t_two_sided_p(1.959964, 1e7) == doctest::Approx(0.05).epsilon(1e-4));
}

TEST_CASE("Fisher exact test") {
  CHECK(fisher_exact({{{10, 8}, {15, 3}}}).p_value == doctest::Approx(0.146353091).epsilon(1e-7));
  CHECK(fisher_exact({{{5, 5}, {5, 5}}}).p_value == 1.0);
  CHECK(fisher_exact({{{8, 0}, {0, 8}}}).p_value == doctest::Approx(2.0 / 12870.0).epsilon(1e-10));
  CHECK_THROWS_AS(fisher_exact({{{-1, 2}, {3, 4}}}), ValidationError);
}

TEST_CASE("Fisher exact test agrees with enumeration on every small table") {
  for (long a = 0; a <= 7; ++a)
    for (long b = 0; b <= 7; ++b)
      for (long c = 0; c <= 7; ++c)
        for (long d = 0; d <= 7; ++d) {
          if (a + b == 0 || c + d == 0 || a + c == 0 || b + d == 0) continue;
          const double p = fisher_exact({{{a, b}, {c, d}}}).p_value;
          REQUIRE(p == doctest::Approx(oracle::fisher_enumeration(a, b, c, d)).epsilon(1e-9));
        }
}

TEST_CASE("ROC: perfect separation") {
  const auto roc = roc_curve(vec({1, 2, 3, 4}), labels_of({0, 0, 1, 1}));
  CHECK(roc.auc == 1.0);
  CHECK(roc.polarity == Polarity::higher_is_faller);
  bool through_corner = false;
  for (const auto& p : roc.points) through_corner |= (p.fpr() == 0.0 && p.tpr() == 1.0);
  CHECK(through_corner);
  CHECK(roc.optimal.value_cutoff > 2.0);
  CHECK(roc.optimal.value_cutoff < 3.0);
  CHECK(roc.optimal.sensitivity == 1.0);
  CHECK(roc.optimal.specificity == 1.0);
  CHECK(roc.optimal.f1 == 1.0);
  CHECK(roc.optimal.prob_cutoff == doctest::Approx(0.5));
}

TEST_CASE("ROC: inverted separation flips polarity") {
  const auto roc = roc_curve(vec({1, 2, 3, 4}), labels_of({1, 1, 0, 0}));
  CHECK(roc.polarity == Polarity::lower_is_faller);
  CHECK(roc.auc == 1.0);
  CHECK(roc.optimal.sensitivity == 1.0);
}

TEST_CASE("ROC: constant values give AUC 0.5") {
  const auto roc = roc_curve(vec({3, 3, 3, 3, 3}), labels_of({0, 1, 0, 1, 1}));
  CHECK(roc.auc == 0.5);
  CHECK(roc.points.front().fpr() == 0.0);
  CHECK(roc.points.back().tpr() == 1.0);
}

TEST_CASE("ROC: single class is rejected") {
  CHECK_THROWS_AS(roc_curve(vec({1, 2, 3}), labels_of({1, 1, 1})), ValidationError);
}

TEST_CASE("ROC: trapezoid AUC equals the rank-sum AUC on random tied inputs") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> size(4, 40), label(0, 1), level(0, 5);
  std::normal_distribution<double> g;
  for (int t = 0; t < 1000; ++t) {
    const int n = size(rng);
    Eigen::VectorXd v(n);
    std::vector<int> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      v[i] = t % 2 ? level(rng) : g(rng);
      y[static_cast<std::size_t>(i)] = label(rng);
    }
    y[0] = 0;
    y[1] = 1;
    const auto roc = roc_curve(v, y);
    double oriented = oracle::pairwise_auc(v, y);
    if (roc.polarity == Polarity::lower_is_faller) oriented = 1.0 - oriented;
    REQUIRE(std::abs(roc.auc - oriented) <= 1e-9);
    REQUIRE(std::abs(trapezoid_auc(roc.points) - roc.auc) <= 1e-9);
    REQUIRE(std::abs(rank_auc(v, y) - oracle::pairwise_auc(v, y)) <= 1e-9);
    CHECK(roc.auc >= 0.5);
    for (std::size_t k = 1; k < roc.points.size(); ++k) {
      REQUIRE(roc.points[k].fpr() >= roc.points[k - 1].fpr());
      REQUIRE(roc.points[k].tpr() >= roc.points[k - 1].tpr());
    }
    for (const auto& p : roc.points) {
      REQUIRE(p.f1() >= 0.0);
      REQUIRE(p.f1() <= 1.0);
    }
  }
}

TEST_CASE("ROC: mirrored class distributions balance sensitivity and specificity at the midpoint") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g(1.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    const int half = 10 + t;
    Eigen::VectorXd v(2 * half);
    std::vector<int> y(static_cast<std::size_t>(2 * half));
    for (int i = 0; i < half; ++i) {
      const double x = g(rng);
      v[i] = x;
      v[half + i] = -x;
      y[static_cast<std::size_t>(i)] = 1;
      y[static_cast<std::size_t>(half + i)] = 0;
    }
    const auto roc = roc_curve(v, y);
    CHECK(roc.optimal.sensitivity == roc.optimal.specificity);
    // the cutoff halfway between the innermost mirrored pair is exactly 0
    bool found = false;
    for (const auto& p : roc.points) {
      if (p.value_cutoff != 0.0) continue;
      found = true;
      CHECK(p.sensitivity() == p.specificity());
    }
    CHECK(found);
  }
}

TEST_CASE("bootstrap CI: separable data, determinism, containment") {
  const auto ci = bootstrap_auc_ci(vec({1, 2, 3, 4, 5, 6}), labels_of({0, 0, 0, 1, 1, 1}), 500, 1);
  CHECK(ci.first == 1.0);
  CHECK(ci.second == 1.0);

  std::mt19937_64 rng(77);
  std::normal_distribution<double> g;
  Eigen::VectorXd v(36);
  std::vector<int> y(36);
  for (int i = 0; i < 36; ++i) {
    y[static_cast<std::size_t>(i)] = i < 18;
    v[i] = g(rng) + (i < 18 ? 0.8 : 0.0);
  }
  const auto a = bootstrap_auc_ci(v, y, 2000, 5);
  const auto b = bootstrap_auc_ci(v, y, 2000, 5);
  CHECK(a == b);
  const double auc = roc_curve(v, y).auc;
  CHECK(a.first <= auc);
  CHECK(auc <= a.second);
  CHECK(bootstrap_auc_ci(v, y, 2000, 6) != a);
}

TEST_CASE("midranks share ties") {
  CHECK(midranks(vec({10, 20, 20, 5})) == vec({2, 3.5, 3.5, 1}));
}

TEST_CASE("variable seeds differ per variable and are stable") {
  CHECK(variable_seed(1, "pse_c") == variable_seed(1, "pse_c"));
  CHECK(variable_seed(1, "pse_c") != variable_seed(1, "pse_t"));
  CHECK(variable_seed(1, "pse_c") != variable_seed(2, "pse_c"));
}
