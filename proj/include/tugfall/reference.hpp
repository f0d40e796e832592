#pragma once

// Reference cohort results (36 subjects, 18 fallers) for the variables the
// pipeline can reproduce from the reference feature dataset. Used by the report
// and the golden-number acceptance checks.

#include <array>
#include <optional>
#include <string_view>

namespace tugfall::reference {

struct Row {
  std::string_view variable;
  /// Mann-Whitney p-value, when a reference exists.
  std::optional<double> p_value;
  double auc;
  double sensitivity;
  double specificity;
  double f1;
  double prob_cutoff;
  double value_cutoff;
};

inline constexpr std::array<Row, 13> kRows{{
    {"tug_s", std::nullopt, 0.668, 0.64, 0.64, 0.64, 0.61, 8.73},
    {"tug_m_s", std::nullopt, 0.647, 0.64, 0.64, 0.64, 0.69, 8.90},
    {"tug_c_s", std::nullopt, 0.652, 0.58, 0.67, 0.58, 0.65, 11.31},
    {"tugs_avg", std::nullopt, 0.683, 0.70, 0.70, 0.70, 0.60, 10.17},
    {"pse_c", 0.014, 0.737, 0.78, 0.67, 0.74, 0.58, 11.26},
    {"wpsp2_c", 0.022, 0.742, 0.67, 0.67, 0.67, 0.31, 1.4508},
    {"wpsp3_c", 0.009, 0.717, 0.67, 0.67, 0.67, 0.32, 1.6554},
    {"feats_avg", 0.001, 0.744, 0.73, 0.78, 0.74, 0.51, 4.706},
    {"d_pse_s_c", 0.029, 0.711, 0.83, 0.61, 0.75, 0.73, 2.970},
    {"d_psp1_s_c", 0.014, 0.736, 0.67, 0.78, 0.71, 0.66, 0.237},
    {"d_pspf1_t_m", 0.049, 0.690, 0.67, 0.67, 0.67, 0.92, 11.0},
    {"d_wpsp1_m_c", 0.034, 0.705, 0.67, 0.61, 0.65, 0.18, 0.211},
    {"dists_avg", 0.001, 0.840, 0.83, 0.83, 0.83, 0.50, 0.5786},
}};

/// Bootstrap 95% interval of the distance-fusion AUC.
inline constexpr double kDistsAvgCiLow = 0.62;
inline constexpr double kDistsAvgCiHigh = 0.91;

/// Tolerances for golden-number comparisons.
inline constexpr double kPValueTolerance = 0.01;
inline constexpr double kAucTolerance = 0.02;
inline constexpr double kRateTolerance = 0.03;
inline constexpr double kCiBoundTolerance = 0.05;

/// Variables whose p-values are compared.
inline constexpr std::array<std::string_view, 5> kPValueVariables{"pse_c", "wpsp2_c", "wpsp3_c", "feats_avg",
                                                                   "dists_avg"};

inline const Row* find(std::string_view variable) {
  for (const auto& r : kRows) {
    if (r.variable == variable) return &r;
  }
  return nullptr;
}

}  // namespace tugfall::reference
