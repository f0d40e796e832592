#include "tugfall/pipeline.hpp"

#include "tugfall/ingest.hpp"
#include "tugfall/reference.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace tugfall {

namespace {

void require_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

fs::path resolve(const fs::path& base, const fs::path& p) { return (p.is_absolute() ? p : base / p).lexically_normal(); }

Mode parse_mode(const std::string& s) {
  if (s == "raw_signals") return Mode::raw_signals;
  if (s == "precomputed_features") return Mode::precomputed_features;
  throw ConfigError("mode must be raw_signals or precomputed_features");
}

std::string mode_name(Mode m) { return m == Mode::raw_signals ? "raw_signals" : "precomputed_features"; }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string safe_file_component(const std::string& name) {
  std::string out = name;
  for (char& c : out) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
    if (!ok) c = '_';
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestionError("cannot write " + path.string());
  out << text;
}

struct SubjectRow {
  std::string id;
  int faller;
  std::string gender;
};

std::vector<SubjectRow> read_subject_list(const fs::path& path) {
  const CohortTable t = read_cohort_table(path);
  if (t.rows() == 0) throw ValidationError(path.string() + " lists no subjects");
  std::vector<SubjectRow> rows;
  std::set<std::string> seen;
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (!seen.insert(t.subject_ids[k]).second) throw ValidationError("duplicate subject " + t.subject_ids[k]);
    rows.push_back({t.subject_ids[k], t.faller[k], t.has_gender() ? t.gender[k] : std::string()});
  }
  return rows;
}

std::vector<std::string> interpretation_notes(const PipelineConfig& c) {
  std::vector<std::string> notes{
      "fft: unnormalized forward DFT; power[k] = |X[k]|^2 for k = 0..floor(N/2), one-sided, bin width fs/N",
      std::string("fft: zero padding ") + (c.features.zero_pad ? "to the next power of two" : "disabled"),
      "pse: -sum S log(S + " + format_number(c.features.epsilon) + "), natural log, normalization " +
          std::string(to_string(c.features.pse_normalization)),
      "peaks: DC bin excluded; +/-" + std::to_string(c.features.peak_exclusion_bins) +
          " bins removed around each chosen peak",
      "features: 40 base features (10 per source x 4 sources s,t,m,c), not 32, plus 60 pairwise distances",
      "features: source s is the three trials concatenated in time order; samples outside trials are ignored",
      "distances: all six source pairs computed; (m,c) is outside the five enumerated comparisons",
      "segmentation: window sums of the rolling-median envelope compared with theta, mode " +
          std::string(to_string(c.segmentation.threshold_mode)) + ", scale " +
          format_number(c.segmentation.threshold_scale),
      "roc: polarity oriented so AUC >= 0.5; optimal cutoff minimizes |sensitivity - specificity|, ties by Youden J",
      "roc: prob_cutoff is the min-max position of value_cutoff within the observed range",
      "bootstrap: stratified percentile interval, " + std::to_string(c.stats.bootstrap_resamples) +
          " resamples, independent seed per variable",
  };
  for (const auto& f : c.stats.fusions) {
    std::string cols;
    for (const auto& col : f.columns) cols += (cols.empty() ? "" : ", ") + col;
    notes.push_back("fusion " + f.name + " = avg of min-max normalized (" + cols + ")");
  }
  return notes;
}

}  // namespace

PipelineConfig parse_config(const json& j, const fs::path& base_dir) {
  require_keys(j, {"dataset_root", "mode", "sampling_rate_hz", "filter", "segmentation", "features", "stats", "input",
                   "output_dir"},
               "config");
  PipelineConfig c;
  c.source = j;
  if (!j.contains("dataset_root")) throw ConfigError("config.dataset_root is required");
  if (!j.contains("output_dir")) throw ConfigError("config.output_dir is required");
  c.dataset_root = resolve(base_dir, get_or<std::string>(j, "dataset_root", "", "config"));
  c.output_dir = resolve(base_dir, get_or<std::string>(j, "output_dir", "", "config"));
  c.mode = parse_mode(get_or<std::string>(j, "mode", "raw_signals", "config"));
  c.sampling_rate_hz = get_or(j, "sampling_rate_hz", c.sampling_rate_hz, "config");

  if (j.contains("filter")) {
    const json& f = j.at("filter");
    require_keys(f, {"enabled", "cutoff_hz", "order"}, "config.filter");
    c.filter.enabled = get_or(f, "enabled", c.filter.enabled, "filter");
    c.filter.cutoff_hz = get_or(f, "cutoff_hz", c.filter.cutoff_hz, "filter");
    c.filter.order = get_or(f, "order", c.filter.order, "filter");
  }

  c.segmentation.median_window = default_median_window(c.sampling_rate_hz);
  if (j.contains("segmentation")) {
    const json& s = j.at("segmentation");
    require_keys(s, {"median_window", "window_s", "threshold_scale", "threshold_mode", "bridge_gap_windows",
                     "min_segment_s", "trial_order", "override_file"},
                 "config.segmentation");
    auto& p = c.segmentation;
    p.median_window = get_or(s, "median_window", p.median_window, "segmentation");
    p.window_s = get_or(s, "window_s", p.window_s, "segmentation");
    p.threshold_scale = get_or(s, "threshold_scale", p.threshold_scale, "segmentation");
    p.threshold_mode = parse_threshold_mode(get_or<std::string>(s, "threshold_mode", "deviation", "segmentation"));
    p.bridge_gap_windows = get_or(s, "bridge_gap_windows", p.bridge_gap_windows, "segmentation");
    p.min_segment_s = get_or(s, "min_segment_s", p.min_segment_s, "segmentation");
    if (s.contains("trial_order")) {
      const auto order = get_or<std::vector<std::string>>(s, "trial_order", {}, "segmentation");
      if (order.size() != 3) throw ConfigError("segmentation.trial_order must list three labels");
      for (std::size_t i = 0; i < 3; ++i) p.trial_order[i] = parse_trial_label(order[i]);
      std::set<TrialLabel> distinct(p.trial_order.begin(), p.trial_order.end());
      if (distinct.size() != 3) throw ConfigError("segmentation.trial_order labels must be distinct");
    }
    if (s.contains("override_file") && !s.at("override_file").is_null()) {
      c.override_file = resolve(base_dir, get_or<std::string>(s, "override_file", "", "segmentation"));
    }
  }

  if (j.contains("features")) {
    const json& f = j.at("features");
    require_keys(f, {"epsilon", "pse_normalization", "peak_exclusion_bins", "zero_pad"}, "config.features");
    c.features.epsilon = get_or(f, "epsilon", c.features.epsilon, "features");
    c.features.pse_normalization =
        parse_pse_normalization(get_or<std::string>(f, "pse_normalization", "unit_sum", "features"));
    c.features.peak_exclusion_bins = get_or(f, "peak_exclusion_bins", c.features.peak_exclusion_bins, "features");
    c.features.zero_pad = get_or(f, "zero_pad", c.features.zero_pad, "features");
  }

  if (j.contains("stats")) {
    const json& s = j.at("stats");
    require_keys(s, {"bootstrap_resamples", "seed", "alpha", "variables", "t_test_variables", "plot_variables",
                     "fusions"},
                 "config.stats");
    auto& o = c.stats;
    o.bootstrap_resamples = get_or(s, "bootstrap_resamples", o.bootstrap_resamples, "stats");
    o.seed = get_or(s, "seed", o.seed, "stats");
    o.alpha = get_or(s, "alpha", o.alpha, "stats");
    o.variables = get_or(s, "variables", o.variables, "stats");
    o.t_test_variables = get_or(s, "t_test_variables", o.t_test_variables, "stats");
    o.plot_variables = get_or(s, "plot_variables", o.plot_variables, "stats");
    if (s.contains("fusions")) {
      o.fusions.clear();
      for (const auto& f : s.at("fusions")) {
        require_keys(f, {"name", "columns"}, "config.stats.fusions[]");
        FusionSpec spec{get_or<std::string>(f, "name", "", "fusion"),
                        get_or<std::vector<std::string>>(f, "columns", {}, "fusion")};
        if (spec.name.empty() || spec.columns.empty()) throw ConfigError("each fusion needs a name and columns");
        o.fusions.push_back(std::move(spec));
      }
    }
  }

  if (j.contains("input")) {
    const json& in = j.at("input");
    require_keys(in, {"features_file", "id_column", "label_column", "gender_column", "column_mapping"}, "config.input");
    c.features_file = get_or(in, "features_file", c.features_file, "input");
    c.schema.id_column = get_or(in, "id_column", c.schema.id_column, "input");
    c.schema.label_column = get_or(in, "label_column", c.schema.label_column, "input");
    c.schema.gender_column = get_or(in, "gender_column", c.schema.gender_column, "input");
    c.schema.column_mapping = get_or(in, "column_mapping", c.schema.column_mapping, "input");
  }
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j, fs::absolute(path).parent_path());
}

json resolved_config(const PipelineConfig& c) {
  json fusions = json::array();
  for (const auto& f : c.stats.fusions) fusions.push_back({{"name", f.name}, {"columns", f.columns}});
  json order = json::array();
  for (auto l : c.segmentation.trial_order) order.push_back(std::string(to_string(l)));
  return {
      {"dataset_root", c.dataset_root.lexically_normal().string()},
      {"mode", mode_name(c.mode)},
      {"sampling_rate_hz", c.sampling_rate_hz},
      {"filter", {{"enabled", c.filter.enabled}, {"cutoff_hz", c.filter.cutoff_hz}, {"order", c.filter.order}}},
      {"segmentation",
       {{"median_window", c.segmentation.median_window},
        {"window_s", c.segmentation.window_s},
        {"threshold_scale", c.segmentation.threshold_scale},
        {"threshold_mode", std::string(to_string(c.segmentation.threshold_mode))},
        {"bridge_gap_windows", c.segmentation.bridge_gap_windows},
        {"min_segment_s", c.segmentation.min_segment_s},
        {"trial_order", order},
        {"override_file", c.override_file ? json(c.override_file->lexically_normal().string()) : json(nullptr)}}},
      {"features",
       {{"epsilon", c.features.epsilon},
        {"pse_normalization", std::string(to_string(c.features.pse_normalization))},
        {"peak_exclusion_bins", c.features.peak_exclusion_bins},
        {"zero_pad", c.features.zero_pad}}},
      {"stats",
       {{"bootstrap_resamples", c.stats.bootstrap_resamples},
        {"seed", c.stats.seed},
        {"alpha", c.stats.alpha},
        {"variables", c.stats.variables},
        {"t_test_variables", c.stats.t_test_variables},
        {"plot_variables", c.stats.plot_variables},
        {"fusions", fusions}}},
      {"input",
       {{"features_file", c.features_file},
        {"id_column", c.schema.id_column},
        {"label_column", c.schema.label_column},
        {"gender_column", c.schema.gender_column},
        {"column_mapping", c.schema.column_mapping}}},
  };
}

std::string config_hash(const PipelineConfig& config) { return hex64(fnv1a(resolved_config(config).dump())); }

void validate_config(const PipelineConfig& c) {
  if (!(c.sampling_rate_hz > 0)) throw ConfigError("sampling_rate_hz must be positive");
  if (c.stats.bootstrap_resamples < 1) throw ConfigError("stats.bootstrap_resamples must be >= 1");
  if (!(c.stats.alpha > 0 && c.stats.alpha < 1)) throw ConfigError("stats.alpha must be in (0, 1)");
  if (c.output_dir.empty()) throw ConfigError("output_dir is required");
  if (!fs::is_directory(c.dataset_root)) throw ValidationError("dataset_root " + c.dataset_root.string() + " is not a directory");

  if (c.mode == Mode::precomputed_features) {
    const fs::path table = resolve(c.dataset_root, c.features_file);
    if (!fs::is_regular_file(table)) throw ValidationError("feature table " + table.string() + " not found");
    const CohortTable t = read_cohort_table(table, c.schema);
    if (t.rows() == 0) throw ValidationError("feature table " + table.string() + " has no rows");
    return;
  }

  if (c.filter.enabled) butterworth_design(c.filter.cutoff_hz, c.sampling_rate_hz, c.filter.order);
  const auto& p = c.segmentation;
  if (p.median_window < 3 || p.median_window % 2 == 0) throw ConfigError("segmentation.median_window must be odd and >= 3");
  if (!(p.window_s > 0)) throw ConfigError("segmentation.window_s must be positive");
  if (p.bridge_gap_windows < 0) throw ConfigError("segmentation.bridge_gap_windows must be >= 0");
  if (c.features.peak_exclusion_bins < 0) throw ConfigError("features.peak_exclusion_bins must be >= 0");
  if (!(c.features.epsilon > 0)) throw ConfigError("features.epsilon must be positive");

  const fs::path subjects = c.dataset_root / "subjects.csv";
  if (!fs::is_regular_file(subjects)) throw ValidationError("dataset has no subjects.csv: " + subjects.string());
  for (const auto& row : read_subject_list(subjects)) {
    const fs::path signal = c.dataset_root / "signals" / (row.id + ".csv");
    if (!fs::is_regular_file(signal)) throw ValidationError("missing signal file " + signal.string());
  }
  if (c.override_file) {
    if (!fs::is_regular_file(*c.override_file)) throw ValidationError("override file " + c.override_file->string() + " not found");
    read_overrides(*c.override_file);
  }
}

MagnitudeSignal<double> preprocess(const RawRecording<double>& recording, const FilterConfig& filter) {
  MagnitudeSignal<double> signal = magnitude_fuse(recording);
  if (filter.enabled) signal = butterworth_lowpass(signal, filter.cutoff_hz, filter.order);
  return signal;
}

json segmentation_json(const std::string& subject_id, const TrialSegmentation& seg) {
  json segments = json::array();
  for (const auto& t : seg.segments) {
    segments.push_back({{"label", std::string(to_string(t.label))},
                        {"start_sample", t.range.start},
                        {"end_sample", t.range.end},
                        {"start_s", static_cast<double>(t.range.start) / seg.sampling_rate_hz},
                        {"end_s", static_cast<double>(t.range.end) / seg.sampling_rate_hz}});
  }
  return {{"subject_id", subject_id},
          {"source", std::string(to_string(seg.source))},
          {"sampling_rate_hz", seg.sampling_rate_hz},
          {"parameters",
           {{"median_window", seg.params.median_window},
            {"window_s", seg.params.window_s},
            {"threshold_scale", seg.params.threshold_scale},
            {"threshold_mode", std::string(to_string(seg.params.threshold_mode))},
            {"bridge_gap_windows", seg.params.bridge_gap_windows},
            {"min_segment_s", seg.params.min_segment_s}}},
          {"segments", segments}};
}

StatsReport analyze_table(CohortTable& table, const StatsOptions& options) {
  table.require_two_per_class();
  StatsReport report;

  for (const auto& fusion : options.fusions) {
    std::vector<Eigen::VectorXd> normalized;
    std::string missing;
    for (const auto& col : fusion.columns) {
      if (!table.has_column(col)) {
        missing = col;
        break;
      }
      normalized.push_back(minmax_normalize(table.column(col)));
    }
    if (!missing.empty()) {
      report.notes.push_back("fusion " + fusion.name + " not reproducible: column " + missing + " missing");
      continue;
    }
    table.add_column(fusion.name, fuse_average(normalized));
  }

  std::vector<std::string> variables = options.variables.empty() ? table.columns : options.variables;
  for (const auto& v : variables) {
    if (!table.has_column(v)) throw ValidationError("stats variable '" + v + "' is not a table column");
  }

  const std::vector<int>& labels = table.faller;
  for (const auto& v : variables) {
    const auto [pos, neg] = table.split(v);
    GroupComparison g = mann_whitney_u(pos, neg);
    g.variable = v;
    report.comparisons.push_back(g);
  }
  for (const auto& v : options.t_test_variables) {
    if (!table.has_column(v)) throw ValidationError("t-test variable '" + v + "' is not a table column");
    const auto [pos, neg] = table.split(v);
    GroupComparison g = welch_t_test(pos, neg);
    g.variable = v;
    report.comparisons.push_back(g);
  }
  if (table.has_gender()) {
    std::array<std::array<long, 2>, 2> counts{};
    for (std::size_t i = 0; i < table.gender.size(); ++i) {
      const std::string& g = table.gender[i];
      const char first = g.empty() ? '?' : static_cast<char>(std::tolower(static_cast<unsigned char>(g[0])));
      if (first != 'f' && first != 'm') continue;
      counts[table.faller[i] == 1 ? 0 : 1][first == 'f' ? 0 : 1] += 1;
    }
    try {
      GroupComparison g = fisher_exact(counts);
      g.variable = "gender_female";
      report.comparisons.push_back(g);
    } catch (const ValidationError& e) {
      report.notes.push_back(std::string("gender test skipped: ") + e.what());
    }
  }

  for (const auto& v : variables) {
    const Eigen::VectorXd values = table.column(v);
    RocResult roc = roc_curve(values, labels, v);
    roc.bootstrap_resamples = options.bootstrap_resamples;
    roc.bootstrap_seed = variable_seed(options.seed, v);
    roc.auc_ci_95 = bootstrap_auc_ci(values, labels, options.bootstrap_resamples, roc.bootstrap_seed);
    report.rocs.push_back(std::move(roc));
  }
  return report;
}

void write_stats_outputs(const fs::path& dir, const StatsReport& report, const CohortTable& table,
                         const StatsOptions& options, const std::string& hash) {
  const std::string header_comment = "# config_hash=" + hash + "\n";
  {
    std::ostringstream out;
    out << header_comment
        << "variable,test,method,n_faller,n_nonfaller,mean_faller,sd_faller,mean_nonfaller,sd_nonfaller,statistic,df,"
           "p_value,significant\n";
    for (const auto& g : report.comparisons) {
      out << g.variable << ',' << to_string(g.test) << ',' << (g.method ? to_string(*g.method) : "") << ','
          << g.n_faller << ',' << g.n_nonfaller << ',' << format_number(g.mean_faller) << ','
          << format_number(g.sd_faller) << ',' << format_number(g.mean_nonfaller) << ','
          << format_number(g.sd_nonfaller) << ',' << format_number(g.statistic) << ','
          << (g.degrees_of_freedom ? format_number(*g.degrees_of_freedom) : "") << ',' << format_number(g.p_value)
          << ',' << (g.p_value <= options.alpha ? 1 : 0) << '\n';
    }
    write_text(dir / "group_comparisons.csv", out.str());
  }
  {
    std::ostringstream out;
    out << header_comment
        << "variable,polarity,auc,auc_ci_low,auc_ci_high,tpr,one_minus_fpr,f1,prob_cutoff,value_cutoff,"
           "bootstrap_resamples,bootstrap_seed\n";
    for (const auto& r : report.rocs) {
      out << r.variable << ',' << to_string(r.polarity) << ',' << format_number(r.auc) << ','
          << format_number(r.auc_ci_95.first) << ',' << format_number(r.auc_ci_95.second) << ','
          << format_number(r.optimal.sensitivity) << ',' << format_number(r.optimal.specificity) << ','
          << format_number(r.optimal.f1) << ',' << format_number(r.optimal.prob_cutoff) << ','
          << format_number(r.optimal.value_cutoff) << ',' << r.bootstrap_resamples << ',' << r.bootstrap_seed << '\n';
    }
    write_text(dir / "roc_summary.csv", out.str());
  }

  std::vector<std::string> plot = options.plot_variables;
  if (plot.empty()) {
    for (const auto& f : options.fusions) plot.push_back(f.name);
    for (const auto& row : reference::kRows) plot.emplace_back(row.variable);
  }
  std::set<std::string> done;
  for (const auto& r : report.rocs) {
    if (std::find(plot.begin(), plot.end(), r.variable) == plot.end() || !done.insert(r.variable).second) continue;
    const std::string stem = safe_file_component(r.variable);
    std::ostringstream pts;
    pts << header_comment << "value_cutoff,fpr,tpr\n";
    for (const auto& p : r.points) {
      pts << format_number(p.value_cutoff) << ',' << format_number(p.fpr()) << ',' << format_number(p.tpr()) << '\n';
    }
    write_text(dir / ("roc_points_" + stem + ".csv"), pts.str());

    std::ostringstream ss;
    ss << header_comment << "value_cutoff,prob_cutoff,sensitivity,specificity,f1\n";
    for (const auto& p : r.points) {
      if (!std::isfinite(p.value_cutoff)) continue;
      ss << format_number(p.value_cutoff) << ',' << format_number(r.prob_of(p.value_cutoff)) << ','
         << format_number(p.sensitivity()) << ',' << format_number(p.specificity()) << ',' << format_number(p.f1())
         << '\n';
    }
    write_text(dir / ("sens_spec_" + stem + ".csv"), ss.str());
  }
  (void)table;
}

RunResult run_pipeline(const PipelineConfig& config) {
  validate_config(config);
  const std::string hash = config_hash(config);

  RunResult result;
  result.output_dir = config.output_dir;
  fs::create_directories(config.output_dir);

  json manifest = {{"tool", "tugfall"},
                   {"version", kToolVersion},
                   {"config_hash", hash},
                   {"mode", mode_name(config.mode)},
                   {"config", config.source},
                   {"resolved_config", resolved_config(config)}};
  std::vector<std::string> notes = interpretation_notes(config);

  fs::path table_path;
  if (config.mode == Mode::raw_signals) {
    const auto subjects = read_subject_list(config.dataset_root / "subjects.csv");
    const OverrideMap overrides = config.override_file ? read_overrides(*config.override_file) : OverrideMap{};
    fs::create_directories(config.output_dir / "segmentation");

    CohortTable table;
    table.columns = feature_column_names();
    const bool with_gender =
        std::any_of(subjects.begin(), subjects.end(), [](const SubjectRow& r) { return !r.gender.empty(); });
    std::vector<Eigen::VectorXd> rows;

    for (const auto& row : subjects) {
      SubjectOutcome outcome;
      outcome.subject_id = row.id;
      json seg_doc;
      try {
        const auto rec = read_recording(config.dataset_root / "signals" / (row.id + ".csv"), row.id, config.sampling_rate_hz);
        const auto signal = preprocess(rec, config.filter);
        TrialSegmentation seg;
        if (const auto it = overrides.find(row.id); it != overrides.end()) {
          seg = apply_override(signal, it->second, config.segmentation.trial_order);
        } else {
          seg = segment_trials(signal, config.segmentation);
        }
        outcome.segmentation_source = seg.source;
        seg_doc = segmentation_json(row.id, seg);
        const FeatureVector fv = build_feature_vector(signal, seg, config.features);
        Eigen::VectorXd values(static_cast<Eigen::Index>(table.columns.size()));
        Eigen::Index k = 0;
        for (const auto& [name, value] : fv.flatten()) values[k++] = value;
        rows.push_back(values);
        table.subject_ids.push_back(row.id);
        table.faller.push_back(row.faller);
        if (with_gender) table.gender.push_back(row.gender);
        outcome.ok = true;
      } catch (const SegmentationAmbiguous& e) {
        outcome.error = e.what();
        outcome.candidates = e.candidates();
      } catch (const std::exception& e) {
        outcome.error = e.what();
      }
      if (!outcome.ok) {
        json cands = json::array();
        for (const auto& c : outcome.candidates) {
          cands.push_back({{"start_sample", c.start},
                           {"end_sample", c.end},
                           {"start_s", static_cast<double>(c.start) / config.sampling_rate_hz},
                           {"end_s", static_cast<double>(c.end) / config.sampling_rate_hz}});
        }
        if (seg_doc.is_null()) seg_doc = {{"subject_id", row.id}, {"source", nullptr}, {"segments", json::array()}};
        seg_doc["error"] = outcome.error;
        seg_doc["candidates"] = cands;
        std::cerr << "subject " << row.id << " excluded: " << outcome.error << '\n';
      }
      seg_doc["config_hash"] = hash;
      write_text(config.output_dir / "segmentation" / (safe_file_component(row.id) + ".json"), seg_doc.dump(2) + "\n");
      result.subjects.push_back(std::move(outcome));
    }

    table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(table.columns.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) table.values.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    table_path = config.output_dir / "features.csv";
    write_cohort_table(table_path, table, {"config_hash=" + hash});
  } else {
    table_path = resolve(config.dataset_root, config.features_file);
  }

  // Stats read the table back from its serialized form.
  CohortTable table = read_cohort_table(table_path, config.mode == Mode::raw_signals ? TableSchema{} : config.schema);
  try {
    StatsReport report = analyze_table(table, config.stats);
    write_stats_outputs(config.output_dir, report, table, config.stats, hash);
    for (const auto& n : report.notes) notes.push_back(n);
    result.stats = std::move(report);
  } catch (const ValidationError& e) {
    if (config.mode == Mode::precomputed_features) throw;
    notes.push_back(std::string("stats skipped: ") + e.what());
    std::cerr << "stats skipped: " << e.what() << '\n';
  }

  json subjects = json::array();
  json excluded = json::array();
  for (const auto& s : result.subjects) {
    subjects.push_back({{"subject_id", s.subject_id},
                        {"status", s.ok ? "ok" : "excluded"},
                        {"segmentation_source",
                         s.segmentation_source ? json(std::string(to_string(*s.segmentation_source))) : json(nullptr)},
                        {"error", s.error}});
    if (!s.ok) excluded.push_back(s.subject_id);
  }
  manifest["subjects"] = subjects;
  manifest["excluded_subjects"] = excluded;
  manifest["feature_definition"] = {{"columns", feature_column_names().size()},
                                    {"base_features", 40},
                                    {"distance_features", 60},
                                    {"epsilon", config.features.epsilon},
                                    {"pse_normalization", std::string(to_string(config.features.pse_normalization))},
                                    {"peak_exclusion_bins", config.features.peak_exclusion_bins},
                                    {"zero_pad", config.features.zero_pad}};
  manifest["notes"] = notes;
  write_text(config.output_dir / "run_manifest.json", manifest.dump(2) + "\n");

  const bool partial = !excluded.empty() || (config.mode == Mode::raw_signals && !result.stats);
  result.exit_code = partial ? kExitPartial : kExitOk;
  return result;
}

// ---------------------------------------------------------------------------
// Report

namespace {

struct CsvDoc {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string get(std::size_t row, const std::string& col) const {
    const auto it = std::find(header.begin(), header.end(), col);
    if (it == header.end()) return {};
    return rows[row][static_cast<std::size_t>(it - header.begin())];
  }
  std::optional<std::size_t> find_row(const std::string& variable, const std::string& test = {}) const {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (get(i, "variable") == variable && (test.empty() || get(i, "test") == test)) return i;
    }
    return std::nullopt;
  }
};

CsvDoc read_csv_doc(const fs::path& path) {
  const auto lines = read_data_lines(path);
  CsvDoc doc;
  if (lines.empty()) return doc;
  doc.header = split_csv_line(lines[0]);
  for (std::size_t i = 1; i < lines.size(); ++i) doc.rows.push_back(split_csv_line(lines[i]));
  return doc;
}

std::string fixed(double v, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string render_report(const fs::path& dir) {
  if (!fs::is_regular_file(dir / "run_manifest.json")) throw ValidationError(dir.string() + " has no run_manifest.json");
  json manifest;
  std::ifstream(dir / "run_manifest.json") >> manifest;
  const CsvDoc groups = fs::exists(dir / "group_comparisons.csv") ? read_csv_doc(dir / "group_comparisons.csv") : CsvDoc{};
  const CsvDoc rocs = fs::exists(dir / "roc_summary.csv") ? read_csv_doc(dir / "roc_summary.csv") : CsvDoc{};
  const double alpha = manifest["resolved_config"]["stats"].value("alpha", 0.05);

  std::ostringstream out;
  out << "# tugfall report\n\n";
  out << "- config hash: `" << manifest.value("config_hash", "") << "`\n";
  out << "- mode: " << manifest.value("mode", "") << "\n";
  if (manifest.contains("excluded_subjects") && !manifest["excluded_subjects"].empty()) {
    out << "- excluded subjects: " << manifest["excluded_subjects"].dump() << "\n";
  }
  out << "\n## Conventions\n\n";
  for (const auto& n : manifest.value("notes", json::array())) out << "- " << n.get<std::string>() << "\n";

  out << "\n## Group comparisons with p <= " << format_number(alpha) << "\n\n";
  out << "| variable | test | mean faller | mean non-faller | p |\n|---|---|---:|---:|---:|\n";
  for (std::size_t i = 0; i < groups.rows.size(); ++i) {
    if (groups.get(i, "significant") != "1") continue;
    out << "| " << groups.get(i, "variable") << " | " << groups.get(i, "test") << " | "
        << groups.get(i, "mean_faller") << " +/- " << groups.get(i, "sd_faller") << " | "
        << groups.get(i, "mean_nonfaller") << " +/- " << groups.get(i, "sd_nonfaller") << " | "
        << groups.get(i, "p_value") << " |\n";
  }

  out << "\n## ROC summary\n\n";
  out << "| variable | AUC | 95% CI | TPR | 1-FPR | f1 | pr. cut-off | val. cut-off |\n"
         "|---|---:|---|---:|---:|---:|---:|---:|\n";
  for (std::size_t i = 0; i < rocs.rows.size(); ++i) {
    out << "| " << rocs.get(i, "variable") << " | " << rocs.get(i, "auc") << " | " << rocs.get(i, "auc_ci_low")
        << " - " << rocs.get(i, "auc_ci_high") << " | " << rocs.get(i, "tpr") << " | " << rocs.get(i, "one_minus_fpr")
        << " | " << rocs.get(i, "f1") << " | " << rocs.get(i, "prob_cutoff") << " | " << rocs.get(i, "value_cutoff")
        << " |\n";
  }

  out << "\n## Reference comparison\n\n";
  out << "| variable | metric | reference | this run | status |\n|---|---|---:|---:|---|\n";
  auto emit = [&](std::string_view var, const char* metric, double ref, std::optional<double> got, double tol) {
    out << "| " << var << " | " << metric << " | " << fixed(ref, 3) << " | ";
    if (!got) {
      out << "- | not reproducible |\n";
      return;
    }
    out << fixed(*got, 3) << " | " << (std::abs(*got - ref) <= tol ? "within" : "outside") << " +/-"
        << format_number(tol) << " |\n";
  };
  auto number = [](const std::string& s) -> std::optional<double> {
    if (s.empty()) return std::nullopt;
    return parse_number(s);
  };
  for (const auto& row : reference::kRows) {
    const std::string var(row.variable);
    const auto g = groups.find_row(var, "mann_whitney_u");
    const auto r = rocs.find_row(var);
    if (row.p_value) {
      emit(row.variable, "p", *row.p_value, g ? number(groups.get(*g, "p_value")) : std::nullopt,
           reference::kPValueTolerance);
    }
    emit(row.variable, "AUC", row.auc, r ? number(rocs.get(*r, "auc")) : std::nullopt, reference::kAucTolerance);
    emit(row.variable, "TPR", row.sensitivity, r ? number(rocs.get(*r, "tpr")) : std::nullopt, reference::kRateTolerance);
    emit(row.variable, "1-FPR", row.specificity, r ? number(rocs.get(*r, "one_minus_fpr")) : std::nullopt,
         reference::kRateTolerance);
    emit(row.variable, "f1", row.f1, r ? number(rocs.get(*r, "f1")) : std::nullopt, reference::kRateTolerance);
    if (row.variable == "dists_avg") {
      emit(row.variable, "CI low", reference::kDistsAvgCiLow, r ? number(rocs.get(*r, "auc_ci_low")) : std::nullopt,
           reference::kCiBoundTolerance);
      emit(row.variable, "CI high", reference::kDistsAvgCiHigh, r ? number(rocs.get(*r, "auc_ci_high")) : std::nullopt,
           reference::kCiBoundTolerance);
    }
  }
  return out.str();
}

}  // namespace tugfall
