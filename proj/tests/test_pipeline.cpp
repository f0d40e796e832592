#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "tugfall/ingest.hpp"
#include "tugfall/pipeline.hpp"
#include "tugfall/synth.hpp"

#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using namespace tugfall;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("tugfall_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string without_comments(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::string line, out;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') continue;
    out += line + "\n";
  }
  return out;
}

SynthSpec small_spec() {
  SynthSpec s;
  s.subjects = 8;
  return s;
}

json raw_config(const fs::path& data, const fs::path& out) {
  return {{"dataset_root", data.string()},
          {"mode", "raw_signals"},
          {"sampling_rate_hz", 200},
          {"output_dir", out.string()},
          {"stats", {{"bootstrap_resamples", 200}, {"t_test_variables", {"pse_c"}}}}};
}

}  // namespace

TEST_CASE("config parsing applies defaults and rejects unknown keys") {
  const auto c = parse_config({{"dataset_root", "d"}, {"output_dir", "o"}}, "/base");
  CHECK(c.dataset_root == fs::path("/base/d"));
  CHECK(c.mode == Mode::raw_signals);
  CHECK(c.filter.cutoff_hz == 99.0);
  CHECK(c.filter.order == 4);
  CHECK(c.segmentation.median_window == 51);
  CHECK(c.features.epsilon == 0.001);
  CHECK(c.stats.bootstrap_resamples == 2000);
  CHECK(c.stats.fusions.size() == 2);

  CHECK_THROWS_AS(parse_config({{"dataset_root", "d"}, {"output_dir", "o"}, {"bogus", 1}}, "/"), ConfigError);
  CHECK_THROWS_AS(parse_config({{"dataset_root", "d"}, {"output_dir", "o"}, {"filter", {{"cutof_hz", 5}}}}, "/"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config({{"output_dir", "o"}}, "/"), ConfigError);
  CHECK_THROWS_AS(parse_config({{"dataset_root", "d"}, {"output_dir", "o"}, {"mode", "x"}}, "/"), ConfigError);
  CHECK_THROWS_AS(parse_config({{"dataset_root", "d"}, {"output_dir", "o"}, {"sampling_rate_hz", "fast"}}, "/"),
                  ConfigError);
}

TEST_CASE("median window default follows the sampling rate") {
  const auto c = parse_config({{"dataset_root", "d"}, {"output_dir", "o"}, {"sampling_rate_hz", 100}}, "/");
  CHECK(c.segmentation.median_window == 25);
}

TEST_CASE("config hash is stable and sensitive to analysis settings") {
  const json base = {{"dataset_root", "d"}, {"output_dir", "o"}};
  const auto h = config_hash(parse_config(base, "/x"));
  CHECK(h.size() == 16);
  CHECK(h == config_hash(parse_config(base, "/x")));
  json other = base;
  other["stats"] = {{"seed", 5}};
  CHECK(h != config_hash(parse_config(other, "/x")));
}

TEST_CASE("empty dataset is a validation error and writes nothing") {
  TempDir tmp("empty");
  fs::create_directories(tmp.path / "data");
  const auto c = parse_config(raw_config(tmp.path / "data", tmp.path / "out"), "/");
  CHECK_THROWS_AS(run_pipeline(c), ValidationError);
  CHECK_FALSE(fs::exists(tmp.path / "out"));

  auto pre = raw_config(tmp.path / "data", tmp.path / "out");
  pre["mode"] = "precomputed_features";
  CHECK_THROWS_AS(run_pipeline(parse_config(pre, "/")), ValidationError);
  CHECK_FALSE(fs::exists(tmp.path / "out"));
}

TEST_CASE("invalid filter cutoff is a configuration error before any output") {
  TempDir tmp("cutoff");
  write_synthetic_corpus(small_spec(), 1, tmp.path / "data");
  auto j = raw_config(tmp.path / "data", tmp.path / "out");
  j["filter"] = {{"cutoff_hz", 100}};
  CHECK_THROWS_AS(run_pipeline(parse_config(j, "/")), ConfigError);
  CHECK_FALSE(fs::exists(tmp.path / "out"));
}

TEST_CASE("raw run segments every synthetic subject and writes all artifacts") {
  TempDir tmp("raw");
  write_synthetic_corpus(small_spec(), 3, tmp.path / "data");
  const auto c = parse_config(raw_config(tmp.path / "data", tmp.path / "out"), "/");
  const auto result = run_pipeline(c);
  CHECK(result.exit_code == kExitOk);
  REQUIRE(result.subjects.size() == 8);
  for (const auto& s : result.subjects) CHECK(s.ok);

  const fs::path out = tmp.path / "out";
  const std::string hash = config_hash(c);
  for (const char* f : {"features.csv", "group_comparisons.csv", "roc_summary.csv", "roc_points_dists_avg.csv",
                        "sens_spec_dists_avg.csv", "roc_points_pse_c.csv"}) {
    INFO(f);
    REQUIRE(fs::exists(out / f));
    CHECK(slurp(out / f).rfind("# config_hash=" + hash + "\n", 0) == 0);
  }
  const json seg = json::parse(slurp(out / "segmentation" / "S001.json"));
  CHECK(seg["config_hash"] == hash);
  CHECK(seg["segments"].size() == 3);
  CHECK(seg["source"] == "automatic");

  const json manifest = json::parse(slurp(out / "run_manifest.json"));
  CHECK(manifest["config_hash"] == hash);
  CHECK(manifest["config"]["mode"] == "raw_signals");
  CHECK(manifest["subjects"].size() == 8);
  CHECK(manifest["feature_definition"]["base_features"] == 40);
  CHECK(!manifest["notes"].empty());

  const CohortTable table = read_cohort_table(out / "features.csv");
  CHECK(table.rows() == 8);
  CHECK(table.columns.size() == 100);
  CHECK(table.has_gender());

  // fallers and non-fallers differ in their fundamental by construction
  const auto [f, n] = table.split("pspf1_s");
  CHECK(f.minCoeff() > n.maxCoeff());
}

TEST_CASE("runs are byte-identical and the precomputed path reproduces the raw stats") {
  TempDir tmp("det");
  write_synthetic_corpus(small_spec(), 4, tmp.path / "data");
  const auto c = parse_config(raw_config(tmp.path / "data", tmp.path / "out"), "/");
  run_pipeline(c);
  std::map<std::string, std::string> first;
  for (const auto& e : fs::recursive_directory_iterator(tmp.path / "out")) {
    if (e.is_regular_file()) first[fs::relative(e.path(), tmp.path / "out").string()] = slurp(e.path());
  }
  run_pipeline(c);
  std::size_t compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(tmp.path / "out")) {
    if (!e.is_regular_file()) continue;
    const auto key = fs::relative(e.path(), tmp.path / "out").string();
    INFO(key);
    REQUIRE(first.count(key));
    CHECK(first[key] == slurp(e.path()));
    ++compared;
  }
  CHECK(compared == first.size());

  auto pre = raw_config(tmp.path / "out", tmp.path / "out2");
  pre["mode"] = "precomputed_features";
  const auto r = run_pipeline(parse_config(pre, "/"));
  CHECK(r.exit_code == kExitOk);
  for (const auto& e : fs::directory_iterator(tmp.path / "out")) {
    const auto name = e.path().filename().string();
    if (name.rfind("roc_", 0) != 0 && name.rfind("sens_spec_", 0) != 0 && name != "group_comparisons.csv") continue;
    INFO(name);
    REQUIRE(fs::exists(tmp.path / "out2" / name));
    CHECK(without_comments(e.path()) == without_comments(tmp.path / "out2" / name));
  }
}

TEST_CASE("a subject with four bursts is excluded, reported, and fixed by an override") {
  TempDir tmp("partial");
  const fs::path data = tmp.path / "data";
  write_synthetic_corpus(small_spec(), 5, data);

  SynthSpec extra = small_spec();
  extra.extra_bursts = 1;
  std::mt19937_64 rng(1);
  const auto odd = generate_subject(extra, extra.faller_tones, 1, "S002", rng);
  write_recording(data / "signals" / "S002.csv", odd.recording);

  const auto c = parse_config(raw_config(data, tmp.path / "out"), "/");
  const auto result = run_pipeline(c);
  CHECK(result.exit_code == kExitPartial);
  std::size_t failed = 0;
  for (const auto& s : result.subjects) {
    if (s.ok) continue;
    ++failed;
    CHECK(s.subject_id == "S002");
    CHECK(s.candidates.size() == 4);
  }
  CHECK(failed == 1);
  const json seg = json::parse(slurp(tmp.path / "out" / "segmentation" / "S002.json"));
  CHECK(seg["candidates"].size() == 4);
  const json manifest = json::parse(slurp(tmp.path / "out" / "run_manifest.json"));
  CHECK(manifest["excluded_subjects"] == json::array({"S002"}));
  CHECK(read_cohort_table(tmp.path / "out" / "features.csv").rows() == 7);

  const double fs = odd.recording.sampling_rate_hz;
  std::ofstream ov(tmp.path / "overrides.csv");
  ov << "subject_id,start1_s,end1_s,start2_s,end2_s,start3_s,end3_s\nS002";
  for (int i = 0; i < 3; ++i) {
    ov << ',' << format_number(static_cast<double>(odd.truth.bursts[static_cast<std::size_t>(i)].start) / fs) << ','
       << format_number(static_cast<double>(odd.truth.bursts[static_cast<std::size_t>(i)].end) / fs);
  }
  ov << '\n';
  ov.close();
  auto j = raw_config(data, tmp.path / "out_fixed");
  j["segmentation"] = {{"override_file", (tmp.path / "overrides.csv").string()}};
  const auto fixed = run_pipeline(parse_config(j, "/"));
  CHECK(fixed.exit_code == kExitOk);
  const json fixed_seg = json::parse(slurp(tmp.path / "out_fixed" / "segmentation" / "S002.json"));
  CHECK(fixed_seg["source"] == "manual_override");
}

TEST_CASE("precomputed mode maps external column names") {
  TempDir tmp("mapping");
  std::ofstream t(tmp.path / "cohort_table.csv");
  t << "ID,Faller,Sex,PSE_c,Other\n";
  const char* rows[] = {"A,1,F,3.0,1", "B,1,M,4.0,2", "C,1,F,5.0,1", "D,0,M,1.0,3", "E,0,F,2.0,2", "F,0,M,2.5,1"};
  for (const char* r : rows) t << r << '\n';
  t.close();
  const json j = {{"dataset_root", tmp.path.string()},
                  {"mode", "precomputed_features"},
                  {"output_dir", (tmp.path / "out").string()},
                  {"input",
                   {{"features_file", "cohort_table.csv"},
                    {"id_column", "ID"},
                    {"label_column", "Faller"},
                    {"gender_column", "Sex"},
                    {"column_mapping", {{"PSE_c", "pse_c"}}}}},
                  {"stats", {{"bootstrap_resamples", 100}, {"variables", {"pse_c"}}}}};
  const auto r = run_pipeline(parse_config(j, "/"));
  CHECK(r.exit_code == kExitOk);
  REQUIRE(r.stats.has_value());
  CHECK(r.stats->rocs.size() == 1);
  CHECK(r.stats->rocs[0].auc == 1.0);
  bool fisher = false;
  for (const auto& g : r.stats->comparisons) fisher |= g.test == TestKind::fisher_exact;
  CHECK(fisher);
  // fusions whose columns are absent are reported, not fatal
  CHECK(r.stats->notes.size() == 2);

  const std::string report = render_report(tmp.path / "out");
  CHECK(report.find("pse_c") != std::string::npos);
  CHECK(report.find("not reproducible") != std::string::npos);
}

TEST_CASE("missing stats variable is a validation error") {
  TempDir tmp("missingvar");
  std::ofstream t(tmp.path / "features.csv");
  t << "subject_id,faller,x\nA,1,1\nB,1,2\nC,0,3\nD,0,4\n";
  t.close();
  const json j = {{"dataset_root", tmp.path.string()},
                  {"mode", "precomputed_features"},
                  {"output_dir", (tmp.path / "out").string()},
                  {"stats", {{"variables", {"y"}}}}};
  CHECK_THROWS_AS(run_pipeline(parse_config(j, "/")), ValidationError);
}

TEST_CASE("numbers are written with nine significant digits") {
  CHECK(format_number(0.1234567891234) == "0.123456789");
  CHECK(format_number(123456789012.0) == "1.23456789e+11");
  CHECK(format_number(2.0) == "2");
  CHECK(parse_number(format_number(1.0 / 3.0)) == 0.333333333);
}

TEST_CASE("synthetic corpora are deterministic under a seed") {
  TempDir tmp("synth");
  write_synthetic_corpus(small_spec(), 7, tmp.path / "a");
  write_synthetic_corpus(small_spec(), 7, tmp.path / "b");
  write_synthetic_corpus(small_spec(), 8, tmp.path / "c");
  for (const char* f : {"subjects.csv", "ground_truth.json", "signals/S001.csv", "signals/S008.csv"}) {
    CHECK(slurp(tmp.path / "a" / f) == slurp(tmp.path / "b" / f));
  }
  CHECK(slurp(tmp.path / "a" / "signals/S001.csv") != slurp(tmp.path / "c" / "signals/S001.csv"));

  SynthSpec bad = small_spec();
  bad.burst_min_s = -1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("command line exit codes") {
  TempDir tmp("cli");
  const std::string tool = TUGFALL_TOOL;
  auto run = [&](const std::string& args) {
    const int status = std::system((tool + " " + args + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(status);
  };
  CHECK(run("synth --seed 3 --out " + (tmp.path / "data").string()) == 0);
  std::ofstream(tmp.path / "cfg.json") << raw_config("data", "out").dump();
  CHECK(run("analyze --config " + (tmp.path / "cfg.json").string()) == kExitOk);
  CHECK(fs::exists(tmp.path / "out" / "roc_summary.csv"));
  CHECK(run("report --from " + (tmp.path / "out").string()) == kExitOk);
  CHECK(slurp(tmp.path / "out" / "report.md").find("dists_avg") != std::string::npos);
  CHECK(run("segment --config " + (tmp.path / "cfg.json").string() + " --subject S001 --plot-data") == kExitOk);
  CHECK(fs::exists(tmp.path / "out" / "segmentation" / "S001_trace.csv"));

  fs::create_directories(tmp.path / "empty");
  std::ofstream(tmp.path / "bad.json") << json{{"dataset_root", "empty"}, {"output_dir", "o"}}.dump();
  CHECK(run("analyze --config " + (tmp.path / "bad.json").string()) == kExitValidation);
  CHECK(run("analyze --config " + (tmp.path / "nope.json").string()) == kExitValidation);
  CHECK(run("frobnicate") == kExitValidation);
}
