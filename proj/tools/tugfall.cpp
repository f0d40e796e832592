// tugfall command line: analyze, segment, synth, report.

#include "tugfall/ingest.hpp"
#include "tugfall/pipeline.hpp"
#include "tugfall/synth.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace tugfall;

namespace {

int run_analyze(const fs::path& config_path) {
  const PipelineConfig config = load_config(config_path);
  const RunResult result = run_pipeline(config);
  std::size_t excluded = 0;
  for (const auto& s : result.subjects) {
    if (!s.ok) {
      ++excluded;
      std::cerr << "  excluded " << s.subject_id << ": " << s.error << '\n';
    }
  }
  if (excluded > 0) std::cerr << excluded << " of " << result.subjects.size() << " subjects excluded\n";
  std::cout << "artifacts written to " << result.output_dir.string() << '\n';
  return result.exit_code;
}

int run_segment(const fs::path& config_path, const std::string& subject, bool plot_data) {
  PipelineConfig config = load_config(config_path);
  if (config.mode != Mode::raw_signals) throw ConfigError("segment needs a raw_signals config");
  validate_config(config);
  const auto rec = read_recording(config.dataset_root / "signals" / (subject + ".csv"), subject, config.sampling_rate_hz);
  const auto signal = preprocess(rec, config.filter);

  if (plot_data) {
    const ActivityTrace trace = activity_trace(signal, config.segmentation);
    const fs::path dir = config.output_dir / "segmentation";
    fs::create_directories(dir);
    const fs::path path = dir / (subject + "_trace.csv");
    std::ofstream out(path, std::ios::binary);
    out << "# config_hash=" << config_hash(config) << "\n";
    out << "# threshold=" << format_number(trace.threshold) << " window_samples=" << trace.window_samples << "\n";
    out << "t_s,magnitude,envelope,window_sum,active\n";
    for (Eigen::Index i = 0; i < signal.size(); ++i) {
      const Eigen::Index w = i / trace.window_samples;
      out << format_number(static_cast<double>(i) / signal.sampling_rate_hz) << ',' << format_number(signal.values[i])
          << ',' << format_number(trace.envelope[i]) << ',' << format_number(trace.window_sums[w]) << ','
          << (trace.active[static_cast<std::size_t>(w)] ? 1 : 0) << '\n';
    }
    std::cerr << "plot data written to " << path.string() << '\n';
  }

  try {
    const TrialSegmentation seg = segment_trials(signal, config.segmentation);
    std::cout << segmentation_json(subject, seg).dump(2) << '\n';
    return kExitOk;
  } catch (const SegmentationAmbiguous& e) {
    std::cerr << e.what() << '\n';
    for (const auto& c : e.candidates()) {
      std::cerr << "  candidate " << format_number(static_cast<double>(c.start) / signal.sampling_rate_hz) << " s - "
                << format_number(static_cast<double>(c.end) / signal.sampling_rate_hz) << " s\n";
    }
    return kExitPartial;
  }
}

int run_synth(const fs::path& spec_path, std::uint64_t seed, const fs::path& out_dir) {
  nlohmann::json j = nlohmann::json::object();
  if (!spec_path.empty()) {
    std::ifstream in(spec_path);
    if (!in) throw ConfigError("cannot open " + spec_path.string());
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(spec_path.string() + ": " + e.what());
    }
  }
  write_synthetic_corpus(parse_synth_spec(j), seed, out_dir);
  std::cout << "corpus written to " << out_dir.string() << '\n';
  return kExitOk;
}

int run_report(const fs::path& dir, const fs::path& out) {
  const std::string text = render_report(dir);
  const fs::path target = out.empty() ? dir / "report.md" : out;
  std::ofstream(target, std::ios::binary) << text;
  std::cout << "report written to " << target.string() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral TUG fall-risk analysis"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  fs::path config_path;
  auto* analyze = app.add_subcommand("analyze", "Run the configured pipeline");
  analyze->add_option("--config", config_path, "JSON configuration file")->required();

  std::string subject;
  bool plot_data = false;
  fs::path segment_config;
  auto* segment = app.add_subcommand("segment", "Segment one subject and print the boundaries");
  segment->add_option("--config", segment_config, "JSON configuration file")->required();
  segment->add_option("--subject", subject, "Subject id")->required();
  segment->add_flag("--plot-data", plot_data, "Write the activity trace CSV");

  fs::path spec_path;
  fs::path synth_out = "synthetic";
  std::uint64_t seed = 7;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth->add_option("--spec", spec_path, "JSON generator spec (defaults when omitted)");
  synth->add_option("--seed", seed, "Random seed");
  synth->add_option("--out", synth_out, "Output directory");

  fs::path from;
  fs::path report_out;
  auto* report = app.add_subcommand("report", "Render report.md from an artifact directory");
  report->add_option("--from", from, "Artifact directory")->required();
  report->add_option("--out", report_out, "Output path (default <from>/report.md)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*analyze) return run_analyze(config_path);
    if (*segment) return run_segment(segment_config, subject, plot_data);
    if (*synth) return run_synth(spec_path, seed, synth_out);
    if (*report) return run_report(from, report_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const IngestionError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitOk;
}
