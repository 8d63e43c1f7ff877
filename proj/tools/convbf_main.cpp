// Copyright 2026 convbf authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Batch tool: enhance multichannel WAV recordings (WPE / MPDR / WPE+MPDR /
// WPD), generate synthetic test scenarios, and score enhanced files.

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>

#include "convbf/metrics.hpp"
#include "convbf/steering.hpp"
#include "convbf/stft.hpp"
#include "convbf/synth.hpp"
#include "convbf/wav.hpp"
#include "convbf/wpd.hpp"
#include "convbf/wpe.hpp"

namespace {

using convbf::Band;
using convbf::WpdConfig;
using json = nlohmann::ordered_json;

struct EnhanceOptions {
  std::string method = "wpd_wpe";
  std::string input_path;
  std::string output_path;
  std::string report_path;
  std::string reference_path;
  std::string config_path;
  int iterations = 3;
  int delay = 4;
  std::string bands_spec;
  double lead_s = 0.225;
  double trail_s = 0.075;
  double loading_rel = 1e-6;
  double sigma_floor_rel = 1e-3;
  int expected_rate = 16000;
  int threads = 0;
};

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("CONVBF_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 0;  // hardware concurrency
}

std::vector<Band> parse_bands(const std::string& spec) {
  // "low:high:taps,low:high:taps,..."
  std::vector<Band> bands;
  size_t pos = 0;
  while (pos < spec.size()) {
    const size_t end = spec.find(',', pos);
    const std::string item = spec.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    Band b;
    if (std::sscanf(item.c_str(), "%lf:%lf:%d", &b.low_hz, &b.high_hz, &b.filter_len) != 3)
      throw convbf::InvalidInput("bad band spec element: " + item);
    bands.push_back(b);
    if (end == std::string::npos) break;
    pos = end + 1;
  }
  if (bands.empty()) throw convbf::InvalidInput("empty band spec");
  return bands;
}

json bands_to_json(const std::vector<Band>& bands) {
  json out = json::array();
  for (const auto& b : bands) out.push_back({b.low_hz, b.high_hz, b.filter_len});
  return out;
}

std::vector<Band> bands_from_json(const json& value) {
  std::vector<Band> bands;
  for (const auto& item : value) {
    if (!item.is_array() || item.size() != 3)
      throw convbf::InvalidInput("config: each band must be [low_hz, high_hz, taps]");
    bands.push_back(Band{item[0].get<double>(), item[1].get<double>(),
                         item[2].get<int>()});
  }
  return bands;
}

// JSON config file; parse errors name the offending field. Explicit command
// line flags still win over file values.
void apply_config_file(const std::string& path, EnhanceOptions& opt) {
  std::ifstream in(path);
  if (!in) throw convbf::InvalidInput("config: cannot open " + path);
  json config;
  try {
    config = json::parse(in);
  } catch (const std::exception& e) {
    throw convbf::InvalidInput(std::string("config: malformed JSON: ") + e.what());
  }
  for (const auto& [key, value] : config.items()) {
    try {
      if (key == "method") {
        opt.method = value.get<std::string>();
      } else if (key == "iterations") {
        opt.iterations = value.get<int>();
      } else if (key == "delay") {
        opt.delay = value.get<int>();
      } else if (key == "bands") {
        json spec = json::array();
        opt.bands_spec.clear();
        for (const auto& b : bands_from_json(value)) {
          if (!opt.bands_spec.empty()) opt.bands_spec += ",";
          opt.bands_spec += std::to_string(b.low_hz) + ":" +
                            std::to_string(b.high_hz) + ":" +
                            std::to_string(b.filter_len);
        }
      } else if (key == "lead_s") {
        opt.lead_s = value.get<double>();
      } else if (key == "trail_s") {
        opt.trail_s = value.get<double>();
      } else if (key == "loading_rel") {
        opt.loading_rel = value.get<double>();
      } else if (key == "sigma_floor_rel") {
        opt.sigma_floor_rel = value.get<double>();
      } else if (key == "rate") {
        opt.expected_rate = value.get<int>();
      } else if (key == "threads") {
        opt.threads = value.get<int>();
      } else if (key == "reference") {
        opt.reference_path = value.get<std::string>();
      } else if (key == "report") {
        opt.report_path = value.get<std::string>();
      } else {
        throw convbf::InvalidInput("config: unknown field '" + key + "'");
      }
    } catch (const convbf::Error&) {
      throw;
    } catch (const std::exception&) {
      throw convbf::InvalidInput("config: bad value for field '" + key + "'");
    }
  }
}

int method_min_channels(const std::string& method) {
  return method == "wpe" ? 1 : 2;
}

int run_enhance(const EnhanceOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();

  const convbf::WavData wav = convbf::read_wav(opt.input_path);
  if (wav.sample_rate_hz != opt.expected_rate)
    throw convbf::InvalidInput(
        "sample rate mismatch: file has " + std::to_string(wav.sample_rate_hz) +
        " Hz, expected " + std::to_string(opt.expected_rate) +
        " (resampling not supported)");
  const int channels = static_cast<int>(wav.samples.cols());
  if (channels < method_min_channels(opt.method))
    throw convbf::InvalidInput(opt.method + " requires >=" +
                               std::to_string(method_min_channels(opt.method)) +
                               " channels");

  convbf::StftConfig stft;
  stft.sample_rate_hz = wav.sample_rate_hz;

  WpdConfig config;
  config.iterations = opt.iterations;
  config.delay = opt.delay;
  config.loading_rel = opt.loading_rel;
  config.sigma_floor_rel = opt.sigma_floor_rel;
  if (!opt.bands_spec.empty()) config.bands = parse_bands(opt.bands_spec);

  const int threads = resolve_threads(opt.threads);
  const convbf::MultichannelSpectrogram spec = convbf::analyze(wav.samples, stft);

  json per_iteration = json::array();
  Eigen::VectorXd enhanced;
  int underdetermined = 0;

  if (opt.method == "wpe") {
    std::vector<convbf::StackingLayout> layouts;
    layouts.reserve(static_cast<size_t>(spec.num_bins()));
    for (int f = 0; f < spec.num_bins(); ++f)
      layouts.push_back(config.layout_for_bin(f, stft, channels));
    const convbf::WpeRunResult wpe =
        convbf::run_wpe(spec, layouts, config.iterations, config.loading_rel,
                        config.sigma_floor_rel, threads);
    enhanced = convbf::synthesize(wpe.derev.channel(0), stft);
    for (int it = 0; it < wpe.objective.rows(); ++it)
      per_iteration.push_back({{"mean_objective", wpe.objective.row(it).mean()},
                               {"max_constraint_residual", 0.0}});
  } else {
    const convbf::NoiseMask mask = convbf::noise_mask_from_margins(
        spec.num_frames(), stft, opt.lead_s, opt.trail_s, wav.samples.rows());
    convbf::EnhancementResult result;
    if (opt.method == "mpdr") {
      result = convbf::run_mpdr(spec, config, mask, threads);
    } else if (opt.method == "wpe_mpdr") {
      result = convbf::run_cascade_wpe_mpdr(spec, config, mask, threads);
    } else if (opt.method == "wpd") {
      config.steering_mode = convbf::SteeringMode::FromInput;
      result = convbf::run_wpd(spec, config, mask, threads);
    } else if (opt.method == "wpd_wpe") {
      config.steering_mode = convbf::SteeringMode::FromWpePerIteration;
      result = convbf::run_wpd(spec, config, mask, threads);
    } else {
      throw convbf::InvalidInput("unknown method: " + opt.method);
    }
    enhanced = result.waveform;
    const auto& diag = result.diagnostics;
    for (int it = 0; it < diag.num_iterations(); ++it)
      per_iteration.push_back(
          {{"mean_objective", diag.mean_objective(it)},
           {"max_constraint_residual", diag.max_constraint_residual(it)}});
    for (char flag : diag.underdetermined) underdetermined += (flag != 0);
  }

  convbf::write_wav_float32(opt.output_path, enhanced, wav.sample_rate_hz);

  const auto t1 = std::chrono::steady_clock::now();
  const double runtime_ms =
      std::chrono::duration<double, std::milli>(t1 - t0).count();

  json report;
  report["schema_version"] = 1;
  report["method"] = opt.method;
  report["iterations"] = opt.iterations;
  report["input"] = {{"path", opt.input_path},
                     {"sample_rate", wav.sample_rate_hz},
                     {"channels", channels},
                     {"samples", wav.samples.rows()}};
  report["stft"] = {{"frame_len", stft.frame_len_samples},
                    {"shift", stft.shift_samples},
                    {"fft_len", stft.fft_len_samples},
                    {"window", "hann"}};
  report["wpd"] = {{"delay", config.delay},
                   {"bands", bands_to_json(config.bands)},
                   {"loading_rel", config.loading_rel},
                   {"sigma_floor_rel", config.sigma_floor_rel}};
  report["noise_margins"] = {{"lead_s", opt.lead_s}, {"trail_s", opt.trail_s}};
  report["frames"] = spec.num_frames();
  report["bins"] = spec.num_bins();
  report["per_iteration"] = per_iteration;
  report["underdetermined_bins"] = underdetermined;
  report["runtime_ms"] = runtime_ms;

  if (!opt.reference_path.empty()) {
    const convbf::WavData ref = convbf::read_wav(opt.reference_path);
    if (ref.sample_rate_hz != wav.sample_rate_hz)
      throw convbf::InvalidInput("reference sample rate mismatch");
    const convbf::MetricReport metrics = convbf::evaluate_metrics(
        ref.samples.col(0), enhanced, wav.sample_rate_hz);
    report["metrics"] = {{"cd_db", metrics.cd_db},
                         {"fwssnr_db", metrics.fwssnr_db},
                         {"frames_used", metrics.frames_used}};
  }

  std::string report_path = opt.report_path;
  if (report_path.empty()) {
    report_path = opt.output_path;
    if (report_path.size() > 4 && report_path.ends_with(".wav"))
      report_path.resize(report_path.size() - 4);
    report_path += ".report.json";
  }
  std::ofstream out(report_path);
  if (!out) throw convbf::InvalidInput("cannot write report: " + report_path);
  out << report.dump(2) << "\n";
  std::cout << "wrote " << opt.output_path << " and " << report_path << "\n";
  return 0;
}

int run_synth(const std::string& out_dir, const convbf::ScenarioParams& params) {
  const convbf::Scenario scn = convbf::make_scenario(params);
  convbf::write_wav_float32(out_dir + "/mix.wav", scn.mix, scn.sample_rate_hz);
  convbf::write_wav_float32(out_dir + "/desired.wav", scn.desired,
                            scn.sample_rate_hz);

  json sidecar;
  sidecar["schema_version"] = 1;
  sidecar["seed"] = params.seed;
  sidecar["mics"] = params.num_channels;
  sidecar["rt60_s"] = params.rt60_s;
  sidecar["snr_db"] = params.snr_db;
  sidecar["duration_s"] = params.duration_s;
  sidecar["lead_noise_s"] = params.lead_noise_s;
  sidecar["trail_noise_s"] = params.trail_noise_s;
  sidecar["sample_rate"] = params.sample_rate_hz;
  sidecar["early_boundary_samples"] = params.early_boundary_samples;

  std::ofstream out(out_dir + "/scenario.json");
  if (!out) throw convbf::InvalidInput("cannot write sidecar in " + out_dir);
  out << sidecar.dump(2) << "\n";
  std::cout << "wrote " << out_dir << "/mix.wav, desired.wav, scenario.json\n";
  return 0;
}

int run_eval(const std::string& reference_path, const std::string& processed_path,
             const std::string& report_path) {
  const convbf::WavData ref = convbf::read_wav(reference_path);
  const convbf::WavData proc = convbf::read_wav(processed_path);
  if (ref.sample_rate_hz != proc.sample_rate_hz)
    throw convbf::InvalidInput("sample rate mismatch between reference and processed");

  const convbf::MetricReport metrics = convbf::evaluate_metrics(
      ref.samples.col(0), proc.samples.col(0), ref.sample_rate_hz);

  std::cout << "CD (dB): " << metrics.cd_db << "\n";
  std::cout << "FWSSNR (dB): " << metrics.fwssnr_db << "\n";
  std::cout << "frames used: " << metrics.frames_used << "\n";

  if (!report_path.empty()) {
    json report;
    report["schema_version"] = 1;
    report["cd_db"] = metrics.cd_db;
    report["fwssnr_db"] = metrics.fwssnr_db;
    report["frames_used"] = metrics.frames_used;
    std::ofstream out(report_path);
    if (!out) throw convbf::InvalidInput("cannot write report: " + report_path);
    out << report.dump(2) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"convbf: convolutional beamforming for joint dereverberation and denoising"};
  app.require_subcommand(1);

  EnhanceOptions enh;
  CLI::App* enhance = app.add_subcommand("enhance", "Enhance a multichannel WAV file");
  enhance->add_option("--method", enh.method, "wpe | mpdr | wpe_mpdr | wpd | wpd_wpe")
      ->check(CLI::IsMember({"wpe", "mpdr", "wpe_mpdr", "wpd", "wpd_wpe"}));
  enhance->add_option("--iters", enh.iterations, "estimation iterations")->check(CLI::PositiveNumber);
  enhance->add_option("--delay", enh.delay, "prediction delay in frames")->check(CLI::PositiveNumber);
  enhance->add_option("--bands", enh.bands_spec, "band spec low:high:taps[,...] in Hz");
  enhance->add_option("--lead", enh.lead_s, "leading noise-only margin, seconds");
  enhance->add_option("--trail", enh.trail_s, "trailing noise-only margin, seconds");
  enhance->add_option("--loading", enh.loading_rel, "relative diagonal loading");
  enhance->add_option("--sigma-floor", enh.sigma_floor_rel, "relative power floor");
  enhance->add_option("--rate", enh.expected_rate, "expected sample rate, Hz");
  enhance->add_option("--threads", enh.threads, "worker threads (0 = all cores, env CONVBF_THREADS)");
  enhance->add_option("--reference", enh.reference_path, "clean reference WAV for metrics");
  enhance->add_option("--report", enh.report_path,
                      "JSON report path (default: <output>.report.json)");
  enhance->add_option("--config", enh.config_path,
                      "JSON config file (explicit flags still win)");
  enhance->add_option("input", enh.input_path, "input WAV")->required();
  enhance->add_option("output", enh.output_path, "enhanced output WAV")->required();

  convbf::ScenarioParams params;
  std::string out_dir = ".";
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic scenario");
  synth->add_option("--out-dir", out_dir, "output directory");
  synth->add_option("--seed", params.seed, "random seed");
  synth->add_option("--mics", params.num_channels, "number of channels")->check(CLI::PositiveNumber);
  synth->add_option("--rt60", params.rt60_s, "reverberation time, seconds")
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--snr", params.snr_db, "SNR over the speech region, dB");
  synth->add_option("--duration", params.duration_s, "length, seconds")->check(CLI::PositiveNumber);
  synth->add_option("--lead", params.lead_noise_s, "leading noise-only margin, seconds")
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--trail", params.trail_noise_s, "trailing noise-only margin, seconds")
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--rate", params.sample_rate_hz, "sample rate, Hz")->check(CLI::PositiveNumber);

  std::string eval_ref, eval_proc, eval_report;
  CLI::App* eval = app.add_subcommand("eval", "Score a processed WAV against a reference");
  eval->add_option("--reference", eval_ref, "reference WAV")->required();
  eval->add_option("processed", eval_proc, "processed WAV")->required();
  eval->add_option("--report", eval_report, "write the JSON report here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (enhance->parsed()) {
      if (!enh.config_path.empty()) {
        EnhanceOptions file = enh;
        apply_config_file(enh.config_path, file);
        if (!enhance->count("--method")) enh.method = file.method;
        if (!enhance->count("--iters")) enh.iterations = file.iterations;
        if (!enhance->count("--delay")) enh.delay = file.delay;
        if (!enhance->count("--bands")) enh.bands_spec = file.bands_spec;
        if (!enhance->count("--lead")) enh.lead_s = file.lead_s;
        if (!enhance->count("--trail")) enh.trail_s = file.trail_s;
        if (!enhance->count("--loading")) enh.loading_rel = file.loading_rel;
        if (!enhance->count("--sigma-floor")) enh.sigma_floor_rel = file.sigma_floor_rel;
        if (!enhance->count("--rate")) enh.expected_rate = file.expected_rate;
        if (!enhance->count("--threads")) enh.threads = file.threads;
        if (!enhance->count("--reference")) enh.reference_path = file.reference_path;
        if (!enhance->count("--report")) enh.report_path = file.report_path;
      }
      return run_enhance(enh);
    }
    if (synth->parsed()) return run_synth(out_dir, params);
    if (eval->parsed()) return run_eval(eval_ref, eval_proc, eval_report);
  } catch (const convbf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
