// rppg: synthetic data, preprocessing, augmentation preview, estimation,
// evaluation and dataset statistics over file-based datasets.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>

#include "rppg/augment.hpp"
#include "rppg/core.hpp"
#include "rppg/io.hpp"
#include "rppg/pipeline.hpp"
#include "rppg/preprocess.hpp"
#include "rppg/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rppg;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

int exit_code(ErrorCode code) {
  return code == ErrorCode::Validation || code == ErrorCode::Schema ? kExitValidation : kExitRuntime;
}

std::vector<fs::path> list_manifests(const fs::path& dir) {
  require(fs::is_directory(dir), ErrorCode::Io, "dataset directory not found: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() > 14 && name.ends_with(".manifest.json")) {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Runs fn for every session id. A failure aborts with the session id in the
// message unless keep_going, in which case it is reported and skipped.
std::vector<std::string> for_each_session(const std::vector<std::string>& ids, int jobs,
                                          bool keep_going,
                                          const std::function<void(std::size_t)>& fn) {
  std::vector<std::optional<std::pair<ErrorCode, std::string>>> errors(ids.size());
  parallel_for(ids.size(), jobs, [&](std::size_t i) {
    try {
      fn(i);
    } catch (const Error& e) {
      errors[i] = {e.code(), e.what()};
    }
  });
  std::vector<std::string> failures;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!errors[i]) continue;
    const std::string msg = ids[i] + ": " + errors[i]->second;
    if (!keep_going) fail(errors[i]->first, msg);
    std::cerr << "warning: skipping " << msg << '\n';
    failures.push_back(msg);
  }
  return failures;
}

json read_json(const fs::path& path) {
  try {
    return json::parse(io::read_text(path));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Schema, path.string() + ": invalid JSON: " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) { io::write_text(path, j.dump(2) + "\n"); }

// Preprocessed dataset index.
struct PrepEntry {
  std::string session_id;
  std::string subject_id;
  fs::path video;
  fs::path gt;
  double fps = 0;
};

std::vector<PrepEntry> read_prep_index(const fs::path& dir) {
  const fs::path path = dir / "index.json";
  require(fs::exists(path), ErrorCode::Io, "no index.json in " + dir.string() + "; run preprocess first");
  const json j = read_json(path);
  require(j.contains("sessions") && j["sessions"].is_array(), ErrorCode::Schema,
          path.string() + ": missing 'sessions' array");
  std::vector<PrepEntry> out;
  try {
    for (const auto& s : j["sessions"]) {
      out.push_back({s.at("session_id").get<std::string>(), s.at("subject_id").get<std::string>(),
                     dir / s.at("video").get<std::string>(), dir / s.at("gt").get<std::string>(),
                     s.at("fps").get<double>()});
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::Schema, path.string() + ": malformed session entry: " + e.what());
  }
  return out;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      require(used == item.size(), ErrorCode::Validation, "bad number '" + item + "'");
    } catch (const std::logic_error&) {
      fail(ErrorCode::Validation, "bad number '" + item + "'");
    }
  }
  return out;
}

std::string session_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "synth_%03zu", i);
  return buf;
}

// ---------------------------------------------------------------- synth

struct SynthOptions {
  fs::path out;
  std::size_t sessions = 1;
  std::string hr = "72";
  std::string kind = "constant";
  double slope = 0;
  double depth = 0;
  double period = 20;
  double duration = 60;
  double fps = 30;
  Index size = 64;
  double pulse_amplitude = 0.01;
  double harmonic_ratio = 0.3;
  double noise = 0.01;
  double drift = 0.05;
  double gt_fs = 60;
  std::uint64_t seed = 0;
};

int cmd_synth(const SynthOptions& o, int jobs) {
  require(o.sessions >= 1, ErrorCode::Validation, "--sessions must be at least 1");
  std::vector<double> rates = parse_list(o.hr);
  require(rates.size() == 1 || rates.size() == o.sessions, ErrorCode::Validation,
          "--hr needs one value or one per session");
  rates.resize(o.sessions, rates.front());

  std::vector<SynthSpec> specs;
  for (std::size_t i = 0; i < o.sessions; ++i) {
    SynthSpec spec;
    if (o.kind == "constant") {
      spec.trajectory = HrTrajectory::constant(rates[i], o.duration);
    } else if (o.kind == "ramp") {
      spec.trajectory = HrTrajectory::linear_ramp(rates[i], o.slope, o.duration);
    } else if (o.kind == "sin") {
      spec.trajectory = HrTrajectory::sinusoidal(rates[i], o.depth, o.period, o.duration);
    } else {
      fail(ErrorCode::Validation, "unknown trajectory kind '" + o.kind + "' (constant, ramp, sin)");
    }
    spec.fps = o.fps;
    spec.size = o.size;
    spec.pulse_amplitude = o.pulse_amplitude;
    spec.harmonic_ratio = o.harmonic_ratio;
    spec.noise_sigma = o.noise;
    spec.illum_drift_amplitude = o.drift;
    spec.gt_fs = o.gt_fs;
    spec.seed = derive_stream_seed(o.seed, "synth/" + std::to_string(i));
    spec.session_id = session_name(i);
    spec.subject_id = spec.session_id;
    spec.validate();
    specs.push_back(std::move(spec));
  }
  std::vector<std::string> ids;
  for (const auto& s : specs) ids.push_back(s.session_id);
  for_each_session(ids, jobs, false, [&](std::size_t i) { write_session(o.out, synth_session(specs[i])); });
  std::cout << "wrote " << specs.size() << " sessions to " << o.out.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------- preprocess

struct PreprocessOptions {
  fs::path data;
  fs::path out;
  double fps = 30;
  CropSpec crop;
};

int cmd_preprocess(const PreprocessOptions& o, int jobs, bool keep_going) {
  o.crop.validate();
  require(o.fps > 0, ErrorCode::Validation, "--fps must be positive");
  const auto manifests = list_manifests(o.data);
  require(!manifests.empty(), ErrorCode::Validation, "no *.manifest.json files in " + o.data.string());

  std::vector<SessionManifest> loaded(manifests.size());
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < manifests.size(); ++i) ids.push_back(manifests[i].filename().string());
  std::vector<bool> ok(manifests.size(), false);
  const auto failures = for_each_session(ids, jobs, keep_going, [&](std::size_t i) {
    loaded[i] = load_manifest(manifests[i]);
    const Session session = load_session(loaded[i]);
    const VideoClip clip = preprocess_session(session.video, session.landmarks, o.crop, o.fps);
    const Waveform gt = resample_waveform(session.gt, o.fps);
    const std::string& id = loaded[i].session_id;
    io::write_tensor(o.out / (id + ".rppg"), clip);
    io::write_waveform_csv(o.out / (id + ".gt.csv"), gt);
    ok[i] = true;
  });

  json sessions = json::array();
  for (std::size_t i = 0; i < manifests.size(); ++i) {
    if (!ok[i]) continue;
    const std::string& id = loaded[i].session_id;
    sessions.push_back({{"session_id", id},
                        {"subject_id", loaded[i].subject_id},
                        {"video", id + ".rppg"},
                        {"gt", id + ".gt.csv"},
                        {"fps", o.fps}});
  }
  const json config = {{"command", "preprocess"},
                       {"fps", o.fps},
                       {"crop", {{"pad_top", o.crop.pad_top},
                                 {"pad_sides", o.crop.pad_sides},
                                 {"pad_bottom", o.crop.pad_bottom},
                                 {"out_size", o.crop.out_size}}}};
  write_json(o.out / "index.json", {{"config", config}, {"sessions", sessions}, {"failures", failures}});
  std::cout << "preprocessed " << sessions.size() << " sessions into " << o.out.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------- estimate

struct EstimateOptions {
  fs::path data;
  fs::path out;
  std::string method = "green";
  Index chunk_len = 136;
  Index stride = 68;
};

int cmd_estimate(const EstimateOptions& o, int jobs, bool keep_going) {
  const Estimator estimator = make_estimator(o.method, o.chunk_len, o.stride);
  const auto entries = read_prep_index(o.data);
  require(!entries.empty(), ErrorCode::Validation, "preprocessed dataset has no sessions");
  std::vector<std::string> ids;
  for (const auto& e : entries) ids.push_back(e.session_id);
  const auto failures = for_each_session(ids, jobs, keep_going, [&](std::size_t i) {
    const PredictionSet set = estimate_clip(estimator, io::read_tensor(entries[i].video));
    save_predictions(o.out / (entries[i].session_id + ".pred.json"), set);
  });
  write_json(o.out / "index.json", {{"config",
                                     {{"command", "estimate"},
                                      {"method", o.method},
                                      {"chunk_len", o.chunk_len},
                                      {"stride", o.stride}}},
                                    {"failures", failures}});
  std::cout << "estimated " << entries.size() - failures.size() << " sessions with " << o.method << '\n';
  return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateOptions {
  fs::path data;
  fs::path preds;
  fs::path out;
  std::string variant = "w10";
  double mask_unstable = std::numeric_limits<double>::infinity();
  double max_lag_s = 0;
  std::string me_mode = "signed";
  double bin_hz = 0.001;
  bool svg = true;
};

int cmd_evaluate(const EvaluateOptions& o, int jobs, bool keep_going) {
  EvalConfig cfg;
  cfg.variant = parse_variant(o.variant);
  cfg.unstable_threshold = o.mask_unstable;
  cfg.max_lag_s = o.max_lag_s;
  cfg.bin_hz = o.bin_hz;
  require(o.me_mode == "signed" || o.me_mode == "absolute", ErrorCode::Validation,
          "--me-mode must be signed or absolute");
  cfg.me_mode = o.me_mode == "signed" ? MeMode::Signed : MeMode::Absolute;
  require(o.max_lag_s >= 0, ErrorCode::Validation, "--max-lag must be non-negative");
  cfg.stft().validate(30.0);

  const auto entries = read_prep_index(o.data);
  require(!entries.empty(), ErrorCode::Validation, "evaluation dataset has no sessions");
  std::vector<std::string> ids;
  for (const auto& e : entries) ids.push_back(e.session_id);
  std::vector<std::optional<EvalInput>> inputs(entries.size());
  auto failures = for_each_session(ids, jobs, keep_going, [&](std::size_t i) {
    const PrepEntry& e = entries[i];
    const fs::path pred_path = o.preds / (e.session_id + ".pred.json");
    require(fs::exists(pred_path), ErrorCode::Io, "missing predictions " + pred_path.string());
    PredictionSet set = load_external_predictions(pred_path, e.session_id);
    for (const auto& w : set.warnings) std::cerr << "warning: " << w << '\n';
    inputs[i] = EvalInput{e.session_id, std::move(set), io::read_waveform_csv(e.gt, e.fps)};
  });
  std::vector<EvalInput> ready;
  for (auto& in : inputs) {
    if (in) ready.push_back(std::move(*in));
  }
  require(!ready.empty(), ErrorCode::Validation, "no sessions left to evaluate");
  DatasetEvaluation result = evaluate_dataset(ready, cfg, jobs, keep_going);
  for (const auto& f : result.failures) std::cerr << "warning: skipping " << f << '\n';
  failures.insert(failures.end(), result.failures.begin(), result.failures.end());

  json config = result.report.config;
  config["command"] = "evaluate";
  config["data"] = o.data.filename().string();
  const fs::path pred_index = o.preds / "index.json";
  if (fs::exists(pred_index)) config["estimate"] = read_json(pred_index).value("config", json::object());
  result.report.config = config;

  json report = to_json(result.report);
  report["failures"] = failures;
  write_json(o.out / "report.json", report);
  io::write_text(o.out / "report.csv", to_csv(result.report));
  if (o.svg) io::write_text(o.out / "report.svg", box_plot_svg(result.report));

  char line[160];
  std::snprintf(line, sizeof line, "%s: ME %.3f  MAE %.3f  RMSE %.3f  r %.3f  (%zu sessions)\n",
                o.variant.c_str(), result.report.me.mean, result.report.mae.mean,
                result.report.rmse.mean, result.report.r_wave.mean, result.report.sessions.size());
  std::cout << line;
  return 0;
}

// ---------------------------------------------------------------- augment

struct AugmentOptions {
  fs::path data;
  fs::path out;
  std::string session;
  Index clip_start = 0;
  std::uint64_t seed = 0;
  AugmentConfig cfg;
  bool no_speed = false;
  bool no_modulation = false;
};

int cmd_augment(AugmentOptions o) {
  o.cfg.use_speed = !o.no_speed;
  o.cfg.use_modulation = !o.no_modulation;
  o.cfg.modulation.clip_len = o.cfg.speed.clip_len;
  const auto entries = read_prep_index(o.data);
  const auto it = std::find_if(entries.begin(), entries.end(),
                               [&](const PrepEntry& e) { return e.session_id == o.session; });
  require(it != entries.end(), ErrorCode::Validation, "session '" + o.session + "' not in dataset");
  const VideoClip video = io::read_tensor(it->video);
  const Waveform gt = io::read_waveform_csv(it->gt, it->fps);
  RngState rng(o.seed);
  const AugmentedClip clip = augment_clip(video, gt, o.clip_start, o.cfg, rng);

  io::write_tensor(o.out / "clip.rppg", clip.video);
  io::write_waveform_csv(o.out / "wave.csv", clip.wave);
  json prov = to_json(clip.provenance, o.seed);
  prov["session_id"] = o.session;
  prov["realized_hr_start"] = clip.realized_hr_start;
  prov["realized_hr_end"] = clip.realized_hr_end;
  prov["config"] = {{"hr_min", o.cfg.speed.hr_min},
                    {"hr_max", o.cfg.speed.hr_max},
                    {"clip_len", o.cfg.speed.clip_len},
                    {"max_slope", o.cfg.modulation.max_slope},
                    {"speed", o.cfg.use_speed},
                    {"modulation", o.cfg.use_modulation},
                    {"spatial", o.cfg.use_spatial},
                    {"max_retries", o.cfg.max_retries}};
  write_json(o.out / "provenance.json", prov);
  char line[160];
  std::snprintf(line, sizeof line, "augmented %s @%td: %.2f -> %.2f..%.2f BPM (L=%td, f=%.4f)\n",
                o.session.c_str(), static_cast<std::ptrdiff_t>(o.clip_start),
                clip.provenance.source_hr, clip.realized_hr_start, clip.realized_hr_end,
                static_cast<std::ptrdiff_t>(clip.provenance.source_len), clip.provenance.factor);
  std::cout << line;
  return 0;
}

// ---------------------------------------------------------------- stats

struct StatsOptions {
  fs::path data;
  fs::path out;
  double sd_window_s = 60;
};

int cmd_stats(const StatsOptions& o, int jobs, bool keep_going) {
  std::vector<std::string> ids;
  std::vector<std::function<Waveform()>> loaders;
  if (fs::exists(o.data / "index.json")) {
    for (const auto& e : read_prep_index(o.data)) {
      ids.push_back(e.session_id);
      loaders.emplace_back([e] { return io::read_waveform_csv(e.gt, e.fps); });
    }
  } else {
    for (const auto& path : list_manifests(o.data)) {
      ids.push_back(path.filename().string());
      loaders.emplace_back([path] {
        const SessionManifest m = load_manifest(path);
        return io::read_waveform_csv(m.gt_waveform, m.gt_fs);
      });
    }
  }
  require(!ids.empty(), ErrorCode::Validation, "dataset has no sessions");
  std::vector<std::optional<LabeledWaveform>> waves(ids.size());
  for_each_session(ids, jobs, keep_going, [&](std::size_t i) {
    waves[i] = LabeledWaveform{ids[i], loaders[i]()};
  });
  std::vector<LabeledWaveform> ready;
  for (auto& w : waves) {
    if (w) ready.push_back(std::move(*w));
  }
  require(!ready.empty(), ErrorCode::Validation, "no sessions left for statistics");
  const DatasetStats stats = dataset_stats(ready, StftConfig::w10(), o.sd_window_s);

  auto mc = [](const MeanCi& m) { return json{{"mean", m.mean}, {"ci95", m.ci95}}; };
  json sessions = json::array();
  for (const auto& s : stats.sessions) {
    sessions.push_back({{"session_id", s.session_id},
                        {"duration_s", s.duration_s},
                        {"hr_mean", s.hr_mean},
                        {"hr_sd", s.hr_sd}});
  }
  const json out = {{"config", {{"command", "stats"}, {"sd_window_s", o.sd_window_s}, {"stft", "w10"}}},
                    {"sessions", sessions},
                    {"duration_s", mc(stats.duration_s)},
                    {"hr_mean", mc(stats.hr_mean)},
                    {"hr_sd", mc(stats.hr_sd)}};
  if (!o.out.empty()) write_json(o.out, out);
  char line[200];
  std::snprintf(line, sizeof line,
                "sessions %zu  duration %.1f +/- %.1f s  HR %.1f +/- %.1f BPM  HR SD %.2f +/- %.2f BPM\n",
                stats.sessions.size(), stats.duration_s.mean, stats.duration_s.ci95, stats.hr_mean.mean,
                stats.hr_mean.ci95, stats.hr_sd.mean, stats.hr_sd.ci95);
  std::cout << line;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rPPG pipeline toolkit"};
  app.require_subcommand(1);
  int jobs = 1;
  bool keep_going = false;
  app.add_option("--jobs,-j", jobs, "Parallel sessions")->check(CLI::Range(1, 256));
  app.add_flag("--keep-going", keep_going, "Skip failing sessions instead of stopping");

  SynthOptions so;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("--out", so.out)->required();
  synth->add_option("--sessions", so.sessions);
  synth->add_option("--hr", so.hr, "BPM, one value or a comma list per session");
  synth->add_option("--kind", so.kind, "constant, ramp or sin");
  synth->add_option("--slope", so.slope, "BPM/s for ramp");
  synth->add_option("--depth", so.depth, "BPM for sin");
  synth->add_option("--period", so.period, "Seconds for sin");
  synth->add_option("--duration", so.duration, "Seconds");
  synth->add_option("--fps", so.fps);
  synth->add_option("--size", so.size);
  synth->add_option("--pulse-amplitude", so.pulse_amplitude);
  synth->add_option("--harmonic-ratio", so.harmonic_ratio);
  synth->add_option("--noise", so.noise);
  synth->add_option("--drift", so.drift);
  synth->add_option("--gt-fs", so.gt_fs);
  synth->add_option("--seed", so.seed);

  PreprocessOptions po;
  auto* pre = app.add_subcommand("preprocess", "Crop, resize and frame-rate average a dataset");
  pre->add_option("--data", po.data)->required();
  pre->add_option("--out", po.out)->required();
  pre->add_option("--fps", po.fps, "Target frame rate");
  pre->add_option("--size", po.crop.out_size);
  pre->add_option("--pad-top", po.crop.pad_top);
  pre->add_option("--pad-sides", po.crop.pad_sides);
  pre->add_option("--pad-bottom", po.crop.pad_bottom);

  EstimateOptions eo;
  auto* est = app.add_subcommand("estimate", "Run a pulse estimator over a preprocessed dataset");
  est->add_option("--data", eo.data)->required();
  est->add_option("--out", eo.out)->required();
  est->add_option("--method", eo.method, "green, chrom or pos");
  est->add_option("--chunk", eo.chunk_len);
  est->add_option("--stride", eo.stride);

  EvaluateOptions vo;
  auto* eval = app.add_subcommand("evaluate", "Score predictions against ground truth");
  eval->add_option("--data", vo.data, "Preprocessed dataset")->required();
  eval->add_option("--preds", vo.preds, "Directory of <session>.pred.json")->required();
  eval->add_option("--out", vo.out)->required();
  eval->add_option("--variant", vo.variant, "w10, w30 or wfull");
  eval->add_option("--mask-unstable", vo.mask_unstable, "BPM/s threshold for GT masking");
  eval->add_option("--max-lag", vo.max_lag_s, "r_wave lag search in seconds");
  eval->add_option("--me-mode", vo.me_mode, "signed or absolute");
  eval->add_option("--bin-hz", vo.bin_hz);
  eval->add_flag("!--no-svg", vo.svg, "Skip the box plot");

  AugmentOptions ao;
  auto* aug = app.add_subcommand("augment", "Augment one clip and write it out for inspection");
  aug->add_option("--data", ao.data, "Preprocessed dataset")->required();
  aug->add_option("--session", ao.session)->required();
  aug->add_option("--out", ao.out)->required();
  aug->add_option("--clip-start", ao.clip_start);
  aug->add_option("--seed", ao.seed);
  aug->add_option("--hr-min", ao.cfg.speed.hr_min);
  aug->add_option("--hr-max", ao.cfg.speed.hr_max);
  aug->add_option("--clip-len", ao.cfg.speed.clip_len);
  aug->add_option("--max-slope", ao.cfg.modulation.max_slope);
  aug->add_flag("--no-speed", ao.no_speed);
  aug->add_flag("--no-modulation", ao.no_modulation);
  aug->add_flag("--spatial", ao.cfg.use_spatial);

  StatsOptions sto;
  auto* stats = app.add_subcommand("stats", "Duration and heart-rate summary of a dataset");
  stats->add_option("--data", sto.data, "Manifest directory or preprocessed dataset")->required();
  stats->add_option("--out", sto.out, "JSON output file");
  stats->add_option("--sd-window", sto.sd_window_s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }

  try {
    if (*synth) return cmd_synth(so, jobs);
    if (*pre) return cmd_preprocess(po, jobs, keep_going);
    if (*est) return cmd_estimate(eo, jobs, keep_going);
    if (*eval) return cmd_evaluate(vo, jobs, keep_going);
    if (*aug) return cmd_augment(ao);
    if (*stats) return cmd_stats(sto, jobs, keep_going);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
