#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "slamp/cli/config.hpp"
#include "slamp/data/container.hpp"
#include "slamp/data/glyphs.hpp"
#include "slamp/io/hash.hpp"
#include "slamp/io/plot.hpp"
#include "slamp/io/report.hpp"
#include "slamp/io/visualize.hpp"
#include "slamp/train/checkpoint.hpp"

#ifndef SLAMP_CODE_HASH
#define SLAMP_CODE_HASH "unknown"
#endif

namespace slamp::cli {

namespace fs = std::filesystem;

/// Process exit codes. These are part of the interface; do not renumber.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,        // unexpected internal error
  kConfigError = 2,    // invalid config, flag or variant
  kWriteError = 3,     // output path not writable
  kNonFinite = 4,      // training diverged; a diagnostic snapshot was written
  kCheckpointError = 5,  // checkpoint unreadable or incompatible with the config/data
  kMissingInput = 6,   // dataset or checkpoint not found
};

struct Options {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string variant;
  std::string out;
  std::string data;
  std::string checkpoint;
  bool resume = false;
  std::optional<int> n_samples;
  std::optional<int> videos;
  bool dry_run = false;
  std::vector<std::string> argv;
};

struct Streams {
  std::ostream& out;  // machine-readable: paths, one per line
  std::ostream& err;  // human-readable progress and errors
};

/// Error carrying the exit code it maps to.
struct CommandError : std::runtime_error {
  CommandError(ExitCode c, const std::string& what) : std::runtime_error(what), code(c) {}
  ExitCode code;
};

namespace detail {

inline void apply_overrides(RunConfig& c, const Options& o) {
  if (!o.variant.empty()) c.model.variant = variant_from_string(o.variant);
  if (o.n_samples) c.eval.num_samples = *o.n_samples;
  c.validate();
}

/// Config from --config, else --preset, else `fallback`, else the desk preset.
inline RunConfig resolve(const Options& o, const nlohmann::json* fallback = nullptr) {
  RunConfig c;
  if (!o.config.empty()) {
    if (!o.preset.empty()) throw ConfigError("--config and --preset are mutually exclusive");
    c = load_config(o.config);
  } else if (!o.preset.empty()) {
    c = resolve_config({{"preset", o.preset}});
  } else if (fallback) {
    c = resolve_config(*fallback);
  } else {
    c = preset("smmnist-desk");
  }
  apply_overrides(c, o);
  return c;
}

/// Creates `dir` and proves it is writable.
inline void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw WriteError("cannot create " + dir.string() + ": " + ec.message());
  const fs::path probe = dir / ".write_probe";
  {
    std::ofstream p(probe);
    if (!p) throw WriteError("cannot write into " + dir.string());
  }
  fs::remove(probe, ec);
}

inline void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw WriteError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw WriteError("write failed: " + path.string());
}

inline std::string file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CommandError(kMissingInput, "cannot read " + path.string());
  Fnv1a h;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h.update(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())));
  }
  return h.hex();
}

/// Content hash of every file under `dir` except manifests, in path order.
inline std::string tree_hash(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  Fnv1a h;
  for (const auto& f : files) {
    h.update(fs::relative(f, dir).generic_string());
    h.update(file_hash(f));
  }
  return h.hex();
}

inline RunManifest begin_manifest(const std::string& command, const RunConfig& c, std::uint64_t seed, const Options& o) {
  RunManifest m;
  m.command = command;
  m.config = c;
  m.seed = seed;
  m.code_hash = SLAMP_CODE_HASH;
  m.started = utc_timestamp();
  m.argv = o.argv;
  return m;
}

inline void finish_manifest(const fs::path& dir, RunManifest& m) {
  m.finished = utc_timestamp();
  write_json(dir / "manifest.json", m.to_json());
}

inline fs::path data_dir(const Options& o, const RunConfig& c) {
  return o.data.empty() ? default_data_dir(c) : fs::path(o.data);
}

inline std::shared_ptr<DiskSource> open_split(const fs::path& data, const std::string& split, const RunConfig& c) {
  const fs::path dir = data / split;
  if (!fs::exists(dir / "header.json"))
    throw CommandError(kMissingInput, "no dataset split at " + dir.string() + " (run make-data first)");
  auto src = std::make_shared<DiskSource>(dir);
  const auto& h = src->header();
  if (h.height != c.model.image_size || h.width != c.model.image_size || h.channels != c.model.channels)
    throw CommandError(kCheckpointError, "dataset " + dir.string() + " holds " + std::to_string(h.height) + "x" +
                                             std::to_string(h.width) + " clips, model expects " +
                                             std::to_string(c.model.image_size));
  return src;
}

inline std::vector<Video> leading_clips(const VideoSource& src, int count) {
  const std::size_t n = count > 0 ? std::min(src.size(), static_cast<std::size_t>(count)) : src.size();
  std::vector<Video> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(src.get(i));
  return out;
}

inline Checkpoint read_checkpoint(const fs::path& path) {
  if (!fs::exists(path)) throw CommandError(kMissingInput, "no checkpoint at " + path.string());
  try {
    return load_checkpoint(path.string());
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

inline nlohmann::json best_json(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

/// Trained model plus the config it was trained with.
struct LoadedModel {
  RunConfig config;
  std::unique_ptr<VideoModel<float>> model;
  fs::path checkpoint;
  std::string checkpoint_hash;
};

inline LoadedModel load_model(const Options& o) {
  if (o.checkpoint.empty()) throw ConfigError("--checkpoint is required");
  LoadedModel m;
  m.checkpoint = o.checkpoint;
  const Checkpoint ck = read_checkpoint(m.checkpoint);
  const nlohmann::json* stored = ck.extra.contains("run_config") ? &ck.extra.at("run_config") : nullptr;
  m.config = resolve(o, stored);
  m.model = std::make_unique<VideoModel<float>>(m.config.model, 0);
  restore_checkpoint(ck, *m.model);
  m.checkpoint_hash = file_hash(m.checkpoint);
  return m;
}

inline void save_png(const fs::path& dir, const std::string& rel, const Image8& img, RunManifest& m) {
  const fs::path p = dir / rel;
  std::error_code ec;
  fs::create_directories(p.parent_path(), ec);
  if (ec) throw WriteError("cannot create " + p.parent_path().string());
  write_png(p.string(), img);
  m.artifacts.push_back(rel);
}

}  // namespace detail

/// The clips make-data writes, generated on demand.
inline DatasetSplits generated_splits(const RunConfig& c) {
  auto digits = std::make_shared<const ImageSet>(procedural_digits(c.data.glyph_count, c.data.glyph_seed));
  auto src = std::make_shared<GeneratedSource>(c.data.generator, digits, c.data.seed,
                                               static_cast<std::size_t>(c.data.num_clips));
  return dataset_split(src, c.data.split, derive_seed(c.data.seed, 0x73706c));
}

/// Seed of the initial weights.
inline std::uint64_t model_seed(const RunConfig& c) { return derive_seed(c.train.seed, 0x6d6f64); }

/// Generates the dataset and writes its train/val/test splits.
inline int cmd_make_data(const Options& o, const Streams& io) {
  RunConfig c = detail::resolve(o);
  if (o.seed) c.data.seed = *o.seed;
  const fs::path out = o.out.empty() ? default_data_dir(c) : fs::path(o.out);
  detail::prepare_dir(out);
  auto m = detail::begin_manifest("make-data", c, c.data.seed, o);
  const auto splits = generated_splits(c);
  const ClipEncoding enc = c.data.encoding == "png" ? ClipEncoding::png : ClipEncoding::f32;
  const std::pair<const char*, const SplitView*> parts[] = {
      {"train", &splits.train}, {"val", &splits.val}, {"test", &splits.test}};
  nlohmann::json counts;
  for (const auto& [name, view] : parts) {
    std::vector<Video> clips;
    clips.reserve(view->size());
    for (std::size_t i = 0; i < view->size(); ++i) clips.push_back(view->get(i));
    write_dataset(out / name, clips, c.data.seed, enc, c.data.generator);
    counts[name] = clips.size();
    m.artifacts.push_back(std::string(name) + "/header.json");
  }
  m.outputs = {{"dataset_hash", detail::tree_hash(out)}, {"clips", counts}};
  detail::finish_manifest(out, m);
  io.err << "wrote " << c.data.num_clips << " clips (" << counts.dump() << ") to " << out.string()
         << ", hash " << m.outputs["dataset_hash"].get<std::string>() << '\n';
  io.out << out.string() << '\n';
  return kOk;
}

/// Builds the model and runs one forward/backward pass without writing anything.
inline int train_dry_run(const RunConfig& c, const Options& o, const Streams& io) {
  VideoModel<float> model(c.model, model_seed(c));
  const fs::path data = detail::data_dir(o, c);
  std::vector<Video> clips;
  if (fs::exists(data / "train" / "header.json")) {
    clips = detail::leading_clips(*detail::open_split(data, "train", c), c.train.batch_size);
  } else {
    auto digits = std::make_shared<const ImageSet>(procedural_digits(std::min(c.data.glyph_count, 10), c.data.glyph_seed));
    GeneratedSource src(c.data.generator, digits, c.data.seed, static_cast<std::size_t>(c.train.batch_size));
    clips = detail::leading_clips(src, c.train.batch_size);
  }
  std::vector<const Video*> ptrs;
  for (const auto& v : clips) ptrs.push_back(&v);
  const auto batch = make_batch<float>(ptrs, c.train.rollout.total_frames());
  NoiseSource noise(derive_seed(c.train.seed, 0, 1), batch.batch());
  const auto loss = training_loss(model, batch, c.train.rollout, noise);
  backward(loss.total);
  const std::size_t n = model.parameters().scalar_count();
  io.err << "variant " << to_string(c.model.variant) << ": " << n << " parameters, loss " << loss.total_value << '\n';
  io.out << nlohmann::json{{"parameters", n}, {"variant", to_string(c.model.variant)}, {"loss", loss.total_value}}.dump()
         << '\n';
  return std::isfinite(loss.total_value) ? kOk : kNonFinite;
}

inline int cmd_train(const Options& o, const Streams& io) {
  RunConfig c = detail::resolve(o);
  if (o.seed) c.train.seed = *o.seed;
  if (o.dry_run) return train_dry_run(c, o, io);

  const fs::path data = detail::data_dir(o, c);
  auto train_src = detail::open_split(data, "train", c);
  const auto val = detail::leading_clips(*detail::open_split(data, "val", c), c.train.val_videos);
  const fs::path out = o.out.empty() ? fs::path("runs") / (c.preset + "-" + to_string(c.model.variant)) : fs::path(o.out);
  const fs::path ckpt_dir = out / "checkpoints";
  const fs::path last = ckpt_dir / "last.ckpt", best = ckpt_dir / "best.ckpt";

  VideoModel<float> model(c.model, model_seed(c));
  Adam<float> opt(model.parameters(), c.train.optimizer);
  std::int64_t start = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  if (o.resume) {
    const Checkpoint ck = detail::read_checkpoint(last);
    if (ck.extra.contains("run_config")) {
      nlohmann::json stored = ck.extra.at("run_config").at("train"), now = nlohmann::json(c.train);
      stored.erase("epochs");
      now.erase("epochs");
      if (stored != now) throw CheckpointError("training config differs from the one in " + last.string());
    }
    restore_checkpoint(ck, model, &opt);
    start = ck.step;
    if (ck.extra.contains("best_val_psnr") && !ck.extra.at("best_val_psnr").is_null())
      best_val = ck.extra.at("best_val_psnr").get<double>();
    io.err << "resuming from step " << start << '\n';
  }
  detail::prepare_dir(ckpt_dir);
  auto m = detail::begin_manifest("train", c, c.train.seed, o);
  m.inputs = {{"data", data.string()}};
  if (o.resume) m.inputs["resume_from"] = last.string();

  const fs::path log_path = out / "train_log.ndjson";
  std::ofstream log(log_path, o.resume ? std::ios::app : std::ios::trunc);
  if (!log) throw WriteError("cannot open " + log_path.string());
  const nlohmann::json run_config = c;
  std::int64_t best_step = -1;
  TrainEvents ev;
  ev.log = [&](const nlohmann::json& rec) {
    log << rec.dump() << '\n';
    log.flush();
    if (rec.contains("val_psnr"))
      io.err << "step " << rec["step"] << " val psnr " << rec["val_psnr"].get<double>() << '\n';
  };
  ev.on_best = [&](std::int64_t step, double v) {
    best_step = step;
    save_checkpoint(best.string(),
                    make_checkpoint<float>(model, nullptr, step, {{"run_config", run_config}, {"val_psnr", v}}));
  };
  ev.on_checkpoint = [&](std::int64_t step, double bv) {
    save_checkpoint(last.string(), make_checkpoint(model, &opt, step,
                                                   {{"run_config", run_config},
                                                    {"best_val_psnr", detail::best_json(bv)},
                                                    {"best_step", best_step}}));
  };

  TrainResult r;
  try {
    r = train_loop(model, opt, SplitView::all(train_src), val, c.train, ev, start, best_val);
  } catch (const NonFiniteLoss& e) {
    const fs::path snap = out / "diagnostics" / ("nonfinite_step" + std::to_string(e.step) + ".json");
    fs::create_directories(snap.parent_path());
    detail::write_json(snap, {{"step", e.step}, {"loss", e.snapshot}, {"config", run_config}});
    m.artifacts.push_back(fs::relative(snap, out).generic_string());
    m.outputs = {{"status", "non-finite"}, {"step", e.step}};
    detail::finish_manifest(out, m);
    io.err << "error: " << e.what() << "; snapshot at " << snap.string() << '\n';
    io.out << snap.string() << '\n';
    return kNonFinite;
  }
  if (!fs::exists(best) && fs::exists(last)) fs::copy_file(last, best);  // no validation split configured
  for (const auto& p : {best, last, log_path})
    if (fs::exists(p)) m.artifacts.push_back(fs::relative(p, out).generic_string());
  m.outputs = {{"status", "ok"},
               {"final_step", r.step},
               {"best_val_psnr", detail::best_json(r.best_val_psnr)},
               {"best_step", r.best_step}};
  detail::finish_manifest(out, m);
  io.err << "trained to step " << r.step << ", best val psnr " << r.best_val_psnr << '\n';
  io.out << best.string() << '\n' << last.string() << '\n';
  return kOk;
}

namespace detail {

inline Image8 curve_plot(const std::string& metric, const MetricCurve& model, const MetricCurve& copy_last,
                         int cond_frames, int num_samples) {
  PlotSpec p;
  p.title = metric == "psnr" ? "PSNR" : "SSIM";
  p.title += " best of " + std::to_string(num_samples);
  p.x_label = "time step";
  p.y_label = metric == "psnr" ? "dB" : "SSIM";
  for (std::size_t t = 0; t < model.mean.size(); ++t) p.x.push_back(cond_frames + 1 + static_cast<double>(t));
  p.series.push_back({"model", model.mean, model.half_width, {0.8, 0.1, 0.1}});
  p.series.push_back({"copy last", copy_last.mean, copy_last.half_width, {0.1, 0.1, 0.8}});
  return render_line_plot(p);
}

}  // namespace detail

inline int cmd_evaluate(const Options& o, const Streams& io) {
  auto lm = detail::load_model(o);
  RunConfig& c = lm.config;
  if (o.seed) c.eval.seed = *o.seed;
  const fs::path data = detail::data_dir(o, c);
  const auto test = detail::leading_clips(*detail::open_split(data, "test", c), c.eval.num_videos);
  const fs::path out = o.out.empty() ? lm.checkpoint.parent_path().parent_path() / "eval" : fs::path(o.out);
  detail::prepare_dir(out);
  auto m = detail::begin_manifest("evaluate", c, c.eval.seed, o);
  m.inputs = {{"checkpoint", lm.checkpoint.string()}, {"checkpoint_hash", lm.checkpoint_hash}, {"data", data.string()}};

  BestOfNConfig e{c.eval.num_samples, c.eval.seed, c.eval.rollout, c.eval_metrics(), c.eval.sample_batch};
  io.err << "scoring " << test.size() << " clips with " << e.num_samples << " samples each\n";
  const auto result = best_of_n_eval(*lm.model, test, e);
  const auto copy = copy_last_baseline(test, e.rollout, e.metrics);
  const auto report = metrics_report(result, copy, e.rollout, lm.checkpoint_hash);
  detail::write_json(out / "report.json", report);
  m.artifacts.push_back("report.json");
  for (std::size_t i = 0; i < e.metrics.size(); ++i) {
    const std::string name = to_string(e.metrics[i]);
    const auto& curve = result.at(e.metrics[i]).curve;
    detail::save_png(out, name + ".png",
                     detail::curve_plot(name, curve, copy[i], e.rollout.cond_frames, e.num_samples), m);
    m.outputs[name] = {{"best_of_n", curve.average}, {"copy_last", copy[i].average}};
    io.err << name << ": best of " << e.num_samples << " " << curve.average << " +/- " << curve.average_half_width
           << ", copy last " << copy[i].average << '\n';
  }
  detail::finish_manifest(out, m);
  io.out << (out / "report.json").string() << '\n';
  return kOk;
}

namespace detail {

/// Shared by sample and visualize-flow: one generation per test clip with
/// `n` samples drawn from the nested per-sample seed streams.
template <class Visit>
void for_each_generation(const LoadedModel& lm, const std::vector<Video>& clips, int n, std::uint64_t seed,
                         Visit&& visit) {
  const RolloutConfig& rc = lm.config.eval.rollout;
  for (std::size_t v = 0; v < clips.size(); ++v) {
    std::vector<const Video*> rows(static_cast<std::size_t>(n), &clips[v]);
    std::vector<std::uint64_t> seeds;
    for (int j = 0; j < n; ++j) seeds.push_back(sample_seed(seed, v, j));
    NoiseSource noise(seeds);
    const auto g = generate(*lm.model, make_batch<float>(rows, rc.cond_frames), rc, noise);
    visit(v, clips[v], g);
  }
}

inline std::string video_dir(std::size_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "video_%03zu", v);
  return buf;
}

inline std::vector<Video> sample_inputs(const LoadedModel& lm, const Options& o) {
  const fs::path data = data_dir(o, lm.config);
  return leading_clips(*open_split(data, "test", lm.config), o.videos.value_or(4));
}

}  // namespace detail

/// Sample grids (rows: truth, combined, appearance, motion, mask, flow) per clip and sample.
inline int cmd_sample(const Options& o, const Streams& io) {
  Options opts = o;
  opts.n_samples.reset();  // --n-samples counts samples to draw here, not the eval budget
  auto lm = detail::load_model(opts);
  if (o.seed) lm.config.eval.seed = *o.seed;
  const int n = o.n_samples.value_or(3);
  if (n < 1) throw ConfigError("--n-samples must be >= 1");
  const auto clips = detail::sample_inputs(lm, o);
  const fs::path out = o.out.empty() ? lm.checkpoint.parent_path().parent_path() / "samples" : fs::path(o.out);
  detail::prepare_dir(out);
  auto m = detail::begin_manifest("sample", lm.config, lm.config.eval.seed, o);
  m.inputs = {{"checkpoint", lm.checkpoint.string()}, {"checkpoint_hash", lm.checkpoint_hash}};
  detail::for_each_generation(lm, clips, n, lm.config.eval.seed, [&](std::size_t v, const Video& truth, const auto& g) {
    const std::string dir = detail::video_dir(v);
    for (int j = 0; j < n; ++j)
      detail::save_png(out, dir + "/sample_" + std::to_string(j) + ".png", sample_grid(truth, g.rollout, j), m);
    const auto gen = generated_clips(truth, g, lm.config.eval.rollout.cond_frames);
    std::vector<const Tensor<float>*> rows{&truth.frames};
    for (const auto& clip : gen) rows.push_back(&clip.frames);
    // Ground truth may be longer than the rollout; trim for equal row lengths.
    Tensor<float> trimmed(Shape{gen[0].length(), truth.channels(), truth.height(), truth.width()});
    std::copy_n(truth.frames.data(), trimmed.size(), trimmed.data());
    rows[0] = &trimmed;
    detail::save_png(out, dir + "/overview.png", clip_rows(rows), m);
  });
  detail::finish_manifest(out, m);
  io.err << "wrote " << m.artifacts.size() << " images for " << clips.size() << " clips\n";
  io.out << out.string() << '\n';
  return kOk;
}

/// Flow colour sequences, the sample grid, and the colour-wheel legend.
inline int cmd_visualize_flow(const Options& o, const Streams& io) {
  Options opts = o;
  opts.n_samples.reset();
  auto lm = detail::load_model(opts);
  if (!lm.config.model.has_flow_decoder())
    throw ConfigError("variant " + to_string(lm.config.model.variant) + " predicts no flow");
  if (o.seed) lm.config.eval.seed = *o.seed;
  const int n = o.n_samples.value_or(1);
  if (n < 1) throw ConfigError("--n-samples must be >= 1");
  const auto clips = detail::sample_inputs(lm, o);
  const fs::path out = o.out.empty() ? lm.checkpoint.parent_path().parent_path() / "flow" : fs::path(o.out);
  detail::prepare_dir(out);
  auto m = detail::begin_manifest("visualize-flow", lm.config, lm.config.eval.seed, o);
  m.inputs = {{"checkpoint", lm.checkpoint.string()}, {"checkpoint_hash", lm.checkpoint_hash}};
  detail::save_png(out, "flow_wheel.png", flow_wheel_legend(), m);
  detail::for_each_generation(lm, clips, n, lm.config.eval.seed, [&](std::size_t v, const Video& truth, const auto& g) {
    for (int j = 0; j < n; ++j) {
      const std::string dir = detail::video_dir(v) + "/sample_" + std::to_string(j);
      const double scale = std::max(max_flow_magnitude(g.rollout, j), 1e-12);
      detail::save_png(out, dir + "/grid.png", sample_grid(truth, g.rollout, j, scale), m);
      for (const auto& s : g.rollout.steps) {
        char name[32];
        std::snprintf(name, sizeof name, "/flow_%03d.png", s.target_index);
        detail::save_png(out, dir + name, image_grid({{flow_to_color(take_row(s.flow.value(), j), scale)}}, 0), m);
      }
    }
  });
  detail::finish_manifest(out, m);
  io.err << "wrote " << m.artifacts.size() << " images for " << clips.size() << " clips\n";
  io.out << out.string() << '\n';
  return kOk;
}

/// Runs `fn`, mapping exceptions to exit codes and messages on stderr.
template <class Fn>
int run_command(Fn&& fn, const Streams& io) {
  try {
    return fn();
  } catch (const CommandError& e) {
    io.err << "error: " << e.what() << '\n';
    return e.code;
  } catch (const ConfigError& e) {
    io.err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const WriteError& e) {
    io.err << "write error: " << e.what() << '\n';
    return kWriteError;
  } catch (const fs::filesystem_error& e) {
    io.err << "write error: " << e.what() << '\n';
    return kWriteError;
  } catch (const CheckpointError& e) {
    io.err << "checkpoint error: " << e.what() << '\n';
    return kCheckpointError;
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace slamp::cli
