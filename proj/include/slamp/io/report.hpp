#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <string>
#include <vector>

#include <json.hpp>

#include "slamp/eval/best_of_n.hpp"

namespace slamp {

inline constexpr const char* kMetricsReportSchema = "slamp.metrics_report/1";
inline constexpr const char* kManifestSchema = "slamp.manifest/1";

inline nlohmann::json curve_json(const MetricCurve& c) {
  return {{"per_frame", c.mean},
          {"half_width", c.half_width},
          {"mean", c.average},
          {"mean_half_width", c.average_half_width}};
}

/// Best-of-N evaluation as a JSON document. Confidence half-widths are
/// normal-approximation 95% intervals over test videos.
inline nlohmann::json metrics_report(const BestOfNResult& r, const std::vector<MetricCurve>& copy_last,
                                     const RolloutConfig& rc, const std::string& checkpoint_hash) {
  nlohmann::json j;
  j["schema"] = kMetricsReportSchema;
  j["num_samples"] = r.num_samples;
  j["num_videos"] = r.num_videos;
  j["seed"] = r.seed;
  j["checkpoint_hash"] = checkpoint_hash;
  j["cond_frames"] = rc.cond_frames;
  j["pred_frames"] = rc.pred_frames;
  j["frame_index"] = nlohmann::json::array();
  for (int t = 0; t < rc.pred_frames; ++t) j["frame_index"].push_back(rc.cond_frames + t);
  j["confidence"] = {{"level", 0.95}, {"method", "normal"}, {"over", "videos"}};
  j["selection"] = "per-metric best of N by frame-averaged score";
  j["metrics"] = nlohmann::json::object();
  for (const auto& m : r.metrics) {
    auto c = curve_json(m.curve);
    c["unit"] = m.curve.metric == "psnr" ? "dB" : "";
    c["best_sample"] = m.best_index;
    j["metrics"][m.curve.metric] = c;
  }
  j["baselines"]["copy_last"] = nlohmann::json::object();
  for (const auto& c : copy_last) j["baselines"]["copy_last"][c.metric] = curve_json(c);
  return j;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Provenance record written once per output directory.
struct RunManifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::string code_hash;
  std::string started, finished;
  std::vector<std::string> artifacts;  // paths relative to the output directory
  std::vector<std::string> argv;
  nlohmann::json inputs = nlohmann::json::object();   // upstream paths and their content hashes
  nlohmann::json outputs = nlohmann::json::object();  // summary values (hashes, scores)

  nlohmann::json to_json() const {
    return {{"schema", kManifestSchema}, {"command", command},   {"config", config},     {"seed", seed},
            {"code_hash", code_hash},    {"started", started},   {"finished", finished}, {"artifacts", artifacts},
            {"argv", argv},              {"inputs", inputs},     {"outputs", outputs}};
  }
};

}  // namespace slamp
