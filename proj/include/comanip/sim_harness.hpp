#pragma once

#include <map>
#include <string>
#include <vector>

#include "comanip/scenario.hpp"
#include "comanip/types.hpp"

namespace comanip {

/// The only thing robots ever share: who saturated and their K_f^T dF term.
struct BroadcastMessage {
  std::string sender;
  Vec payload;  // K_f^T dF, sized like the object twist
  long tick = 0;
};

/// All-to-all bus with an optional integer tick delay. Every agent sees the
/// same inbox each round.
class MessageBus {
 public:
  explicit MessageBus(int delay_ticks = 0);

  /// Queue this tick's outgoing messages and return everything due now
  /// (posted at tick - delay). With zero delay the posted messages come
  /// straight back.
  std::vector<BroadcastMessage> broadcast_round(
      std::vector<BroadcastMessage> posted, long tick);

  long posted_total() const { return posted_total_; }

 private:
  int delay_ = 0;
  long posted_total_ = 0;
  std::map<long, std::vector<BroadcastMessage>> pending_;
};

struct RunMetrics {
  // Mean |object velocity - reference velocity| per axis (vx, vy, wz).
  Vec error_vs_modified = Vec::Zero(3);
  Vec error_vs_original = Vec::Zero(3);
  std::map<std::string, double> saturation_duty;  // fraction of ticks
  long broadcast_count = 0;
  std::map<std::string, double> force_energy;  // integral of |F_bar|^2 dt
  double duration = 0.0;
  double dt = 0.0;
  double warmup = 0.0;
};

/// Run the full lock-step simulation, writing object.csv, robot_<id>.csv,
/// bus.csv, metrics.json (and optional gain/joint/polytope traces) into
/// out_dir. Deterministic for a fixed config. Throws ValidationError on a bad
/// config and NumericalError when any state norm exceeds 1e6.
RunMetrics run_scenario(const ScenarioConfig& config,
                        const std::string& out_dir);

/// Recompute RunMetrics from the CSV logs in out_dir, skipping rows with
/// time < warmup. Throws ValidationError on missing or truncated logs.
RunMetrics metrics_report(const std::string& out_dir, double warmup = 0.0);

void write_metrics_json(const RunMetrics& metrics, const std::string& path);

/// Small human-readable digest of a RunMetrics.
std::string metrics_summary(const RunMetrics& metrics);

}  // namespace comanip
