#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "warpfake/synth.hpp"

namespace warpfake {

struct ScoredFrame {
  std::string video_id;
  int frame_index = 0;
  double score = 0.0;
  Label label = Label::kReal;
};

struct VideoScore {
  std::string video_id;
  double aggregated_score = 0.0;
  int n_frames = 0;
  Label label = Label::kReal;
};

/// Mann-Whitney AUC with fake (1) as the positive class and half credit for
/// ties. Throws SingleClass unless both labels are present.
double auc(std::span<const double> scores, std::span<const int> labels);

/// Mean of the ceil(n / 3) largest scores. Throws EmptyVideo for n = 0.
double aggregate_video(std::span<const double> frame_scores);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

/// ROC vertices from (0, 0) to (1, 1), one per distinct score threshold.
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels);

struct EvalReport {
  std::optional<double> frame_auc;
  std::optional<double> video_auc;
  std::vector<VideoScore> videos;
  /// One message per level whose AUC could not be computed.
  std::vector<std::string> errors;
  std::vector<RocPoint> frame_roc;

  bool complete() const { return frame_auc.has_value() && video_auc.has_value(); }
};

/// Groups frames by video_id (first-appearance order), aggregates each video,
/// and computes frame- and video-level AUC independently. Throws
/// InvalidArgument if a video mixes labels or a score is outside [0, 1].
EvalReport evaluate(std::span<const ScoredFrame> frames);

/// {"frame_auc", "video_auc", "videos": [{video_id, n_frames, aggregated_score, label}]}
/// plus "errors" when a level failed. Unavailable AUCs are null.
std::string report_to_json(const EvalReport& report);
std::string report_to_table(const EvalReport& report);
/// "fpr,tpr" header followed by one line per point.
std::string roc_to_csv(std::span<const RocPoint> points);

}  // namespace warpfake
