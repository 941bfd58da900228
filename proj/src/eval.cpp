#include "warpfake/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace warpfake {

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw InvalidArgument("score and label counts differ");
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw InvalidArgument("scores must be finite");
    if (labels[i] != 0 && labels[i] != 1) throw InvalidArgument("labels must be 0 or 1");
  }
}

std::vector<std::size_t> order_by_score(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  return order;
}

}  // namespace

double auc(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  const auto order = order_by_score(scores);
  // Twice the rank sum of positives, with tied groups sharing their mid-rank;
  // kept in integers so the statistic is exact.
  std::int64_t rank_sum_x2 = 0;
  std::int64_t positives = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    // 1-based ranks i+1 .. j; their mid-rank doubled is (i + 1) + j.
    const auto mid_x2 = static_cast<std::int64_t>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        rank_sum_x2 += mid_x2;
        ++positives;
      }
    }
    i = j;
  }
  const std::int64_t negatives = static_cast<std::int64_t>(labels.size()) - positives;
  if (positives == 0 || negatives == 0) throw SingleClass("AUC needs both real and fake examples");
  const std::int64_t u_x2 = rank_sum_x2 - positives * (positives + 1);
  return static_cast<double>(u_x2) / (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
}

double aggregate_video(std::span<const double> frame_scores) {
  if (frame_scores.empty()) throw EmptyVideo("video has no frames");
  std::vector<double> sorted(frame_scores.begin(), frame_scores.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const std::size_t k = (sorted.size() + 2) / 3;
  long double sum = 0.0L;
  for (std::size_t i = 0; i < k; ++i) sum += sorted[i];
  const double mean = static_cast<double>(sum / static_cast<long double>(k));
  // Rounding must not push the mean outside the values it averages.
  return std::clamp(mean, sorted[k - 1], sorted[0]);
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  const std::size_t positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) throw SingleClass("ROC needs both real and fake examples");
  auto order = order_by_score(scores);
  std::reverse(order.begin(), order.end());
  std::vector<RocPoint> points{{0.0, 0.0}};
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == 1 ? tp : fp)++;
      ++j;
    }
    points.push_back({static_cast<double>(fp) / negatives, static_cast<double>(tp) / positives});
    i = j;
  }
  return points;
}

EvalReport evaluate(std::span<const ScoredFrame> frames) {
  EvalReport report;
  std::vector<double> scores;
  std::vector<int> labels;
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<double>> per_video;
  for (const ScoredFrame& f : frames) {
    if (!std::isfinite(f.score) || f.score < 0.0 || f.score > 1.0) {
      throw InvalidArgument("frame score outside [0, 1] in video " + f.video_id);
    }
    scores.push_back(f.score);
    labels.push_back(static_cast<int>(f.label));
    auto [it, inserted] = index.try_emplace(f.video_id, report.videos.size());
    if (inserted) {
      report.videos.push_back({f.video_id, 0.0, 0, f.label});
      per_video.emplace_back();
    } else if (report.videos[it->second].label != f.label) {
      throw InvalidArgument("video " + f.video_id + " mixes real and fake frames");
    }
    per_video[it->second].push_back(f.score);
  }

  try {
    report.frame_auc = auc(scores, labels);
    report.frame_roc = roc_curve(scores, labels);
  } catch (const SingleClass& e) {
    report.errors.push_back(std::string("frame level: ") + e.what());
  }

  std::vector<double> video_scores;
  std::vector<int> video_labels;
  for (std::size_t v = 0; v < report.videos.size(); ++v) {
    report.videos[v].n_frames = static_cast<int>(per_video[v].size());
    report.videos[v].aggregated_score = aggregate_video(per_video[v]);
    video_scores.push_back(report.videos[v].aggregated_score);
    video_labels.push_back(static_cast<int>(report.videos[v].label));
  }
  try {
    report.video_auc = auc(video_scores, video_labels);
  } catch (const SingleClass& e) {
    report.errors.push_back(std::string("video level: ") + e.what());
  }
  return report;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["frame_auc"] = report.frame_auc ? nlohmann::ordered_json(*report.frame_auc) : nlohmann::ordered_json();
  j["video_auc"] = report.video_auc ? nlohmann::ordered_json(*report.video_auc) : nlohmann::ordered_json();
  j["videos"] = nlohmann::ordered_json::array();
  for (const VideoScore& v : report.videos) {
    nlohmann::ordered_json row;
    row["video_id"] = v.video_id;
    row["n_frames"] = v.n_frames;
    row["aggregated_score"] = v.aggregated_score;
    row["label"] = label_name(v.label);
    j["videos"].push_back(row);
  }
  if (!report.errors.empty()) j["errors"] = report.errors;
  return j.dump(2) + "\n";
}

std::string report_to_table(const EvalReport& report) {
  std::ostringstream out;
  char line[256];
  auto fmt_auc = [](const std::optional<double>& v) {
    char buf[32];
    if (!v) return std::string("n/a");
    std::snprintf(buf, sizeof buf, "%.4f", *v);
    return std::string(buf);
  };
  out << "frame AUC: " << fmt_auc(report.frame_auc) << "\n";
  out << "video AUC: " << fmt_auc(report.video_auc) << "\n\n";
  std::snprintf(line, sizeof line, "%-32s %8s %10s %6s\n", "video", "frames", "score", "label");
  out << line;
  for (const VideoScore& v : report.videos) {
    std::snprintf(line, sizeof line, "%-32s %8d %10.4f %6s\n", v.video_id.c_str(), v.n_frames,
                  v.aggregated_score, label_name(v.label));
    out << line;
  }
  for (const std::string& e : report.errors) out << "error: " << e << "\n";
  return out.str();
}

std::string roc_to_csv(std::span<const RocPoint> points) {
  std::string out = "fpr,tpr\n";
  char line[64];
  for (const RocPoint& p : points) {
    std::snprintf(line, sizeof line, "%.17g,%.17g\n", p.fpr, p.tpr);
    out += line;
  }
  return out;
}

}  // namespace warpfake
