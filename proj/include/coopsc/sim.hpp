#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "coopsc/codec.hpp"
#include "coopsc/controller.hpp"
#include "coopsc/forest.hpp"
#include "coopsc/overhead.hpp"
#include "coopsc/synth.hpp"

#include "json.hpp"

namespace coopsc {

struct SimConfig {
  double video_snr_db = 25.0;
  double accel_snr_db = 25.0;
  std::size_t stride = kSegmentFrames;
  AckPolicy policy;
  std::uint64_t channel_seed = 1;
  /// Windows after a ground-truth posture change left out of posture
  /// accuracy while the gravity filter settles.
  std::size_t posture_guard_windows = 2;
  /// Bits a conventional encoder would spend per camera frame, for the
  /// MPEG-4 rows of the overhead table.
  double mpeg_bits_per_frame = static_cast<double>(kReferenceVideoBits) / 29640.0;
  std::vector<double> snr_grid{7.0, 13.0, 19.0, 25.0};

  std::filesystem::path codec_model;
  std::filesystem::path forest_model;
  std::filesystem::path report_json;
  std::filesystem::path event_log;

  Scenario scenario;
};

/// Parses flat "key = value" lines; '#' starts a comment. Throws kConfig
/// naming the line for unknown keys or bad values.
SimConfig parse_config(std::istream& in);
/// Throws kIo when the file cannot be opened.
SimConfig load_config(const std::filesystem::path& path);

/// "sleeping:60, dress-up:40" -> timeline entries.
std::vector<TimelineEntry> parse_timeline(const std::string& text);

/// Timeline with `changes` activity changes; each change yields two
/// validated transitions (into walking, then into the new posture).
Scenario transition_scenario(std::size_t changes, std::uint64_t seed);

struct Detection {
  std::size_t event_t = 0;
  std::size_t start_frame = 0;
  Room room = Room::kBedroom;
  Activity predicted = Activity::kSleeping;
  Activity truth = Activity::kSleeping;
};

struct ActivityCell {
  std::size_t detections = 0;
  std::size_t correct = 0;
};

struct SimReport {
  OverheadTable overhead;
  /// [predicted activity][room]
  std::array<std::array<ActivityCell, kNumRooms>, kNumActivities> table{};
  std::vector<ControlEvent> events;
  std::vector<Detection> detections;
  std::size_t posture_windows = 0;
  std::size_t posture_scored = 0;
  std::size_t posture_correct = 0;
  std::size_t clamped_samples = 0;
  std::string event_log;

  double posture_accuracy() const;
  /// N_t recomputed from the event list: sum of targets x segments_per_ack.
  std::uint64_t uploads_from_events(std::size_t segments_per_ack) const;
};

/// Runs the whole pipeline second by second: accelerometer symbols over the
/// channel, gravity features, posture forest, transmission controller, and
/// on each ACK a video feature upload from every targeted camera.
SimReport run_simulation(const SimConfig& config, const CodecModel& codec, const RandomForest& forest);

/// Loads the models named in the config and writes the report and event log
/// when paths are set.
SimReport run_simulation(const SimConfig& config);

nlohmann::json to_json(const SimReport& report, const SimConfig& config);

}  // namespace coopsc
