#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "coopsc/codec.hpp"
#include "coopsc/forest.hpp"
#include "coopsc/posture.hpp"

namespace coopsc {

enum class Room : std::uint8_t { kBedroom = 0, kLivingRoom, kKitchen };
inline constexpr std::size_t kNumRooms = 3;

std::string_view to_string(Room r);
std::optional<Room> parse_room(std::string_view name);

/// Where each activity happens (ground truth only).
Room room_of(Activity a);
/// Body posture held while performing an activity.
Posture posture_of(Activity a);

struct AccelNoise {
  double motion_sigma = 0.05;  // white noise per axis, g
  double gait_amplitude = 0.15;  // vertical oscillation while walking, g
  double gait_hz = 2.0;
};

struct VideoNoise {
  double pixel_sigma = 0.05;
  double jitter_px = 6.0;  // per-clip offset of the activity pattern
};

/// Mean cosine with the default gravity direction for each posture.
double posture_mean_cosine(Posture p);

/// Unit gravity direction whose cosine with (0,0,1) is posture_mean_cosine.
Vec3 posture_direction(Posture p);

struct TimelineEntry {
  Activity activity = Activity::kSleeping;
  std::size_t duration_s = 60;
};

struct Scenario {
  std::vector<TimelineEntry> timeline;
  std::uint64_t seed = 1;
  AccelNoise accel;
  VideoNoise video;
  std::size_t transition_walk_s = 4;  // walking before every entry after the first
  std::size_t video_fps = 16;

  std::size_t total_seconds() const;
  /// Throws kConfig if an entry is too short to hold the walk plus a
  /// validated posture (walk + 3 s) or the timeline is empty.
  void validate() const;

  /// Entry active during second `t`.
  std::size_t entry_at(std::size_t t) const;
  Activity activity_at(std::size_t t) const;
  Posture posture_at(std::size_t t) const;
};

/// Noise-free parameters, for closed-loop checks.
AccelNoise noiseless_accel();
VideoNoise noiseless_video();

// ---- accelerometer --------------------------------------------------------

struct AccelTrace {
  std::vector<AccelSample> samples;       // 50 Hz
  std::vector<Posture> posture_per_second;
};

AccelTrace gen_accel_trace(const Scenario& scenario);

/// Samples of a single held posture (no transitions).
std::vector<AccelSample> gen_posture_samples(Posture p, std::size_t seconds, const AccelNoise& noise,
                                             std::uint64_t seed);

/// Filtered-window features of held postures, `per_class` windows each.
std::vector<LabeledFeature> make_posture_dataset(std::size_t per_class, const AccelNoise& noise,
                                                 std::uint64_t seed);

// ---- video ----------------------------------------------------------------

struct PatternPlacement {
  double dy = 0.0;
  double dx = 0.0;
  std::size_t phase = 0;
};

/// One frame showing `activity` (a class-specific blob with its own colour,
/// anchor and motion) over a dark noisy background.
Frame render_activity_frame(Activity activity, std::size_t frame_index, const PatternPlacement& place,
                            double pixel_sigma, std::uint64_t noise_key);

/// An empty room: background noise only.
Frame render_background_frame(double pixel_sigma, std::uint64_t noise_key);

/// Balanced labelled clips (label = index mod 5) with random placement.
std::vector<LabeledClip> make_clip_dataset(std::size_t count, const VideoNoise& noise, std::uint64_t seed);

/// Lazily rendered camera feeds for a scenario: the camera in the room of
/// the current activity sees the activity; the others see an empty room.
class ScenarioVideo {
 public:
  explicit ScenarioVideo(const Scenario& scenario);

  std::size_t frame_count() const;
  Frame frame(Room room, std::size_t index) const;
  /// 16 frames starting at `start_frame`, or nullopt when they run past the end.
  std::optional<VideoSegment> segment(Room room, std::size_t start_frame) const;
  Activity activity_at_frame(std::size_t index) const;

 private:
  Scenario scenario_;
};

}  // namespace coopsc
