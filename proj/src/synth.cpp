#include "coopsc/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "coopsc/error.hpp"
#include "coopsc/rng.hpp"

namespace coopsc {

namespace {

constexpr std::array<std::string_view, kNumRooms> kRoomNames = {"bedroom", "living_room", "kitchen"};

// Stream tags keep the generators' random streams apart.
constexpr std::uint64_t kAccelTag = 0xacce1;
constexpr std::uint64_t kPlacementTag = 0x91ace;
constexpr std::uint64_t kPixelTag = 0x91e1;

struct Pattern {
  double cy, cx, radius;
  std::array<double, 3> rgb;
  double amp_y, amp_x;
  double period;  // frames
};

constexpr std::array<Pattern, kNumActivities> kPatterns = {{
    {84, 56, 24, {0.25, 0.30, 0.95}, 1.0, 0.0, 32},   // sleeping
    {28, 28, 24, {0.95, 0.60, 0.20}, 0.0, 4.0, 24},   // resting
    {28, 84, 24, {0.85, 0.20, 0.85}, 6.0, 0.0, 12},   // dress-up
    {56, 22, 20, {0.20, 0.90, 0.30}, 3.0, 3.0, 6},    // eating
    {56, 90, 20, {0.95, 0.95, 0.95}, 4.0, -4.0, 10},  // calling
}};

constexpr double kBackgroundLevel = 0.0;

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

std::string_view to_string(Room r) { return kRoomNames.at(static_cast<std::size_t>(r)); }

std::optional<Room> parse_room(std::string_view name) {
  for (std::size_t i = 0; i < kRoomNames.size(); ++i)
    if (kRoomNames[i] == name) return static_cast<Room>(i);
  return std::nullopt;
}

Room room_of(Activity a) {
  switch (a) {
    case Activity::kSleeping:
    case Activity::kDressUp: return Room::kBedroom;
    case Activity::kResting:
    case Activity::kCalling: return Room::kLivingRoom;
    case Activity::kEating: return Room::kKitchen;
  }
  return Room::kBedroom;
}

Posture posture_of(Activity a) {
  switch (a) {
    case Activity::kSleeping: return Posture::kLying;
    case Activity::kDressUp: return Posture::kStanding;
    default: return Posture::kSitting;
  }
}

double posture_mean_cosine(Posture p) {
  switch (p) {
    case Posture::kLying: return 0.05;
    case Posture::kSitting: return 0.60;
    case Posture::kStanding: return 0.95;
    case Posture::kWalking: return 0.85;
  }
  return 0.0;
}

Vec3 posture_direction(Posture p) {
  const double c = posture_mean_cosine(p);
  return {std::sqrt(1.0 - c * c), 0.0, c};
}

// ---- scenario -------------------------------------------------------------

std::size_t Scenario::total_seconds() const {
  std::size_t s = 0;
  for (const auto& e : timeline) s += e.duration_s;
  return s;
}

void Scenario::validate() const {
  if (timeline.empty()) throw Error(ErrorKind::kConfig, "scenario timeline is empty");
  if (video_fps == 0) throw Error(ErrorKind::kConfig, "video_fps must be >= 1");
  const std::size_t min_len = transition_walk_s + 3;
  for (std::size_t i = 0; i < timeline.size(); ++i)
    if (timeline[i].duration_s < min_len)
      throw Error(ErrorKind::kConfig, "timeline entry " + std::to_string(i) + " lasts " +
                                          std::to_string(timeline[i].duration_s) + " s; at least " +
                                          std::to_string(min_len) + " s are needed");
}

std::size_t Scenario::entry_at(std::size_t t) const {
  std::size_t end = 0;
  for (std::size_t i = 0; i < timeline.size(); ++i) {
    end += timeline[i].duration_s;
    if (t < end) return i;
  }
  return timeline.empty() ? 0 : timeline.size() - 1;
}

Activity Scenario::activity_at(std::size_t t) const { return timeline.at(entry_at(t)).activity; }

Posture Scenario::posture_at(std::size_t t) const {
  const std::size_t i = entry_at(t);
  std::size_t start = 0;
  for (std::size_t k = 0; k < i; ++k) start += timeline[k].duration_s;
  if (i > 0 && t - start < transition_walk_s) return Posture::kWalking;
  return posture_of(timeline[i].activity);
}

AccelNoise noiseless_accel() { return AccelNoise{0.0, 0.0, 2.0}; }
VideoNoise noiseless_video() { return VideoNoise{0.0, 0.0}; }

// ---- accelerometer --------------------------------------------------------

namespace {

AccelSample accel_sample(Posture p, double t, const AccelNoise& noise, CounterRng& rng) {
  const Vec3 dir = posture_direction(p);
  AccelSample s{t, dir};
  if (noise.motion_sigma > 0.0)
    for (auto& v : s.a) v += noise.motion_sigma * rng.gaussian();
  if (p == Posture::kWalking && noise.gait_amplitude > 0.0)
    s.a[2] += noise.gait_amplitude * std::sin(2.0 * std::numbers::pi * noise.gait_hz * t);
  return s;
}

}  // namespace

AccelTrace gen_accel_trace(const Scenario& scenario) {
  scenario.validate();
  AccelTrace trace;
  const std::size_t seconds = scenario.total_seconds();
  trace.samples.reserve(seconds * kWindowSamples);
  CounterRng rng(derive_seed(scenario.seed, {kAccelTag}));
  for (std::size_t t = 0; t < seconds; ++t) {
    const Posture p = scenario.posture_at(t);
    trace.posture_per_second.push_back(p);
    for (std::size_t j = 0; j < kWindowSamples; ++j)
      trace.samples.push_back(accel_sample(p, static_cast<double>(t) + j / kAccelRateHz, scenario.accel, rng));
  }
  return trace;
}

std::vector<AccelSample> gen_posture_samples(Posture p, std::size_t seconds, const AccelNoise& noise,
                                             std::uint64_t seed) {
  CounterRng rng(derive_seed(seed, {kAccelTag, static_cast<std::uint64_t>(p)}));
  std::vector<AccelSample> out;
  out.reserve(seconds * kWindowSamples);
  for (std::size_t i = 0; i < seconds * kWindowSamples; ++i)
    out.push_back(accel_sample(p, static_cast<double>(i) / kAccelRateHz, noise, rng));
  return out;
}

std::vector<LabeledFeature> make_posture_dataset(std::size_t per_class, const AccelNoise& noise,
                                                 std::uint64_t seed) {
  // The filter is primed with the first (noisy) sample; the first windows
  // carry that start-up error and are discarded.
  constexpr std::size_t kSettleWindows = 3;
  std::vector<LabeledFeature> out;
  for (std::size_t c = 0; c < kNumPostures; ++c) {
    const auto p = static_cast<Posture>(c);
    const auto filtered = lowpass_gravity(gen_posture_samples(p, per_class + kSettleWindows, noise, seed));
    const auto windows = make_windows(filtered);
    for (std::size_t w = kSettleWindows; w < windows.size(); ++w)
      out.push_back({gravity_feature(windows[w]).u, p});
  }
  return out;
}

// ---- video ----------------------------------------------------------------

Frame render_activity_frame(Activity activity, std::size_t frame_index, const PatternPlacement& place,
                            double pixel_sigma, std::uint64_t noise_key) {
  const Pattern& pat = kPatterns.at(static_cast<std::size_t>(activity));
  const double phase = 2.0 * std::numbers::pi * static_cast<double>(frame_index + place.phase) / pat.period;
  const double cy = pat.cy + place.dy + pat.amp_y * std::sin(phase);
  const double cx = pat.cx + place.dx + pat.amp_x * std::sin(phase);
  const double r2 = pat.radius * pat.radius;

  Frame f(kFrameBytes);
  CounterRng rng(noise_key);
  for (std::size_t y = 0; y < kFrameSide; ++y)
    for (std::size_t x = 0; x < kFrameSide; ++x) {
      const double ddy = static_cast<double>(y) - cy, ddx = static_cast<double>(x) - cx;
      const bool inside = ddy * ddy + ddx * ddx <= r2;
      for (std::size_t c = 0; c < kColorChannels; ++c) {
        double v = inside ? pat.rgb[c] : kBackgroundLevel;
        if (pixel_sigma > 0.0) v += pixel_sigma * rng.gaussian();
        f[(y * kFrameSide + x) * kColorChannels + c] = to_byte(v);
      }
    }
  return f;
}

Frame render_background_frame(double pixel_sigma, std::uint64_t noise_key) {
  Frame f(kFrameBytes);
  CounterRng rng(noise_key);
  for (auto& px : f) {
    double v = kBackgroundLevel;
    if (pixel_sigma > 0.0) v += pixel_sigma * rng.gaussian();
    px = to_byte(v);
  }
  return f;
}

namespace {

PatternPlacement random_placement(const VideoNoise& noise, std::uint64_t key) {
  CounterRng rng(key);
  PatternPlacement p;
  p.dy = rng.uniform(-noise.jitter_px, noise.jitter_px);
  p.dx = rng.uniform(-noise.jitter_px, noise.jitter_px);
  p.phase = static_cast<std::size_t>(rng.below(64));
  return p;
}

}  // namespace

std::vector<LabeledClip> make_clip_dataset(std::size_t count, const VideoNoise& noise, std::uint64_t seed) {
  std::vector<LabeledClip> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    LabeledClip clip;
    clip.label = static_cast<Activity>(i % kNumActivities);
    const PatternPlacement place = random_placement(noise, derive_seed(seed, {kPlacementTag, i}));
    clip.rgb.reserve(kSegmentFrames * kFrameBytes);
    for (std::size_t f = 0; f < kSegmentFrames; ++f) {
      const Frame fr = render_activity_frame(clip.label, f, place, noise.pixel_sigma,
                                             derive_seed(seed, {kPixelTag, i, f}));
      clip.rgb.insert(clip.rgb.end(), fr.begin(), fr.end());
    }
    out.push_back(std::move(clip));
  }
  return out;
}

ScenarioVideo::ScenarioVideo(const Scenario& scenario) : scenario_(scenario) { scenario_.validate(); }

std::size_t ScenarioVideo::frame_count() const { return scenario_.total_seconds() * scenario_.video_fps; }

Activity ScenarioVideo::activity_at_frame(std::size_t index) const {
  return scenario_.activity_at(index / scenario_.video_fps);
}

Frame ScenarioVideo::frame(Room room, std::size_t index) const {
  const std::size_t entry = scenario_.entry_at(index / scenario_.video_fps);
  const Activity a = scenario_.timeline[entry].activity;
  const std::uint64_t key = derive_seed(scenario_.seed, {kPixelTag, static_cast<std::uint64_t>(room), index});
  if (room_of(a) != room) return render_background_frame(scenario_.video.pixel_sigma, key);
  const PatternPlacement place = random_placement(scenario_.video, derive_seed(scenario_.seed, {kPlacementTag, entry}));
  return render_activity_frame(a, index, place, scenario_.video.pixel_sigma, key);
}

std::optional<VideoSegment> ScenarioVideo::segment(Room room, std::size_t start_frame) const {
  if (start_frame + kSegmentFrames > frame_count()) return std::nullopt;
  std::vector<std::uint8_t> rgb;
  rgb.reserve(kSegmentFrames * kFrameBytes);
  for (std::size_t f = 0; f < kSegmentFrames; ++f) {
    const Frame fr = frame(room, start_frame + f);
    rgb.insert(rgb.end(), fr.begin(), fr.end());
  }
  return VideoSegment::from_rgb8(start_frame / kSegmentFrames, rgb);
}

}  // namespace coopsc
