#include "coopsc/sim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>

#include "coopsc/channel.hpp"
#include "coopsc/error.hpp"
#include "coopsc/posture.hpp"
#include "coopsc/rng.hpp"

namespace coopsc {
namespace {

constexpr std::uint64_t kAccelTag = 0x4143;
constexpr std::uint64_t kVideoTag = 0x5644;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto end = s.find(',', start);
    if (end == std::string_view::npos) end = s.size();
    auto item = trim(s.substr(start, end - start));
    if (!item.empty()) out.push_back(std::move(item));
    start = end + 1;
  }
  return out;
}

[[noreturn]] void bad_value(std::size_t line, const std::string& key, const std::string& value) {
  throw Error(ErrorKind::kConfig, "line " + std::to_string(line) + ": bad value '" + value + "' for " + key);
}

double parse_double(std::size_t line, const std::string& key, const std::string& value) {
  if (value == "inf" || value == "+inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc{} || ptr != end || !std::isfinite(v)) bad_value(line, key, value);
  return v;
}

std::uint64_t parse_u64(std::size_t line, const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc{} || ptr != end) bad_value(line, key, value);
  return v;
}

double energy(const SemanticFeature& f) {
  double e = 0.0;
  for (double v : f.values.data()) e += v * v;
  return e;
}

}  // namespace

std::vector<TimelineEntry> parse_timeline(const std::string& text) {
  std::vector<TimelineEntry> out;
  for (const auto& item : split_list(text)) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw Error(ErrorKind::kConfig, "timeline entry '" + item + "' needs activity:seconds");
    const auto name = trim(std::string_view(item).substr(0, colon));
    const auto secs = trim(std::string_view(item).substr(colon + 1));
    const auto activity = parse_activity(name);
    if (!activity) throw Error(ErrorKind::kConfig, "unknown activity '" + name + "'");
    std::size_t d = 0;
    const auto [ptr, ec] = std::from_chars(secs.data(), secs.data() + secs.size(), d);
    if (ec != std::errc{} || ptr != secs.data() + secs.size() || d == 0) {
      throw Error(ErrorKind::kConfig, "bad duration '" + secs + "' in timeline");
    }
    out.push_back({*activity, d});
  }
  if (out.empty()) throw Error(ErrorKind::kConfig, "timeline is empty");
  return out;
}

Scenario transition_scenario(std::size_t changes, std::uint64_t seed) {
  // Alternates between activities whose postures differ so every change is
  // observable from the accelerometer.
  static constexpr Activity kCycle[] = {Activity::kSleeping, Activity::kResting, Activity::kDressUp,
                                        Activity::kEating, Activity::kSleeping, Activity::kCalling};
  Scenario s;
  s.seed = seed;
  for (std::size_t i = 0; i <= changes; ++i) {
    s.timeline.push_back({kCycle[i % std::size(kCycle)], 12});
  }
  return s;
}

SimConfig parse_config(std::istream& in) {
  SimConfig c;
  c.scenario = transition_scenario(6, 1);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const auto text = trim(raw);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::kConfig, "line " + std::to_string(line) + ": expected key = value");
    const auto key = trim(std::string_view(text).substr(0, eq));
    const auto value = trim(std::string_view(text).substr(eq + 1));

    if (key == "video_snr_db") {
      c.video_snr_db = parse_double(line, key, value);
    } else if (key == "accel_snr_db") {
      c.accel_snr_db = parse_double(line, key, value);
    } else if (key == "stride") {
      c.stride = parse_u64(line, key, value);
    } else if (key == "validation_windows") {
      c.policy.validation_windows = parse_u64(line, key, value);
    } else if (key == "segments_per_ack") {
      c.policy.segments_per_ack = parse_u64(line, key, value);
    } else if (key == "ack_targets") {
      if (value == "broadcast") {
        c.policy.subset.reset();
      } else {
        c.policy.subset = split_list(value);
      }
    } else if (key == "channel_seed") {
      c.channel_seed = parse_u64(line, key, value);
    } else if (key == "scenario_seed") {
      c.scenario.seed = parse_u64(line, key, value);
    } else if (key == "posture_guard_windows") {
      c.posture_guard_windows = parse_u64(line, key, value);
    } else if (key == "mpeg_bits_per_frame") {
      c.mpeg_bits_per_frame = parse_double(line, key, value);
    } else if (key == "snr_grid") {
      c.snr_grid.clear();
      for (const auto& v : split_list(value)) c.snr_grid.push_back(parse_double(line, key, v));
    } else if (key == "codec_model") {
      c.codec_model = value;
    } else if (key == "forest_model") {
      c.forest_model = value;
    } else if (key == "report_json") {
      c.report_json = value;
    } else if (key == "event_log") {
      c.event_log = value;
    } else if (key == "timeline") {
      c.scenario.timeline = parse_timeline(value);
    } else if (key == "transition_changes") {
      const auto seed = c.scenario.seed;
      auto s = transition_scenario(parse_u64(line, key, value), seed);
      c.scenario.timeline = s.timeline;
    } else if (key == "transition_walk_s") {
      c.scenario.transition_walk_s = parse_u64(line, key, value);
    } else if (key == "video_fps") {
      c.scenario.video_fps = parse_u64(line, key, value);
    } else if (key == "motion_sigma") {
      c.scenario.accel.motion_sigma = parse_double(line, key, value);
    } else if (key == "gait_amplitude") {
      c.scenario.accel.gait_amplitude = parse_double(line, key, value);
    } else if (key == "gait_hz") {
      c.scenario.accel.gait_hz = parse_double(line, key, value);
    } else if (key == "pixel_sigma") {
      c.scenario.video.pixel_sigma = parse_double(line, key, value);
    } else if (key == "jitter_px") {
      c.scenario.video.jitter_px = parse_double(line, key, value);
    } else {
      throw Error(ErrorKind::kConfig, "line " + std::to_string(line) + ": unknown key '" + key + "'");
    }
  }
  if (c.stride == 0) throw Error(ErrorKind::kConfig, "stride must be >= 1");
  c.policy.validate();
  c.scenario.validate();
  return c;
}

SimConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open config file: " + path.string() + " (file not found)");
  return parse_config(in);
}

double SimReport::posture_accuracy() const {
  return posture_scored == 0 ? 0.0 : static_cast<double>(posture_correct) / static_cast<double>(posture_scored);
}

std::uint64_t SimReport::uploads_from_events(std::size_t segments_per_ack) const {
  std::uint64_t n = 0;
  for (const auto& e : events) n += e.targets.size() * segments_per_ack;
  return n;
}

SimReport run_simulation(const SimConfig& config, const CodecModel& codec, const RandomForest& forest) {
  config.policy.validate();
  config.scenario.validate();
  if (config.stride == 0) throw Error(ErrorKind::kConfig, "stride must be >= 1");
  if (forest.trees.empty()) throw Error(ErrorKind::kPrecondition, "posture forest has no trees");
  if (codec.enc_w.dims() != Shape{4, 3, 3, 3, 3} || codec.fc_w.dims() != Shape{kNumActivities, 200}) {
    throw Error(ErrorKind::kShape, "codec model does not match the 3->4 encoder / 200->5 classifier layout");
  }

  std::vector<Room> camera_rooms;
  for (const auto& cam : config.policy.cameras) {
    const auto room = parse_room(cam);
    if (!room) throw Error(ErrorKind::kConfig, "camera '" + cam + "' is not a room name");
    camera_rooms.push_back(*room);
  }
  auto room_of_camera = [&](const CameraId& cam) {
    const auto it = std::find(config.policy.cameras.begin(), config.policy.cameras.end(), cam);
    return camera_rooms[static_cast<std::size_t>(it - config.policy.cameras.begin())];
  };

  const AccelTrace trace = gen_accel_trace(config.scenario);
  const ScenarioVideo video(config.scenario);
  const std::size_t seconds = config.scenario.total_seconds();
  const std::size_t fps = config.scenario.video_fps;

  SimReport rep;
  OverheadLedger ledger;
  ledger.symbols_per_frame = kSymbolsPerFeature;
  const std::size_t n_cams = config.policy.cameras.size();
  ledger.add_available(segment_count(video.frame_count(), config.stride) * n_cams);
  ledger.video_bits =
      static_cast<std::uint64_t>(std::llround(config.mpeg_bits_per_frame * static_cast<double>(video.frame_count() * n_cams)));

  GravityFilter filter;
  ControllerState state;
  std::size_t last_change = 0;
  bool any_change = false;
  std::ostringstream log;

  for (std::size_t t = 0; t < seconds; ++t) {
    const std::span<const AccelSample> chunk(trace.samples.data() + t * kWindowSamples, kWindowSamples);
    auto raw = encode_raw(chunk);
    rep.clamped_samples += raw.clamped;
    for (auto& f : raw.frames) {
      ledger.add_raw_symbols(f.symbols.size());
      f = transmit(f, {config.accel_snr_db, derive_seed(config.channel_seed, {kAccelTag, t})});
    }
    const auto received = decode_raw(raw.frames, static_cast<double>(t));
    std::vector<AccelSample> filtered;
    filtered.reserve(received.size());
    for (const auto& s : received) filtered.push_back(filter.process(s));
    const auto windows = make_windows(filtered);
    const auto feature = gravity_feature(windows.at(0));
    const Posture p = classify_posture(forest, feature.u);

    const Posture truth = trace.posture_per_second[t];
    if (t > 0 && truth != trace.posture_per_second[t - 1]) {
      last_change = t;
      any_change = true;
    }
    ++rep.posture_windows;
    if (!any_change || t - last_change >= config.posture_guard_windows) {
      ++rep.posture_scored;
      if (p == truth) ++rep.posture_correct;
    }

    auto result = step(state, p, t, config.policy);
    state = result.state;
    if (!result.event) continue;

    const ControlEvent& event = *result.event;
    rep.events.push_back(event);
    log << format_event(event) << '\n';
    const auto commands = dispatch(event, config.policy, ledger);

    for (std::size_t k = 0; k < config.policy.segments_per_ack; ++k) {
      const std::size_t start = (event.t + 1) * fps + k * config.stride;
      double best_energy = -1.0;
      std::optional<Detection> best;
      for (std::size_t c = 0; c < commands.size(); ++c) {
        const Room room = room_of_camera(commands[c].camera);
        const auto seg = video.segment(room, start);
        if (!seg) continue;
        const auto sent = encode(*seg, codec);
        const auto rx = transmit(sent, {config.video_snr_db,
                                        derive_seed(config.channel_seed, {kVideoTag, event.t, k, c})});
        const auto feat = symbols_to_features(rx);
        const double e = energy(feat);
        if (e > best_energy) {
          best_energy = e;
          best = Detection{event.t, start, room, classify(decode_features(feat, codec).logits),
                           video.activity_at_frame(start)};
        }
      }
      if (!best) continue;
      auto& cell = rep.table[static_cast<std::size_t>(best->predicted)][static_cast<std::size_t>(best->room)];
      ++cell.detections;
      if (best->predicted == best->truth && best->room == room_of(best->truth)) ++cell.correct;
      rep.detections.push_back(*best);
    }
  }

  rep.overhead = report(ledger, config.snr_grid, "simulation");
  rep.event_log = log.str();
  return rep;
}

SimReport run_simulation(const SimConfig& config) {
  if (config.codec_model.empty()) throw Error(ErrorKind::kConfig, "codec_model is not set");
  if (config.forest_model.empty()) throw Error(ErrorKind::kConfig, "forest_model is not set");
  for (const auto& p : {config.codec_model, config.forest_model}) {
    if (!std::filesystem::exists(p)) throw Error(ErrorKind::kIo, "model file not found: " + p.string());
  }
  const auto codec = load_model(config.codec_model);
  const auto forest = load_forest(config.forest_model);
  auto rep = run_simulation(config, codec, forest);

  if (!config.report_json.empty()) {
    std::ofstream out(config.report_json);
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + config.report_json.string());
    out << to_json(rep, config).dump(2) << '\n';
  }
  if (!config.event_log.empty()) {
    std::ofstream out(config.event_log);
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + config.event_log.string());
    out << rep.event_log;
  }
  return rep;
}

nlohmann::json to_json(const SimReport& report, const SimConfig& config) {
  using nlohmann::json;
  json table = json::array();
  for (std::size_t a = 0; a < kNumActivities; ++a) {
    for (std::size_t r = 0; r < kNumRooms; ++r) {
      const auto& cell = report.table[a][r];
      if (cell.detections == 0) continue;
      table.push_back({{"activity", to_string(static_cast<Activity>(a))},
                       {"room", to_string(static_cast<Room>(r))},
                       {"detections", cell.detections},
                       {"correct", cell.correct},
                       {"accuracy", static_cast<double>(cell.correct) / static_cast<double>(cell.detections)}});
    }
  }
  json events = json::array();
  for (const auto& e : report.events) events.push_back(format_event(e));

  return {{"overhead", to_json(report.overhead)},
          {"activity_table", table},
          {"posture",
           {{"windows", report.posture_windows},
            {"scored", report.posture_scored},
            {"correct", report.posture_correct},
            {"accuracy", report.posture_accuracy()}}},
          {"events", events},
          {"uploads_from_events", report.uploads_from_events(config.policy.segments_per_ack)},
          {"clamped_samples", report.clamped_samples},
          {"event_log", config.event_log.string()}};
}

}  // namespace coopsc
