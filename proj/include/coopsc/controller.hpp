#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coopsc/overhead.hpp"
#include "coopsc/posture.hpp"

namespace coopsc {

using CameraId = std::string;

inline const std::vector<CameraId> kDefaultCameras{"bedroom", "living_room", "kitchen"};

struct AckPolicy {
  /// Windows the new posture must be observed in, counting the change window.
  std::size_t validation_windows = 3;
  std::vector<CameraId> cameras = kDefaultCameras;
  /// nullopt broadcasts to every camera.
  std::optional<std::vector<CameraId>> subset;
  std::size_t segments_per_ack = 1;

  /// Throws kConfig when a counter is zero or the subset names an unknown camera.
  void validate() const;
  std::vector<CameraId> targets() const;
};

struct ControlEvent {
  std::size_t t = 0;  // window index at which the transition was validated
  Posture from = Posture::kLying;
  Posture to = Posture::kLying;
  std::vector<CameraId> targets;

  friend bool operator==(const ControlEvent&, const ControlEvent&) = default;
};

/// Event log line: "ACK t=<i> from=<posture> to=<posture> targets=<a,b,...>".
std::string format_event(const ControlEvent& e);

struct ControllerState {
  enum class Mode { kUninitialized, kStable, kPending };

  Mode mode = Mode::kUninitialized;
  Posture stable = Posture::kLying;
  Posture candidate = Posture::kLying;
  std::size_t count = 0;  // consecutive windows of `candidate` while pending
  std::optional<std::size_t> last_window;
  std::optional<std::size_t> last_event;

  friend bool operator==(const ControllerState&, const ControllerState&) = default;
};

struct StepResult {
  ControllerState state;
  std::optional<ControlEvent> event;
};

/// One posture decision. Window indices must arrive consecutively; a gap
/// throws kPrecondition.
StepResult step(const ControllerState& state, Posture p, std::size_t window_index, const AckPolicy& policy);

/// Folds step over `postures` with windows numbered from 0.
std::vector<ControlEvent> fold_events(std::span<const Posture> postures, const AckPolicy& policy);

/// Run-based reference: after the first run, each maximal run whose value
/// differs from the current stable posture and lasts at least
/// validation_windows produces one event at run start + validation_windows - 1.
std::vector<ControlEvent> oracle_events(std::span<const Posture> postures, const AckPolicy& policy);

struct UploadCommand {
  CameraId camera;
  std::size_t start_window = 0;
  std::size_t segments = 0;

  friend bool operator==(const UploadCommand&, const UploadCommand&) = default;
};

/// One command per event target; adds targets x segments_per_ack to N_t.
/// Throws kPrecondition for a camera the policy does not know.
std::vector<UploadCommand> dispatch(const ControlEvent& event, const AckPolicy& policy, OverheadLedger& ledger);

}  // namespace coopsc
