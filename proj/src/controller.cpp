#include "coopsc/controller.hpp"

#include <algorithm>

#include "coopsc/error.hpp"

namespace coopsc {

void AckPolicy::validate() const {
  if (validation_windows == 0) throw Error(ErrorKind::kConfig, "validation_windows must be >= 1");
  if (segments_per_ack == 0) throw Error(ErrorKind::kConfig, "segments_per_ack must be >= 1");
  if (subset)
    for (const auto& c : *subset)
      if (std::find(cameras.begin(), cameras.end(), c) == cameras.end())
        throw Error(ErrorKind::kConfig, "ACK subset names unknown camera '" + c + "'");
}

std::vector<CameraId> AckPolicy::targets() const { return subset ? *subset : cameras; }

std::string format_event(const ControlEvent& e) {
  std::string line = "ACK t=" + std::to_string(e.t) + " from=" + std::string(to_string(e.from)) +
                     " to=" + std::string(to_string(e.to)) + " targets=";
  for (std::size_t i = 0; i < e.targets.size(); ++i) {
    if (i) line += ',';
    line += e.targets[i];
  }
  return line;
}

StepResult step(const ControllerState& state, Posture p, std::size_t window_index, const AckPolicy& policy) {
  if (state.last_window && window_index != *state.last_window + 1)
    throw Error(ErrorKind::kPrecondition, "posture window " + std::to_string(window_index) + " does not follow " +
                                              std::to_string(*state.last_window));
  StepResult r{state, std::nullopt};
  ControllerState& s = r.state;
  s.last_window = window_index;

  auto begin_candidate = [&](Posture q) {
    s.candidate = q;
    s.count = 1;
    s.mode = ControllerState::Mode::kPending;
  };

  switch (state.mode) {
    case ControllerState::Mode::kUninitialized:
      s.mode = ControllerState::Mode::kStable;
      s.stable = p;
      return r;
    case ControllerState::Mode::kStable:
      if (p == s.stable) return r;
      begin_candidate(p);
      break;
    case ControllerState::Mode::kPending:
      if (p == s.candidate) {
        ++s.count;
      } else if (p == s.stable) {
        s.mode = ControllerState::Mode::kStable;
        s.count = 0;
        return r;
      } else {
        begin_candidate(p);
      }
      break;
  }

  if (s.count >= policy.validation_windows) {
    r.event = ControlEvent{window_index, s.stable, s.candidate, policy.targets()};
    s.stable = s.candidate;
    s.mode = ControllerState::Mode::kStable;
    s.count = 0;
    s.last_event = window_index;
  }
  return r;
}

std::vector<ControlEvent> fold_events(std::span<const Posture> postures, const AckPolicy& policy) {
  std::vector<ControlEvent> events;
  ControllerState state;
  for (std::size_t i = 0; i < postures.size(); ++i) {
    auto r = step(state, postures[i], i, policy);
    state = r.state;
    if (r.event) events.push_back(std::move(*r.event));
  }
  return events;
}

std::vector<ControlEvent> oracle_events(std::span<const Posture> postures, const AckPolicy& policy) {
  std::vector<ControlEvent> events;
  if (postures.empty()) return events;
  Posture stable = postures[0];
  std::size_t start = 0;
  while (start < postures.size()) {
    std::size_t end = start;
    while (end < postures.size() && postures[end] == postures[start]) ++end;
    const std::size_t len = end - start;
    if (postures[start] != stable && len >= policy.validation_windows) {
      events.push_back({start + policy.validation_windows - 1, stable, postures[start], policy.targets()});
      stable = postures[start];
    }
    start = end;
  }
  return events;
}

std::vector<UploadCommand> dispatch(const ControlEvent& event, const AckPolicy& policy, OverheadLedger& ledger) {
  std::vector<UploadCommand> cmds;
  for (const auto& cam : event.targets) {
    if (std::find(policy.cameras.begin(), policy.cameras.end(), cam) == policy.cameras.end())
      throw Error(ErrorKind::kPrecondition, "ACK targets unknown camera '" + cam + "'");
    cmds.push_back({cam, event.t, policy.segments_per_ack});
  }
  ledger.add_uploads(cmds.size() * policy.segments_per_ack);
  return cmds;
}

}  // namespace coopsc
