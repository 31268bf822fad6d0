#include "okpose/workflow/workflow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace okpose::workflow {

std::string to_string(Phase p) {
    switch (p) {
        case Phase::Idle: return "Idle";
        case Phase::Confirming: return "Confirming";
        case Phase::Confirmed: return "Confirmed";
        case Phase::Cancelled: return "Cancelled";
    }
    return "?";
}

void ConfirmConfig::validate() const {
    if (window_ms <= 0) throw std::invalid_argument("confirm window must be positive");
    if (min_detections < 1) throw std::invalid_argument("min_detections must be at least 1");
    if (max_gap_ms <= 0 || max_gap_ms >= window_ms)
        throw std::invalid_argument("max_gap_ms must lie in (0, window_ms)");
    if (!(ok_threshold > 0.0) || !(ok_threshold < 1.0))
        throw std::invalid_argument("ok_threshold must lie in (0, 1)");
}

std::string serialize(const MotionCommand& cmd) {
    char buf[192];
    std::snprintf(buf, sizeof buf,
                  "frame=%llu target=%.6f,%.6f,%.6f displacement=%.6f,%.6f,%.6f",
                  static_cast<unsigned long long>(cmd.frame_id), cmd.target.x, cmd.target.y,
                  cmd.target.z, cmd.displacement.x, cmd.displacement.y, cmd.displacement.z);
    return buf;
}

std::string event_log_line(const Event& e) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%lld ", static_cast<long long>(e.timestamp_ms));
    std::string line = buf;
    switch (e.kind) {
        case Event::Kind::PromptOn: return line + "prompt on";
        case Event::Kind::PromptOff: return line + "prompt off";
        case Event::Kind::Transition:
            return line + "phase " + to_string(e.from) + "->" + to_string(e.to);
        case Event::Kind::Command: return line + "command " + serialize(*e.command);
        case Event::Kind::Diagnostic: return line + "diagnostic " + e.message;
    }
    return line + "?";
}

geom::Point3 compute_displacement(const geom::Point3& target, const geom::Point3& iso_center) {
    return {iso_center.x - target.x, iso_center.y - target.y, iso_center.z - target.z};
}

namespace {

/// Best okay detection of the frame (highest probability at/above threshold),
/// or nullptr when the frame has none.
const OkDetection* best_ok(const FrameObservation& obs, double threshold) {
    const OkDetection* best = nullptr;
    for (const auto& d : obs.detections) {
        if (d.probability >= threshold && (!best || d.probability > best->probability)) {
            best = &d;
        }
    }
    return best;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

CenterSample smoothed_center(const WorkflowState& s) {
    if (s.config.center_smoothing == CenterSmoothing::Last) return s.centers.back();
    std::vector<double> us, vs, ds;
    us.reserve(s.centers.size());
    vs.reserve(s.centers.size());
    ds.reserve(s.centers.size());
    for (const auto& c : s.centers) {
        us.push_back(c.uv.x);
        vs.push_back(c.uv.y);
        ds.push_back(c.depth);
    }
    CenterSample m;
    m.timestamp_ms = s.centers.back().timestamp_ms;
    m.uv = {median_of(std::move(us)), median_of(std::move(vs))};
    m.depth = median_of(std::move(ds));
    return m;
}

void transition(StepResult& r, int64_t t, Phase from, Phase to) {
    Event e;
    e.kind = Event::Kind::Transition;
    e.timestamp_ms = t;
    e.from = from;
    e.to = to;
    r.events.push_back(e);
    r.state.phase = to;
}

void emit(StepResult& r, Event::Kind kind, int64_t t, std::string message = {}) {
    Event e;
    e.kind = kind;
    e.timestamp_ms = t;
    e.message = std::move(message);
    r.events.push_back(e);
}

void clear_window(WorkflowState& s) {
    s.window_start_ms = 0;
    s.last_ok_ms = 0;
    s.ok_streak = 0;
    s.centers.clear();
}

void cancel(StepResult& r, int64_t t, std::string diagnostic = {}) {
    transition(r, t, Phase::Confirming, Phase::Cancelled);
    emit(r, Event::Kind::PromptOff, t);
    if (!diagnostic.empty()) emit(r, Event::Kind::Diagnostic, t, std::move(diagnostic));
    clear_window(r.state);
}

void begin_confirming(StepResult& r, int64_t t, Phase from, const OkDetection& ok) {
    transition(r, t, from, Phase::Confirming);
    emit(r, Event::Kind::PromptOn, t);
    auto& s = r.state;
    s.window_start_ms = t;
    s.last_ok_ms = t;
    s.ok_streak = 1;
    s.centers = {{t, ok.center, ok.depth}};
}

void confirm(StepResult& r, const FrameObservation& obs, const geom::CameraCalibration& calib,
             const geom::Point3& iso_center) {
    const int64_t t = obs.timestamp_ms;
    const CenterSample c = smoothed_center(r.state);
    if (!(c.depth > 0.0) || !std::isfinite(c.depth) || !std::isfinite(c.uv.x) ||
        !std::isfinite(c.uv.y)) {
        cancel(r, t, "invalid depth at confirmation, no command issued");
        return;
    }
    MotionCommand cmd;
    cmd.target = geom::pixel_depth_to_scanner(c.uv.x, c.uv.y, c.depth, calib);
    cmd.displacement = compute_displacement(cmd.target, iso_center);
    cmd.frame_id = obs.frame_id;
    cmd.timestamp_ms = t;
    transition(r, t, Phase::Confirming, Phase::Confirmed);
    emit(r, Event::Kind::PromptOff, t);
    Event e;
    e.kind = Event::Kind::Command;
    e.timestamp_ms = t;
    e.command = cmd;
    r.events.push_back(e);
    clear_window(r.state);
}

}  // namespace

StepResult step(const WorkflowState& state, const FrameObservation& obs,
                const geom::CameraCalibration& calib, const geom::Point3& iso_center) {
    state.config.validate();
    if (obs.timestamp_ms < state.last_timestamp_ms) {
        throw std::invalid_argument("observation timestamps must be non-decreasing");
    }
    StepResult r{state, {}};
    r.state.last_timestamp_ms = obs.timestamp_ms;
    const int64_t t = obs.timestamp_ms;

    // A cancelling step reports Cancelled once; afterwards it is an Idle.
    if (r.state.phase == Phase::Cancelled) {
        transition(r, t, Phase::Cancelled, Phase::Idle);
    }

    const OkDetection* ok = best_ok(obs, state.config.ok_threshold);

    switch (r.state.phase) {
        case Phase::Idle:
            if (ok) begin_confirming(r, t, Phase::Idle, *ok);
            break;
        case Phase::Confirming:
            if (!ok) {
                cancel(r, t);
            } else if (t - r.state.last_ok_ms > state.config.max_gap_ms) {
                cancel(r, t);  // the succession broke during the silence
            } else {
                r.state.ok_streak += 1;
                r.state.last_ok_ms = t;
                r.state.centers.push_back({t, ok->center, ok->depth});
                if (t - r.state.window_start_ms >= state.config.window_ms &&
                    r.state.ok_streak >= state.config.min_detections) {
                    confirm(r, obs, calib, iso_center);
                }
            }
            break;
        case Phase::Confirmed:
            if (!ok) transition(r, t, Phase::Confirmed, Phase::Idle);
            break;
        case Phase::Cancelled:
            break;  // unreachable: normalized above
    }
    return r;
}

}  // namespace okpose::workflow
