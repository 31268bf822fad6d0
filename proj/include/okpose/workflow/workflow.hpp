#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "okpose/geom/geom.hpp"

namespace okpose::workflow {

/// Confirmation phases. A sustained okay gesture moves Idle -> Confirming;
/// holding it through the whole window yields Confirmed plus exactly one
/// motion command; withdrawing it (or a detection gap) yields Cancelled,
/// which behaves like Idle on the following step.
enum class Phase { Idle, Confirming, Confirmed, Cancelled };

std::string to_string(Phase p);

enum class CenterSmoothing { Last, Median };

struct ConfirmConfig {
    int64_t window_ms = 3000;     ///< gesture must be held this long
    int min_detections = 10;      ///< okay frames required inside the window
    int64_t max_gap_ms = 600;     ///< allowed silence between okay frames
    CenterSmoothing center_smoothing = CenterSmoothing::Median;
    double ok_threshold = 0.5;    ///< probability at or above counts as okay

    /// Throws std::invalid_argument on: window_ms <= 0, min_detections < 1,
    /// max_gap_ms outside (0, window_ms), threshold outside (0, 1).
    void validate() const;
};

/// One okay-gesture candidate in a frame: classifier probability, circle
/// center in image pixels, and the depth reading at that pixel (depth units).
struct OkDetection {
    double probability = 0.0;
    geom::Vec2 center;
    double depth = 0.0;
};

/// Everything the state machine sees about one frame. Detections must be
/// pre-filtered to technician hands; timestamps must be non-decreasing.
struct FrameObservation {
    int64_t timestamp_ms = 0;
    uint64_t frame_id = 0;
    std::vector<OkDetection> detections;
};

/// Center evidence accumulated while Confirming.
struct CenterSample {
    int64_t timestamp_ms = 0;
    geom::Vec2 uv;
    double depth = 0.0;
};

struct WorkflowState {
    Phase phase = Phase::Idle;
    int64_t window_start_ms = 0;  ///< set while Confirming
    int64_t last_ok_ms = 0;       ///< most recent okay frame while Confirming
    int ok_streak = 0;            ///< okay frames seen in the current window
    std::vector<CenterSample> centers;  ///< all centers of the current window
    int64_t last_timestamp_ms = std::numeric_limits<int64_t>::min();
    ConfirmConfig config;
};

/// Table-motion request issued exactly once per Confirmed episode.
struct MotionCommand {
    geom::Point3 target;       ///< scanner frame, meters
    geom::Point3 displacement; ///< iso_center - target, meters
    uint64_t frame_id = 0;     ///< frame that completed the confirmation
    int64_t timestamp_ms = 0;
};

/// `frame=<id> target=<x>,<y>,<z> displacement=<dx>,<dy>,<dz>`, six decimals.
std::string serialize(const MotionCommand& cmd);

struct Event {
    enum class Kind {
        PromptOn,    ///< audio / lighting prompts activated
        PromptOff,   ///< prompts deactivated
        Transition,  ///< phase changed (from -> to)
        Command,     ///< MotionCommand emitted (payload in `command`)
        Diagnostic   ///< refused to act; human-readable reason in `message`
    };
    Kind kind;
    int64_t timestamp_ms = 0;
    Phase from = Phase::Idle;  ///< Transition only
    Phase to = Phase::Idle;    ///< Transition only
    std::optional<MotionCommand> command;
    std::string message;
};

/// One line per event for the structured text log.
std::string event_log_line(const Event& e);

struct StepResult {
    WorkflowState state;
    std::vector<Event> events;
};

/// Advances the confirmation machine by one frame.
///
/// Rules: Idle + okay (best probability >= threshold) -> Confirming with
/// prompts on. Confirming + frame without okay, or an okay arriving after a
/// silence longer than max_gap_ms -> Cancelled. Confirming with elapsed >=
/// window_ms and streak >= min_detections -> Confirmed, emitting exactly one
/// MotionCommand whose target back-projects the smoothed center through
/// `calib`; a non-finite or non-positive smoothed depth yields Cancelled plus
/// a Diagnostic instead of a command. Confirmed persists while okay continues
/// and drops to Idle when it stops. Cancelled is reported for the step that
/// cancelled and behaves like Idle on the next step.
///
/// Throws std::invalid_argument on a timestamp older than the previous one.
StepResult step(const WorkflowState& state, const FrameObservation& obs,
                const geom::CameraCalibration& calib, const geom::Point3& iso_center);

/// iso_center - target, per axis.
geom::Point3 compute_displacement(const geom::Point3& target, const geom::Point3& iso_center);

}  // namespace okpose::workflow
