#pragma once

// JSON encoding of every engine type, and session-log persistence.
// Field names here are the schema; docs/session_log_schema.md mirrors them.

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>

#include "weldar/session.hpp"
#include "weldar/synth_bench.hpp"
#include "weldar/weld_trigger.hpp"

namespace weldar {

using json = nlohmann::json;

namespace jsonio {

/// Typed access into a JSON document that reports the path of the first
/// offending field.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

    const json& raw() const { return j_; }
    const std::string& path() const { return path_; }

    [[noreturn]] void fail(const std::string& why) const { throw SchemaError(path_ + ": " + why); }

    bool has(std::string_view key) const { return j_.is_object() && j_.contains(key) && !j_.at(key).is_null(); }

    Reader at(std::string_view key) const {
        if (!j_.is_object()) fail("expected an object");
        auto it = j_.find(key);
        if (it == j_.end()) throw SchemaError(child_path(key) + ": missing field");
        return Reader(*it, child_path(key));
    }

    Reader at(std::size_t i) const {
        if (!j_.is_array()) fail("expected an array");
        if (i >= j_.size()) fail("index " + std::to_string(i) + " out of range");
        return Reader(j_[i], path_ + "[" + std::to_string(i) + "]");
    }

    std::size_t size() const {
        if (!j_.is_array()) fail("expected an array");
        return j_.size();
    }

    double number() const {
        if (!j_.is_number()) fail("expected a number");
        return j_.get<double>();
    }
    std::int64_t integer() const {
        if (!j_.is_number_integer()) fail("expected an integer");
        return j_.get<std::int64_t>();
    }
    bool boolean() const {
        if (!j_.is_boolean()) fail("expected a boolean");
        return j_.get<bool>();
    }
    std::string string() const {
        if (!j_.is_string()) fail("expected a string");
        return j_.get<std::string>();
    }

    double number(std::string_view key) const { return at(key).number(); }
    std::int64_t integer(std::string_view key) const { return at(key).integer(); }
    bool boolean(std::string_view key) const { return at(key).boolean(); }
    std::string string(std::string_view key) const { return at(key).string(); }

    std::optional<double> opt_number(std::string_view key) const {
        if (!has(key)) return std::nullopt;
        return at(key).number();
    }
    double number_or(std::string_view key, double fallback) const { return has(key) ? number(key) : fallback; }
    std::int64_t integer_or(std::string_view key, std::int64_t fallback) const {
        return has(key) ? integer(key) : fallback;
    }
    bool boolean_or(std::string_view key, bool fallback) const { return has(key) ? boolean(key) : fallback; }

private:
    std::string child_path(std::string_view key) const {
        return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
    }

    const json& j_;
    std::string path_;
};

template <typename Enum, std::size_t N>
Enum read_enum(const Reader& r, const std::array<Enum, N>& values) {
    const std::string s = r.string();
    for (auto v : values)
        if (to_string(v) == s) return v;
    r.fail("unknown value '" + s + "'");
}

inline constexpr std::array<ModuleKind, 6> kModuleKinds = {ModuleKind::Ctwd, ModuleKind::TravelAngle,
                                                            ModuleKind::WorkAngle, ModuleKind::Speed,
                                                            ModuleKind::Combination, ModuleKind::Test};
inline constexpr std::array<RangeState, 3> kRangeStates = {RangeState::Within, RangeState::Below, RangeState::Above};
inline constexpr std::array<Hint, 9> kHints = {Hint::Ok, Hint::TooFar, Hint::TooClose, Hint::TooFast, Hint::TooSlow,
                                               Hint::TiltLeft, Hint::TiltRight, Hint::TiltForward, Hint::TiltBackward};
inline constexpr std::array<ScreeningKind, 3> kScreeningKinds = {
    ScreeningKind::Valid, ScreeningKind::ExcludedNegativeCtwd, ScreeningKind::FlaggedExtremeInitialCtwd};
inline constexpr std::array<Condition, 2> kConditions = {Condition::AR, Condition::Video};
inline constexpr std::array<Sequence, 2> kSequences = {Sequence::ARFirst, Sequence::VideoFirst};

// --- primitives -------------------------------------------------------------

inline json write(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
inline json write(const Quat& q) { return json::array({q.w(), q.x(), q.y(), q.z()}); }

inline Vec3 read_vec3(const Reader& r) {
    if (r.size() != 3) r.fail("expected 3 numbers");
    return Vec3(r.at(std::size_t{0}).number(), r.at(1).number(), r.at(2).number());
}

inline Quat read_quat(const Reader& r) {
    if (r.size() != 4) r.fail("expected 4 numbers (w, x, y, z)");
    return Quat(r.at(std::size_t{0}).number(), r.at(1).number(), r.at(2).number(), r.at(3).number());
}

inline json write(const Range& r) { return json::array({r.lo, r.hi}); }

inline Range read_range(const Reader& r) {
    if (r.size() != 2) r.fail("expected [lo, hi]");
    Range out{r.at(std::size_t{0}).number(), r.at(1).number()};
    if (!out.valid()) r.fail("range must satisfy lo < hi");
    return out;
}

inline json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// --- pose model -------------------------------------------------------------

inline json write(const PoseFrame& f) {
    json j{{"timestamp", f.timestamp},   {"frame_index", f.frame_index},   {"position", write(f.position)},
           {"orientation", write(f.orientation)}, {"trigger_down", f.trigger_down}};
    if (f.audio_level) j["audio_level"] = *f.audio_level;
    if (f.tracking_confidence) j["tracking_confidence"] = *f.tracking_confidence;
    return j;
}

inline PoseFrame read_frame(const Reader& r) {
    PoseFrame f;
    f.timestamp = r.number("timestamp");
    f.frame_index = r.integer("frame_index");
    f.position = read_vec3(r.at("position"));
    f.orientation = read_quat(r.at("orientation"));
    f.trigger_down = r.boolean_or("trigger_down", false);
    f.audio_level = r.opt_number("audio_level");
    f.tracking_confidence = r.opt_number("tracking_confidence");
    return f;
}

inline json write(const Pose& p) { return {{"position", write(p.position)}, {"orientation", write(p.orientation)}}; }

inline Pose read_pose(const Reader& r) { return Pose{read_vec3(r.at("position")), read_quat(r.at("orientation"))}; }

inline json write(const CalibrationState& c) {
    return {{"anchor", write(c.anchor_pose())},
            {"grid_plane", {{"point", write(c.grid_plane().point)}, {"normal", write(c.grid_plane().normal)}}},
            {"weld_direction", write(c.weld_direction())},
            {"tip_offset",
             {{"translation", write(c.tip_offset().translation)}, {"rotation", write(c.tip_offset().rotation)}}}};
}

/// Rotation defaults to identity when omitted.
inline RigidOffset read_tip_offset(const Reader& r) {
    RigidOffset off;
    off.translation = read_vec3(r.at("translation"));
    if (r.has("rotation")) off.rotation = read_quat(r.at("rotation"));
    return off;
}

inline CalibrationState read_calibration(const Reader& r) {
    const Pose anchor = read_pose(r.at("anchor"));
    // Anchor-only form: derive the grid from the station pose.
    if (!r.has("grid_plane")) {
        const RigidOffset off = r.has("tip_offset") ? read_tip_offset(r.at("tip_offset")) : RigidOffset{};
        try {
            return CalibrationState::from_anchor(anchor, off, r.number_or("bench_drop_m", 0.0));
        } catch (const InvalidCalibrationError& e) {
            r.fail(e.what());
        }
    }
    GridPlane plane{read_vec3(r.at("grid_plane").at("point")), read_vec3(r.at("grid_plane").at("normal"))};
    const Vec3 dir = read_vec3(r.at("weld_direction"));
    const RigidOffset off = read_tip_offset(r.at("tip_offset"));
    try {
        return CalibrationState(anchor, plane, dir, off);
    } catch (const InvalidCalibrationError& e) {
        r.fail(e.what());
    }
}

inline json write(const WeldLineSpec& l) {
    return {{"start_point", write(l.start_point)}, {"direction", write(l.direction)}, {"length_m", l.length_m}};
}

inline WeldLineSpec read_line_spec(const Reader& r) {
    WeldLineSpec l;
    l.start_point = read_vec3(r.at("start_point"));
    l.direction = read_vec3(r.at("direction"));
    l.length_m = r.number("length_m");
    return l;
}

inline json write(const TargetRanges& t) {
    return {{"ctwd_mm", write(t.ctwd_mm)},
            {"travel_angle_deg", write(t.travel_angle_deg)},
            {"work_angle_deg", write(t.work_angle_deg)},
            {"speed_ipm", write(t.speed_ipm)}};
}

/// Missing keys keep their defaults so config files can override a subset.
inline TargetRanges read_ranges(const Reader& r, TargetRanges base = {}) {
    if (r.has("ctwd_mm")) base.ctwd_mm = read_range(r.at("ctwd_mm"));
    if (r.has("travel_angle_deg")) base.travel_angle_deg = read_range(r.at("travel_angle_deg"));
    if (r.has("work_angle_deg")) base.work_angle_deg = read_range(r.at("work_angle_deg"));
    if (r.has("speed_ipm")) base.speed_ipm = read_range(r.at("speed_ipm"));
    return base;
}

// --- skill / feedback -------------------------------------------------------

inline json write(const SkillSample& s) {
    return {{"timestamp", s.timestamp},
            {"frame_index", s.frame_index},
            {"ctwd_mm", s.ctwd_mm},
            {"travel_angle_deg", s.travel_angle_deg},
            {"work_angle_deg", s.work_angle_deg},
            {"lateral_tilt_deg", s.lateral_tilt_deg},
            {"speed_ipm", opt(s.speed_ipm)},
            {"raw_speed_ipm", s.raw_speed_ipm},
            {"tip", json::array({s.tip.u, s.tip.v, s.tip.h})},
            {"valid", s.valid},
            {"drift_flag", s.drift_flag}};
}

inline SkillSample read_sample(const Reader& r) {
    SkillSample s;
    s.timestamp = r.number("timestamp");
    s.frame_index = r.integer("frame_index");
    s.ctwd_mm = r.number("ctwd_mm");
    s.travel_angle_deg = r.number("travel_angle_deg");
    s.work_angle_deg = r.number("work_angle_deg");
    s.lateral_tilt_deg = r.number_or("lateral_tilt_deg", 0.0);
    s.speed_ipm = r.opt_number("speed_ipm");
    s.raw_speed_ipm = r.number("raw_speed_ipm");
    const Vec3 tip = read_vec3(r.at("tip"));
    s.tip = GridCoords{tip.x(), tip.y(), tip.z()};
    s.valid = r.boolean("valid");
    s.drift_flag = r.boolean("drift_flag");
    return s;
}

inline json write(const FeedbackEvent& e) {
    return {{"parameter", std::string(to_string(e.parameter))},
            {"state", std::string(to_string(e.state))},
            {"hint", std::string(to_string(e.hint))},
            {"label", std::string(hint_label(e.hint))},
            {"onset", e.onset},
            {"offset", opt(e.offset)}};
}

inline FeedbackEvent read_event(const Reader& r) {
    FeedbackEvent e;
    e.parameter = read_enum(r.at("parameter"), kAllParameters);
    e.state = read_enum(r.at("state"), kRangeStates);
    e.hint = read_enum(r.at("hint"), kHints);
    e.onset = r.number("onset");
    e.offset = r.opt_number("offset");
    return e;
}

inline json write(const ParameterSummary& p) {
    return {{"pct_within", p.pct_within}, {"pct_above", p.pct_above}, {"pct_below", p.pct_below},
            {"frame_count", p.frame_count}};
}

inline json write(const LineSummary& s) {
    json params = json::object();
    for (auto p : kAllParameters) params[std::string(to_string(p))] = write(s.of(p));
    return {{"parameters", params},
            {"smoothness_ipm2", s.smoothness_ipm2},
            {"accuracy_mm", s.accuracy_mm},
            {"valid_frame_count", s.valid_frame_count},
            {"excluded", s.excluded},
            {"exclusion_reason", s.exclusion_reason}};
}

inline LineSummary read_summary(const Reader& r) {
    LineSummary s;
    const Reader params = r.at("parameters");
    for (auto p : kAllParameters) {
        const Reader pr = params.at(to_string(p));
        auto& ps = s.parameters[index_of(p)];
        ps.pct_within = pr.number("pct_within");
        ps.pct_above = pr.number("pct_above");
        ps.pct_below = pr.number("pct_below");
        ps.frame_count = static_cast<std::size_t>(pr.integer("frame_count"));
    }
    s.smoothness_ipm2 = r.number("smoothness_ipm2");
    s.accuracy_mm = r.number("accuracy_mm");
    s.valid_frame_count = static_cast<std::size_t>(r.integer("valid_frame_count"));
    s.excluded = r.boolean("excluded");
    s.exclusion_reason = r.has("exclusion_reason") ? r.string("exclusion_reason") : "";
    return s;
}

inline json write(const ScreeningVerdict& v) { return {{"kind", std::string(to_string(v.kind))}, {"detail", v.detail}}; }

inline ScreeningVerdict read_screening(const Reader& r) {
    return {read_enum(r.at("kind"), kScreeningKinds), r.has("detail") ? r.string("detail") : ""};
}

inline json write(const DriftReport& d) {
    json events = json::array();
    for (const auto& e : d.events) events.push_back(json::array({e.first, e.last}));
    return {{"flagged_frames", d.flagged_frames},
            {"events", events},
            {"frame_count", d.frame_count},
            {"affected_frame_fraction", d.affected_frame_fraction}};
}

inline DriftReport read_drift(const Reader& r) {
    DriftReport d;
    const Reader flagged = r.at("flagged_frames");
    for (std::size_t i = 0; i < flagged.size(); ++i) d.flagged_frames.push_back(flagged.at(i).integer());
    const Reader events = r.at("events");
    for (std::size_t i = 0; i < events.size(); ++i) {
        const Reader e = events.at(i);
        if (e.size() != 2) e.fail("expected [first, last]");
        d.events.push_back({static_cast<std::size_t>(e.at(std::size_t{0}).integer()),
                            static_cast<std::size_t>(e.at(1).integer())});
    }
    d.frame_count = static_cast<std::size_t>(r.integer("frame_count"));
    d.affected_frame_fraction = r.number("affected_frame_fraction");
    return d;
}

// --- plans and settings -----------------------------------------------------

inline json write(const LessonPlan& p) {
    json modules = json::array();
    for (const auto& m : p.modules)
        modules.push_back({{"kind", std::string(to_string(m.kind))}, {"lines", m.lines}, {"assisted", m.assisted}});
    return {{"modules", modules}, {"pass_threshold", p.pass_threshold}, {"retry_cap_factor", p.retry_cap_factor}};
}

inline LessonPlan read_plan(const Reader& r) {
    LessonPlan p;
    const Reader modules = r.at("modules");
    for (std::size_t i = 0; i < modules.size(); ++i) {
        const Reader m = modules.at(i);
        ModuleSpec spec;
        spec.kind = read_enum(m.at("kind"), kModuleKinds);
        spec.lines = static_cast<int>(m.integer("lines"));
        spec.assisted = m.boolean_or("assisted", spec.kind != ModuleKind::Test);
        p.modules.push_back(spec);
    }
    p.pass_threshold = r.number_or("pass_threshold", p.pass_threshold);
    p.retry_cap_factor = r.number_or("retry_cap_factor", p.retry_cap_factor);
    try {
        p.validate();
    } catch (const PreconditionError& e) {
        r.fail(e.what());
    }
    return p;
}

inline json write(const EngineSettings& s) {
    return {{"kalman",
             {{"process_noise_accel", s.extractor.kalman.process_noise_accel},
              {"measurement_noise_sd", s.extractor.kalman.measurement_noise_sd},
              {"initial_velocity_sd", s.extractor.kalman.initial_velocity_sd}}},
            {"speed_window_s", s.extractor.speed_window_s},
            {"debounce_frames", s.debounce_frames},
            {"drift",
             {{"ctwd_jump_mm", s.drift.ctwd_jump_mm},
              {"speed_jump_ipm", s.drift.speed_jump_ipm},
              {"max_angular_velocity_dps", s.drift.max_angular_velocity_dps}}},
            {"screening",
             {{"negative_ctwd_tolerance_mm", s.screening.negative_ctwd_tolerance_mm},
              {"extreme_initial_ctwd_mm", s.screening.extreme_initial_ctwd_mm},
              {"initial_frames", s.screening.initial_frames}}}};
}

inline EngineSettings read_settings(const Reader& r) {
    EngineSettings s;
    if (r.has("kalman")) {
        const Reader k = r.at("kalman");
        s.extractor.kalman.process_noise_accel = k.number_or("process_noise_accel", s.extractor.kalman.process_noise_accel);
        s.extractor.kalman.measurement_noise_sd = k.number_or("measurement_noise_sd", s.extractor.kalman.measurement_noise_sd);
        s.extractor.kalman.initial_velocity_sd = k.number_or("initial_velocity_sd", s.extractor.kalman.initial_velocity_sd);
    }
    s.extractor.speed_window_s = r.number_or("speed_window_s", s.extractor.speed_window_s);
    s.debounce_frames = static_cast<int>(r.integer_or("debounce_frames", s.debounce_frames));
    if (r.has("drift")) {
        const Reader d = r.at("drift");
        s.drift.ctwd_jump_mm = d.number_or("ctwd_jump_mm", s.drift.ctwd_jump_mm);
        s.drift.speed_jump_ipm = d.number_or("speed_jump_ipm", s.drift.speed_jump_ipm);
        s.drift.max_angular_velocity_dps = d.number_or("max_angular_velocity_dps", s.drift.max_angular_velocity_dps);
    }
    if (r.has("screening")) {
        const Reader c = r.at("screening");
        s.screening.negative_ctwd_tolerance_mm = c.number_or("negative_ctwd_tolerance_mm", s.screening.negative_ctwd_tolerance_mm);
        s.screening.extreme_initial_ctwd_mm = c.number_or("extreme_initial_ctwd_mm", s.screening.extreme_initial_ctwd_mm);
        s.screening.initial_frames = static_cast<std::size_t>(c.integer_or("initial_frames", static_cast<std::int64_t>(s.screening.initial_frames)));
    }
    return s;
}

// --- session log ------------------------------------------------------------

inline json write(const LineRecord& l) {
    json frames = json::array(), samples = json::array(), events = json::array();
    for (const auto& f : l.frames) frames.push_back(write(f));
    for (const auto& s : l.samples) samples.push_back(write(s));
    for (const auto& e : l.events) events.push_back(write(e));
    return {{"module", std::string(to_string(l.module))},
            {"module_index", l.module_index},
            {"line_index", l.line_index},
            {"assisted", l.assisted},
            {"line", write(l.line)},
            {"calibration", l.calibration ? write(*l.calibration) : json(nullptr)},
            {"frames", frames},
            {"samples", samples},
            {"events", events},
            {"summary", write(l.summary)},
            {"screening", write(l.screening)},
            {"drift", write(l.drift)}};
}

inline LineRecord read_line_record(const Reader& r) {
    LineRecord l;
    l.module = read_enum(r.at("module"), kModuleKinds);
    l.module_index = static_cast<std::size_t>(r.integer("module_index"));
    l.line_index = static_cast<int>(r.integer("line_index"));
    l.assisted = r.boolean("assisted");
    l.line = read_line_spec(r.at("line"));
    if (r.has("calibration")) l.calibration = read_calibration(r.at("calibration"));
    const Reader frames = r.at("frames");
    for (std::size_t i = 0; i < frames.size(); ++i) l.frames.push_back(read_frame(frames.at(i)));
    const Reader samples = r.at("samples");
    for (std::size_t i = 0; i < samples.size(); ++i) l.samples.push_back(read_sample(samples.at(i)));
    const Reader events = r.at("events");
    for (std::size_t i = 0; i < events.size(); ++i) l.events.push_back(read_event(events.at(i)));
    l.summary = read_summary(r.at("summary"));
    l.screening = read_screening(r.at("screening"));
    l.drift = read_drift(r.at("drift"));

    // Every referenced frame index must exist in this line.
    std::vector<std::int64_t> indices;
    indices.reserve(l.frames.size());
    for (const auto& f : l.frames) indices.push_back(f.frame_index);
    auto exists = [&](std::int64_t idx) { return std::binary_search(indices.begin(), indices.end(), idx); };
    if (!std::is_sorted(indices.begin(), indices.end())) r.at("frames").fail("frame indices are not ordered");
    if (l.samples.size() != l.frames.size()) r.at("samples").fail("sample count does not match frame count");
    for (std::size_t i = 0; i < l.samples.size(); ++i)
        if (l.samples[i].frame_index != l.frames[i].frame_index)
            r.at("samples").at(i).at("frame_index").fail("does not match frames[" + std::to_string(i) + "]");
    for (std::size_t i = 0; i < l.drift.flagged_frames.size(); ++i)
        if (!exists(l.drift.flagged_frames[i]))
            r.at("drift").at("flagged_frames").at(i).fail("references a frame that does not exist");
    return l;
}

inline json write(const SessionHeader& h) {
    return {{"schema_version", h.schema_version},
            {"participant_id", h.participant_id},
            {"condition", std::string(to_string(h.condition))},
            {"sequence", std::string(to_string(h.sequence))},
            {"lesson_plan", write(h.plan)},
            {"calibration", h.calibration ? write(*h.calibration) : json(nullptr)},
            {"target_ranges", write(h.ranges)},
            {"settings", write(h.settings)}};
}

inline SessionHeader read_header(const Reader& r) {
    SessionHeader h;
    h.schema_version = r.string("schema_version");
    if (h.schema_version != kSessionSchemaVersion)
        r.at("schema_version").fail("unsupported schema version '" + h.schema_version + "'");
    h.participant_id = r.string("participant_id");
    h.condition = read_enum(r.at("condition"), kConditions);
    h.sequence = read_enum(r.at("sequence"), kSequences);
    h.plan = read_plan(r.at("lesson_plan"));
    if (r.has("calibration")) h.calibration = read_calibration(r.at("calibration"));
    h.ranges = read_ranges(r.at("target_ranges"));
    h.settings = r.has("settings") ? read_settings(r.at("settings")) : EngineSettings{};
    return h;
}

inline json write(const SessionLog& log) {
    json lines = json::array();
    for (const auto& l : log.lines) lines.push_back(write(l));
    return {{"header", write(log.header)}, {"lines", lines}};
}

inline SessionLog read_session(const Reader& r) {
    SessionLog log;
    log.header = read_header(r.at("header"));
    const Reader lines = r.at("lines");
    for (std::size_t i = 0; i < lines.size(); ++i) log.lines.push_back(read_line_record(lines.at(i)));
    return log;
}

// --- synth specs ------------------------------------------------------------

inline GridAxis read_axis(const Reader& r) {
    const std::string s = r.string();
    if (s == "weld_direction") return GridAxis::WeldDirection;
    if (s == "side") return GridAxis::Side;
    if (s == "normal") return GridAxis::Normal;
    r.fail("unknown axis '" + s + "' (weld_direction, side, normal)");
}

/// Trajectory spec; line geometry defaults to the calibrated weld line.
inline TrajectorySpec read_trajectory(const Reader& r, const CalibrationState& calib) {
    TrajectorySpec t;
    t.line = default_line(calib);
    if (r.has("line")) {
        const Reader l = r.at("line");
        if (l.has("start_point")) t.line.start_point = read_vec3(l.at("start_point"));
        if (l.has("direction")) t.line.direction = read_vec3(l.at("direction"));
        if (l.has("length_m")) t.line.length_m = l.number("length_m");
        if (l.has("length_in")) t.line.length_m = l.number("length_in") * kMetersPerInch;
    }
    t.speed_ipm = r.number_or("speed_ipm", t.speed_ipm);
    t.ctwd_mm = r.number_or("ctwd_mm", t.ctwd_mm);
    t.travel_angle_deg = r.number_or("travel_angle_deg", t.travel_angle_deg);
    t.work_angle_deg = r.number_or("work_angle_deg", t.work_angle_deg);
    t.lateral_sign = r.number_or("lateral_sign", t.lateral_sign);
    t.duration_s = r.opt_number("duration_s");
    if (r.has("jitter")) {
        t.jitter.position_sd_m = r.at("jitter").number_or("position_sd_m", 0.0);
        t.jitter.orientation_sd_deg = r.at("jitter").number_or("orientation_sd_deg", 0.0);
    }
    if (r.has("drift_events")) {
        const Reader ev = r.at("drift_events");
        for (std::size_t i = 0; i < ev.size(); ++i) {
            const Reader e = ev.at(i);
            t.drift_events.push_back({e.number("time_s"), world_axis(read_axis(e.at("axis")), calib), e.number("step_m")});
        }
    }
    t.seed = static_cast<std::uint64_t>(r.integer_or("seed", 0));
    t.start_time = r.number_or("start_time", 0.0);
    t.audio_level = r.opt_number("audio_level");
    return t;
}

}  // namespace jsonio

// --- persistence ------------------------------------------------------------

inline json to_json(const SessionLog& log) { return jsonio::write(log); }

inline SessionLog session_from_json(const json& j) { return jsonio::read_session(jsonio::Reader(j, "")); }

inline SessionLog parse_session(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("not valid JSON: ") + e.what());
    }
    return session_from_json(j);
}

/// Atomic write: the whole document goes to a sibling temp file which is
/// then renamed over `path`.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    namespace fs = std::filesystem;
    std::random_device rd;
    const fs::path tmp = path.string() + ".tmp-" + std::to_string(rd());
    try {
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw StorageError("cannot open " + tmp.string() + " for writing");
            out << contents;
            out.flush();
            if (!out) throw StorageError("write to " + tmp.string() + " failed");
        }
        fs::rename(tmp, path);
    } catch (const fs::filesystem_error& e) {
        std::error_code ec;
        fs::remove(tmp, ec);
        throw StorageError(e.what());
    } catch (...) {
        std::error_code ec;
        fs::remove(tmp, ec);
        throw;
    }
}

inline void persist(const SessionLog& log, const std::filesystem::path& path) {
    write_file_atomic(path, to_json(log).dump(1));
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StorageError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline SessionLog load_session(const std::filesystem::path& path) { return parse_session(read_text_file(path)); }

}  // namespace weldar
