#pragma once

// Per-session processing pipeline shared by the live service and offline
// tools, plus the value types that make up a session log.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "weldar/analytics.hpp"
#include "weldar/feedback.hpp"
#include "weldar/integrity.hpp"
#include "weldar/lesson.hpp"
#include "weldar/skill_extractor.hpp"

namespace weldar {

inline constexpr const char* kSessionSchemaVersion = "weldar.session/1";

struct EngineSettings {
    ExtractorConfig extractor;
    int debounce_frames = kDefaultDebounceFrames;
    DriftThresholds drift;
    ScreeningRules screening;
};

struct SessionHeader {
    std::string schema_version = kSessionSchemaVersion;
    std::string participant_id;
    Condition condition = Condition::AR;
    Sequence sequence = Sequence::ARFirst;
    LessonPlan plan = LessonPlan::standard();
    std::optional<CalibrationState> calibration;  // as of session start
    TargetRanges ranges;
    EngineSettings settings;
};

struct LineRecord {
    ModuleKind module = ModuleKind::Ctwd;
    std::size_t module_index = 0;
    int line_index = 0;
    bool assisted = true;
    WeldLineSpec line;
    std::optional<CalibrationState> calibration;  // in effect for this line
    std::vector<PoseFrame> frames;
    std::vector<SkillSample> samples;
    std::vector<FeedbackEvent> events;
    LineSummary summary;
    ScreeningVerdict screening;
    DriftReport drift;
};

struct SessionLog {
    SessionHeader header;
    std::vector<LineRecord> lines;
};

/// Everything derived from one line's frames.
struct ProcessedLine {
    std::vector<SkillSample> samples;
    std::vector<FeedbackEvent> events;
    LineSummary summary;
    ScreeningVerdict screening;
    DriftReport drift;
};

inline ParameterSet feedback_parameters(ModuleKind module, bool assisted) {
    return assisted ? tracked_parameters(module) : ParameterSet::none();
}

inline void finalize_summary(LineSummary& summary, const ScreeningVerdict& screening) {
    if (!screening.usable() && !summary.excluded) {
        summary.excluded = true;
        summary.exclusion_reason = std::string(to_string(screening.kind)) + ": " + screening.detail;
    }
}

/// Batch path: extraction, drift flags, feedback, summary and screening
/// for a complete line.
inline ProcessedLine process_line(std::span<const PoseFrame> frames, const CalibrationState& calib,
                                  const WeldLineSpec& line, const TargetRanges& ranges,
                                  const EngineSettings& settings, ParameterSet tracked) {
    ProcessedLine out;
    out.samples = extract_samples(frames, calib, settings.extractor, line.direction);
    std::vector<Quat> orientations;
    orientations.reserve(frames.size());
    for (const auto& f : frames) orientations.push_back(f.orientation);
    out.drift = detect_drift(out.samples, orientations, settings.drift);
    out.events = feedback_stream(out.samples, ranges, settings.debounce_frames, tracked);
    out.summary = summarize_line(out.samples, ranges, line, calib);
    out.screening = screen_line(out.samples, settings.screening);
    finalize_summary(out.summary, out.screening);
    return out;
}

struct SessionConfig {
    std::string participant_id;
    Condition condition = Condition::AR;
    Sequence sequence = Sequence::ARFirst;
    LessonPlan plan = LessonPlan::standard();
    TargetRanges ranges;
    EngineSettings settings;
    std::optional<CalibrationState> calibration;
};

struct FrameResult {
    SkillSample sample;
    std::vector<FeedbackEvent> opened;
};

/// Streaming session: frames go in one at a time, samples and feedback come
/// out, and each finished line advances the lesson. Single writer.
class SessionEngine {
public:
    explicit SessionEngine(SessionConfig cfg)
        : cfg_(std::move(cfg)), lesson_(LessonState::start(cfg_.plan)), calibration_(cfg_.calibration) {
        cfg_.ranges.validate();
        header_.participant_id = cfg_.participant_id;
        header_.condition = cfg_.condition;
        header_.sequence = cfg_.sequence;
        header_.plan = cfg_.plan;
        header_.calibration = cfg_.calibration;
        header_.ranges = cfg_.ranges;
        header_.settings = cfg_.settings;
    }

    /// Rebuilds a session from a log (checkpoint resume): completed lines
    /// are kept and the lesson cursor is re-derived from their summaries.
    static SessionEngine resume(const SessionLog& log) {
        SessionConfig cfg;
        cfg.participant_id = log.header.participant_id;
        cfg.condition = log.header.condition;
        cfg.sequence = log.header.sequence;
        cfg.plan = log.header.plan;
        cfg.ranges = log.header.ranges;
        cfg.settings = log.header.settings;
        cfg.calibration = log.header.calibration;
        SessionEngine e(cfg);
        for (const auto& l : log.lines) {
            e.lesson_ = advance(e.lesson_, l.summary);
            if (l.calibration) e.calibration_ = l.calibration;
            e.lines_.push_back(l);
        }
        return e;
    }

    const SessionHeader& header() const { return header_; }
    const LessonState& lesson() const { return lesson_; }
    const std::optional<CalibrationState>& calibration() const { return calibration_; }
    bool line_active() const { return active_.has_value(); }
    bool unassisted_override() const { return unassisted_; }
    const std::vector<LineRecord>& lines() const { return lines_; }

    void set_calibration(CalibrationState calib) {
        if (!header_.calibration && lines_.empty()) header_.calibration = calib;
        calibration_ = std::move(calib);
    }

    CalibrationState tap_recalibrate(const PoseFrame& tap_frame, const Vec3& known_point) {
        if (active_) throw ProtocolError("cannot recalibrate while a line is being welded");
        calibration_ = weldar::tap_recalibrate(tap_frame, known_point, calibration_);
        return *calibration_;
    }

    /// Disables feedback from the next line on (logging continues).
    void set_unassisted(bool on) { unassisted_ = on; }

    /// Tracked parameters for the next or active line.
    ParameterSet feedback_parameters_now() const {
        if (active_) return active_->tracked;
        const auto& m = lesson_.current_module();
        return feedback_parameters(m.kind, m.assisted && !unassisted_);
    }

    const LineRecord& start_line(std::optional<WeldLineSpec> line = std::nullopt) {
        if (active_) throw ProtocolError("a line is already active");
        const CalibrationState& calib = require_calibration(calibration_);
        const ModuleSpec& m = lesson_.current_module();
        const WeldLineSpec spec = line.value_or(default_line(calib));
        spec.validate(calib);

        Active a{SkillExtractor(calib, cfg_.settings.extractor, spec.direction),
                 DriftDetector(cfg_.settings.drift),
                 FeedbackTracker(cfg_.ranges, ParameterSet::none(), cfg_.settings.debounce_frames),
                 ParameterSet::none(),
                 {}};
        a.record.module = m.kind;
        a.record.module_index = lesson_.cursor.module;
        a.record.line_index = lesson_.cursor.line;
        a.record.assisted = m.assisted && !unassisted_;
        a.record.line = spec;
        a.record.calibration = calib;
        a.tracked = feedback_parameters(m.kind, a.record.assisted);
        a.tracker = FeedbackTracker(cfg_.ranges, a.tracked, cfg_.settings.debounce_frames);
        active_.emplace(std::move(a));
        return active_->record;
    }

    /// Fails with SequenceError (state unchanged) on out-of-order frames.
    FrameResult push_frame(const PoseFrame& frame) {
        if (!active_) throw ProtocolError("no active line; send start_line first");
        if (!active_->record.frames.empty()) {
            const PoseFrame& last = active_->record.frames.back();
            if (!(frame.timestamp > last.timestamp) || frame.frame_index <= last.frame_index)
                throw SequenceError("frame " + std::to_string(frame.frame_index) + " at t=" +
                                    std::to_string(frame.timestamp) + " does not follow frame " +
                                    std::to_string(last.frame_index));
        }
        if (!std::isfinite(frame.timestamp) || !frame.position.allFinite())
            throw ProtocolError("frame carries non-finite values");
        FrameResult r;
        r.sample = active_->extractor.push(frame);
        r.sample.drift_flag = active_->drift.push(r.sample, frame.orientation);
        r.opened = active_->tracker.push(r.sample);
        active_->record.frames.push_back(frame);
        active_->record.samples.push_back(r.sample);
        return r;
    }

    const LineRecord& end_line() {
        if (!active_) throw ProtocolError("no active line to end");
        Active a = std::move(*active_);
        active_.reset();
        LineRecord& rec = a.record;
        const CalibrationState& calib = *rec.calibration;
        rec.events = a.tracker.finish();
        rec.summary = summarize_line(rec.samples, cfg_.ranges, rec.line, calib);
        rec.screening = screen_line(rec.samples, cfg_.settings.screening);
        finalize_summary(rec.summary, rec.screening);
        rec.drift = build_drift_report(rec.samples);
        lesson_ = advance(lesson_, rec.summary);
        lines_.push_back(std::move(rec));
        return lines_.back();
    }

    /// Abandons the active line without logging it.
    void abort_line() { active_.reset(); }

    SessionLog log() const { return SessionLog{header_, lines_}; }

private:
    struct Active {
        SkillExtractor extractor;
        DriftDetector drift;
        FeedbackTracker tracker;
        ParameterSet tracked;
        LineRecord record;
    };

    SessionConfig cfg_;
    SessionHeader header_;
    LessonState lesson_;
    std::optional<CalibrationState> calibration_;
    bool unassisted_ = false;
    std::optional<Active> active_;
    std::vector<LineRecord> lines_;
};

// --- replay -----------------------------------------------------------------

struct ReplayedLine {
    ModuleKind module = ModuleKind::Ctwd;
    int line_index = 0;
    std::vector<SkillSample> samples;
    std::vector<FeedbackEvent> events;
    bool matches_log = false;
};

struct ReplayResult {
    std::vector<ReplayedLine> lines;
    bool identical = true;  // every line reproduced the stored samples/events
};

inline void scale_time(std::vector<SkillSample>& samples, std::vector<FeedbackEvent>& events, double multiplier) {
    if (multiplier == 1.0) return;
    for (auto& s : samples) s.timestamp /= multiplier;
    for (auto& e : events) {
        e.onset /= multiplier;
        if (e.offset) *e.offset /= multiplier;
    }
}

/// Re-runs each line through the batch path with its original timing and
/// reports the emitted stream on a clock sped up by `multiplier`.
inline ReplayResult replay(const SessionLog& log, double multiplier = 1.0) {
    if (!(multiplier > 0.0)) throw PreconditionError("replay speed multiplier must be positive");
    ReplayResult out;
    for (const auto& rec : log.lines) {
        const CalibrationState& calib = require_calibration(rec.calibration ? rec.calibration : log.header.calibration);
        ProcessedLine p = process_line(rec.frames, calib, rec.line, log.header.ranges, log.header.settings,
                                       feedback_parameters(rec.module, rec.assisted));
        ReplayedLine r{rec.module, rec.line_index, std::move(p.samples), std::move(p.events), false};
        r.matches_log = r.samples == rec.samples && r.events == rec.events;
        out.identical = out.identical && r.matches_log;
        scale_time(r.samples, r.events, multiplier);
        out.lines.push_back(std::move(r));
    }
    return out;
}

// --- analytics bridge -------------------------------------------------------

/// Line deviations for every usable line of the given sessions. Lines that
/// screening rejected, or that have no usable frames, are skipped and
/// reported through `skipped` when provided.
inline std::vector<LineDeviation> session_deviations(std::span<const SessionLog> logs,
                                                     std::vector<std::string>* skipped = nullptr) {
    std::vector<LineDeviation> out;
    for (const auto& log : logs) {
        for (const auto& rec : log.lines) {
            LineMeta meta{log.header.participant_id, log.header.sequence, log.header.condition,
                          segment_for(rec.module, rec.line_index), rec.line_index};
            const std::string tag = log.header.participant_id + "/" + std::string(to_string(log.header.condition)) +
                                    "/" + std::string(to_string(rec.module)) + "#" + std::to_string(rec.line_index);
            if (!rec.screening.usable()) {
                if (skipped) skipped->push_back(tag + ": " + std::string(to_string(rec.screening.kind)));
                continue;
            }
            try {
                out.push_back(line_mad(rec.samples, log.header.ranges, meta));
            } catch (const AllFramesExcludedError& e) {
                if (skipped) skipped->push_back(tag + ": " + e.what());
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const LineDeviation& a, const LineDeviation& b) { return a.meta.key() < b.meta.key(); });
    return out;
}

}  // namespace weldar
