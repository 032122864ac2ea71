#pragma once

// Scaffolded lesson plan: four single-parameter modules, a combination
// module, then an unassisted test.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "weldar/feedback.hpp"

namespace weldar {

enum class ModuleKind { Ctwd, TravelAngle, WorkAngle, Speed, Combination, Test };

constexpr std::string_view to_string(ModuleKind k) {
    switch (k) {
        case ModuleKind::Ctwd: return "CTWD";
        case ModuleKind::TravelAngle: return "TravelAngle";
        case ModuleKind::WorkAngle: return "WorkAngle";
        case ModuleKind::Speed: return "Speed";
        case ModuleKind::Combination: return "Combination";
        case ModuleKind::Test: return "Test";
    }
    return "?";
}

inline std::optional<ModuleKind> module_from_string(std::string_view s) {
    for (auto k : {ModuleKind::Ctwd, ModuleKind::TravelAngle, ModuleKind::WorkAngle, ModuleKind::Speed,
                   ModuleKind::Combination, ModuleKind::Test})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

/// Parameters a module teaches (and therefore gates on).
constexpr ParameterSet tracked_parameters(ModuleKind k) {
    switch (k) {
        case ModuleKind::Ctwd: return {Parameter::Ctwd};
        case ModuleKind::TravelAngle: return {Parameter::TravelAngle};
        case ModuleKind::WorkAngle: return {Parameter::WorkAngle};
        case ModuleKind::Speed: return {Parameter::Speed};
        case ModuleKind::Combination:
        case ModuleKind::Test: return ParameterSet::all();
    }
    return {};
}

struct ModuleSpec {
    ModuleKind kind = ModuleKind::Ctwd;
    int lines = 4;
    bool assisted = true;

    bool operator==(const ModuleSpec&) const = default;
};

struct LessonPlan {
    std::vector<ModuleSpec> modules;
    double pass_threshold = 0.70;
    double retry_cap_factor = 2.0;

    static LessonPlan standard() {
        return LessonPlan{{{ModuleKind::Ctwd, 4, true},
                           {ModuleKind::TravelAngle, 4, true},
                           {ModuleKind::WorkAngle, 4, true},
                           {ModuleKind::Speed, 4, true},
                           {ModuleKind::Combination, 12, true},
                           {ModuleKind::Test, 6, false}},
                          0.70,
                          2.0};
    }

    int line_cap(std::size_t module) const {
        return static_cast<int>(std::ceil(retry_cap_factor * modules.at(module).lines));
    }

    void validate() const {
        if (modules.empty()) throw PreconditionError("lesson plan has no modules");
        for (const auto& m : modules) {
            if (m.lines < 1) throw PreconditionError("every module needs at least one line");
            if (m.kind == ModuleKind::Test && m.assisted)
                throw PreconditionError("the Test module is always unassisted");
        }
        if (!(pass_threshold >= 0.0 && pass_threshold <= 1.0))
            throw PreconditionError("pass_threshold must be a fraction in [0, 1]");
        if (!(retry_cap_factor >= 1.0)) throw PreconditionError("retry_cap_factor must be >= 1");
    }

    bool operator==(const LessonPlan&) const = default;
};

struct LessonCursor {
    std::size_t module = 0;
    int line = 0;

    bool operator==(const LessonCursor&) const = default;
};

struct ModuleOutcome {
    bool finished = false;
    bool passed = false;
    double mean_within = 0.0;  // fraction

    bool operator==(const ModuleOutcome&) const = default;
};

struct LessonState {
    LessonPlan plan;
    LessonCursor cursor;
    std::vector<int> planned_lines;                  // nominal + appended retries
    std::vector<std::vector<LineSummary>> history;   // per module
    std::vector<ModuleOutcome> outcomes;
    bool complete = false;

    static LessonState start(LessonPlan plan) {
        plan.validate();
        LessonState s;
        s.plan = std::move(plan);
        for (const auto& m : s.plan.modules) s.planned_lines.push_back(m.lines);
        s.history.resize(s.plan.modules.size());
        s.outcomes.resize(s.plan.modules.size());
        return s;
    }

    const ModuleSpec& current_module() const {
        if (complete) throw PlanExhaustedError("lesson plan is complete");
        return plan.modules.at(cursor.module);
    }

    /// Whether the current module surfaces feedback at all.
    bool assisted() const { return !complete && current_module().assisted; }

    bool operator==(const LessonState&) const = default;
};

/// Mean over non-excluded lines of the tracked parameters' within fraction.
inline std::optional<double> module_within_fraction(std::span<const LineSummary> lines, ModuleKind kind) {
    const auto tracked = tracked_parameters(kind).list();
    double sum = 0.0;
    int n = 0;
    for (const auto& l : lines) {
        if (l.excluded) continue;
        double line_sum = 0.0;
        for (auto p : tracked) line_sum += l.of(p).pct_within;
        sum += line_sum / static_cast<double>(tracked.size()) / 100.0;
        ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / n;
}

inline LessonState advance(LessonState lesson, const LineSummary& summary) {
    if (lesson.complete) throw PlanExhaustedError("no lines remain in the lesson plan");
    const std::size_t m = lesson.cursor.module;
    const ModuleSpec& spec = lesson.plan.modules.at(m);
    lesson.history[m].push_back(summary);
    ++lesson.cursor.line;
    if (lesson.cursor.line < lesson.planned_lines[m]) return lesson;

    const auto within = module_within_fraction(lesson.history[m], spec.kind);
    const bool gated = spec.kind != ModuleKind::Test;
    const bool passed = !gated || (within && *within >= lesson.plan.pass_threshold);
    const bool capped = lesson.planned_lines[m] >= lesson.plan.line_cap(m);

    if (!passed && !capped) {
        ++lesson.planned_lines[m];
        return lesson;
    }
    lesson.outcomes[m] = ModuleOutcome{true, passed, within.value_or(0.0)};
    ++lesson.cursor.module;
    lesson.cursor.line = 0;
    if (lesson.cursor.module >= lesson.plan.modules.size()) lesson.complete = true;
    return lesson;
}

struct ModuleReport {
    ModuleKind kind = ModuleKind::Ctwd;
    std::array<ParameterSummary, 4> parameters{};
    std::size_t line_count = 0;
    std::size_t excluded_count = 0;
    std::vector<int> replayable_lines;  // indices of lines with usable frames

    const ParameterSummary& of(Parameter p) const { return parameters[index_of(p)]; }
};

/// Frame-weighted aggregate of a module's lines; excluded lines are skipped.
inline ModuleReport lesson_report(std::span<const LineSummary> lines, ModuleKind kind) {
    if (lines.empty()) throw PreconditionError("lesson_report needs at least one completed line");
    ModuleReport r;
    r.kind = kind;
    r.line_count = lines.size();
    std::array<std::array<double, 3>, 4> weighted{};
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto& l = lines[i];
        if (l.excluded) {
            ++r.excluded_count;
            continue;
        }
        r.replayable_lines.push_back(static_cast<int>(i));
        for (auto p : kAllParameters) {
            const auto& ps = l.of(p);
            const double w = static_cast<double>(ps.frame_count);
            weighted[index_of(p)][0] += w * ps.pct_within;
            weighted[index_of(p)][1] += w * ps.pct_above;
            weighted[index_of(p)][2] += w * ps.pct_below;
            r.parameters[index_of(p)].frame_count += ps.frame_count;
        }
    }
    for (auto p : kAllParameters) {
        auto& ps = r.parameters[index_of(p)];
        if (ps.frame_count == 0) continue;
        const double n = static_cast<double>(ps.frame_count);
        ps.pct_within = weighted[index_of(p)][0] / n;
        ps.pct_above = weighted[index_of(p)][1] / n;
        ps.pct_below = weighted[index_of(p)][2] / n;
    }
    return r;
}

}  // namespace weldar
