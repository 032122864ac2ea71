#pragma once

// Line deviations, pooled z-scores, participant metrics, segment tables and
// learning-trend statistics.

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "weldar/feedback.hpp"
#include "weldar/lesson.hpp"

namespace weldar {

enum class Condition { AR, Video };
enum class Sequence { ARFirst, VideoFirst };

constexpr std::string_view to_string(Condition c) { return c == Condition::AR ? "AR" : "Video"; }
constexpr std::string_view to_string(Sequence s) { return s == Sequence::ARFirst ? "AR-first" : "Video-first"; }

inline std::optional<Condition> condition_from_string(std::string_view s) {
    if (s == "AR") return Condition::AR;
    if (s == "Video") return Condition::Video;
    return std::nullopt;
}

inline std::optional<Sequence> sequence_from_string(std::string_view s) {
    if (s == "AR-first") return Sequence::ARFirst;
    if (s == "Video-first") return Sequence::VideoFirst;
    return std::nullopt;
}

constexpr Condition first_condition(Sequence s) { return s == Sequence::ARFirst ? Condition::AR : Condition::Video; }
constexpr Condition second_condition(Sequence s) { return s == Sequence::ARFirst ? Condition::Video : Condition::AR; }

/// Training segments in lesson order.
enum class Segment { Ctwd, TravelAngle, WorkAngle, Speed, Comb1, Comb2, Comb3, Test };
inline constexpr std::size_t kSegmentCount = 8;
using SegmentValues = std::array<double, kSegmentCount>;

constexpr std::size_t index_of(Segment s) { return static_cast<std::size_t>(s); }

constexpr std::string_view to_string(Segment s) {
    switch (s) {
        case Segment::Ctwd: return "CTWD";
        case Segment::TravelAngle: return "TravelAngle";
        case Segment::WorkAngle: return "WorkAngle";
        case Segment::Speed: return "Speed";
        case Segment::Comb1: return "Comb1";
        case Segment::Comb2: return "Comb2";
        case Segment::Comb3: return "Comb3";
        case Segment::Test: return "Test";
    }
    return "?";
}

inline std::optional<Segment> segment_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kSegmentCount; ++i)
        if (to_string(static_cast<Segment>(i)) == s) return static_cast<Segment>(i);
    return std::nullopt;
}

/// Combination lines split into three blocks of four; retries beyond the
/// twelfth line stay in the last block.
inline Segment segment_for(ModuleKind kind, int line_index) {
    switch (kind) {
        case ModuleKind::Ctwd: return Segment::Ctwd;
        case ModuleKind::TravelAngle: return Segment::TravelAngle;
        case ModuleKind::WorkAngle: return Segment::WorkAngle;
        case ModuleKind::Speed: return Segment::Speed;
        case ModuleKind::Combination: return static_cast<Segment>(index_of(Segment::Comb1) + std::min(line_index / 4, 2));
        case ModuleKind::Test: return Segment::Test;
    }
    return Segment::Test;
}

/// Z-score pools: unassisted Test lines versus every assisted line.
enum class Pool { Test, Combination };

constexpr std::string_view to_string(Pool p) { return p == Pool::Test ? "TestPool" : "CombinationPool"; }
constexpr Pool pool_of(Segment s) { return s == Segment::Test ? Pool::Test : Pool::Combination; }

enum class SdKind { Population, Sample };

inline double mean_of(std::span<const double> xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

inline double sd_of(std::span<const double> xs, SdKind kind = SdKind::Population) {
    const double m = mean_of(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    const double denom = kind == SdKind::Population ? static_cast<double>(xs.size()) : static_cast<double>(xs.size()) - 1.0;
    return std::sqrt(ss / denom);
}

// --- deviations -------------------------------------------------------------

/// Distance from a value to the interval; zero inside.
constexpr double frame_range_deviation(double value, const Range& range) {
    if (value < range.lo) return range.lo - value;
    if (value > range.hi) return value - range.hi;
    return 0.0;
}

struct LineMeta {
    std::string participant;
    Sequence sequence = Sequence::ARFirst;
    Condition condition = Condition::AR;
    Segment segment = Segment::Ctwd;
    int line_index = 0;

    auto key() const {
        return std::make_tuple(participant, static_cast<int>(condition), static_cast<int>(segment), line_index);
    }
    bool operator==(const LineMeta&) const = default;
};

struct LineDeviation {
    LineMeta meta;
    std::array<double, 4> mad{};  // mm, deg, deg, IPM

    double of(Parameter p) const { return mad[index_of(p)]; }
};

/// Mean distance-to-range per parameter over frames that are valid and not
/// drift-flagged.
inline LineDeviation line_mad(std::span<const SkillSample> samples, const TargetRanges& ranges, LineMeta meta = {}) {
    std::array<double, 4> sum{};
    std::array<std::size_t, 4> n{};
    for (const auto& s : samples) {
        for (auto p : kAllParameters) {
            const auto v = usable_value(s, p);
            if (!v) continue;
            sum[index_of(p)] += frame_range_deviation(*v, ranges.of(p));
            ++n[index_of(p)];
        }
    }
    LineDeviation out{std::move(meta), {}};
    for (auto p : kAllParameters) {
        if (n[index_of(p)] == 0)
            throw AllFramesExcludedError("no usable frames for " + std::string(to_string(p)));
        out.mad[index_of(p)] = sum[index_of(p)] / static_cast<double>(n[index_of(p)]);
    }
    return out;
}

struct ZScoredLine {
    LineMeta meta;
    std::array<double, 4> z{};
    double composite = 0.0;
    Pool pool = Pool::Combination;
};

/// Standardizes every line of `pool` against that pool's own mean and SD.
/// Pools span all participants, groups and conditions.
inline std::vector<ZScoredLine> pool_zscores(std::span<const LineDeviation> lines, Pool pool,
                                             SdKind sd_kind = SdKind::Population) {
    std::vector<const LineDeviation*> members;
    for (const auto& l : lines)
        if (pool_of(l.meta.segment) == pool) members.push_back(&l);
    if (members.size() < 2)
        throw DegeneratePoolError(std::string(to_string(pool)) + " has fewer than two lines");

    std::array<double, 4> mean{}, sd{};
    for (auto p : kAllParameters) {
        std::vector<double> xs;
        xs.reserve(members.size());
        for (const auto* l : members) xs.push_back(l->of(p));
        mean[index_of(p)] = mean_of(xs);
        sd[index_of(p)] = sd_of(xs, sd_kind);
        if (!(sd[index_of(p)] > 0.0))
            throw DegeneratePoolError(std::string(to_string(pool)) + ": zero spread in " + std::string(to_string(p)));
    }

    std::vector<ZScoredLine> out;
    out.reserve(members.size());
    for (const auto* l : members) {
        ZScoredLine z{l->meta, {}, 0.0, pool};
        double sum = 0.0;
        for (auto p : kAllParameters) {
            z.z[index_of(p)] = (l->of(p) - mean[index_of(p)]) / sd[index_of(p)];
            sum += z.z[index_of(p)];
        }
        z.composite = sum / 4.0;
        out.push_back(std::move(z));
    }
    return out;
}

/// Both pools, concatenated (Combination first).
inline std::vector<ZScoredLine> zscore_all(std::span<const LineDeviation> lines, SdKind sd_kind = SdKind::Population) {
    auto out = pool_zscores(lines, Pool::Combination, sd_kind);
    auto test = pool_zscores(lines, Pool::Test, sd_kind);
    out.insert(out.end(), test.begin(), test.end());
    return out;
}

// --- participant metrics ----------------------------------------------------

struct CellStats {
    double mean = 0.0;
    double stability = 0.0;
};

/// Composite mean and stability (SD of composites) of one cell.
inline CellStats cell_stats(std::span<const double> composites, SdKind sd_kind = SdKind::Population) {
    if (composites.size() < 2) throw InsufficientLinesError("a cell needs at least two valid lines");
    return {mean_of(composites), sd_of(composites, sd_kind)};
}

struct CellMetrics {
    Condition condition = Condition::AR;
    Pool session_type = Pool::Combination;
    std::size_t line_count = 0;
    double composite_mean = 0.0;
    double stability = 0.0;
    std::array<double, 4> parameter_mean{};
    std::array<double, 4> parameter_sd{};
};

struct ParticipantMetrics {
    std::string participant;
    Sequence sequence = Sequence::ARFirst;
    std::vector<CellMetrics> cells;
    std::map<Condition, std::array<std::optional<double>, kSegmentCount>> segments;
    std::optional<double> learning_slope;  // first condition
    std::optional<double> switch_delta;

    const CellMetrics* cell(Condition c, Pool pool) const {
        for (const auto& x : cells)
            if (x.condition == c && x.session_type == pool) return &x;
        return nullptr;
    }
};

inline double learning_slope(std::span<const double, kSegmentCount> values);
inline double switch_delta(std::span<const double, kSegmentCount> first, std::span<const double, kSegmentCount> second);

inline std::optional<SegmentValues> complete_segments(const std::array<std::optional<double>, kSegmentCount>& xs) {
    SegmentValues out{};
    for (std::size_t i = 0; i < kSegmentCount; ++i) {
        if (!xs[i]) return std::nullopt;
        out[i] = *xs[i];
    }
    return out;
}

/// Per participant: cell means/stability per (condition, pool), segment
/// values (mean composite per segment), learning slope, switch delta.
inline std::vector<ParticipantMetrics> participant_summary(std::span<const ZScoredLine> zlines,
                                                           SdKind sd_kind = SdKind::Population) {
    std::map<std::string, std::vector<const ZScoredLine*>> by_participant;
    for (const auto& z : zlines) by_participant[z.meta.participant].push_back(&z);

    std::vector<ParticipantMetrics> out;
    for (auto& [pid, lines] : by_participant) {
        ParticipantMetrics m;
        m.participant = pid;
        m.sequence = lines.front()->meta.sequence;
        for (auto c : {Condition::AR, Condition::Video}) {
            for (auto pool : {Pool::Combination, Pool::Test}) {
                std::vector<double> comps;
                std::array<std::vector<double>, 4> per;
                for (const auto* z : lines) {
                    if (z->meta.condition != c || z->pool != pool) continue;
                    comps.push_back(z->composite);
                    for (auto p : kAllParameters) per[index_of(p)].push_back(z->z[index_of(p)]);
                }
                if (comps.empty()) continue;
                const CellStats st = cell_stats(comps, sd_kind);
                CellMetrics cm{c, pool, comps.size(), st.mean, st.stability, {}, {}};
                for (auto p : kAllParameters) {
                    cm.parameter_mean[index_of(p)] = mean_of(per[index_of(p)]);
                    cm.parameter_sd[index_of(p)] = sd_of(per[index_of(p)], sd_kind);
                }
                m.cells.push_back(cm);
            }
            std::array<std::optional<double>, kSegmentCount> seg{};
            bool any = false;
            for (std::size_t s = 0; s < kSegmentCount; ++s) {
                std::vector<double> comps;
                for (const auto* z : lines)
                    if (z->meta.condition == c && index_of(z->meta.segment) == s) comps.push_back(z->composite);
                if (!comps.empty()) {
                    seg[s] = mean_of(comps);
                    any = true;
                }
            }
            if (any) m.segments[c] = seg;
        }
        const auto first = m.segments.count(first_condition(m.sequence))
                               ? complete_segments(m.segments.at(first_condition(m.sequence)))
                               : std::nullopt;
        const auto second = m.segments.count(second_condition(m.sequence))
                                ? complete_segments(m.segments.at(second_condition(m.sequence)))
                                : std::nullopt;
        if (first) m.learning_slope = learning_slope(*first);
        if (first && second) m.switch_delta = switch_delta(*first, *second);
        out.push_back(std::move(m));
    }
    return out;
}

// --- segment tables and trends ----------------------------------------------

struct SegmentRow {
    std::string participant;
    Sequence sequence = Sequence::ARFirst;
    Condition condition = Condition::AR;
    SegmentValues values{};
};

inline std::vector<SegmentRow> segment_rows(std::span<const ParticipantMetrics> metrics) {
    std::vector<SegmentRow> rows;
    for (const auto& m : metrics)
        for (const auto& [c, seg] : m.segments)
            if (auto full = complete_segments(seg)) rows.push_back({m.participant, m.sequence, c, *full});
    return rows;
}

struct SegmentTableRow {
    Sequence sequence = Sequence::ARFirst;
    Condition condition = Condition::AR;
    SegmentValues mean{};
    std::size_t participants = 0;
};

using SegmentTable = std::vector<SegmentTableRow>;

/// Mean over participants per (sequence, condition) and segment, rows in
/// the order AR-first/AR, AR-first/Video, Video-first/AR, Video-first/Video.
inline SegmentTable segment_table(std::span<const SegmentRow> rows) {
    SegmentTable table;
    for (auto seq : {Sequence::ARFirst, Sequence::VideoFirst}) {
        for (auto cond : {Condition::AR, Condition::Video}) {
            SegmentTableRow r{seq, cond, {}, 0};
            for (const auto& row : rows) {
                if (row.sequence != seq || row.condition != cond) continue;
                for (std::size_t i = 0; i < kSegmentCount; ++i) r.mean[i] += row.values[i];
                ++r.participants;
            }
            if (r.participants == 0) continue;
            for (auto& v : r.mean) v /= static_cast<double>(r.participants);
            table.push_back(r);
        }
    }
    return table;
}

inline const SegmentTableRow* find_row(const SegmentTable& t, Sequence s, Condition c) {
    for (const auto& r : t)
        if (r.sequence == s && r.condition == c) return &r;
    return nullptr;
}

/// Ordinary least-squares slope against segment index 1..8.
inline double learning_slope(std::span<const double, kSegmentCount> values) {
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < kSegmentCount; ++i) {
        if (!std::isfinite(values[i])) throw PreconditionError("learning_slope needs finite values");
        sx += static_cast<double>(i + 1);
        sy += values[i];
    }
    const double mx = sx / kSegmentCount, my = sy / kSegmentCount;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < kSegmentCount; ++i) {
        const double dx = static_cast<double>(i + 1) - mx;
        sxy += dx * (values[i] - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

/// Mean of the second condition's CTWD and travel-angle segments minus the
/// mean of the first condition's three combination segments.
inline double switch_delta(std::span<const double, kSegmentCount> first, std::span<const double, kSegmentCount> second) {
    const double start_second = (second[index_of(Segment::Ctwd)] + second[index_of(Segment::TravelAngle)]) / 2.0;
    const double end_first =
        (first[index_of(Segment::Comb1)] + first[index_of(Segment::Comb2)] + first[index_of(Segment::Comb3)]) / 3.0;
    return start_second - end_first;
}

struct WelchResult {
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;  // two-sided
};

inline WelchResult two_sample_t(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw PreconditionError("each group needs at least two values");
    const double ma = mean_of(a), mb = mean_of(b);
    const double va = std::pow(sd_of(a, SdKind::Sample), 2), vb = std::pow(sd_of(b, SdKind::Sample), 2);
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double se2 = va / na + vb / nb;
    if (!(se2 > 0.0)) {
        if (ma == mb) return {0.0, na + nb - 2.0, 1.0};
        throw DegenerateInputError("both groups have zero variance");
    }
    WelchResult r;
    r.t = (ma - mb) / std::sqrt(se2);
    r.df = se2 * se2 / ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
    boost::math::students_t dist(r.df);
    r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
    r.p = std::min(1.0, r.p);
    return r;
}

struct GroupTrend {
    Sequence sequence = Sequence::ARFirst;
    std::vector<std::string> participants;
    std::vector<double> slopes;
    std::vector<double> deltas;
    double mean_slope = 0.0;
    double mean_delta = 0.0;
};

struct TrendReport {
    std::array<GroupTrend, 2> groups;  // AR-first, Video-first
    std::optional<WelchResult> slope_test;
    std::optional<WelchResult> delta_test;
};

/// Per-participant slopes over the first condition and switch deltas, with
/// Welch comparisons between the two sequence groups.
inline TrendReport learning_trends(std::span<const SegmentRow> rows) {
    TrendReport rep;
    rep.groups[0].sequence = Sequence::ARFirst;
    rep.groups[1].sequence = Sequence::VideoFirst;
    std::map<std::string, std::map<Condition, const SegmentRow*>> by;
    for (const auto& r : rows) by[r.participant][r.condition] = &r;
    for (const auto& [pid, conds] : by) {
        const Sequence seq = conds.begin()->second->sequence;
        GroupTrend& g = rep.groups[seq == Sequence::ARFirst ? 0 : 1];
        const auto first = conds.find(first_condition(seq));
        const auto second = conds.find(second_condition(seq));
        if (first == conds.end()) continue;
        g.participants.push_back(pid);
        g.slopes.push_back(learning_slope(first->second->values));
        if (second != conds.end()) g.deltas.push_back(switch_delta(first->second->values, second->second->values));
    }
    for (auto& g : rep.groups) {
        if (!g.slopes.empty()) g.mean_slope = mean_of(g.slopes);
        if (!g.deltas.empty()) g.mean_delta = mean_of(g.deltas);
    }
    const auto& a = rep.groups[0];
    const auto& b = rep.groups[1];
    if (a.slopes.size() >= 2 && b.slopes.size() >= 2) rep.slope_test = two_sample_t(a.slopes, b.slopes);
    if (a.deltas.size() >= 2 && b.deltas.size() >= 2) rep.delta_test = two_sample_t(a.deltas, b.deltas);
    return rep;
}

// --- performance summary (M/SD of deviation and variability) ----------------

enum class Measure { Composite, Ctwd, TravelAngle, WorkAngle, Speed };
inline constexpr std::array<Measure, 5> kAllMeasures = {Measure::Composite, Measure::Ctwd, Measure::TravelAngle,
                                                        Measure::WorkAngle, Measure::Speed};

constexpr std::string_view to_string(Measure m) {
    switch (m) {
        case Measure::Composite: return "Composite";
        case Measure::Ctwd: return "CTWD";
        case Measure::TravelAngle: return "Travel angle";
        case Measure::WorkAngle: return "Work angle";
        case Measure::Speed: return "Speed";
    }
    return "?";
}

struct MeanSd {
    double m = 0.0;
    double sd = 0.0;
};

struct PerformanceCell {
    Sequence sequence = Sequence::ARFirst;
    Condition condition = Condition::AR;
    Measure measure = Measure::Composite;
    Pool session_type = Pool::Combination;
    std::size_t participants = 0;
    MeanSd deviation;    // over participants of the participant's mean z
    MeanSd variability;  // over participants of the participant's SD across lines
};

inline std::vector<PerformanceCell> performance_summary(std::span<const ParticipantMetrics> metrics,
                                                        SdKind sd_kind = SdKind::Population) {
    std::vector<PerformanceCell> out;
    for (auto seq : {Sequence::ARFirst, Sequence::VideoFirst}) {
        for (auto cond : {Condition::AR, Condition::Video}) {
            for (auto measure : kAllMeasures) {
                for (auto pool : {Pool::Combination, Pool::Test}) {
                    std::vector<double> dev, var;
                    for (const auto& pm : metrics) {
                        if (pm.sequence != seq) continue;
                        const CellMetrics* c = pm.cell(cond, pool);
                        if (!c) continue;
                        if (measure == Measure::Composite) {
                            dev.push_back(c->composite_mean);
                            var.push_back(c->stability);
                        } else {
                            const std::size_t pi = static_cast<std::size_t>(measure) - 1;
                            dev.push_back(c->parameter_mean[pi]);
                            var.push_back(c->parameter_sd[pi]);
                        }
                    }
                    if (dev.empty()) continue;
                    PerformanceCell cell{seq, cond, measure, pool, dev.size(), {}, {}};
                    cell.deviation = {mean_of(dev), dev.size() > 1 ? sd_of(dev, sd_kind) : 0.0};
                    cell.variability = {mean_of(var), var.size() > 1 ? sd_of(var, sd_kind) : 0.0};
                    out.push_back(cell);
                }
            }
        }
    }
    return out;
}

// --- delimiter-separated output ---------------------------------------------

inline std::string format_segment_table(const SegmentTable& table, char delim = '\t', int precision = 3) {
    std::ostringstream os;
    os << "Sequence" << delim << "Condition" << delim << "CTWD" << delim << "Travel Angle" << delim << "Work Angle"
       << delim << "Travel Speed" << delim << "Comb. 1" << delim << "Comb. 2" << delim << "Comb. 3" << delim << "Test\n";
    os << std::fixed << std::setprecision(precision);
    for (const auto& r : table) {
        os << to_string(r.sequence) << delim << to_string(r.condition);
        for (double v : r.mean) os << delim << v;
        os << '\n';
    }
    return os.str();
}

inline std::string format_segment_rows(std::span<const SegmentRow> rows, char delim = '\t', int precision = 3) {
    std::ostringstream os;
    os << "Participant" << delim << "Sequence" << delim << "Condition" << delim << "CTWD" << delim << "Travel Angle"
       << delim << "Work Angle" << delim << "Travel Speed" << delim << "Comb. 1" << delim << "Comb. 2" << delim
       << "Comb. 3" << delim << "Test\n";
    os << std::fixed << std::setprecision(precision);
    for (const auto& r : rows) {
        os << r.participant << delim << to_string(r.sequence) << delim << to_string(r.condition);
        for (double v : r.values) os << delim << v;
        os << '\n';
    }
    return os.str();
}

inline std::string format_performance_summary(std::span<const PerformanceCell> cells, char delim = '\t',
                                              int precision = 2) {
    std::ostringstream os;
    os << "Seq." << delim << "Cond." << delim << "Measure" << delim << "Comb. Dev M" << delim << "Comb. Dev SD"
       << delim << "Comb. Var M" << delim << "Comb. Var SD" << delim << "Test Dev M" << delim << "Test Dev SD"
       << delim << "Test Var M" << delim << "Test Var SD\n";
    os << std::fixed << std::setprecision(precision);
    auto find = [&](Sequence s, Condition c, Measure m, Pool p) -> const PerformanceCell* {
        for (const auto& x : cells)
            if (x.sequence == s && x.condition == c && x.measure == m && x.session_type == p) return &x;
        return nullptr;
    };
    for (auto seq : {Sequence::ARFirst, Sequence::VideoFirst}) {
        for (auto cond : {Condition::AR, Condition::Video}) {
            for (auto measure : kAllMeasures) {
                const auto* comb = find(seq, cond, measure, Pool::Combination);
                const auto* test = find(seq, cond, measure, Pool::Test);
                if (!comb && !test) continue;
                os << to_string(seq) << delim << to_string(cond) << delim << to_string(measure);
                for (const auto* c : {comb, test}) {
                    if (c)
                        os << delim << c->deviation.m << delim << c->deviation.sd << delim << c->variability.m << delim
                           << c->variability.sd;
                    else
                        os << delim << delim << delim << delim;
                }
                os << '\n';
            }
        }
    }
    return os.str();
}

/// Reads `participant,sequence,condition,<8 segment values>` rows; a header
/// line and blank lines are skipped. Commas or tabs separate fields.
inline std::vector<SegmentRow> parse_segment_rows(std::string_view text) {
    std::vector<SegmentRow> rows;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string line(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t,") == std::string::npos) continue;
        std::vector<std::string> f;
        std::string cur;
        for (char ch : line) {
            if (ch == ',' || ch == '\t') {
                f.push_back(cur);
                cur.clear();
            } else if (ch != ' ') {
                cur += ch;
            }
        }
        f.push_back(cur);
        if (f.size() != 3 + kSegmentCount)
            throw SchemaError("segment row " + std::to_string(line_no) + ": expected 11 fields");
        const auto seq = sequence_from_string(f[1]);
        const auto cond = condition_from_string(f[2]);
        if (!seq || !cond) {
            if (line_no == 1) continue;  // header
            throw SchemaError("segment row " + std::to_string(line_no) + ": bad sequence or condition");
        }
        SegmentRow r{f[0], *seq, *cond, {}};
        for (std::size_t i = 0; i < kSegmentCount; ++i) {
            try {
                std::size_t used = 0;
                r.values[i] = std::stod(f[3 + i], &used);
                if (used != f[3 + i].size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw SchemaError("segment row " + std::to_string(line_no) + ": field " + std::to_string(4 + i) +
                                  " is not a number");
            }
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace weldar
