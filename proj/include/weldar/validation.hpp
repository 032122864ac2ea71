#pragma once

// Bench validation: noise-free jig angles, jittered line-length checks,
// drift screening and acoustic trigger timing. Used by `weldar validate`
// and the acceptance runner.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "weldar/integrity.hpp"
#include "weldar/synth_bench.hpp"
#include "weldar/weld_trigger.hpp"

namespace weldar {

// --- jig angles -------------------------------------------------------------

struct JigResult {
    double angle_deg = 0.0;
    double travel_error_deg = 0.0;  // max |error| over a travel-angle jig pass
    double work_error_deg = 0.0;    // max |error| over a work-angle jig pass
};

inline std::vector<JigResult> jig_angle_check(const std::vector<double>& angles = {30.0, 45.0, 60.0},
                                              const CalibrationState& calib = bench_calibration()) {
    std::vector<JigResult> out;
    for (double a : angles) {
        JigResult r{a, 0.0, 0.0};
        TrajectorySpec travel;
        travel.line = default_line(calib);
        travel.travel_angle_deg = a;
        travel.work_angle_deg = 90.0;
        std::vector<SkillSample> truth;
        for (const auto& s : extract_samples(gen_clean_frames(travel, calib), calib))
            r.travel_error_deg = std::max(r.travel_error_deg, std::abs(s.travel_angle_deg - a));

        TrajectorySpec work = travel;
        work.travel_angle_deg = 0.0;
        work.work_angle_deg = a;
        for (const auto& s : extract_samples(gen_clean_frames(work, calib), calib))
            r.work_error_deg = std::max(r.work_error_deg, std::abs(s.work_angle_deg - a));
        out.push_back(r);
    }
    return out;
}

// --- jittered line-length checks -------------------------------------------

struct EnvelopeResult {
    double length_in = 0.0;
    double travel_mean_error_deg = 0.0;
    double work_mean_error_deg = 0.0;
    double ctwd_mean_error_mm = 0.0;
    double speed_mean_error_ipm = 0.0;
    std::size_t frames = 0;
};

struct EnvelopeLimits {
    double travel_deg = 1.0;
    double work_deg = 2.0;
    double ctwd_mm = 4.0;
    double speed_ipm = 1.1;
};

/// One jittered pass per line length at the nominal 20 IPM; errors are
/// signed means of (measured - truth) over valid frames.
inline std::vector<EnvelopeResult> jitter_envelope(std::uint64_t seed = 1, Jitter jitter = {0.004, 0.5},
                                                   const std::vector<double>& lengths_in = {3, 4, 5, 6, 7},
                                                   const CalibrationState& calib = bench_calibration()) {
    std::vector<EnvelopeResult> out;
    for (std::size_t i = 0; i < lengths_in.size(); ++i) {
        TrajectorySpec spec;
        spec.line = default_line(calib, lengths_in[i] * kMetersPerInch);
        spec.speed_ipm = 20.0;
        spec.ctwd_mm = 10.0;
        spec.travel_angle_deg = 10.0;
        spec.work_angle_deg = 80.0;
        spec.jitter = jitter;
        spec.seed = seed + i;
        const GeneratedPass pass = gen_pass(spec, calib);
        const auto samples = extract_samples(pass.frames, calib, {}, spec.line.direction);

        EnvelopeResult r;
        r.length_in = lengths_in[i];
        double t = 0, w = 0, c = 0, v = 0;
        std::size_t n = 0, nv = 0;
        for (const auto& s : samples) {
            if (!s.valid) continue;
            t += s.travel_angle_deg - spec.travel_angle_deg;
            w += s.work_angle_deg - spec.work_angle_deg;
            c += s.ctwd_mm - spec.ctwd_mm;
            ++n;
            if (s.speed_ipm) {
                v += *s.speed_ipm - spec.speed_ipm;
                ++nv;
            }
        }
        r.frames = n;
        if (n) {
            r.travel_mean_error_deg = t / n;
            r.work_mean_error_deg = w / n;
            r.ctwd_mean_error_mm = c / n;
        }
        if (nv) r.speed_mean_error_ipm = v / nv;
        out.push_back(r);
    }
    return out;
}

inline bool within(const EnvelopeResult& r, const EnvelopeLimits& lim = {}) {
    return std::abs(r.travel_mean_error_deg) <= lim.travel_deg && std::abs(r.work_mean_error_deg) <= lim.work_deg &&
           std::abs(r.ctwd_mean_error_mm) <= lim.ctwd_mm && std::abs(r.speed_mean_error_ipm) <= lim.speed_ipm;
}

// --- drift suite ------------------------------------------------------------

struct DriftSuiteResult {
    std::size_t injected = 0;
    std::size_t detected = 0;
    std::size_t clean_frames = 0;
    std::size_t false_positive_frames = 0;

    double recall() const { return injected ? static_cast<double>(detected) / injected : 0.0; }
    double false_positive_rate() const {
        return clean_frames ? static_cast<double>(false_positive_frames) / clean_frames : 0.0;
    }
};

struct DriftSuiteConfig {
    int passes = 40;
    double position_jitter_m = 0.004;
    double min_step_m = 0.030;
    double max_step_m = 0.060;
    std::size_t detection_slack_frames = 2;  // flag must land within this many frames after the step
    std::uint64_t seed = 7;
};

/// Jitter-only passes measure the false-positive frame rate; the same
/// passes with one injected tracking step (along the surface normal or the
/// weld direction) measure recall.
inline DriftSuiteResult drift_suite(const DriftSuiteConfig& cfg = {}, const CalibrationState& calib = bench_calibration()) {
    DriftSuiteResult out;
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> step(cfg.min_step_m, cfg.max_step_m);
    std::uniform_real_distribution<double> when(1.5, 7.0);
    std::bernoulli_distribution sign(0.5);

    for (int i = 0; i < cfg.passes; ++i) {
        TrajectorySpec spec;
        spec.line = default_line(calib);
        spec.jitter = {cfg.position_jitter_m, 0.0};
        spec.seed = cfg.seed * 1000 + static_cast<std::uint64_t>(i);

        auto run = [&](const TrajectorySpec& s) {
            const GeneratedPass pass = gen_pass(s, calib);
            auto samples = extract_samples(pass.frames, calib, {}, s.line.direction);
            std::vector<Quat> q;
            for (const auto& f : pass.frames) q.push_back(f.orientation);
            detect_drift(samples, q);
            return std::make_pair(pass, samples);
        };

        const auto [clean_pass, clean] = run(spec);
        out.clean_frames += clean.size();
        for (const auto& s : clean) out.false_positive_frames += s.drift_flag ? 1 : 0;

        TrajectorySpec drifted = spec;
        const GridAxis axis = (i % 2 == 0) ? GridAxis::Normal : GridAxis::WeldDirection;
        drifted.drift_events.push_back({when(rng), world_axis(axis, calib), (sign(rng) ? 1.0 : -1.0) * step(rng)});
        const auto [pass, samples] = run(drifted);
        for (std::size_t onset : pass.drift_onsets) {
            ++out.injected;
            bool hit = false;
            for (std::size_t k = onset; k < samples.size() && k <= onset + cfg.detection_slack_frames; ++k)
                hit = hit || samples[k].drift_flag;
            out.detected += hit ? 1 : 0;
        }
    }
    return out;
}

// --- acoustic trigger -------------------------------------------------------

struct TriggerCheck {
    std::vector<TriggerEvent> events;
    double max_latency_s = 0.0;
    std::size_t bursts = 0;
};

inline TriggerCheck acoustic_latency_check(const AudioConfig& cfg = {}, std::uint64_t seed = 3,
                                           double transport_delay_s = 0.0) {
    SyntheticAudioSpec spec;
    spec.sample_rate = cfg.sample_rate;
    spec.duration_s = 20.0;
    spec.bursts = {{1.0, 4.0}, {7.3, 3.0}, {12.05, 5.0}};
    spec.transport_delay_s = transport_delay_s;
    spec.seed = seed;
    const AudioSignal sig = synth_weld_audio(spec);
    std::vector<double> truth;
    for (const auto& b : spec.bursts) truth.push_back(b.start_s);

    TriggerCheck out;
    out.bursts = truth.size();
    out.events = detect_onset_acoustic(sig, cfg, truth);
    for (const auto& e : out.events)
        out.max_latency_s = std::max(out.max_latency_s, e.detection_latency.value_or(1e9));
    if (out.events.size() != truth.size()) out.max_latency_s = std::max(out.max_latency_s, 1e9);
    return out;
}

// --- drift bootstrap --------------------------------------------------------

/// Synthetic per-line outcomes with exactly the requested empirical rate.
inline std::vector<bool> outcomes_at_rate(std::size_t lines, double rate) {
    std::vector<bool> v(lines, false);
    const auto hits = static_cast<std::size_t>(std::lround(rate * static_cast<double>(lines)));
    for (std::size_t i = 0; i < hits && i < lines; ++i) v[i] = true;
    return v;
}

}  // namespace weldar
