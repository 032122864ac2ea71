// weldar: command-line front end for the skill engine.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "weldar/server.hpp"
#include "weldar/weldar.hpp"

namespace fs = std::filesystem;
using namespace weldar;

namespace {

struct Globals {
    std::string ranges_path;
    std::string plan_path;
    std::optional<std::uint64_t> seed;
    std::string out;
};

json read_json_file(const std::string& path) {
    const std::string text = read_text_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(path + ": not valid JSON: " + e.what());
    }
}

TargetRanges load_ranges(const Globals& g) {
    if (g.ranges_path.empty()) return {};
    const json j = read_json_file(g.ranges_path);
    TargetRanges r = jsonio::read_ranges(jsonio::Reader(j, g.ranges_path));
    r.validate();
    return r;
}

LessonPlan load_plan(const Globals& g) {
    if (g.plan_path.empty()) return LessonPlan::standard();
    const json j = read_json_file(g.plan_path);
    return jsonio::read_plan(jsonio::Reader(j, g.plan_path));
}

/// Writes to --out when given, else stdout.
void emit(const Globals& g, const std::string& text) {
    if (g.out.empty()) {
        std::cout << text;
    } else {
        write_file_atomic(g.out, text);
        std::cerr << "wrote " << g.out << "\n";
    }
}

// --- serve ------------------------------------------------------------------

int cmd_serve(const Globals& g, const std::string& host, unsigned short port, const std::string& storage) {
    ServiceOptions opts;
    opts.storage_dir = storage;
    opts.plan = load_plan(g);
    opts.ranges = load_ranges(g);
    opts.calibration = bench_calibration();

    // Block termination signals before any thread starts so the main
    // thread can wait for them synchronously.
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    ServiceCore core(opts);
    WebSocketServer server(core, port, host);
    server.start();
    std::cout << "listening on ws://" << host << ":" << server.port() << "/ (" << kWireProtocolVersion
              << "), checkpoints in " << fs::absolute(storage).string() << std::endl;
    int sig = 0;
    sigwait(&set, &sig);
    std::cerr << "shutting down\n";
    server.stop();
    return 0;
}

// --- ingest -----------------------------------------------------------------

int cmd_ingest(const Globals& g, const std::vector<std::string>& paths) {
    json manifest{{"logs", json::array()}};
    for (const auto& p : paths) {
        const SessionLog log = load_session(p);
        json excluded = json::array();
        std::vector<DriftReport> drift;
        std::size_t usable = 0;
        for (const auto& l : log.lines) {
            drift.push_back(l.drift);
            if (!l.screening.usable() || l.summary.excluded) {
                excluded.push_back({{"module", std::string(to_string(l.module))},
                                    {"line_index", l.line_index},
                                    {"screening", std::string(to_string(l.screening.kind))},
                                    {"reason", l.summary.exclusion_reason.empty() ? l.screening.detail
                                                                                  : l.summary.exclusion_reason}});
            } else {
                ++usable;
            }
        }
        const SessionDriftSummary ds = summarize_drift(drift);
        manifest["logs"].push_back({{"path", p},
                                    {"participant_id", log.header.participant_id},
                                    {"condition", std::string(to_string(log.header.condition))},
                                    {"sequence", std::string(to_string(log.header.sequence))},
                                    {"lines", log.lines.size()},
                                    {"usable_lines", usable},
                                    {"excluded", excluded},
                                    {"lines_with_drift", ds.lines_with_drift},
                                    {"drift_line_fraction", ds.line_fraction}});
        std::cerr << p << ": " << log.lines.size() << " lines, " << excluded.size() << " excluded, "
                  << ds.lines_with_drift << " with drift\n";
    }
    emit(g, manifest.dump(2) + "\n");
    return 0;
}

// --- analyze ----------------------------------------------------------------

json segment_table_json(const SegmentTable& t) {
    json out = json::array();
    for (const auto& r : t) {
        json values = json::object();
        for (std::size_t i = 0; i < kSegmentCount; ++i)
            values[std::string(to_string(static_cast<Segment>(i)))] = r.mean[i];
        out.push_back({{"sequence", std::string(to_string(r.sequence))},
                       {"condition", std::string(to_string(r.condition))},
                       {"participants", r.participants},
                       {"values", values}});
    }
    return out;
}

json welch_json(const std::optional<WelchResult>& w) {
    if (!w) return nullptr;
    return {{"t", w->t}, {"df", w->df}, {"p", w->p}};
}

std::string mad_table(std::span<const LineDeviation> lines) {
    std::ostringstream os;
    os << "Participant\tCondition\tSegment\tLine\tCTWD MAD (mm)\tTravel MAD (deg)\tWork MAD (deg)\tSpeed MAD (IPM)\n";
    os << std::fixed << std::setprecision(4);
    for (const auto& l : lines) {
        os << l.meta.participant << '\t' << to_string(l.meta.condition) << '\t' << to_string(l.meta.segment) << '\t'
           << l.meta.line_index;
        for (double v : l.mad) os << '\t' << v;
        os << '\n';
    }
    return os.str();
}

int cmd_analyze(const Globals& g, const std::vector<std::string>& logs, const std::string& segments_path,
                const std::string& tables, bool slopes, bool deltas, const std::string& format) {
    if (logs.empty() && segments_path.empty()) throw CLI::ValidationError("analyze", "give session logs or --segments");
    if (!tables.empty() && tables != "appendixD") throw CLI::ValidationError("--tables", "only 'appendixD' is known");

    std::vector<SegmentRow> rows;
    std::vector<PerformanceCell> perf;
    std::vector<LineDeviation> deviations;
    json report = json::object();
    std::ostringstream text;

    if (!segments_path.empty()) {
        auto parsed = parse_segment_rows(read_text_file(segments_path));
        rows.insert(rows.end(), parsed.begin(), parsed.end());
    }
    if (!logs.empty()) {
        std::vector<SessionLog> sessions;
        for (const auto& p : logs) sessions.push_back(load_session(p));
        std::vector<std::string> skipped;
        deviations = session_deviations(sessions, &skipped);
        for (const auto& s : skipped) std::cerr << "skipped " << s << "\n";
        report["skipped_lines"] = skipped;
        json mads = json::array();
        for (const auto& d : deviations)
            mads.push_back({{"participant", d.meta.participant},
                            {"condition", std::string(to_string(d.meta.condition))},
                            {"segment", std::string(to_string(d.meta.segment))},
                            {"line_index", d.meta.line_index},
                            {"mad", d.mad}});
        report["line_mad"] = mads;
        try {
            const auto z = zscore_all(deviations);
            const auto metrics = participant_summary(z);
            auto r = segment_rows(metrics);
            rows.insert(rows.end(), r.begin(), r.end());
            perf = performance_summary(metrics);
        } catch (const DegeneratePoolError& e) {
            // Standardization is undefined; the raw deviations still stand.
            report["degenerate_pool"] = e.what();
            std::cerr << "DegeneratePoolError: " << e.what() << "\n";
            text << "# line deviations (z-scores undefined: " << e.what() << ")\n" << mad_table(deviations) << "\n";
        } catch (const InsufficientLinesError& e) {
            report["insufficient_lines"] = e.what();
            std::cerr << "InsufficientLinesError: " << e.what() << "\n";
            text << "# line deviations\n" << mad_table(deviations) << "\n";
        }
    }

    const SegmentTable table = segment_table(rows);
    report["segment_table"] = segment_table_json(table);
    const bool appendix = tables == "appendixD";
    const bool default_view = !appendix && !slopes && !deltas;
    if (appendix && !perf.empty()) {
        text << "# performance summary\n" << format_performance_summary(perf) << "\n";
        json cells = json::array();
        for (const auto& c : perf)
            cells.push_back({{"sequence", std::string(to_string(c.sequence))},
                             {"condition", std::string(to_string(c.condition))},
                             {"measure", std::string(to_string(c.measure))},
                             {"session_type", std::string(to_string(c.session_type))},
                             {"participants", c.participants},
                             {"deviation", {{"m", c.deviation.m}, {"sd", c.deviation.sd}}},
                             {"variability", {{"m", c.variability.m}, {"sd", c.variability.sd}}}});
        report["performance_summary"] = cells;
    }
    if (appendix || default_view) {
        if (!table.empty()) text << "# z-scored deviation by sequence, condition and segment\n" << format_segment_table(table) << "\n";
    }
    if (appendix && !rows.empty()) text << "# z-scored deviation per participant\n" << format_segment_rows(rows) << "\n";

    if (slopes || deltas) {
        const TrendReport tr = learning_trends(rows);
        json groups = json::array();
        for (const auto& gr : tr.groups) {
            groups.push_back({{"sequence", std::string(to_string(gr.sequence))},
                              {"participants", gr.participants},
                              {"slopes", gr.slopes},
                              {"mean_slope", gr.mean_slope},
                              {"deltas", gr.deltas},
                              {"mean_delta", gr.mean_delta}});
        }
        report["trends"] = {{"groups", groups}, {"slope_test", welch_json(tr.slope_test)},
                            {"delta_test", welch_json(tr.delta_test)}};
        text << std::fixed << std::setprecision(4);
        if (slopes) {
            text << "# learning slopes (first condition, segments 1..8)\n";
            text << "Sequence\tGroup-mean slope\tMean participant slope\tParticipants\n";
            for (const auto& gr : tr.groups) {
                const auto* row = find_row(table, gr.sequence, first_condition(gr.sequence));
                text << to_string(gr.sequence) << '\t' << (row ? learning_slope(row->mean) : 0.0) << '\t'
                     << gr.mean_slope << '\t' << gr.slopes.size() << '\n';
            }
            if (tr.slope_test)
                text << "Welch t = " << tr.slope_test->t << ", df = " << tr.slope_test->df
                     << ", p = " << tr.slope_test->p << "\n";
            text << "\n";
        }
        if (deltas) {
            text << "# switch deltas (start of second condition minus end of first)\n";
            text << "Sequence\tMean delta\tParticipants\n";
            for (const auto& gr : tr.groups)
                text << to_string(gr.sequence) << '\t' << gr.mean_delta << '\t' << gr.deltas.size() << '\n';
            if (tr.delta_test)
                text << "Welch t = " << tr.delta_test->t << ", df = " << tr.delta_test->df
                     << ", p = " << tr.delta_test->p << "\n";
            text << "\n";
        }
    }

    if (!g.out.empty() && fs::is_directory(g.out)) {
        write_file_atomic(fs::path(g.out) / "analysis.json", report.dump(2) + "\n");
        write_file_atomic(fs::path(g.out) / "segment_table.tsv", format_segment_table(table));
        write_file_atomic(fs::path(g.out) / "segment_rows.tsv", format_segment_rows(rows));
        if (!perf.empty()) write_file_atomic(fs::path(g.out) / "performance_summary.tsv", format_performance_summary(perf));
        if (!deviations.empty()) write_file_atomic(fs::path(g.out) / "line_mad.tsv", mad_table(deviations));
        std::cout << text.str();
        std::cerr << "wrote tables to " << g.out << "\n";
        return 0;
    }
    emit(g, format == "json" ? report.dump(2) + "\n" : text.str());
    return 0;
}

// --- simulate ---------------------------------------------------------------

/// A session spec: header fields plus a trajectory applied to every line
/// of the lesson plan (each line gets its own seed). A bare trajectory is
/// accepted too.
int cmd_simulate(const Globals& g, const std::string& spec_path) {
    const json j = read_json_file(spec_path);
    const jsonio::Reader r(j, spec_path);
    const CalibrationState calib = r.has("calibration") ? jsonio::read_calibration(r.at("calibration"))
                                                        : bench_calibration();
    const jsonio::Reader traj = r.has("trajectory") ? r.at("trajectory") : r;
    TrajectorySpec base = jsonio::read_trajectory(traj, calib);
    if (g.seed) base.seed = *g.seed;

    SessionConfig cfg;
    cfg.participant_id = r.has("participant_id") ? r.string("participant_id") : "sim";
    cfg.condition = r.has("condition") ? jsonio::read_enum(r.at("condition"), jsonio::kConditions) : Condition::AR;
    cfg.sequence = r.has("sequence") ? jsonio::read_enum(r.at("sequence"), jsonio::kSequences) : Sequence::ARFirst;
    cfg.plan = !g.plan_path.empty() ? load_plan(g) : r.has("lesson_plan") ? jsonio::read_plan(r.at("lesson_plan"))
                                                                          : LessonPlan::standard();
    cfg.ranges = !g.ranges_path.empty() ? load_ranges(g)
                                        : r.has("target_ranges") ? jsonio::read_ranges(r.at("target_ranges"))
                                                                 : TargetRanges{};
    cfg.calibration = calib;
    SessionEngine engine(cfg);

    double clock = base.start_time;
    std::int64_t frame_index = 0;
    std::uint64_t line_no = 0;
    while (!engine.lesson().complete) {
        TrajectorySpec spec = base;
        spec.seed = base.seed + line_no++;
        spec.start_time = clock;
        spec.first_frame_index = frame_index;
        const GeneratedPass pass = gen_pass(spec, calib);
        engine.start_line(spec.line);
        for (const auto& f : pass.frames) engine.push_frame(f);
        engine.end_line();
        clock = pass.frames.back().timestamp + 2.0;
        frame_index = pass.frames.back().frame_index + 1;
    }
    const SessionLog log = engine.log();
    if (g.out.empty()) {
        std::cout << to_json(log).dump(1) << "\n";
    } else {
        persist(log, g.out);
        std::cerr << "wrote " << log.lines.size() << " lines to " << g.out << "\n";
    }
    return 0;
}

// --- replay -----------------------------------------------------------------

int cmd_replay(const Globals& g, const std::string& path, double speed) {
    const SessionLog log = load_session(path);
    const ReplayResult res = replay(log, speed);
    std::ostringstream os;
    for (const auto& l : res.lines) {
        os << json{{"type", "line"}, {"module", std::string(to_string(l.module))}, {"line_index", l.line_index},
                   {"matches_log", l.matches_log}}
                  .dump()
           << "\n";
        for (const auto& s : l.samples) os << json{{"type", "sample"}, {"sample", jsonio::write(s)}}.dump() << "\n";
        for (const auto& e : l.events) os << json{{"type", "feedback"}, {"event", jsonio::write(e)}}.dump() << "\n";
    }
    emit(g, os.str());
    std::cerr << res.lines.size() << " lines replayed at " << speed << "x; "
              << (res.identical ? "identical to the log" : "DIFFERS from the log") << "\n";
    return res.identical ? 0 : 1;
}

// --- validate ---------------------------------------------------------------

int cmd_validate(const Globals& g) {
    const std::uint64_t seed = g.seed.value_or(1);
    bool ok = true;
    std::ostringstream os;
    json report;
    os << std::fixed << std::setprecision(6);

    os << "# jig angles (noise-free)\nangle\ttravel |err| deg\twork |err| deg\n";
    json jig = json::array();
    for (const auto& r : jig_angle_check()) {
        os << r.angle_deg << '\t' << r.travel_error_deg << '\t' << r.work_error_deg << '\n';
        ok = ok && r.travel_error_deg <= 1e-6 && r.work_error_deg <= 1e-6;
        jig.push_back({{"angle_deg", r.angle_deg}, {"travel_error_deg", r.travel_error_deg},
                       {"work_error_deg", r.work_error_deg}});
    }
    report["jig"] = jig;

    os << "\n# line-length checks at 20 IPM, jitter 4 mm / 0.5 deg\n"
          "length in\ttravel M\twork M\tCTWD M mm\tspeed M IPM\n";
    json env = json::array();
    for (const auto& r : jitter_envelope(seed)) {
        os << r.length_in << '\t' << r.travel_mean_error_deg << '\t' << r.work_mean_error_deg << '\t'
           << r.ctwd_mean_error_mm << '\t' << r.speed_mean_error_ipm << '\n';
        ok = ok && within(r);
        env.push_back({{"length_in", r.length_in}, {"travel_mean_error_deg", r.travel_mean_error_deg},
                       {"work_mean_error_deg", r.work_mean_error_deg}, {"ctwd_mean_error_mm", r.ctwd_mean_error_mm},
                       {"speed_mean_error_ipm", r.speed_mean_error_ipm}});
    }
    report["envelope"] = env;

    DriftSuiteConfig dcfg;
    dcfg.seed = seed + 6;
    const DriftSuiteResult d = drift_suite(dcfg);
    os << "\n# drift screening\nrecall\t" << d.recall() << "\t(" << d.detected << "/" << d.injected
       << ")\nfalse-positive frame rate\t" << d.false_positive_rate() << "\n";
    ok = ok && d.recall() >= 0.95 && d.false_positive_rate() <= 0.01;
    report["drift"] = {{"recall", d.recall()}, {"false_positive_rate", d.false_positive_rate()}};

    const auto outcomes = outcomes_at_rate(100, 0.25);
    os << "\n# drift bootstrap (line rate 0.25, 10000 samples)\nk\tP(any drift)\n";
    json boot = json::array();
    for (int k : {4, 6}) {
        const BootstrapEstimate b = bootstrap_drift_probability(outcomes, k, kDefaultBootstrapSamples, seed);
        os << k << '\t' << b.probability << '\n';
        boot.push_back({{"k", k}, {"probability", b.probability}, {"lower", b.lower}, {"upper", b.upper}});
    }
    report["bootstrap"] = boot;

    const TriggerCheck tc = acoustic_latency_check({}, seed + 2, 0.19);
    os << "\n# acoustic trigger (128-frame buffer, 0.5 m)\nbursts\t" << tc.bursts << "\ndetected\t"
       << tc.events.size() << "\nmax latency s\t" << tc.max_latency_s << "\n";
    ok = ok && tc.max_latency_s <= 0.21;
    report["trigger"] = {{"bursts", tc.bursts}, {"detected", tc.events.size()}, {"max_latency_s", tc.max_latency_s}};
    report["ok"] = ok;

    std::cout << os.str() << "\n" << (ok ? "all checks within bounds" : "SOME CHECKS OUT OF BOUNDS") << "\n";
    if (!g.out.empty()) write_file_atomic(g.out, report.dump(2) + "\n");
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"weldar: welding skill engine, live service and analytics"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    std::uint64_t seed = 0;
    app.add_option("--ranges", g.ranges_path, "target ranges JSON")->check(CLI::ExistingFile);
    app.add_option("--lesson-plan", g.plan_path, "lesson plan JSON")->check(CLI::ExistingFile);
    auto* seed_opt = app.add_option("--seed", seed, "random seed");
    app.add_option("--out", g.out, "output file (or directory for analyze)");

    auto* serve = app.add_subcommand("serve", "run the live WebSocket service");
    std::string host = "127.0.0.1", storage = "sessions";
    unsigned short port = 8765;
    serve->add_option("--host", host, "bind address")->capture_default_str();
    serve->add_option("--port", port, "TCP port (0 = ephemeral)")->capture_default_str();
    serve->add_option("--storage", storage, "checkpoint directory")->capture_default_str();

    auto* ingest = app.add_subcommand("ingest", "screen session logs and emit an exclusion manifest");
    std::vector<std::string> ingest_logs;
    ingest->add_option("logs", ingest_logs, "session logs")->required()->check(CLI::ExistingFile);

    auto* analyze = app.add_subcommand("analyze", "z-scored deviation tables, slopes and switch deltas");
    std::vector<std::string> analyze_logs;
    std::string segments, tables, format = "tsv";
    bool slopes = false, deltas = false;
    analyze->add_option("logs", analyze_logs, "session logs")->check(CLI::ExistingFile);
    analyze->add_option("--segments", segments, "per-participant segment values (CSV/TSV)")->check(CLI::ExistingFile);
    analyze->add_option("--tables", tables, "table set to print (appendixD)");
    analyze->add_flag("--slopes", slopes, "learning slopes with a Welch test");
    analyze->add_flag("--deltas", deltas, "switch deltas with a Welch test");
    analyze->add_option("--format", format, "tsv or json")->check(CLI::IsMember({"tsv", "json"}));

    auto* simulate = app.add_subcommand("simulate", "synthesize a session that follows the lesson plan");
    std::string spec_path;
    simulate->add_option("spec", spec_path, "trajectory or session spec JSON")->required()->check(CLI::ExistingFile);

    auto* replay_cmd = app.add_subcommand("replay", "re-run a session log through the engine");
    std::string replay_path;
    double speed = 1.0;
    replay_cmd->add_option("log", replay_path, "session log")->required()->check(CLI::ExistingFile);
    replay_cmd->add_option("--speed", speed, "clock multiplier")->check(CLI::PositiveNumber)->capture_default_str();

    auto* validate = app.add_subcommand("validate", "bench checks: jig angles, line lengths, drift, trigger");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }
    if (seed_opt->count()) g.seed = seed;

    try {
        if (serve->parsed()) return cmd_serve(g, host, port, storage);
        if (ingest->parsed()) return cmd_ingest(g, ingest_logs);
        if (analyze->parsed()) return cmd_analyze(g, analyze_logs, segments, tables, slopes, deltas, format);
        if (simulate->parsed()) return cmd_simulate(g, spec_path);
        if (replay_cmd->parsed()) return cmd_replay(g, replay_path, speed);
        if (validate->parsed()) return cmd_validate(g);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    } catch (const Error& e) {
        std::cerr << e.code() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
