#pragma once

// Transport-independent live protocol: one JSON object per message.
// The server feeds text messages in and writes the replies back out; all
// session semantics live here so tests can drive them without sockets.

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <regex>
#include <string>
#include <vector>

#include "weldar/json_io.hpp"

namespace weldar {

inline constexpr const char* kWireProtocolVersion = "weldar.wire/1";

struct ServiceOptions {
    std::filesystem::path storage_dir = "sessions";
    LessonPlan plan = LessonPlan::standard();
    TargetRanges ranges;
    EngineSettings settings;
    std::optional<CalibrationState> calibration;  // applied to new sessions
};

/// Live sessions by id. Each slot is owned by at most one connection at a
/// time and carries its own mutex, so sessions never share mutable state.
class SessionRegistry {
public:
    struct Slot {
        std::mutex mu;
        std::unique_ptr<SessionEngine> engine;
        bool attached = false;
    };

    /// Attaches to an in-memory session, or creates one with `make`.
    /// Fails with ProtocolError when another connection holds it.
    template <typename Make>
    std::shared_ptr<Slot> attach(const std::string& id, Make&& make, bool& existed) {
        std::lock_guard lock(mu_);
        auto it = slots_.find(id);
        existed = it != slots_.end();
        if (existed) {
            if (it->second->attached) throw ProtocolError("session '" + id + "' is attached to another connection");
            it->second->attached = true;
            return it->second;
        }
        auto slot = std::make_shared<Slot>();
        slot->engine = std::make_unique<SessionEngine>(make());
        slot->attached = true;
        slots_.emplace(id, slot);
        return slot;
    }

    void detach(const std::string& id) {
        std::lock_guard lock(mu_);
        auto it = slots_.find(id);
        if (it != slots_.end()) it->second->attached = false;
    }

    void erase(const std::string& id) {
        std::lock_guard lock(mu_);
        slots_.erase(id);
    }

    std::size_t size() const {
        std::lock_guard lock(mu_);
        return slots_.size();
    }

private:
    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<Slot>> slots_;
};

namespace wire {

inline json error_message(std::string_view code, std::string_view message) {
    return {{"type", "error"}, {"code", code}, {"message", message}};
}

inline json lesson_message(const LessonState& l) {
    json outcomes = json::array();
    for (std::size_t i = 0; i < l.plan.modules.size(); ++i)
        outcomes.push_back({{"module", std::string(to_string(l.plan.modules[i].kind))},
                            {"planned_lines", l.planned_lines[i]},
                            {"completed_lines", l.history[i].size()},
                            {"finished", l.outcomes[i].finished},
                            {"passed", l.outcomes[i].passed},
                            {"mean_within", l.outcomes[i].mean_within}});
    json j{{"type", "lesson"}, {"complete", l.complete}, {"module_index", l.cursor.module},
           {"line_index", l.cursor.line}, {"modules", outcomes}};
    if (!l.complete) {
        j["module"] = std::string(to_string(l.current_module().kind));
        j["assisted"] = l.current_module().assisted;
    } else {
        j["module"] = nullptr;
        j["assisted"] = false;
    }
    return j;
}

inline json parameter_list(const ParameterSet& s) {
    json out = json::array();
    for (auto p : s.list()) out.push_back(std::string(to_string(p)));
    return out;
}

}  // namespace wire

class ServiceCore;

/// Protocol state of one client connection.
class ServiceConnection {
public:
    explicit ServiceConnection(ServiceCore& core) : core_(&core) {}
    ServiceConnection(const ServiceConnection&) = delete;
    ServiceConnection& operator=(const ServiceConnection&) = delete;
    ~ServiceConnection() { disconnect(); }

    /// Handles one inbound text message; returns the replies in order.
    std::vector<std::string> handle_text(std::string_view text) {
        std::vector<std::string> out;
        for (const auto& j : handle(text)) out.push_back(j.dump());
        return out;
    }

    std::vector<json> handle(std::string_view text) {
        json msg;
        try {
            msg = json::parse(text);
        } catch (const json::parse_error& e) {
            return {wire::error_message("SchemaError", std::string("message is not valid JSON: ") + e.what())};
        }
        return handle(msg);
    }

    std::vector<json> handle(const json& msg);

    /// Checkpoints the session (any in-progress line is discarded) and
    /// releases it. Safe to call more than once.
    void disconnect();

    const std::string& session_id() const { return session_id_; }
    bool attached() const { return slot_ != nullptr; }

private:
    std::vector<json> dispatch(const std::string& type, const jsonio::Reader& r);
    std::vector<json> hello(const jsonio::Reader& r);
    SessionEngine& engine() {
        if (!slot_) throw ProtocolError("send hello before any other message");
        return *slot_->engine;
    }

    ServiceCore* core_;
    std::string session_id_;
    std::shared_ptr<SessionRegistry::Slot> slot_;
};

class ServiceCore {
public:
    explicit ServiceCore(ServiceOptions opts) : opts_(std::move(opts)) {}

    const ServiceOptions& options() const { return opts_; }
    SessionRegistry& registry() { return registry_; }

    std::filesystem::path checkpoint_path(const std::string& session_id) const {
        return opts_.storage_dir / (session_id + ".json");
    }

    std::unique_ptr<ServiceConnection> connect() { return std::make_unique<ServiceConnection>(*this); }

private:
    ServiceOptions opts_;
    SessionRegistry registry_;
};

inline void ServiceConnection::disconnect() {
    if (!slot_) return;
    {
        std::lock_guard lock(slot_->mu);
        slot_->engine->abort_line();
        try {
            persist(slot_->engine->log(), core_->checkpoint_path(session_id_));
        } catch (const std::exception&) {
            // Keep the in-memory session so a reconnect can still resume it.
            core_->registry().detach(session_id_);
            slot_.reset();
            return;
        }
    }
    core_->registry().erase(session_id_);
    slot_.reset();
}

inline std::vector<json> ServiceConnection::handle(const json& msg) {
    try {
        const jsonio::Reader r(msg, "");
        const std::string type = r.string("type");
        if (type == "hello") return hello(r);
        if (!slot_) throw ProtocolError("send hello before any other message");
        std::lock_guard lock(slot_->mu);
        return dispatch(type, r);
    } catch (const Error& e) {
        return {wire::error_message(e.code(), e.what())};
    } catch (const std::exception& e) {
        return {wire::error_message("InternalError", e.what())};
    }
}

inline std::vector<json> ServiceConnection::hello(const jsonio::Reader& r) {
    if (slot_) throw ProtocolError("hello already received on this connection");
    const std::string id = r.string("session_id");
    static const std::regex kSafeId("[A-Za-z0-9_.-]{1,128}");
    if (!std::regex_match(id, kSafeId) || id.front() == '.')
        r.at("session_id").fail("session ids use letters, digits, '_', '-', '.'");
    const bool want_resume = r.boolean_or("resume", true);
    const auto path = core_->checkpoint_path(id);
    const ServiceOptions& o = core_->options();

    bool from_checkpoint = false;
    auto make = [&]() -> SessionEngine {
        if (want_resume && std::filesystem::exists(path)) {
            from_checkpoint = true;
            return SessionEngine::resume(load_session(path));
        }
        SessionConfig cfg;
        cfg.participant_id = r.has("participant_id") ? r.string("participant_id") : id;
        cfg.condition = r.has("condition") ? jsonio::read_enum(r.at("condition"), jsonio::kConditions) : Condition::AR;
        cfg.sequence = r.has("sequence") ? jsonio::read_enum(r.at("sequence"), jsonio::kSequences) : Sequence::ARFirst;
        cfg.plan = r.has("lesson_plan") ? jsonio::read_plan(r.at("lesson_plan")) : o.plan;
        cfg.ranges = r.has("target_ranges") ? jsonio::read_ranges(r.at("target_ranges"), o.ranges) : o.ranges;
        cfg.settings = o.settings;
        cfg.calibration = o.calibration;
        return SessionEngine(std::move(cfg));
    };
    bool existed = false;
    slot_ = core_->registry().attach(id, make, existed);
    session_id_ = id;

    std::lock_guard lock(slot_->mu);
    const SessionEngine& e = *slot_->engine;
    json welcome{{"type", "welcome"},
                 {"protocol", kWireProtocolVersion},
                 {"session_id", id},
                 {"resumed", existed || from_checkpoint},
                 {"lines_completed", e.lines().size()},
                 {"calibrated", e.calibration().has_value()},
                 {"header", jsonio::write(e.header())}};
    return {welcome, wire::lesson_message(e.lesson())};
}

inline std::vector<json> ServiceConnection::dispatch(const std::string& type, const jsonio::Reader& r) {
    SessionEngine& e = engine();
    if (type == "calibrate") {
        e.set_calibration(jsonio::read_calibration(r.at("calibration")));
        return {{{"type", "calibrated"}, {"calibration", jsonio::write(*e.calibration())}}};
    }
    if (type == "tap") {
        const PoseFrame f = jsonio::read_frame(r.at("frame"));
        const Vec3 known = jsonio::read_vec3(r.at("known_point"));
        const CalibrationState c = e.tap_recalibrate(f, known);
        return {{{"type", "calibrated"}, {"calibration", jsonio::write(c)}}};
    }
    if (type == "unassisted") {
        e.set_unassisted(r.boolean("enabled"));
        return {{{"type", "mode"}, {"unassisted", e.unassisted_override()}}};
    }
    if (type == "start_line") {
        std::optional<WeldLineSpec> line;
        if (r.has("line")) line = jsonio::read_line_spec(r.at("line"));
        const LineRecord& rec = e.start_line(line);
        return {{{"type", "line_started"},
                 {"module", std::string(to_string(rec.module))},
                 {"module_index", rec.module_index},
                 {"line_index", rec.line_index},
                 {"assisted", rec.assisted},
                 {"tracked", wire::parameter_list(e.feedback_parameters_now())},
                 {"line", jsonio::write(rec.line)}}};
    }
    if (type == "frame") {
        const FrameResult res = e.push_frame(jsonio::read_frame(r.at("frame")));
        json opened = json::array();
        for (const auto& ev : res.opened) opened.push_back(jsonio::write(ev));
        return {{{"type", "sample"}, {"sample", jsonio::write(res.sample)}, {"feedback", opened}}};
    }
    if (type == "end_line") {
        const LineRecord& rec = e.end_line();
        json events = json::array();
        for (const auto& ev : rec.events) events.push_back(jsonio::write(ev));
        return {{{"type", "line_summary"},
                 {"module", std::string(to_string(rec.module))},
                 {"module_index", rec.module_index},
                 {"line_index", rec.line_index},
                 {"summary", jsonio::write(rec.summary)},
                 {"screening", jsonio::write(rec.screening)},
                 {"drift", jsonio::write(rec.drift)},
                 {"events", events}},
                wire::lesson_message(e.lesson())};
    }
    if (type == "abort_line") {
        e.abort_line();
        return {wire::lesson_message(e.lesson())};
    }
    if (type == "lesson") return {wire::lesson_message(e.lesson())};
    if (type == "save") {
        const auto path = core_->checkpoint_path(session_id_);
        persist(e.log(), path);
        return {{{"type", "saved"}, {"path", path.string()}, {"lines", e.lines().size()}}};
    }
    throw ProtocolError("unknown message type '" + type + "'");
}

}  // namespace weldar
