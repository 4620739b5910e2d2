#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace evsched {

// One anomaly or bookkeeping record; step == -1 means setup time.
struct Event {
    int step = -1;
    std::string kind;
    long long ev_id = -1; // -1 when not EV-specific
    nlohmann::json detail = nlohmann::json::object();
};

struct EventLog {
    std::vector<Event> events;

    void add(int step, std::string kind, long long ev_id = -1,
             nlohmann::json detail = nlohmann::json::object()) {
        events.push_back(Event{step, std::move(kind), ev_id, std::move(detail)});
    }

    std::size_t count(const std::string& kind) const {
        std::size_t n = 0;
        for (const auto& e : events)
            if (e.kind == kind) ++n;
        return n;
    }

    void write_jsonl(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("events: cannot write " + path);
        for (const auto& e : events) {
            nlohmann::json j;
            j["step"] = e.step;
            j["kind"] = e.kind;
            if (e.ev_id >= 0) j["id"] = e.ev_id;
            if (!e.detail.empty()) j["detail"] = e.detail;
            out << j.dump() << '\n';
        }
        if (!out) throw std::runtime_error("events: write failed for " + path);
    }
};

} // namespace evsched
