#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mhp/errors.hpp"

namespace mhp {

struct Event {
    double time = 0.0;
    int type = 0;
};

/// Timestamped typed event list. Times are strictly increasing, types lie in
/// [0, num_types), and a sequence holds at least one event. Immutable by
/// convention after validate(); safe to share across workers.
struct EventSequence {
    std::string id;
    int num_types = 1;
    std::vector<Event> events;

    int size() const { return static_cast<int>(events.size()); }
    double first_time() const { return events.front().time; }
    double last_time() const { return events.back().time; }
    double span() const { return last_time() - first_time(); }

    /// Inter-event gaps; by convention the first gap is t_1 itself unless
    /// first_gap_zero is set.
    std::vector<double> gaps(bool first_gap_zero = false) const {
        std::vector<double> d(events.size());
        if (!events.empty()) d[0] = first_gap_zero ? 0.0 : events[0].time;
        for (std::size_t i = 1; i < events.size(); ++i)
            d[i] = events[i].time - events[i - 1].time;
        return d;
    }

    void validate() const {
        if (events.empty()) throw DataError("sequence '" + id + "': empty event list");
        if (num_types < 1) throw DataError("sequence '" + id + "': num_types must be positive");
        double prev = -1.0;
        bool first = true;
        for (std::size_t i = 0; i < events.size(); ++i) {
            const Event& e = events[i];
            if (!(e.time >= 0.0))
                throw DataError("sequence '" + id + "': negative or NaN time at event " +
                                std::to_string(i));
            if (!first && !(e.time > prev))
                throw DataError("sequence '" + id + "': times not strictly increasing at event " +
                                std::to_string(i));
            if (e.type < 0 || e.type >= num_types)
                throw DataError("sequence '" + id + "': event type " + std::to_string(e.type) +
                                " out of range [0," + std::to_string(num_types) + ") at event " +
                                std::to_string(i));
            prev = e.time;
            first = false;
        }
    }
};

/// Keeps the earliest min(k, n) events.
inline EventSequence truncate_prefix(const EventSequence& seq, int k) {
    if (k < 1) throw UsageError("truncate_prefix: k must be >= 1");
    EventSequence out = seq;
    if (k < seq.size()) out.events.resize(static_cast<std::size_t>(k));
    return out;
}

enum class Split { train, val, test };

inline const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

struct SequenceDataset {
    std::vector<EventSequence> sequences;
    // Parallel to sequences; empty means no assignment yet.
    std::vector<Split> split;

    int num_types() const { return sequences.empty() ? 0 : sequences.front().num_types; }

    std::vector<const EventSequence*> subset(Split s) const {
        std::vector<const EventSequence*> out;
        for (std::size_t i = 0; i < sequences.size(); ++i)
            if (i < split.size() && split[i] == s) out.push_back(&sequences[i]);
        return out;
    }

    void validate() const {
        for (const auto& s : sequences) {
            s.validate();
            if (s.num_types != sequences.front().num_types)
                throw DataError("dataset: sequence '" + s.id + "' has num_types " +
                                std::to_string(s.num_types) + ", expected " +
                                std::to_string(sequences.front().num_types));
        }
        if (!split.empty() && split.size() != sequences.size())
            throw DataError("dataset: split assignment length mismatch");
    }
};

namespace detail {
inline std::string format_time(double t) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", t);
    return buf;
}
}  // namespace detail

/// One sequence per line: {"id": str, "num_types": int, "events": [[t, r], ...]}.
/// Times are written with 17 significant digits so save/load round-trips
/// bit-exactly. An optional "split" field carries the dataset split.
inline void save_jsonl(const SequenceDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
        const EventSequence& s = ds.sequences[i];
        std::ostringstream line;
        line << "{\"format_version\":1,\"id\":" << nlohmann::json(s.id).dump()
             << ",\"num_types\":" << s.num_types << ",\"events\":[";
        for (std::size_t e = 0; e < s.events.size(); ++e) {
            if (e) line << ',';
            line << '[' << detail::format_time(s.events[e].time) << ',' << s.events[e].type << ']';
        }
        line << ']';
        if (i < ds.split.size()) line << ",\"split\":\"" << split_name(ds.split[i]) << "\"";
        line << '}';
        out << line.str() << '\n';
    }
    if (!out) throw DataError("write failure on '" + path + "'");
}

inline SequenceDataset load_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    SequenceDataset ds;
    std::string line;
    int lineno = 0;
    bool any_split = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path + ":" + std::to_string(lineno) + ": JSON parse error: " + e.what());
        }
        auto fail = [&](const std::string& msg) {
            throw DataError(path + ":" + std::to_string(lineno) + ": " + msg);
        };
        if (!j.is_object() || !j.contains("id") || !j.contains("num_types") || !j.contains("events"))
            fail("record must carry id, num_types, events");
        EventSequence s;
        if (!j["id"].is_string()) fail("id must be a string");
        s.id = j["id"].get<std::string>();
        if (!j["num_types"].is_number_integer() || j["num_types"].get<int>() < 1)
            fail("num_types must be a positive integer");
        s.num_types = j["num_types"].get<int>();
        if (!j["events"].is_array() || j["events"].empty()) fail("events must be a nonempty array");
        double prev = 0.0;
        bool first = true;
        for (const auto& ev : j["events"]) {
            if (!ev.is_array() || ev.size() != 2 || !ev[0].is_number() || !ev[1].is_number_integer())
                fail("each event must be [time, type]");
            Event e{ev[0].get<double>(), ev[1].get<int>()};
            if (e.time < 0.0) fail("negative event time");
            if (!first && !(e.time > prev)) fail("times not strictly increasing");
            if (e.type < 0 || e.type >= s.num_types) fail("event type out of range");
            prev = e.time;
            first = false;
            s.events.push_back(e);
        }
        if (j.contains("split")) {
            std::string sp = j["split"].get<std::string>();
            if (!any_split && !ds.sequences.empty()) fail("split present on some records but not others");
            any_split = true;
            if (sp == "train")
                ds.split.push_back(Split::train);
            else if (sp == "val")
                ds.split.push_back(Split::val);
            else if (sp == "test")
                ds.split.push_back(Split::test);
            else
                fail("unknown split '" + sp + "'");
        } else if (any_split) {
            fail("split present on some records but not others");
        }
        ds.sequences.push_back(std::move(s));
    }
    ds.validate();
    return ds;
}

}  // namespace mhp
