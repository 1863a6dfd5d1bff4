#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace scanloc::trace {

// One pipeline event: prompt, reply, parse warning, decision, fallback...
// Serialized as line-delimited JSON so runs can be replayed and diffed.
struct Event {
    int seq = 0;
    std::string stage;    // e.g. "selection_initial", "consensus", "result"
    std::string type;     // "prompt" | "reply" | "parse_warning" | "decision" | "fallback" | ...
    nlohmann::json data;  // structured payload (rects, scores, text)
};

class Trace {
public:
    void add(std::string stage, std::string type, nlohmann::json data) {
        events_.push_back({next_seq_++, std::move(stage), std::move(type), std::move(data)});
    }

    const std::vector<Event>& events() const { return events_; }
    bool empty() const { return events_.empty(); }

    // one JSON object per line
    std::string to_jsonl(const std::string& task_id) const {
        std::string out;
        for (const auto& e : events_) {
            nlohmann::json j{{"task", task_id}, {"seq", e.seq}, {"stage", e.stage},
                             {"type", e.type}, {"data", e.data}};
            out += j.dump();
            out += '\n';
        }
        return out;
    }

private:
    std::vector<Event> events_;
    int next_seq_ = 0;
};

}  // namespace scanloc::trace
