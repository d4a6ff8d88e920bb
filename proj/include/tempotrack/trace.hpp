#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "tempotrack/error.hpp"
#include "tempotrack/pipeline.hpp"

namespace tempotrack {

inline nlohmann::json trace_record(const FrameTrace& t) {
    nlohmann::json rec;
    rec["frame"] = t.frame;
    rec["box"] = {t.box.x(), t.box.y(), t.box.w, t.box.h};
    rec["score"] = t.score;
    rec["prior_norm"] = t.prior_norm;
    if (t.has_gate) rec["gate_mean"] = t.gate_mean;
    if (t.has_attention) {
        rec["attn_row_sum_min"] = t.attn_row_sum_min;
        rec["attn_row_sum_max"] = t.attn_row_sum_max;
    }
    return rec;
}

// Line-delimited JSON, one record per frame.
class TraceWriter {
public:
    explicit TraceWriter(const std::string& path) : out_(path) {
        if (!out_) throw InputError("trace: cannot write " + path);
    }

    void write(const FrameTrace& t) { out_ << trace_record(t).dump() << "\n"; }

private:
    std::ofstream out_;
};

}  // namespace tempotrack
