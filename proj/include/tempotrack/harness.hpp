#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tempotrack/archive.hpp"
#include "tempotrack/config.hpp"
#include "tempotrack/pipeline.hpp"
#include "tempotrack/sequence.hpp"
#include "tempotrack/trace.hpp"

namespace tempotrack {

// Toggle syntax: filter=on|off, query=previous|current, init=conv|random.
inline void apply_toggle(TrackerConfig& cfg, const std::string& toggle) {
    const auto eq = toggle.find('=');
    if (eq == std::string::npos) throw InputError("toggle must be key=value: " + toggle);
    const std::string key = toggle.substr(0, eq);
    const std::string value = toggle.substr(eq + 1);
    if (key == "filter") {
        if (value == "on") cfg.filter_enabled = true;
        else if (value == "off") cfg.filter_enabled = false;
        else throw InputError("toggle filter must be on|off");
    } else if (key == "query") {
        if (value == "previous") cfg.query_choice = QueryChoice::previous_prior;
        else if (value == "current") cfg.query_choice = QueryChoice::current_map;
        else throw InputError("toggle query must be previous|current");
    } else if (key == "init") {
        if (value == "conv") cfg.prior_init = PriorInit::convolutional;
        else if (value == "random") cfg.prior_init = PriorInit::random;
        else throw InputError("toggle init must be conv|random");
    } else {
        throw InputError("unknown toggle '" + key + "'");
    }
}

struct RunOptions {
    std::string weights_path;
    std::string config_path;
    std::string sequence_dir;
    std::string init_box;  // "x,y,w,h", top-left
    std::string out_path;
    std::string trace_path;  // empty = no trace
    std::vector<std::string> toggles;
};

// Tracks one sequence end to end: boxes.txt gets the init box followed by one
// line per tracked frame; the optional trace stream gets one record per frame.
inline void run_tracker(const RunOptions& opts) {
    TrackerConfig cfg = load_config(opts.config_path);
    for (const std::string& t : opts.toggles) apply_toggle(cfg, t);

    TrackerModel model{cfg, load_archive(opts.weights_path, cfg)};
    const LoadedSequence seq = load_sequence(opts.sequence_dir);
    const BBox init_box = parse_box_line(opts.init_box);

    std::unique_ptr<TraceWriter> trace;
    if (!opts.trace_path.empty()) trace = std::make_unique<TraceWriter>(opts.trace_path);

    TrackerState state = init(seq.frames[0], init_box, model);
    std::vector<BBox> boxes{init_box};
    if (trace) {
        FrameTrace t;
        t.frame = 1;
        t.box = init_box;
        t.score = 1.0f;
        t.prior_norm = l2_norm(state.prior.tokens);
        trace->write(t);
    }

    for (std::size_t i = 1; i < seq.frames.size(); ++i) {
        FrameTrace t;
        const TrackResult r = track(state, seq.frames[i], trace ? &t : nullptr);
        boxes.push_back(r.box);
        if (trace) trace->write(t);
    }
    write_boxes(opts.out_path, boxes);
}

}  // namespace tempotrack
