#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "tempotrack/pipeline.hpp"
#include "tempotrack/synth.hpp"

namespace tempotrack {

// Per-frame wall-clock samples for a synthetic run. Row 0 is initialization,
// the rest are tracked frames; frames are generated up front so timing
// excludes disk and generation cost. Summary statistics (median, p95, fps)
// are computed over the tracked frames.
struct BenchReport {
    std::vector<double> latency_ms;
    std::vector<std::size_t> state_bytes;
    double median_ms = 0.0;
    double p95_ms = 0.0;
    double fps = 0.0;
    std::size_t peak_state_bytes = 0;
};

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    if (v.size() % 2 == 1) return v[mid];
    return 0.5 * (v[mid - 1] + v[mid]);
}

inline double percentile95(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t idx =
        static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(v.size()))) - 1;
    return v[std::min(idx, v.size() - 1)];
}

inline BenchReport bench(const TrackerConfig& cfg, int n_frames, int frame_size = 128) {
    if (n_frames < 2) throw InputError("bench: need at least two frames");
    TrackerModel model{cfg, build_model(cfg)};
    init_weights(model.params, cfg.weight_seed);

    const SynthResult seq = synth_frames(cfg.weight_seed ^ 0x5eedULL, n_frames, frame_size,
                                         frame_size);

    using clock = std::chrono::steady_clock;
    BenchReport report;
    report.latency_ms.reserve(static_cast<std::size_t>(n_frames));
    report.state_bytes.reserve(static_cast<std::size_t>(n_frames));

    auto t0 = clock::now();
    TrackerState state = init(seq.frames[0], seq.boxes[0], model);
    auto t1 = clock::now();
    report.latency_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    report.state_bytes.push_back(serialize_state(state).size());

    for (int t = 1; t < n_frames; ++t) {
        t0 = clock::now();
        track(state, seq.frames[static_cast<std::size_t>(t)]);
        t1 = clock::now();
        report.latency_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        report.state_bytes.push_back(serialize_state(state).size());
    }

    const std::vector<double> tracked(report.latency_ms.begin() + 1, report.latency_ms.end());
    report.median_ms = median(tracked);
    report.p95_ms = percentile95(tracked);
    report.fps = report.median_ms > 0.0 ? 1000.0 / report.median_ms : 0.0;
    report.peak_state_bytes = *std::max_element(report.state_bytes.begin(),
                                                report.state_bytes.end());
    return report;
}

// CSV: header, one row per frame, then a '#' summary line.
inline void write_bench_csv(const BenchReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("bench: cannot write " + path);
    out << "frame,latency_ms,state_bytes\n";
    for (std::size_t i = 0; i < report.latency_ms.size(); ++i) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%zu,%.6f,%zu\n", i + 1, report.latency_ms[i],
                      report.state_bytes[i]);
        out << buf;
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf), "# median_ms=%.6f p95_ms=%.6f fps=%.3f peak_state_bytes=%zu\n",
                  report.median_ms, report.p95_ms, report.fps, report.peak_state_bytes);
    out << buf;
}

}  // namespace tempotrack
