#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "tempotrack/box.hpp"
#include "tempotrack/error.hpp"
#include "tempotrack/image.hpp"

namespace tempotrack {

// On-disk sequence layout: frame_000001.ppm ... plus groundtruth.txt holding
// one "x,y,w,h" line (top-left convention) per frame. boxes.txt from `run`
// uses the same 4-tuple format.

inline std::string frame_filename(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%06d.ppm", index);
    return buf;
}

inline std::string format_box_line(const BBox& box) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%.4f,%.4f,%.4f,%.4f", box.x(), box.y(), box.w, box.h);
    return buf;
}

inline BBox parse_box_line(const std::string& line) {
    float x = 0, y = 0, w = 0, h = 0;
    if (std::sscanf(line.c_str(), "%f,%f,%f,%f", &x, &y, &w, &h) != 4) {
        throw InputError("box line must be x,y,w,h: " + line);
    }
    return BBox::from_topleft(x, y, w, h);
}

inline void write_boxes(const std::string& path, const std::vector<BBox>& boxes) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    for (const BBox& b : boxes) out << format_box_line(b) << "\n";
}

inline std::vector<BBox> read_boxes(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    std::vector<BBox> boxes;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        boxes.push_back(parse_box_line(line));
    }
    return boxes;
}

struct LoadedSequence {
    std::vector<Tensor> frames;
    std::vector<BBox> groundtruth;  // empty when absent and not required
};

inline LoadedSequence load_sequence(const std::string& dir, bool require_groundtruth = false) {
    namespace fs = std::filesystem;
    std::vector<fs::path> paths;
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string name = e.path().filename().string();
        if (name.rfind("frame_", 0) == 0 && e.path().extension() == ".ppm") {
            paths.push_back(e.path());
        }
    }
    if (paths.empty()) throw InputError("no frame_*.ppm files in " + dir);
    std::sort(paths.begin(), paths.end());

    LoadedSequence seq;
    seq.frames.reserve(paths.size());
    for (const fs::path& p : paths) seq.frames.push_back(read_ppm(p.string()));

    const fs::path gt = fs::path(dir) / "groundtruth.txt";
    if (fs::exists(gt)) {
        seq.groundtruth = read_boxes(gt.string());
        if (seq.groundtruth.size() != seq.frames.size()) {
            throw InputError("frame count != ground-truth line count in " + dir);
        }
    } else if (require_groundtruth) {
        throw InputError("missing groundtruth.txt in " + dir);
    }
    return seq;
}

}  // namespace tempotrack
