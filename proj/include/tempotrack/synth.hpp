#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tempotrack/box.hpp"
#include "tempotrack/image.hpp"
#include "tempotrack/rng.hpp"
#include "tempotrack/sequence.hpp"

namespace tempotrack {

// Scripted synthetic sequences: a textured rectangle moving over a noise
// background, with optional occlusion spans, velocity step changes, global
// frame shifts (camera motion) and blur spans. Generation is a pure function
// of (seed, size, script).

struct SynthScript {
    struct Target {
        float x = 0, y = 0, w = 0, h = 0;  // initial top-left box
    };
    struct Motion {
        int frame = 1;
        float vx = 0, vy = 0;
    };
    struct Shift {
        int frame = 1;
        int dx = 0, dy = 0;
    };
    struct Span {
        int start = 1, length = 0;
        int radius = 0;  // blur only
    };

    std::optional<Target> target;
    std::vector<Motion> motions;
    std::vector<Shift> shifts;
    std::vector<Span> occlusions;
    std::vector<Span> blurs;

    // One directive per line:
    //   target X Y W H
    //   motion FRAME VX VY
    //   shift FRAME DX DY
    //   occlude START LENGTH
    //   blur START LENGTH RADIUS
    static SynthScript parse(std::istream& in) {
        SynthScript script;
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            std::istringstream ss(line);
            std::string verb;
            if (!(ss >> verb)) continue;
            auto fail = [&]() {
                throw ScriptError("script line " + std::to_string(lineno) + ": bad arguments");
            };
            if (verb == "target") {
                Target t;
                if (!(ss >> t.x >> t.y >> t.w >> t.h) || t.w < 1 || t.h < 1) fail();
                script.target = t;
            } else if (verb == "motion") {
                Motion m;
                if (!(ss >> m.frame >> m.vx >> m.vy) || m.frame < 1) fail();
                script.motions.push_back(m);
            } else if (verb == "shift") {
                Shift s;
                if (!(ss >> s.frame >> s.dx >> s.dy) || s.frame < 1) fail();
                script.shifts.push_back(s);
            } else if (verb == "occlude") {
                Span s;
                if (!(ss >> s.start >> s.length) || s.start < 1 || s.length < 1) fail();
                script.occlusions.push_back(s);
            } else if (verb == "blur") {
                Span s;
                if (!(ss >> s.start >> s.length >> s.radius) || s.start < 1 || s.length < 1 ||
                    s.radius < 1) {
                    fail();
                }
                script.blurs.push_back(s);
            } else {
                throw ScriptError("script line " + std::to_string(lineno) +
                                  ": unknown directive '" + verb + "'");
            }
        }
        return script;
    }

    static SynthScript parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ScriptError("cannot open script " + path);
        return parse(in);
    }
};

struct SynthResult {
    std::vector<Tensor> frames;  // 3 x H x W, values 0..255
    std::vector<BBox> boxes;     // clipped to frame bounds
};

namespace detail {

inline bool in_span(const std::vector<SynthScript::Span>& spans, int frame, int* radius = nullptr) {
    for (const SynthScript::Span& s : spans) {
        if (frame >= s.start && frame < s.start + s.length) {
            if (radius) *radius = s.radius;
            return true;
        }
    }
    return false;
}

inline Tensor box_blur(const Tensor& img, int radius) {
    const int h = img.dim(1), w = img.dim(2);
    Tensor out({3, h, w});
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const int y0 = std::max(0, y - radius), y1 = std::min(h - 1, y + radius);
                const int x0 = std::max(0, x - radius), x1 = std::min(w - 1, x + radius);
                double acc = 0.0;
                for (int yy = y0; yy <= y1; ++yy) {
                    for (int xx = x0; xx <= x1; ++xx) acc += img.at(c, yy, xx);
                }
                out.at(c, y, x) = static_cast<float>(acc / ((y1 - y0 + 1) * (x1 - x0 + 1)));
            }
        }
    }
    return out;
}

}  // namespace detail

inline SynthResult synth_frames(std::uint64_t seed, int n_frames, int width, int height,
                                const SynthScript& script = {}) {
    if (n_frames < 1) throw ScriptError("n_frames must be >= 1");
    if (width < 8 || height < 8) throw ScriptError("frame size too small");
    SplitMix64 rng(seed);

    // static noise background, sampled on a torus so camera shifts stay defined
    Tensor background({3, height, width});
    for (float& v : background.values()) v = static_cast<float>(rng.next_below(256));

    // target texture: two-color checker
    SynthScript::Target tgt;
    if (script.target) {
        tgt = *script.target;
    } else {
        const float side = static_cast<float>(std::min(width, height)) / 5.0f;
        tgt.w = std::max(8.0f, side);
        tgt.h = std::max(8.0f, side * 0.8f);
        tgt.x = (width - tgt.w) * 0.5f;
        tgt.y = (height - tgt.h) * 0.5f;
    }
    const int tw = static_cast<int>(std::lround(tgt.w));
    const int th = static_cast<int>(std::lround(tgt.h));
    float color_a[3], color_b[3], occluder_color[3];
    for (int c = 0; c < 3; ++c) {
        color_a[c] = static_cast<float>(rng.next_below(256));
        color_b[c] = static_cast<float>(255 - rng.next_below(128));
        occluder_color[c] = static_cast<float>(rng.next_below(256));
    }

    double px = tgt.x, py = tgt.y;  // top-left in world coordinates
    double vx = (static_cast<double>(rng.next_below(9)) - 4.0) / 2.0;
    double vy = (static_cast<double>(rng.next_below(9)) - 4.0) / 2.0;
    int cam_x = 0, cam_y = 0;
    // Default motion bounces at the frame edges so unscripted sequences of any
    // length stay valid; a scripted velocity is honored literally.
    bool velocity_scripted = false;

    SynthResult result;
    for (int t = 1; t <= n_frames; ++t) {
        for (const SynthScript::Motion& m : script.motions) {
            if (m.frame == t) {
                vx = m.vx;
                vy = m.vy;
                velocity_scripted = true;
            }
        }
        for (const SynthScript::Shift& s : script.shifts) {
            if (s.frame == t) {
                cam_x += s.dx;
                cam_y += s.dy;
            }
        }
        if (t > 1) {
            px += vx;
            py += vy;
            if (!velocity_scripted) {
                if (px < 0.0) {
                    px = -px;
                    vx = -vx;
                }
                if (px + tw > width) {
                    px = 2.0 * (width - tw) - px;
                    vx = -vx;
                }
                if (py < 0.0) {
                    py = -py;
                    vy = -vy;
                }
                if (py + th > height) {
                    py = 2.0 * (height - th) - py;
                    vy = -vy;
                }
            }
        }

        Tensor frame({3, height, width});
        for (int c = 0; c < 3; ++c) {
            for (int y = 0; y < height; ++y) {
                const int by = ((y + cam_y) % height + height) % height;
                for (int x = 0; x < width; ++x) {
                    const int bx = ((x + cam_x) % width + width) % width;
                    frame.at(c, y, x) = background.at(c, by, bx);
                }
            }
        }

        // target in image coordinates
        const int ix = static_cast<int>(std::lround(px)) - cam_x;
        const int iy = static_cast<int>(std::lround(py)) - cam_y;
        for (int y = std::max(0, iy); y < std::min(height, iy + th); ++y) {
            for (int x = std::max(0, ix); x < std::min(width, ix + tw); ++x) {
                const bool checker = (((x - ix) / 4) + ((y - iy) / 4)) % 2 == 0;
                for (int c = 0; c < 3; ++c) {
                    frame.at(c, y, x) = checker ? color_a[c] : color_b[c];
                }
            }
        }

        if (detail::in_span(script.occlusions, t)) {
            // overdraw the target region (inflated by 2px); ground truth stays
            for (int y = std::max(0, iy - 2); y < std::min(height, iy + th + 2); ++y) {
                for (int x = std::max(0, ix - 2); x < std::min(width, ix + tw + 2); ++x) {
                    for (int c = 0; c < 3; ++c) frame.at(c, y, x) = occluder_color[c];
                }
            }
        }

        int radius = 0;
        if (detail::in_span(script.blurs, t, &radius)) {
            frame = detail::box_blur(frame, radius);
        }

        // clip ground truth to the frame; a fully exited target is an error
        const float gx0 = std::max(0.0f, static_cast<float>(ix));
        const float gy0 = std::max(0.0f, static_cast<float>(iy));
        const float gx1 = std::min(static_cast<float>(width), static_cast<float>(ix + tw));
        const float gy1 = std::min(static_cast<float>(height), static_cast<float>(iy + th));
        if (gx1 <= gx0 || gy1 <= gy0) {
            throw ScriptError("target left the frame entirely at frame " + std::to_string(t));
        }
        result.frames.push_back(std::move(frame));
        result.boxes.push_back(BBox::from_topleft(gx0, gy0, gx1 - gx0, gy1 - gy0));
    }
    return result;
}

inline void synth_sequence(std::uint64_t seed, int n_frames, int width, int height,
                           const SynthScript& script, const std::string& out_dir) {
    const SynthResult result = synth_frames(seed, n_frames, width, height, script);
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    for (int t = 0; t < n_frames; ++t) {
        write_ppm(result.frames[static_cast<std::size_t>(t)],
                  (fs::path(out_dir) / frame_filename(t + 1)).string());
    }
    write_boxes((fs::path(out_dir) / "groundtruth.txt").string(), result.boxes);
}

}  // namespace tempotrack
