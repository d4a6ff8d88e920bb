#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <utility>
#include <vector>

#include "tempotrack/attrans.hpp"
#include "tempotrack/box.hpp"
#include "tempotrack/config.hpp"
#include "tempotrack/heads.hpp"
#include "tempotrack/image.hpp"
#include "tempotrack/model.hpp"
#include "tempotrack/tada.hpp"

namespace tempotrack {

// Immutable, shareable model: configuration plus parameters. One TrackerState
// per tracked sequence references it.
struct TrackerModel {
    TrackerConfig config;
    ModelParams params;
};

struct TrackerState {
    Tensor template_features;  // frozen after init
    BackboneState backbone;
    TemporalPrior prior;
    std::int64_t frame_index = 0;
    BBox last_box{};
    const TrackerModel* model = nullptr;

    // Diagnostic switch: re-derive the prior from the current similarity map
    // every frame instead of carrying it over.
    bool reset_prior_each_frame = false;

    bool initialized() const { return model != nullptr; }
};

struct TrackResult {
    BBox box;
    float score = 0.0f;  // foreground confidence of the winning cell, in [0,1]
};

// Per-frame instrumentation record; written as one JSONL line by the harness.
struct FrameTrace {
    std::int64_t frame = 0;
    BBox box{};
    float score = 0.0f;
    bool has_gate = false;
    double gate_mean = 0.0;
    double prior_norm = 0.0;
    bool has_attention = false;
    double attn_row_sum_min = 0.0;
    double attn_row_sum_max = 0.0;
};

// ---------------------------------------------------------------------------
// Cropping
// ---------------------------------------------------------------------------

// Side of the square context crop around a box.
inline float crop_side(const BBox& box, float context) {
    const float margin = context * (box.w + box.h);
    return std::sqrt((box.w + margin) * (box.h + margin));
}

struct CropGeometry {
    float side;      // crop side in image pixels
    float x0, y0;    // crop origin in image coordinates
    int out_size;

    // Image coordinate of a patch-space position.
    float to_image_x(float px) const { return x0 + (px + 0.5f) * side / out_size - 0.5f; }
    float to_image_y(float py) const { return y0 + (py + 0.5f) * side / out_size - 0.5f; }
    float extent_to_image(float pe) const { return pe * side / out_size; }
};

inline CropGeometry crop_geometry(const BBox& box, int out_size, float context) {
    const float side = crop_side(box, context);
    return {side, box.cx - side * 0.5f, box.cy - side * 0.5f, out_size};
}

// Square context crop, bilinearly resampled to out_size; samples outside the
// frame read the frame's channel means.
inline Tensor crop_patch(const Tensor& frame, const BBox& box, int out_size, float context) {
    if (out_size < 1) throw InputError("crop_patch: out_size must be positive");
    detail::require(frame.rank() == 3, "crop_patch: frame must be C x H x W");
    const int c = frame.dim(0), h = frame.dim(1), w = frame.dim(2);
    const CropGeometry geo = crop_geometry(box, out_size, context);
    const Tensor means = global_avg_pool(frame);

    Tensor patch({c, out_size, out_size});
    const float step = geo.side / out_size;
    for (int ch = 0; ch < c; ++ch) {
        const float* plane = frame.data() + static_cast<std::size_t>(ch) * h * w;
        const float fill = means.at(ch);
        auto tap = [&](int x, int y) -> float {
            if (x < 0 || x >= w || y < 0 || y >= h) return fill;
            return plane[static_cast<std::size_t>(y) * w + x];
        };
        for (int v = 0; v < out_size; ++v) {
            const float sy = geo.y0 + (v + 0.5f) * step - 0.5f;
            const int iy = static_cast<int>(std::floor(sy));
            const float fy = sy - iy;
            for (int u = 0; u < out_size; ++u) {
                const float sx = geo.x0 + (u + 0.5f) * step - 0.5f;
                const int ix = static_cast<int>(std::floor(sx));
                const float fx = sx - ix;
                const float top = tap(ix, iy) * (1.0f - fx) + tap(ix + 1, iy) * fx;
                const float bot = tap(ix, iy + 1) * (1.0f - fx) + tap(ix + 1, iy + 1) * fx;
                patch.at(ch, v, u) = top * (1.0f - fy) + bot * fy;
            }
        }
    }
    return patch;
}

// ---------------------------------------------------------------------------
// Head decoding
// ---------------------------------------------------------------------------

// Winning response cell and its box in patch coordinates. The winner is the
// cell with the highest foreground probability; ties go to the lowest
// row-major index.
struct PatchDecode {
    int row = 0, col = 0;
    float score = 0.0f;
    float pcx = 0.0f, pcy = 0.0f;  // box center, patch pixels
    float pw = 0.0f, ph = 0.0f;    // box extent, patch pixels
};

inline float foreground_prob(float bg, float fg) {
    const float m = std::max(bg, fg);
    const float eb = std::exp(bg - m), ef = std::exp(fg - m);
    return ef / (eb + ef);
}

inline PatchDecode decode_response(const HeadOutput& heads, int stride, int patch_size) {
    detail::require(heads.cls.rank() == 3 && heads.cls.dim(0) == 2,
                    "decode_response: cls must be 2 x H x W");
    detail::require(heads.reg.rank() == 3 && heads.reg.dim(0) == 4 &&
                        heads.reg.dim(1) == heads.cls.dim(1) &&
                        heads.reg.dim(2) == heads.cls.dim(2),
                    "decode_response: reg must be 4 x H x W matching cls");
    check_finite(heads.cls, "decode_response: cls");
    check_finite(heads.reg, "decode_response: reg");

    const int nh = heads.cls.dim(1), nw = heads.cls.dim(2);
    PatchDecode best;
    best.score = -1.0f;
    for (int i = 0; i < nh; ++i) {
        for (int j = 0; j < nw; ++j) {
            const float p = foreground_prob(heads.cls.at(0, i, j), heads.cls.at(1, i, j));
            if (p > best.score) {
                best.score = p;
                best.row = i;
                best.col = j;
            }
        }
    }

    const float off_x = (patch_size - (nw - 1) * stride) * 0.5f;
    const float off_y = (patch_size - (nh - 1) * stride) * 0.5f;
    const float l = heads.reg.at(0, best.row, best.col);
    const float t = heads.reg.at(1, best.row, best.col);
    const float r = heads.reg.at(2, best.row, best.col);
    const float b = heads.reg.at(3, best.row, best.col);
    best.pcx = off_x + best.col * stride + (r - l) * 0.5f * stride;
    best.pcy = off_y + best.row * stride + (b - t) * 0.5f * stride;
    best.pw = (l + r) * stride;
    best.ph = (t + b) * stride;
    return best;
}

// Patch-space box to clamped image-space box: extents at least one pixel,
// center inside the frame.
inline BBox decode_to_image(const PatchDecode& d, const CropGeometry& geo, int frame_w,
                            int frame_h) {
    BBox box;
    box.cx = std::clamp(geo.to_image_x(d.pcx), 0.0f, static_cast<float>(frame_w - 1));
    box.cy = std::clamp(geo.to_image_y(d.pcy), 0.0f, static_cast<float>(frame_h - 1));
    box.w = std::max(1.0f, geo.extent_to_image(d.pw));
    box.h = std::max(1.0f, geo.extent_to_image(d.ph));
    return box;
}

// ---------------------------------------------------------------------------
// Tracking state machine
// ---------------------------------------------------------------------------

inline TrackerState init(const Tensor& frame, const BBox& box, const TrackerModel& model) {
    if (box.w < 1.0f || box.h < 1.0f) {
        throw InputError("init: degenerate box (extent below one pixel)");
    }
    const TrackerConfig& cfg = model.config;
    const ModelParams& par = model.params;

    TrackerState state;
    state.model = &model;
    state.backbone = make_backbone_state(cfg);

    // Template branch: processed once, off the streaming queues.
    const Tensor tpatch =
        scale(crop_patch(frame, box, cfg.template_size, cfg.context), 1.0f / 255.0f);
    state.template_features = extract_features(par.backbone, state.backbone, tpatch, false);

    // First search pass seeds the streaming queues and the temporal prior.
    const Tensor spatch =
        scale(crop_patch(frame, box, cfg.search_size, cfg.context), 1.0f / 255.0f);
    const Tensor sfeat = extract_features(par.backbone, state.backbone, spatch, true);
    const Tensor r1 = depthwise_xcorr(sfeat, state.template_features);
    state.prior = init_prior(r1, par.attrans, cfg.toggles(), cfg.prior_seed);

    state.frame_index = 1;
    state.last_box = box;
    return state;
}

inline TrackResult track(TrackerState& state, const Tensor& frame, FrameTrace* trace = nullptr) {
    if (!state.initialized()) throw StateError("track: tracker not initialized");
    const TrackerConfig& cfg = state.model->config;
    const ModelParams& par = state.model->params;

    const CropGeometry geo = crop_geometry(state.last_box, cfg.search_size, cfg.context);
    const Tensor patch =
        scale(crop_patch(frame, state.last_box, cfg.search_size, cfg.context), 1.0f / 255.0f);
    const Tensor feats = extract_features(par.backbone, state.backbone, patch, true);
    const Tensor r_t = depthwise_xcorr(feats, state.template_features);

    state.frame_index += 1;
    if (state.reset_prior_each_frame) {
        state.prior = init_prior(r_t, par.attrans, cfg.toggles(), cfg.prior_seed);
    }

    StepProbe probe;
    StepProbe* pp = trace ? &probe : nullptr;
    StepResult sr = step(state.prior, r_t, par.attrans, cfg.toggles(), state.frame_index, pp);
    state.prior = std::move(sr.prior);

    const HeadOutput heads = head_forward(sr.refined_map, par.heads);
    const PatchDecode d = decode_response(heads, cfg.total_stride(), cfg.search_size);
    const BBox box = decode_to_image(d, geo, frame.dim(2), frame.dim(1));

    state.last_box = box;
    if (trace) {
        trace->frame = state.frame_index;
        trace->box = box;
        trace->score = d.score;
        trace->prior_norm = probe.prior_norm;
        trace->has_gate = !probe.gate.empty();
        if (trace->has_gate) {
            double s = 0.0;
            for (float v : probe.gate.values()) s += v;
            trace->gate_mean = s / static_cast<double>(probe.gate.size());
        }
        trace->has_attention = probe.attention.any();
        trace->attn_row_sum_min = probe.attention.row_sum_min;
        trace->attn_row_sum_max = probe.attention.row_sum_max;
    }
    return {box, d.score};
}

// ---------------------------------------------------------------------------
// State serialization (size audit + replay snapshots)
// ---------------------------------------------------------------------------

namespace detail {

inline void put_bytes(std::vector<std::uint8_t>& out, const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out.insert(out.end(), b, b + n);
}

template <class T>
void put_scalar(std::vector<std::uint8_t>& out, T v) {
    put_bytes(out, &v, sizeof(T));
}

inline void put_tensor(std::vector<std::uint8_t>& out, const Tensor& t) {
    put_scalar<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (int i = 0; i < t.rank(); ++i) {
        put_scalar<std::uint32_t>(out, static_cast<std::uint32_t>(t.dim(i)));
    }
    put_bytes(out, t.data(), t.size() * sizeof(float));
}

}  // namespace detail

// Everything that changes per frame, in a fixed-layout byte buffer. The size
// depends only on the configuration, never on the frame index.
inline std::vector<std::uint8_t> serialize_state(const TrackerState& state) {
    if (!state.initialized()) throw StateError("serialize_state: tracker not initialized");
    std::vector<std::uint8_t> out;
    detail::put_scalar<std::int64_t>(out, state.frame_index);
    detail::put_scalar<float>(out, state.last_box.cx);
    detail::put_scalar<float>(out, state.last_box.cy);
    detail::put_scalar<float>(out, state.last_box.w);
    detail::put_scalar<float>(out, state.last_box.h);
    detail::put_tensor(out, state.template_features);
    detail::put_scalar<std::int64_t>(out, state.prior.frame_index);
    detail::put_tensor(out, state.prior.tokens);
    detail::put_scalar<std::uint32_t>(out, static_cast<std::uint32_t>(state.backbone.queues.size()));
    for (const TemporalContextQueue& q : state.backbone.queues) {
        detail::put_scalar<std::int64_t>(out, q.push_count());
        detail::put_tensor(out, q.first_descriptor());
        detail::put_tensor(out, q.as_tensor());
    }
    return out;
}

}  // namespace tempotrack
