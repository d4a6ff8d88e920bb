#pragma once

#include <cstdint>
#include <utility>

#include "tempotrack/attention.hpp"
#include "tempotrack/ops.hpp"
#include "tempotrack/rng.hpp"
#include "tempotrack/tensor.hpp"

namespace tempotrack {

// The single evolving temporal-knowledge tensor of a sequence. Replaced every
// frame, never appended, so its footprint is fixed for the whole sequence.
struct TemporalPrior {
    Tensor tokens;                    // T x C_i
    std::int64_t frame_index = -1;    // -1 until initialized

    bool initialized() const { return frame_index >= 0; }
};

enum class QueryChoice { previous_prior, current_map };
enum class PriorInit { convolutional, random };

// Ablation switches; the defaults reproduce the full model.
struct ATTransToggles {
    bool filter_enabled = true;
    QueryChoice query_choice = QueryChoice::previous_prior;
    PriorInit prior_init = PriorInit::convolutional;
};

struct ConvParams {
    Tensor weights;  // C_out x C_in x k x k
    Tensor bias;     // C_out
    int stride = 1;
    int padding = 0;
};

struct LayerNormParams {
    Tensor gamma, beta;  // C
};

struct AtTransParams {
    AttentionConfig attn;

    ConvParams adjust;      // similarity map -> token channels, same-padding
    ConvParams prior_init;  // first-frame similarity map -> initial prior

    MhaParams enc_fuse;     // prior/map fusion attention
    LayerNormParams enc_norm1;
    MhaParams enc_self;
    LayerNormParams enc_norm2;

    ConvParams filter_pre;  // 1x1 over tokens, feeds the gate descriptor
    FfnParams filter_gate;  // sigmoid-bounded per-channel gate
    ConvParams fusion;      // 1x1 over concatenated tokens, 2*C_i -> C_i

    MhaParams enc_out;
    LayerNormParams enc_norm3;

    MhaParams dec_self;
    LayerNormParams dec_norm1;
    MhaParams dec_cross;
    LayerNormParams dec_norm2;
    FfnParams dec_ffn;
    LayerNormParams dec_norm3;
};

// Per-step instrumentation sink.
struct StepProbe {
    AttentionProbe attention;
    Tensor gate;             // empty when the filter is disabled
    double prior_norm = 0.0;
};

// 1x1 convolution applied directly in token form: a per-token channel map.
inline Tensor token_conv1x1(const Tensor& tokens, const ConvParams& conv) {
    detail::require(tokens.rank() == 2, "token_conv1x1: input must be T x C");
    detail::require(conv.weights.rank() == 4 && conv.weights.dim(2) == 1 &&
                        conv.weights.dim(3) == 1,
                    "token_conv1x1: kernel must be 1x1");
    const int c_in = conv.weights.dim(1), c_out = conv.weights.dim(0);
    detail::require(tokens.dim(1) == c_in, "token_conv1x1: channel mismatch");
    const int t = tokens.dim(0);
    Tensor out({t, c_out});
    for (int i = 0; i < t; ++i) {
        const float* row = tokens.data() + static_cast<std::size_t>(i) * c_in;
        float* orow = out.data() + static_cast<std::size_t>(i) * c_out;
        for (int co = 0; co < c_out; ++co) {
            float acc = conv.bias.at(co);
            const float* w = conv.weights.data() + static_cast<std::size_t>(co) * c_in;
            for (int ci = 0; ci < c_in; ++ci) acc += w[ci] * row[ci];
            orow[co] = acc;
        }
    }
    return out;
}

// Similarity map -> tokenized feature: one convolution, then map->token.
inline Tensor adjust(const Tensor& similarity_raw, const AtTransParams& p) {
    return to_tokens(
        conv2d(similarity_raw, p.adjust.weights, p.adjust.bias, p.adjust.stride, p.adjust.padding));
}

namespace detail {
inline std::pair<int, int> conv_output_extent(const Tensor& input, const ConvParams& c) {
    const int kh = c.weights.dim(2), kw = c.weights.dim(3);
    return {(input.dim(1) + 2 * c.padding - kh) / c.stride + 1,
            (input.dim(2) + 2 * c.padding - kw) / c.stride + 1};
}
}  // namespace detail

// Builds the initial prior from the first frame's similarity map, or from a
// seeded unit normal for the random-initialization ablation arm.
inline TemporalPrior init_prior(const Tensor& r1, const AtTransParams& p,
                                const ATTransToggles& toggles, std::uint64_t seed) {
    TemporalPrior prior;
    if (toggles.prior_init == PriorInit::random) {
        const auto [oh, ow] = detail::conv_output_extent(r1, p.prior_init);
        Tensor tokens({oh * ow, p.prior_init.weights.dim(0)});
        SplitMix64 rng(seed);
        for (float& v : tokens.values()) v = rng.normal();
        prior.tokens = std::move(tokens);
    } else {
        prior.tokens = to_tokens(conv2d(r1, p.prior_init.weights, p.prior_init.bias,
                                        p.prior_init.stride, p.prior_init.padding));
    }
    prior.frame_index = 0;
    return prior;
}

// Per-channel gate: 1x1 conv, token mean, FFN, sigmoid.
inline Tensor gate_values(const Tensor& f1, const AtTransParams& p) {
    const Tensor pooled = mean_over_rows(token_conv1x1(f1, p.filter_pre));
    Tensor row({1, pooled.dim(0)}, pooled.values());
    const Tensor g = sigmoid(feed_forward(row, p.filter_gate));
    return Tensor({g.dim(1)}, g.values());
}

// Gated residual combine of the filtered branch.
inline Tensor apply_information_filter(const Tensor& f2, const Tensor& fused,
                                       const Tensor& alpha) {
    return add(f2, scale_channels(fused, alpha));
}

// Encoder: fuses the previous prior with the current tokenized similarity map
// into this frame's prior. frame_index is the frame being processed.
inline TemporalPrior encode(const TemporalPrior& prior, const Tensor& ft, const AtTransParams& p,
                            const ATTransToggles& toggles, std::int64_t frame_index,
                            StepProbe* probe = nullptr) {
    if (!prior.initialized()) throw StateError("encode: prior not initialized");
    detail::require(prior.tokens.shape() == ft.shape(),
                    "encode: prior/map token shape mismatch");

    AttentionProbe* ap = probe ? &probe->attention : nullptr;
    const Tensor& q =
        toggles.query_choice == QueryChoice::previous_prior ? prior.tokens : ft;

    const Tensor f1 = layer_norm(add(ft, multi_head_attention(q, ft, ft, p.enc_fuse, p.attn, ap)),
                                 p.enc_norm1.gamma, p.enc_norm1.beta);
    const Tensor f2 =
        layer_norm(add(f1, multi_head_attention(f1, f1, f1, p.enc_self, p.attn, ap)),
                   p.enc_norm2.gamma, p.enc_norm2.beta);

    Tensor ff;
    if (toggles.filter_enabled) {
        const Tensor alpha = gate_values(f1, p);
        const Tensor fused = token_conv1x1(concat(f2, f1, 1), p.fusion);
        ff = apply_information_filter(f2, fused, alpha);
        if (probe) probe->gate = alpha;
    } else {
        ff = f2;
    }

    TemporalPrior out;
    out.tokens = layer_norm(add(ff, multi_head_attention(ff, ff, ff, p.enc_out, p.attn, ap)),
                            p.enc_norm3.gamma, p.enc_norm3.beta);
    out.frame_index = frame_index;
    if (probe) probe->prior_norm = l2_norm(out.tokens);
    return out;
}

// Decoder: refines the tokenized similarity map against the prior.
inline Tensor decode(const Tensor& ft, const TemporalPrior& prior, const AtTransParams& p,
                     AttentionProbe* probe = nullptr) {
    if (!prior.initialized()) throw StateError("decode: prior not initialized");
    detail::require(prior.tokens.shape() == ft.shape(),
                    "decode: prior/map token shape mismatch");

    const Tensor f3 =
        layer_norm(add(ft, multi_head_attention(ft, ft, ft, p.dec_self, p.attn, probe)),
                   p.dec_norm1.gamma, p.dec_norm1.beta);
    const Tensor f4 = layer_norm(
        add(f3, multi_head_attention(f3, prior.tokens, prior.tokens, p.dec_cross, p.attn, probe)),
        p.dec_norm2.gamma, p.dec_norm2.beta);
    return layer_norm(add(f4, feed_forward(f4, p.dec_ffn)), p.dec_norm3.gamma, p.dec_norm3.beta);
}

struct StepResult {
    Tensor refined_map;   // C_i x H x W, for the prediction heads
    TemporalPrior prior;  // replacement prior
};

// One full frame update: adjust, encode (single prior replacement), decode.
inline StepResult step(const TemporalPrior& prior, const Tensor& r_t, const AtTransParams& p,
                       const ATTransToggles& toggles, std::int64_t frame_index,
                       StepProbe* probe = nullptr) {
    if (!prior.initialized()) throw StateError("step: prior not initialized");
    const auto [oh, ow] = detail::conv_output_extent(r_t, p.adjust);
    const Tensor ft = adjust(r_t, p);
    TemporalPrior next = encode(prior, ft, p, toggles, frame_index, probe);
    Tensor refined = decode(ft, next, p, probe ? &probe->attention : nullptr);
    return {to_map(refined, oh, ow), std::move(next)};
}

}  // namespace tempotrack
