#pragma once

#include <string>
#include <utility>

#include "tempotrack/attrans.hpp"
#include "tempotrack/config.hpp"
#include "tempotrack/heads.hpp"
#include "tempotrack/rng.hpp"
#include "tempotrack/tada.hpp"

namespace tempotrack {

struct ModelParams {
    BackboneParams backbone;
    AtTransParams attrans;
    HeadParams heads;
};

// ---------------------------------------------------------------------------
// Named-tensor traversal. Every parameter tensor has exactly one dotted name;
// the archive, the random initializer and the parameter count all walk the
// same registry.
// ---------------------------------------------------------------------------

template <class ConvT, class F>
void visit_conv(ConvT& c, const std::string& prefix, F&& f) {
    f(prefix + ".weight", c.weights);
    f(prefix + ".bias", c.bias);
}

template <class MhaT, class F>
void visit_mha(MhaT& m, const std::string& prefix, F&& f) {
    f(prefix + ".wq", m.wq);
    f(prefix + ".wk", m.wk);
    f(prefix + ".wv", m.wv);
    f(prefix + ".wo", m.wo);
}

template <class LnT, class F>
void visit_ln(LnT& n, const std::string& prefix, F&& f) {
    f(prefix + ".gamma", n.gamma);
    f(prefix + ".beta", n.beta);
}

template <class FfnT, class F>
void visit_ffn(FfnT& n, const std::string& prefix, F&& f) {
    f(prefix + ".w1", n.w1);
    f(prefix + ".b1", n.b1);
    f(prefix + ".w2", n.w2);
    f(prefix + ".b2", n.b2);
}

template <class ModelT, class F>
void for_each_tensor(ModelT& m, F&& f) {
    for (std::size_t i = 0; i < m.backbone.stages.size(); ++i) {
        auto& st = m.backbone.stages[i];
        const std::string prefix = "backbone.stage" + std::to_string(i);
        f(prefix + ".weight", st.weights);
        f(prefix + ".bias", st.bias);
        if (st.temporal) {
            f(prefix + ".calib_w.weight", st.calib_w.weights);
            f(prefix + ".calib_w.bias", st.calib_w.bias);
            f(prefix + ".calib_b.weight", st.calib_b.weights);
            f(prefix + ".calib_b.bias", st.calib_b.bias);
        }
    }
    auto& a = m.attrans;
    visit_conv(a.adjust, "attrans.adjust", f);
    visit_conv(a.prior_init, "attrans.prior_init", f);
    visit_mha(a.enc_fuse, "attrans.enc_fuse", f);
    visit_ln(a.enc_norm1, "attrans.enc_norm1", f);
    visit_mha(a.enc_self, "attrans.enc_self", f);
    visit_ln(a.enc_norm2, "attrans.enc_norm2", f);
    visit_conv(a.filter_pre, "attrans.filter_pre", f);
    visit_ffn(a.filter_gate, "attrans.filter_gate", f);
    visit_conv(a.fusion, "attrans.fusion", f);
    visit_mha(a.enc_out, "attrans.enc_out", f);
    visit_ln(a.enc_norm3, "attrans.enc_norm3", f);
    visit_mha(a.dec_self, "attrans.dec_self", f);
    visit_ln(a.dec_norm1, "attrans.dec_norm1", f);
    visit_mha(a.dec_cross, "attrans.dec_cross", f);
    visit_ln(a.dec_norm2, "attrans.dec_norm2", f);
    visit_ffn(a.dec_ffn, "attrans.dec_ffn", f);
    visit_ln(a.dec_norm3, "attrans.dec_norm3", f);
    visit_conv(m.heads.cls1, "head.cls1", f);
    visit_conv(m.heads.cls2, "head.cls2", f);
    visit_conv(m.heads.reg1, "head.reg1", f);
    visit_conv(m.heads.reg2, "head.reg2", f);
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

namespace detail {

inline ConvParams make_conv(int c_out, int c_in, int k, int stride, int padding) {
    ConvParams c;
    c.weights = Tensor({c_out, c_in, k, k});
    c.bias = Tensor({c_out});
    c.stride = stride;
    c.padding = padding;
    return c;
}

inline MhaParams make_mha(int dim) {
    return {Tensor({dim, dim}), Tensor({dim, dim}), Tensor({dim, dim}), Tensor({dim, dim})};
}

inline LayerNormParams make_ln(int dim) {
    return {Tensor::full({dim}, 1.0f), Tensor({dim})};
}

inline FfnParams make_ffn(int dim, int hidden, int out_dim) {
    return {Tensor({dim, hidden}), Tensor({hidden}), Tensor({hidden, out_dim}),
            Tensor({out_dim})};
}

}  // namespace detail

// Allocates every parameter at its configured shape. Weights are zero,
// layer-norm gains one; call init_weights for a usable random model.
inline ModelParams build_model(const TrackerConfig& cfg) {
    cfg.validate();
    ModelParams m;

    int c_in = 3;
    const std::size_t n = cfg.stages.size();
    for (std::size_t i = 0; i < n; ++i) {
        const StageSpec& spec = cfg.stages[i];
        StageParams st;
        st.weights = Tensor({spec.channels, c_in, spec.kernel, spec.kernel});
        st.bias = Tensor({spec.channels});
        st.stride = spec.stride;
        st.pool_window = spec.pool_window;
        st.pool_stride = spec.pool_stride;
        st.temporal = i + 2 >= n;  // the final two stages adapt over time
        if (st.temporal) {
            st.calib_w = {Tensor({spec.channels, c_in, cfg.queue_len}), Tensor({spec.channels})};
            st.calib_b = {Tensor({spec.channels, c_in, cfg.queue_len}), Tensor({spec.channels})};
        }
        m.backbone.stages.push_back(std::move(st));
        c_in = spec.channels;
    }

    const int cmap = cfg.backbone_out_channels();
    const int ci = cfg.embed_channels;
    const int pad = cfg.adjust_kernel / 2;
    auto& a = m.attrans;
    a.attn = AttentionConfig(cfg.num_heads, ci);
    a.adjust = detail::make_conv(ci, cmap, cfg.adjust_kernel, 1, pad);
    a.prior_init = detail::make_conv(ci, cmap, cfg.adjust_kernel, 1, pad);
    a.enc_fuse = detail::make_mha(ci);
    a.enc_norm1 = detail::make_ln(ci);
    a.enc_self = detail::make_mha(ci);
    a.enc_norm2 = detail::make_ln(ci);
    a.filter_pre = detail::make_conv(ci, ci, cfg.filter_kernel, 1, 0);
    a.filter_gate = detail::make_ffn(ci, 2 * ci, ci);
    a.fusion = detail::make_conv(ci, 2 * ci, cfg.filter_kernel, 1, 0);
    a.enc_out = detail::make_mha(ci);
    a.enc_norm3 = detail::make_ln(ci);
    a.dec_self = detail::make_mha(ci);
    a.dec_norm1 = detail::make_ln(ci);
    a.dec_cross = detail::make_mha(ci);
    a.dec_norm2 = detail::make_ln(ci);
    a.dec_ffn = detail::make_ffn(ci, 2 * ci, ci);
    a.dec_norm3 = detail::make_ln(ci);

    m.heads.cls1 = detail::make_conv(ci, ci, 3, 1, 1);
    m.heads.cls2 = detail::make_conv(2, ci, 3, 1, 1);
    m.heads.reg1 = detail::make_conv(ci, ci, 3, 1, 1);
    m.heads.reg2 = detail::make_conv(4, ci, 3, 1, 1);
    return m;
}

// Seeded fan-in-scaled init. Calibration generators stay zero so a fresh
// model behaves exactly like its plain-convolution counterpart; layer-norm
// affines stay at identity; biases stay zero.
inline void init_weights(ModelParams& m, std::uint64_t seed) {
    SplitMix64 rng(seed);
    for_each_tensor(m, [&](const std::string& name, Tensor& t) {
        const bool is_calib = name.find(".calib_") != std::string::npos;
        const bool is_norm = name.find("norm") != std::string::npos;
        const bool is_bias = name.size() >= 5 && (name.rfind(".bias") == name.size() - 5 ||
                                                  name.rfind(".b1") == name.size() - 3 ||
                                                  name.rfind(".b2") == name.size() - 3);
        if (is_calib || is_norm || is_bias) return;
        std::size_t fan_in = t.size() / static_cast<std::size_t>(t.dim(0));
        if (t.rank() == 2) fan_in = static_cast<std::size_t>(t.dim(0));  // row-major x @ W
        const float limit = std::sqrt(6.0f / static_cast<float>(fan_in));
        for (float& v : t.values()) v = rng.uniform(-limit, limit);
    });
}

// Randomizes every tensor, calibration generators and norms included. Test
// helper for exercising the fully general parameter space.
inline void randomize_all(ModelParams& m, SplitMix64& rng, float lo = -0.5f, float hi = 0.5f) {
    for_each_tensor(m, [&](const std::string&, Tensor& t) {
        for (float& v : t.values()) v = rng.uniform(lo, hi);
    });
}

// Fresh per-sequence queues matching the temporally adaptive stages; queue
// width is the input channel count of its stage.
inline BackboneState make_backbone_state(const TrackerConfig& cfg) {
    BackboneState state;
    int c_in = 3;
    const std::size_t n = cfg.stages.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (i + 2 >= n) state.queues.emplace_back(cfg.queue_len, c_in);
        c_in = cfg.stages[i].channels;
    }
    return state;
}

inline std::size_t parameter_count(const ModelParams& m) {
    std::size_t n = 0;
    for_each_tensor(m, [&](const std::string&, const Tensor& t) { n += t.size(); });
    return n;
}

}  // namespace tempotrack
