#pragma once

#include <cmath>
#include <limits>

#include "tempotrack/ops.hpp"
#include "tempotrack/tensor.hpp"

namespace tempotrack {

struct AttentionConfig {
    int num_heads = 1;
    int model_dim = 1;  // C_i
    int head_dim = 1;   // C_i / num_heads
    float scale = 1.0f; // 1 / sqrt(head_dim)

    AttentionConfig() = default;
    AttentionConfig(int heads, int dim) : num_heads(heads), model_dim(dim) {
        if (heads <= 0 || dim <= 0) {
            throw DimensionError("attention config: dimensions must be positive");
        }
        if (dim % heads != 0) {
            throw DimensionError("attention config: model_dim must be divisible by num_heads");
        }
        head_dim = dim / heads;
        scale = 1.0f / std::sqrt(static_cast<float>(head_dim));
    }
};

// Projection matrices, each model_dim x model_dim; head n reads the column
// slice [n*head_dim, (n+1)*head_dim). No projection biases.
struct MhaParams {
    Tensor wq, wk, wv, wo;
};

// Collects post-softmax attention row sums so a run can assert normalization
// end to end.
struct AttentionProbe {
    double row_sum_min = std::numeric_limits<double>::infinity();
    double row_sum_max = -std::numeric_limits<double>::infinity();

    void observe(double s) {
        row_sum_min = std::min(row_sum_min, s);
        row_sum_max = std::max(row_sum_max, s);
    }
    bool any() const { return row_sum_min <= row_sum_max; }
};

inline Tensor multi_head_attention(const Tensor& query, const Tensor& key, const Tensor& value,
                                   const MhaParams& p, const AttentionConfig& cfg,
                                   AttentionProbe* probe = nullptr) {
    detail::require(query.rank() == 2 && key.rank() == 2 && value.rank() == 2,
                    "multi_head_attention: operands must be T x C");
    detail::require(query.dim(1) == cfg.model_dim && key.dim(1) == cfg.model_dim &&
                        value.dim(1) == cfg.model_dim,
                    "multi_head_attention: channel width mismatch");
    detail::require(key.dim(0) == value.dim(0),
                    "multi_head_attention: key/value token count mismatch");
    for (const Tensor* w : {&p.wq, &p.wk, &p.wv, &p.wo}) {
        detail::require(w->rank() == 2 && w->dim(0) == cfg.model_dim &&
                            w->dim(1) == cfg.model_dim,
                        "multi_head_attention: projection must be C x C");
    }

    const int tq = query.dim(0), tk = key.dim(0);
    const int c = cfg.model_dim, ch = cfg.head_dim;

    const Tensor q_proj = matmul(query, p.wq);
    const Tensor k_proj = matmul(key, p.wk);
    const Tensor v_proj = matmul(value, p.wv);

    Tensor heads({tq, c});
    Tensor scores({tq, tk});
    // per-head packed key columns (transposed) and value rows keep the score
    // and mixing loops contiguous in the token index
    std::vector<float> k_t(static_cast<std::size_t>(ch) * tk);
    std::vector<float> v_pack(static_cast<std::size_t>(tk) * ch);
    for (int n = 0; n < cfg.num_heads; ++n) {
        const int off = n * ch;
        for (int j = 0; j < tk; ++j) {
            const float* krow = k_proj.data() + static_cast<std::size_t>(j) * c + off;
            const float* vrow = v_proj.data() + static_cast<std::size_t>(j) * c + off;
            for (int d = 0; d < ch; ++d) {
                k_t[static_cast<std::size_t>(d) * tk + j] = krow[d];
                v_pack[static_cast<std::size_t>(j) * ch + d] = vrow[d];
            }
        }
        for (int i = 0; i < tq; ++i) {
            const float* qrow = q_proj.data() + static_cast<std::size_t>(i) * c + off;
            float* srow = scores.data() + static_cast<std::size_t>(i) * tk;
            std::fill(srow, srow + tk, 0.0f);
            for (int d = 0; d < ch; ++d) {
                const float qv = qrow[d];
                const float* krow = k_t.data() + static_cast<std::size_t>(d) * tk;
                for (int j = 0; j < tk; ++j) srow[j] += qv * krow[j];
            }
            for (int j = 0; j < tk; ++j) srow[j] *= cfg.scale;
        }
        const Tensor attn = softmax(scores);
        if (probe) {
            for (int i = 0; i < tq; ++i) {
                double s = 0.0;
                const float* arow = attn.data() + static_cast<std::size_t>(i) * tk;
                for (int j = 0; j < tk; ++j) s += arow[j];
                probe->observe(s);
            }
        }
        for (int i = 0; i < tq; ++i) {
            const float* arow = attn.data() + static_cast<std::size_t>(i) * tk;
            float* hrow = heads.data() + static_cast<std::size_t>(i) * c + off;
            for (int j = 0; j < tk; ++j) {
                const float av = arow[j];
                const float* vrow = v_pack.data() + static_cast<std::size_t>(j) * ch;
                for (int d = 0; d < ch; ++d) hrow[d] += av * vrow[d];
            }
        }
    }
    return matmul(heads, p.wo);
}

// Two affine layers with a rectifier between; hidden width comes from the
// parameter shapes.
struct FfnParams {
    Tensor w1, b1;  // C x H, H
    Tensor w2, b2;  // H x C_out, C_out
};

inline Tensor feed_forward(const Tensor& input, const FfnParams& p) {
    return affine(relu(affine(input, p.w1, p.b1)), p.w2, p.b2);
}

}  // namespace tempotrack
