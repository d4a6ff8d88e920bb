#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>

#include "tempotrack/tensor.hpp"

namespace tempotrack {

namespace testing_hooks {
// Debug switch used by the selftest mutation check: when set, softmax skips
// the normalizing division so every row-sum invariant must trip.
inline bool softmax_skip_normalize = false;
}  // namespace testing_hooks

namespace detail {

inline void require(bool cond, const char* msg) {
    if (!cond) throw DimensionError(msg);
}

// ceil(a / b) and floor(a / b) for b > 0 and any a.
inline int ceil_div(int a, int b) { return a >= 0 ? (a + b - 1) / b : -(-a / b); }
inline int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

// Polynomial expf (Cephes coefficients), ~2 ulp over the clamped range.
// Finite inputs only; values are clamped to [-87, 88] so the result stays
// finite and the exponent assembly stays in range. Everything is branch-free
// (mask selects) so the softmax loops vectorize; libm expf is several times
// slower and this is where a tracking frame spends most of its time.
inline float exp_fast(float x) {
    const std::uint32_t m_hi = -static_cast<std::uint32_t>(x > 88.0f);
    std::uint32_t xb = (std::bit_cast<std::uint32_t>(x) & ~m_hi) |
                       (std::bit_cast<std::uint32_t>(88.0f) & m_hi);
    x = std::bit_cast<float>(xb);
    const std::uint32_t m_lo = -static_cast<std::uint32_t>(x < -87.0f);
    xb = (std::bit_cast<std::uint32_t>(x) & ~m_lo) |
         (std::bit_cast<std::uint32_t>(-87.0f) & m_lo);
    x = std::bit_cast<float>(xb);

    const float z = x * 1.44269504088896341f;
    constexpr float round_magic = 12582912.0f;  // 1.5 * 2^23
    const float n = (z + round_magic) - round_magic;
    float r = x - n * 0.693359375f;
    r += n * 2.12194440e-4f;
    float p = 1.9875691500e-4f;
    p = p * r + 1.3981999507e-3f;
    p = p * r + 8.3334519073e-3f;
    p = p * r + 4.1665795894e-2f;
    p = p * r + 1.6666665459e-1f;
    p = p * r + 5.0000001201e-1f;
    p = p * r * r + r + 1.0f;
    const std::uint32_t bits =
        static_cast<std::uint32_t>(static_cast<std::int32_t>(n) + 127) << 23;
    return p * std::bit_cast<float>(bits);
}

}  // namespace detail

inline void check_finite(const Tensor& t, const char* context) {
    for (float v : t.values()) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string(context) + ": non-finite value");
        }
    }
}

// ---------------------------------------------------------------------------
// Convolution family
// ---------------------------------------------------------------------------

// input C_in x H x W, weights C_out x C_in x kh x kw, bias C_out.
// Output extent: floor((H + 2*padding - k) / stride) + 1.
inline Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias,
                     int stride = 1, int padding = 0) {
    detail::require(input.rank() == 3, "conv2d: input must be C_in x H x W");
    detail::require(weights.rank() == 4, "conv2d: weights must be C_out x C_in x kh x kw");
    const int c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
    const int c_out = weights.dim(0), kh = weights.dim(2), kw = weights.dim(3);
    detail::require(weights.dim(1) == c_in, "conv2d: input/weight channel mismatch");
    detail::require(bias.rank() == 1 && bias.dim(0) == c_out, "conv2d: bias length mismatch");
    detail::require(stride >= 1, "conv2d: stride must be >= 1");
    detail::require(padding >= 0, "conv2d: padding must be >= 0");
    detail::require(kh <= h + 2 * padding && kw <= w + 2 * padding,
                    "conv2d: kernel larger than padded input");

    const int oh = (h + 2 * padding - kh) / stride + 1;
    const int ow = (w + 2 * padding - kw) / stride + 1;
    Tensor out({c_out, oh, ow});
    const float* in = input.data();
    const float* wt = weights.data();
    float* dst = out.data();

    for (int co = 0; co < c_out; ++co) {
        float* out_plane = dst + static_cast<std::size_t>(co) * oh * ow;
        std::fill(out_plane, out_plane + static_cast<std::size_t>(oh) * ow, bias.data()[co]);
        for (int ci = 0; ci < c_in; ++ci) {
            const float* in_plane = in + static_cast<std::size_t>(ci) * h * w;
            const float* filt = wt + (static_cast<std::size_t>(co) * c_in + ci) * kh * kw;
            for (int ky = 0; ky < kh; ++ky) {
                const int oy_lo = std::max(0, detail::ceil_div(padding - ky, stride));
                const int oy_hi = std::min(oh - 1, detail::floor_div(h - 1 - ky + padding, stride));
                for (int kx = 0; kx < kw; ++kx) {
                    const float wv = filt[ky * kw + kx];
                    const int ox_lo = std::max(0, detail::ceil_div(padding - kx, stride));
                    const int ox_hi =
                        std::min(ow - 1, detail::floor_div(w - 1 - kx + padding, stride));
                    const int kxp = kx - padding;
                    for (int oy = oy_lo; oy <= oy_hi; ++oy) {
                        const float* in_row =
                            in_plane + static_cast<std::size_t>(oy * stride + ky - padding) * w;
                        float* out_row = out_plane + static_cast<std::size_t>(oy) * ow;
                        for (int ox = ox_lo; ox <= ox_hi; ++ox) {
                            out_row[ox] += wv * in_row[ox * stride + kxp];
                        }
                    }
                }
            }
        }
    }
    return out;
}

// Reduces a whole L x C queue to one value per output channel; the kernel's
// temporal extent must equal the queue length (single output position).
inline Tensor conv1d_over_queue(const Tensor& queue, const Tensor& weights, const Tensor& bias) {
    detail::require(queue.rank() == 2, "conv1d_over_queue: queue must be L x C");
    detail::require(weights.rank() == 3, "conv1d_over_queue: weights must be C_out x C x L");
    const int len = queue.dim(0), c = queue.dim(1);
    const int c_out = weights.dim(0);
    detail::require(weights.dim(1) == c, "conv1d_over_queue: channel mismatch");
    detail::require(weights.dim(2) == len,
                    "conv1d_over_queue: kernel extent must equal queue length");
    detail::require(bias.rank() == 1 && bias.dim(0) == c_out,
                    "conv1d_over_queue: bias length mismatch");

    Tensor out({c_out});
    for (int co = 0; co < c_out; ++co) {
        float acc = bias.at(co);
        for (int ci = 0; ci < c; ++ci) {
            for (int l = 0; l < len; ++l) {
                acc += weights.at(co, ci, l) * queue.at(l, ci);
            }
        }
        out.at(co) = acc;
    }
    return out;
}

// Valid cross-correlation computed independently per channel; the template
// acts as the kernel and is not flipped.
inline Tensor depthwise_xcorr(const Tensor& search, const Tensor& templ) {
    detail::require(search.rank() == 3 && templ.rank() == 3,
                    "depthwise_xcorr: inputs must be C x H x W");
    const int c = search.dim(0), hs = search.dim(1), ws = search.dim(2);
    detail::require(templ.dim(0) == c, "depthwise_xcorr: channel mismatch");
    const int ht = templ.dim(1), wt = templ.dim(2);
    detail::require(ht <= hs && wt <= ws, "depthwise_xcorr: template larger than search");

    const int oh = hs - ht + 1, ow = ws - wt + 1;
    Tensor out({c, oh, ow});
    for (int ch = 0; ch < c; ++ch) {
        const float* sp = search.data() + static_cast<std::size_t>(ch) * hs * ws;
        const float* tp = templ.data() + static_cast<std::size_t>(ch) * ht * wt;
        float* op = out.data() + static_cast<std::size_t>(ch) * oh * ow;
        for (int ty = 0; ty < ht; ++ty) {
            for (int tx = 0; tx < wt; ++tx) {
                const float tv = tp[ty * wt + tx];
                for (int oy = 0; oy < oh; ++oy) {
                    const float* srow = sp + static_cast<std::size_t>(oy + ty) * ws + tx;
                    float* orow = op + static_cast<std::size_t>(oy) * ow;
                    for (int ox = 0; ox < ow; ++ox) {
                        orow[ox] += tv * srow[ox];
                    }
                }
            }
        }
    }
    return out;
}

// Per-channel mean over the spatial extent.
inline Tensor global_avg_pool(const Tensor& input) {
    detail::require(input.rank() == 3, "global_avg_pool: input must be C x H x W");
    const int c = input.dim(0);
    const std::size_t plane = static_cast<std::size_t>(input.dim(1)) * input.dim(2);
    Tensor out({c});
    for (int ch = 0; ch < c; ++ch) {
        const float* p = input.data() + static_cast<std::size_t>(ch) * plane;
        double sum = 0.0;
        for (std::size_t i = 0; i < plane; ++i) sum += p[i];
        out.at(ch) = static_cast<float>(sum / static_cast<double>(plane));
    }
    return out;
}

inline Tensor max_pool2d(const Tensor& input, int window, int stride) {
    detail::require(input.rank() == 3, "max_pool2d: input must be C x H x W");
    detail::require(window >= 1 && stride >= 1, "max_pool2d: window and stride must be >= 1");
    const int c = input.dim(0), h = input.dim(1), w = input.dim(2);
    detail::require(window <= h && window <= w, "max_pool2d: window larger than input");
    const int oh = (h - window) / stride + 1;
    const int ow = (w - window) / stride + 1;
    Tensor out({c, oh, ow});
    for (int ch = 0; ch < c; ++ch) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                float m = -std::numeric_limits<float>::infinity();
                for (int ky = 0; ky < window; ++ky) {
                    for (int kx = 0; kx < window; ++kx) {
                        m = std::max(m, input.at(ch, oy * stride + ky, ox * stride + kx));
                    }
                }
                out.at(ch, oy, ox) = m;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

// Softmax over the last axis, computed with max subtraction. Slices sum to 1.
inline Tensor softmax(const Tensor& logits) {
    detail::require(logits.rank() >= 1, "softmax: rank must be >= 1");
    const int k = logits.dim(logits.rank() - 1);
    const std::size_t rows = logits.size() / static_cast<std::size_t>(k);
    Tensor out(logits.shape());
    const float* in = logits.data();
    float* dst = out.data();
    for (std::size_t r = 0; r < rows; ++r) {
        const float* row = in + r * k;
        float* orow = dst + r * k;
        // x - x != 0 exactly for NaN and the infinities
        float m = row[0];
        int bad = 0;
        for (int i = 0; i < k; ++i) {
            bad += (row[i] - row[i] != 0.0f);
            m = std::max(m, row[i]);
        }
        if (bad) throw NumericError("softmax: non-finite input");
        for (int i = 0; i < k; ++i) orow[i] = detail::exp_fast(row[i] - m);
        float sum = 0.0f;
        for (int i = 0; i < k; ++i) sum += orow[i];
        if (testing_hooks::softmax_skip_normalize) continue;
        const float inv = 1.0f / sum;
        for (int i = 0; i < k; ++i) orow[i] *= inv;
    }
    return out;
}

// Row-wise normalization of a T x C token matrix: zero mean and unit variance
// per token (population variance), then the per-channel affine.
inline Tensor layer_norm(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                         float eps = 1e-5f) {
    detail::require(input.rank() == 2, "layer_norm: input must be T x C");
    const int t = input.dim(0), c = input.dim(1);
    detail::require(c >= 2, "layer_norm: channel width must be >= 2");
    detail::require(gamma.rank() == 1 && gamma.dim(0) == c, "layer_norm: gamma length mismatch");
    detail::require(beta.rank() == 1 && beta.dim(0) == c, "layer_norm: beta length mismatch");

    Tensor out({t, c});
    const float* g = gamma.data();
    const float* b = beta.data();
    for (int i = 0; i < t; ++i) {
        const float* row = input.data() + static_cast<std::size_t>(i) * c;
        float* orow = out.data() + static_cast<std::size_t>(i) * c;
        double mean = 0.0;
        for (int j = 0; j < c; ++j) mean += row[j];
        mean /= c;
        double var = 0.0;
        for (int j = 0; j < c; ++j) {
            const double d = row[j] - mean;
            var += d * d;
        }
        var /= c;
        const float inv = 1.0f / std::sqrt(static_cast<float>(var) + eps);
        for (int j = 0; j < c; ++j) {
            orow[j] = (row[j] - static_cast<float>(mean)) * inv * g[j] + b[j];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Linear algebra and reshaping plumbing
// ---------------------------------------------------------------------------

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    detail::require(a.rank() == 2 && b.rank() == 2, "matmul: operands must be rank 2");
    detail::require(a.dim(1) == b.dim(0), "matmul: inner dimension mismatch");
    const int t = a.dim(0), k = a.dim(1), m = b.dim(1);
    Tensor out({t, m});
    for (int i = 0; i < t; ++i) {
        float* orow = out.data() + static_cast<std::size_t>(i) * m;
        const float* arow = a.data() + static_cast<std::size_t>(i) * k;
        for (int kk = 0; kk < k; ++kk) {
            const float av = arow[kk];
            const float* brow = b.data() + static_cast<std::size_t>(kk) * m;
            for (int j = 0; j < m; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

// matmul plus a row-broadcast bias.
inline Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
    Tensor out = matmul(x, w);
    detail::require(b.rank() == 1 && b.dim(0) == out.dim(1), "affine: bias length mismatch");
    const int t = out.dim(0), m = out.dim(1);
    for (int i = 0; i < t; ++i) {
        float* row = out.data() + static_cast<std::size_t>(i) * m;
        for (int j = 0; j < m; ++j) row[j] += b.at(j);
    }
    return out;
}

inline Tensor concat(const Tensor& a, const Tensor& b, int axis) {
    detail::require(a.rank() == b.rank(), "concat: rank mismatch");
    detail::require(axis >= 0 && axis < a.rank(), "concat: axis out of range");
    for (int i = 0; i < a.rank(); ++i) {
        if (i != axis) detail::require(a.dim(i) == b.dim(i), "concat: extent mismatch off axis");
    }
    std::vector<int> shape = a.shape();
    shape[static_cast<std::size_t>(axis)] = a.dim(axis) + b.dim(axis);

    std::size_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= static_cast<std::size_t>(a.dim(i));
    for (int i = axis + 1; i < a.rank(); ++i) inner *= static_cast<std::size_t>(a.dim(i));
    const std::size_t ablock = static_cast<std::size_t>(a.dim(axis)) * inner;
    const std::size_t bblock = static_cast<std::size_t>(b.dim(axis)) * inner;

    Tensor out(std::move(shape));
    float* dst = out.data();
    for (std::size_t o = 0; o < outer; ++o) {
        std::copy_n(a.data() + o * ablock, ablock, dst);
        dst += ablock;
        std::copy_n(b.data() + o * bblock, bblock, dst);
        dst += bblock;
    }
    return out;
}

// C x H x W map -> (H*W) x C tokens, row-major over spatial positions.
inline Tensor to_tokens(const Tensor& map) {
    detail::require(map.rank() == 3, "to_tokens: input must be C x H x W");
    const int c = map.dim(0), h = map.dim(1), w = map.dim(2);
    Tensor out({h * w, c});
    for (int ch = 0; ch < c; ++ch) {
        const float* plane = map.data() + static_cast<std::size_t>(ch) * h * w;
        for (int p = 0; p < h * w; ++p) {
            out.data()[static_cast<std::size_t>(p) * c + ch] = plane[p];
        }
    }
    return out;
}

inline Tensor to_map(const Tensor& tokens, int height, int width) {
    detail::require(tokens.rank() == 2, "to_map: input must be T x C");
    detail::require(tokens.dim(0) == height * width, "to_map: token count != height*width");
    const int c = tokens.dim(1);
    Tensor out({c, height, width});
    for (int ch = 0; ch < c; ++ch) {
        float* plane = out.data() + static_cast<std::size_t>(ch) * height * width;
        for (int p = 0; p < height * width; ++p) {
            plane[p] = tokens.data()[static_cast<std::size_t>(p) * c + ch];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

inline Tensor add(const Tensor& a, const Tensor& b) {
    detail::require(a.shape() == b.shape(), "add: shape mismatch");
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
    return out;
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    detail::require(a.shape() == b.shape(), "mul: shape mismatch");
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
    return out;
}

inline Tensor scale(const Tensor& a, float s) {
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * s;
    return out;
}

inline Tensor relu(const Tensor& a) {
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = std::max(0.0f, a.data()[i]);
    return out;
}

inline Tensor sigmoid(const Tensor& a) {
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.data()[i] = 1.0f / (1.0f + std::exp(-a.data()[i]));
    }
    return out;
}

// Column mean of a T x C token matrix.
inline Tensor mean_over_rows(const Tensor& tokens) {
    detail::require(tokens.rank() == 2, "mean_over_rows: input must be T x C");
    const int t = tokens.dim(0), c = tokens.dim(1);
    Tensor out({c});
    for (int j = 0; j < c; ++j) {
        double sum = 0.0;
        for (int i = 0; i < t; ++i) sum += tokens.at(i, j);
        out.at(j) = static_cast<float>(sum / t);
    }
    return out;
}

// Per-channel scaling of a T x C token matrix, broadcast over tokens.
inline Tensor scale_channels(const Tensor& tokens, const Tensor& factors) {
    detail::require(tokens.rank() == 2, "scale_channels: input must be T x C");
    detail::require(factors.rank() == 1 && factors.dim(0) == tokens.dim(1),
                    "scale_channels: factor length mismatch");
    Tensor out(tokens.shape());
    const int t = tokens.dim(0), c = tokens.dim(1);
    for (int i = 0; i < t; ++i) {
        for (int j = 0; j < c; ++j) out.at(i, j) = tokens.at(i, j) * factors.at(j);
    }
    return out;
}

inline double l2_norm(const Tensor& t) {
    double sum = 0.0;
    for (float v : t.values()) sum += static_cast<double>(v) * v;
    return std::sqrt(sum);
}

}  // namespace tempotrack
