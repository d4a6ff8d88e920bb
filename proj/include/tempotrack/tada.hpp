#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "tempotrack/ops.hpp"
#include "tempotrack/tensor.hpp"

namespace tempotrack {

// Rolling window of the last L per-frame channel descriptors, newest first.
// Until L distinct frames have arrived, the missing slots hold the first
// frame's descriptor, so the queue is full after the very first push.
class TemporalContextQueue {
public:
    TemporalContextQueue() = default;
    TemporalContextQueue(int capacity, int channels)
        : capacity_(capacity), channels_(channels) {
        if (capacity < 1) throw DimensionError("temporal queue: capacity must be >= 1");
        if (channels < 1) throw DimensionError("temporal queue: channels must be >= 1");
    }

    void push(const Tensor& descriptor) {
        if (descriptor.rank() != 1 || descriptor.dim(0) != channels_) {
            throw DimensionError("temporal queue: descriptor channel mismatch");
        }
        if (push_count_ == 0) {
            first_ = descriptor;
            entries_.assign(static_cast<std::size_t>(capacity_), descriptor);
        } else {
            entries_.insert(entries_.begin(), descriptor);
            entries_.pop_back();
        }
        ++push_count_;
    }

    // age 0 is the newest entry.
    const Tensor& entry(int age) const { return entries_.at(static_cast<std::size_t>(age)); }

    // L x C matrix, newest first.
    Tensor as_tensor() const {
        if (entries_.empty()) throw StateError("temporal queue: read before first push");
        Tensor out({capacity_, channels_});
        for (int l = 0; l < capacity_; ++l) {
            const Tensor& e = entries_[static_cast<std::size_t>(l)];
            for (int c = 0; c < channels_; ++c) out.at(l, c) = e.at(c);
        }
        return out;
    }

    int capacity() const { return capacity_; }
    int channels() const { return channels_; }
    int length() const { return static_cast<int>(entries_.size()); }
    std::int64_t push_count() const { return push_count_; }
    const Tensor& first_descriptor() const { return first_; }

private:
    int capacity_ = 0;
    int channels_ = 0;
    std::vector<Tensor> entries_;
    Tensor first_;
    std::int64_t push_count_ = 0;
};

// Pools the frame feature into a channel descriptor and inserts it.
inline void push_descriptor(TemporalContextQueue& queue, const Tensor& feat) {
    queue.push(global_avg_pool(feat));
}

struct Conv1dParams {
    Tensor weights;  // C_out x C x L
    Tensor bias;     // C_out
};

// One backbone stage. Temporally adaptive stages carry the two calibration
// generators; their zero initialization makes the calibrated convolution
// coincide with the base one.
struct StageParams {
    Tensor weights;  // C_out x C_in x k x k
    Tensor bias;     // C_out
    int stride = 1;
    int pool_window = 0;  // 0 = no pooling after the activation
    int pool_stride = 1;
    bool temporal = false;
    Conv1dParams calib_w;
    Conv1dParams calib_b;
};

struct BackboneParams {
    std::vector<StageParams> stages;
};

// Per-sequence mutable backbone state: one queue per temporally adaptive
// stage, in stage order.
struct BackboneState {
    std::vector<TemporalContextQueue> queues;
};

struct CalibrationFactors {
    Tensor weight;  // alpha_w, one scalar per output channel
    Tensor bias;    // alpha_b
};

inline CalibrationFactors calibration_factors(const StageParams& layer,
                                              const TemporalContextQueue& queue) {
    const Tensor q = queue.as_tensor();
    Tensor aw = conv1d_over_queue(q, layer.calib_w.weights, layer.calib_w.bias);
    Tensor ab = conv1d_over_queue(q, layer.calib_b.weights, layer.calib_b.bias);
    for (float& v : aw.values()) v += 1.0f;
    for (float& v : ab.values()) v += 1.0f;
    return {std::move(aw), std::move(ab)};
}

// Convolution with the per-frame calibrated weights: every element of output
// filter c is scaled by alpha_w[c], bias c by alpha_b[c]. The queue must
// already contain the current frame's descriptor.
inline Tensor tada_forward(const StageParams& layer, const TemporalContextQueue& queue,
                           const Tensor& input) {
    const CalibrationFactors alpha = calibration_factors(layer, queue);
    Tensor wt = layer.weights;
    const int c_out = wt.dim(0);
    const std::size_t filter = wt.size() / static_cast<std::size_t>(c_out);
    for (int co = 0; co < c_out; ++co) {
        float* f = wt.data() + static_cast<std::size_t>(co) * filter;
        const float a = alpha.weight.at(co);
        for (std::size_t i = 0; i < filter; ++i) f[i] *= a;
    }
    Tensor bt = layer.bias;
    for (int co = 0; co < c_out; ++co) bt.at(co) *= alpha.bias.at(co);
    return conv2d(input, wt, bt, layer.stride, 0);
}

// Runs the full stage stack on one patch. Temporally adaptive stages read
// (and, when streaming, update) their queues; the non-streaming path used for
// the template builds a transient queue from the patch's own descriptor and
// leaves the persistent state untouched.
inline Tensor extract_features(const BackboneParams& backbone, BackboneState& state,
                               const Tensor& patch, bool streaming) {
    Tensor x = patch;
    std::size_t qi = 0;
    for (const StageParams& stage : backbone.stages) {
        if (stage.temporal) {
            if (qi >= state.queues.size()) {
                throw StateError("extract_features: backbone state has too few queues");
            }
            TemporalContextQueue& queue = state.queues[qi++];
            if (streaming) {
                push_descriptor(queue, x);
                x = tada_forward(stage, queue, x);
            } else {
                TemporalContextQueue local(queue.capacity(), queue.channels());
                push_descriptor(local, x);
                x = tada_forward(stage, local, x);
            }
        } else {
            x = conv2d(x, stage.weights, stage.bias, stage.stride, 0);
        }
        x = relu(x);
        if (stage.pool_window > 0) x = max_pool2d(x, stage.pool_window, stage.pool_stride);
    }
    return x;
}

}  // namespace tempotrack
