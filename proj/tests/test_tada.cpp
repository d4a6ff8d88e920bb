#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "tempotrack/config.hpp"
#include "tempotrack/model.hpp"
#include "tempotrack/tada.hpp"

using namespace tempotrack;

namespace {

Tensor descriptor(float v, int c = 4) { return Tensor::full({c}, v); }

// Random temporally adaptive stage with nonzero calibration generators.
StageParams random_stage(std::mt19937& rng, int c_in, int c_out, int k, int queue_len) {
    StageParams st;
    st.weights = oracle::random_tensor(rng, {c_out, c_in, k, k});
    st.bias = oracle::random_tensor(rng, {c_out});
    st.temporal = true;
    st.calib_w = {oracle::random_tensor(rng, {c_out, c_in, queue_len}, -0.2f, 0.2f),
                  oracle::random_tensor(rng, {c_out}, -0.2f, 0.2f)};
    st.calib_b = {oracle::random_tensor(rng, {c_out, c_in, queue_len}, -0.2f, 0.2f),
                  oracle::random_tensor(rng, {c_out}, -0.2f, 0.2f)};
    return st;
}

StageParams zero_calibration(StageParams st) {
    for (Tensor* t : {&st.calib_w.weights, &st.calib_w.bias, &st.calib_b.weights,
                      &st.calib_b.bias}) {
        std::fill(t->values().begin(), t->values().end(), 0.0f);
    }
    return st;
}

// Expected spatial extent after a stage plan, computed from the output-size
// formula alone.
int shape_oracle(int side, const std::vector<StageSpec>& stages) {
    for (const StageSpec& st : stages) {
        side = oracle::conv_out_extent(side, st.kernel, st.stride, 0);
        if (st.pool_window > 0) {
            side = (side - st.pool_window) / st.pool_stride + 1;
        }
    }
    return side;
}

}  // namespace

// ---------------------------------------------------------------------------
// TemporalContextQueue
// ---------------------------------------------------------------------------

TEST(Queue, FirstPushFillsAllSlots) {
    TemporalContextQueue q(3, 4);
    q.push(descriptor(1.0f));
    ASSERT_EQ(q.length(), 3);
    for (int age = 0; age < 3; ++age) EXPECT_EQ(q.entry(age), descriptor(1.0f));
    EXPECT_EQ(q.first_descriptor(), descriptor(1.0f));
}

TEST(Queue, FifoAfterFill) {
    TemporalContextQueue q(3, 4);
    for (int t = 1; t <= 4; ++t) q.push(descriptor(static_cast<float>(t)));
    EXPECT_EQ(q.entry(0), descriptor(4.0f));
    EXPECT_EQ(q.entry(1), descriptor(3.0f));
    EXPECT_EQ(q.entry(2), descriptor(2.0f));
    EXPECT_EQ(q.length(), 3);
}

TEST(Queue, PartialFillKeepsFirstDescriptor) {
    TemporalContextQueue q(3, 4);
    q.push(descriptor(1.0f));
    q.push(descriptor(2.0f));
    EXPECT_EQ(q.entry(0), descriptor(2.0f));
    EXPECT_EQ(q.entry(1), descriptor(1.0f));
    EXPECT_EQ(q.entry(2), descriptor(1.0f));
}

TEST(Queue, DegenerateCapacityOne) {
    TemporalContextQueue q(1, 4);
    for (int t = 1; t <= 3; ++t) {
        q.push(descriptor(static_cast<float>(t)));
        EXPECT_EQ(q.entry(0), descriptor(static_cast<float>(t)));
        EXPECT_EQ(q.length(), 1);
    }
}

TEST(Queue, ChannelMismatchThrows) {
    TemporalContextQueue q(3, 4);
    EXPECT_THROW(q.push(Tensor({5})), DimensionError);
}

TEST(Queue, NewestFirstMatrixLayout) {
    TemporalContextQueue q(2, 2);
    q.push(Tensor({2}, {1.0f, 2.0f}));
    q.push(Tensor({2}, {3.0f, 4.0f}));
    EXPECT_EQ(q.as_tensor(), Tensor({2, 2}, {3.0f, 4.0f, 1.0f, 2.0f}));
}

TEST(Queue, PushDescriptorPoolsInput) {
    TemporalContextQueue q(2, 1);
    push_descriptor(q, Tensor({1, 2, 2}, {1, 2, 3, 4}));
    EXPECT_FLOAT_EQ(q.entry(0).at(0), 2.5f);
}

// ---------------------------------------------------------------------------
// Calibration
// ---------------------------------------------------------------------------

TEST(Calibration, ZeroInitGivesUnitFactors) {
    std::mt19937 rng(31);
    StageParams st = zero_calibration(random_stage(rng, 4, 2, 3, 3));
    TemporalContextQueue q(3, 4);
    q.push(oracle::random_tensor(rng, {4}));
    const CalibrationFactors f = calibration_factors(st, q);
    EXPECT_EQ(f.weight, Tensor::full({2}, 1.0f));
    EXPECT_EQ(f.bias, Tensor::full({2}, 1.0f));
}

TEST(Calibration, LinearInGeneratorScale) {
    std::mt19937 rng(32);
    StageParams st = random_stage(rng, 4, 2, 3, 3);
    std::fill(st.calib_w.bias.values().begin(), st.calib_w.bias.values().end(), 0.0f);
    TemporalContextQueue q(3, 4);
    q.push(oracle::random_tensor(rng, {4}));
    const Tensor raw = conv1d_over_queue(q.as_tensor(), st.calib_w.weights, st.calib_w.bias);

    StageParams scaled = st;
    for (float& v : scaled.calib_w.weights.values()) v *= 3.0f;
    const CalibrationFactors f = calibration_factors(scaled, q);
    for (int c = 0; c < 2; ++c) EXPECT_NEAR(f.weight.at(c), 1.0f + 3.0f * raw.at(c), 1e-5f);
}

TEST(Calibration, MatchesDotProductOraclePlusOne) {
    std::mt19937 rng(33);
    for (int it = 0; it < 30; ++it) {
        StageParams st = random_stage(rng, 4, 2, 3, 3);
        TemporalContextQueue q(3, 4);
        for (int t = 0; t < 3; ++t) q.push(oracle::random_tensor(rng, {4}));
        const CalibrationFactors f = calibration_factors(st, q);
        const Tensor qm = q.as_tensor();
        const Tensor rw = oracle::conv1d_over_queue(qm, st.calib_w.weights, st.calib_w.bias);
        const Tensor rb = oracle::conv1d_over_queue(qm, st.calib_b.weights, st.calib_b.bias);
        for (int c = 0; c < 2; ++c) {
            EXPECT_NEAR(f.weight.at(c), rw.at(c) + 1.0f, 1e-6f);
            EXPECT_NEAR(f.bias.at(c), rb.at(c) + 1.0f, 1e-6f);
        }
    }
}

// ---------------------------------------------------------------------------
// tada_forward
// ---------------------------------------------------------------------------

TEST(TadaForward, ZeroInitEqualsPlainConv) {
    std::mt19937 rng(34);
    StageParams st = zero_calibration(random_stage(rng, 4, 2, 3, 3));
    TemporalContextQueue q(3, 4);
    push_descriptor(q, oracle::random_tensor(rng, {4, 6, 6}));
    const Tensor input = oracle::random_tensor(rng, {4, 6, 6});
    EXPECT_EQ(tada_forward(st, q, input), conv2d(input, st.weights, st.bias, st.stride, 0));
}

TEST(TadaForward, PerChannelDoubling) {
    std::mt19937 rng(35);
    StageParams st = zero_calibration(random_stage(rng, 4, 2, 3, 3));
    std::fill(st.bias.values().begin(), st.bias.values().end(), 0.0f);
    // bias of the weight generator sets alpha_w = (2, 1) regardless of queue
    st.calib_w.bias.at(0) = 1.0f;
    TemporalContextQueue q(3, 4);
    push_descriptor(q, oracle::random_tensor(rng, {4, 6, 6}));
    const Tensor input = oracle::random_tensor(rng, {4, 6, 6});
    const Tensor base = conv2d(input, st.weights, st.bias, st.stride, 0);
    const Tensor out = tada_forward(st, q, input);
    for (int y = 0; y < out.dim(1); ++y) {
        for (int x = 0; x < out.dim(2); ++x) {
            EXPECT_NEAR(out.at(0, y, x), 2.0f * base.at(0, y, x), 1e-5f);
            EXPECT_NEAR(out.at(1, y, x), base.at(1, y, x), 1e-6f);
        }
    }
}

TEST(TadaForward, MatchesMaterializedWeightsOracle) {
    std::mt19937 rng(36);
    for (int it = 0; it < 30; ++it) {
        StageParams st = random_stage(rng, 4, 2, 3, 3);
        TemporalContextQueue q(3, 4);
        for (int t = 0; t < 3; ++t) push_descriptor(q, oracle::random_tensor(rng, {4, 6, 6}));
        const Tensor input = oracle::random_tensor(rng, {4, 6, 6});

        const Tensor qm = q.as_tensor();
        Tensor aw = oracle::conv1d_over_queue(qm, st.calib_w.weights, st.calib_w.bias);
        Tensor ab = oracle::conv1d_over_queue(qm, st.calib_b.weights, st.calib_b.bias);
        for (float& v : aw.values()) v += 1.0f;
        for (float& v : ab.values()) v += 1.0f;
        Tensor wt = st.weights;
        for (int co = 0; co < 2; ++co) {
            for (int ci = 0; ci < 4; ++ci) {
                for (int ky = 0; ky < 3; ++ky) {
                    for (int kx = 0; kx < 3; ++kx) wt.at(co, ci, ky, kx) *= aw.at(co);
                }
            }
        }
        Tensor bt = st.bias;
        for (int co = 0; co < 2; ++co) bt.at(co) *= ab.at(co);
        const Tensor ref = oracle::conv2d(input, wt, bt, st.stride, 0);
        EXPECT_LE(oracle::max_abs_diff(tada_forward(st, q, input), ref), 1e-5f);
    }
}

// ---------------------------------------------------------------------------
// extract_features
// ---------------------------------------------------------------------------

TEST(Extract, FullPlanSpatialShapes) {
    const TrackerConfig cfg = full_config();
    EXPECT_EQ(shape_oracle(cfg.search_size, cfg.stages), 26);
    EXPECT_EQ(shape_oracle(cfg.template_size, cfg.stages), 6);
    EXPECT_EQ(cfg.total_stride(), 8);
}

TEST(Extract, TinyPlanSpatialShapes) {
    const TrackerConfig cfg = tiny_config();
    EXPECT_EQ(shape_oracle(cfg.search_size, cfg.stages), 26);
    EXPECT_EQ(shape_oracle(cfg.template_size, cfg.stages), 10);
    EXPECT_EQ(cfg.total_stride(), 1);

    ModelParams params = build_model(cfg);
    init_weights(params, 5);
    BackboneState state = make_backbone_state(cfg);
    std::mt19937 rng(37);
    const Tensor feats = extract_features(
        params.backbone, state,
        oracle::random_tensor(rng, {3, cfg.search_size, cfg.search_size}), true);
    EXPECT_EQ(feats.shape(), (std::vector<int>{12, 26, 26}));
    const Tensor tf = extract_features(
        params.backbone, state,
        oracle::random_tensor(rng, {3, cfg.template_size, cfg.template_size}), false);
    EXPECT_EQ(tf.shape(), (std::vector<int>{12, 10, 10}));
}

TEST(Extract, IdenticalFramesZeroInitGiveIdenticalFeatures) {
    const TrackerConfig cfg = tiny_config();
    ModelParams params = build_model(cfg);
    init_weights(params, 9);
    BackboneState state = make_backbone_state(cfg);
    std::mt19937 rng(38);
    const Tensor frame = oracle::random_tensor(rng, {3, 32, 32}, 0.0f, 1.0f);
    const Tensor f1 = extract_features(params.backbone, state, frame, true);
    const Tensor f2 = extract_features(params.backbone, state, frame, true);
    EXPECT_EQ(f1, f2);
}

TEST(Extract, ZeroInitEquivalenceOverSequence) {
    const TrackerConfig cfg = tiny_config();
    ModelParams tada = build_model(cfg);
    init_weights(tada, 11);
    ModelParams plain = tada;
    for (StageParams& st : plain.backbone.stages) st.temporal = false;

    BackboneState state = make_backbone_state(cfg);
    BackboneState unused = make_backbone_state(cfg);
    std::mt19937 rng(39);
    for (int t = 0; t < 10; ++t) {
        const Tensor frame = oracle::random_tensor(rng, {3, 32, 32}, 0.0f, 1.0f);
        const Tensor a = extract_features(tada.backbone, state, frame, true);
        const Tensor b = extract_features(plain.backbone, unused, frame, true);
        ASSERT_EQ(a.shape(), b.shape());
        EXPECT_LE(oracle::max_abs_diff(a, b), 1e-6f);
    }
}

TEST(Extract, StateSizeConstantOverTime) {
    const TrackerConfig cfg = tiny_config();
    ModelParams params = build_model(cfg);
    SplitMix64 seed(40);
    randomize_all(params, seed);
    BackboneState state = make_backbone_state(cfg);
    std::mt19937 rng(41);

    auto state_bytes = [&]() {
        std::size_t n = 0;
        for (const TemporalContextQueue& q : state.queues) {
            n += q.first_descriptor().size() * sizeof(float);
            for (int age = 0; age < q.length(); ++age) n += q.entry(age).size() * sizeof(float);
        }
        return n;
    };

    std::size_t baseline = 0;
    for (int t = 1; t <= 12; ++t) {
        extract_features(params.backbone, state, oracle::random_tensor(rng, {3, 32, 32}), true);
        for (const TemporalContextQueue& q : state.queues) EXPECT_EQ(q.length(), cfg.queue_len);
        if (t == 1) baseline = state_bytes();
        EXPECT_EQ(state_bytes(), baseline);
    }
}

TEST(Extract, QueueLenOneZeroGenStreamingMatchesTemplatePath) {
    TrackerConfig cfg = tiny_config();
    cfg.queue_len = 1;
    ModelParams params = build_model(cfg);
    init_weights(params, 13);
    std::mt19937 rng(42);
    const Tensor frame = oracle::random_tensor(rng, {3, 32, 32});

    BackboneState streaming = make_backbone_state(cfg);
    BackboneState fresh = make_backbone_state(cfg);
    const Tensor a = extract_features(params.backbone, streaming, frame, true);
    const Tensor b = extract_features(params.backbone, fresh, frame, false);
    EXPECT_EQ(a, b);
}

TEST(Extract, TemplatePathLeavesQueuesUntouched) {
    const TrackerConfig cfg = tiny_config();
    ModelParams params = build_model(cfg);
    SplitMix64 seed(43);
    randomize_all(params, seed);
    BackboneState state = make_backbone_state(cfg);
    std::mt19937 rng(44);

    extract_features(params.backbone, state, oracle::random_tensor(rng, {3, 32, 32}), true);
    const Tensor q0 = state.queues[0].as_tensor();
    const Tensor q1 = state.queues[1].as_tensor();
    extract_features(params.backbone, state, oracle::random_tensor(rng, {3, 16, 16}), false);
    EXPECT_EQ(state.queues[0].as_tensor(), q0);
    EXPECT_EQ(state.queues[1].as_tensor(), q1);
}

TEST(Extract, CausalNoFutureInfluence) {
    const TrackerConfig cfg = tiny_config();
    ModelParams params = build_model(cfg);
    SplitMix64 seed(45);
    randomize_all(params, seed);  // nonzero calibration generators

    std::mt19937 rng(46);
    std::vector<Tensor> frames;
    for (int t = 0; t < 8; ++t) frames.push_back(oracle::random_tensor(rng, {3, 32, 32}));

    auto run = [&](const std::vector<Tensor>& seq) {
        BackboneState state = make_backbone_state(cfg);
        std::vector<Tensor> outs;
        for (const Tensor& f : seq) {
            outs.push_back(extract_features(params.backbone, state, f, true));
        }
        return outs;
    };

    const auto base = run(frames);
    std::vector<Tensor> perturbed = frames;
    perturbed[6] = oracle::random_tensor(rng, {3, 32, 32});
    const auto other = run(perturbed);
    for (int t = 0; t < 6; ++t) EXPECT_EQ(base[t], other[t]) << "frame " << t;
    EXPECT_NE(base[6], other[6]);
}
