#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tempotrack/attrans.hpp"
#include "tempotrack/config.hpp"
#include "tempotrack/model.hpp"

using namespace tempotrack;

namespace {

AtTransParams random_attrans(std::uint64_t seed, const TrackerConfig& cfg) {
    ModelParams m = build_model(cfg);
    SplitMix64 rng(seed);
    randomize_all(m, rng);
    return m.attrans;
}

AtTransParams zero_filter(AtTransParams p) {
    for (Tensor* t : {&p.filter_pre.weights, &p.filter_pre.bias, &p.filter_gate.w1,
                      &p.filter_gate.b1, &p.filter_gate.w2, &p.filter_gate.b2,
                      &p.fusion.weights, &p.fusion.bias}) {
        std::fill(t->values().begin(), t->values().end(), 0.0f);
    }
    return p;
}

// ---------------------------------------------------------------------------
// Composed references built from the oracle primitives only.
// ---------------------------------------------------------------------------

Tensor conv1x1_oracle(const Tensor& tokens, const ConvParams& conv) {
    const int c_in = conv.weights.dim(1), c_out = conv.weights.dim(0);
    Tensor w({c_in, c_out});
    for (int co = 0; co < c_out; ++co) {
        for (int ci = 0; ci < c_in; ++ci) w.at(ci, co) = conv.weights.at(co, ci, 0, 0);
    }
    return oracle::affine(tokens, w, conv.bias);
}

Tensor gate_oracle(const Tensor& f1, const AtTransParams& p) {
    const Tensor pre = conv1x1_oracle(f1, p.filter_pre);
    const int t = pre.dim(0), c = pre.dim(1);
    Tensor pooled({1, c});
    for (int j = 0; j < c; ++j) {
        double s = 0.0;
        for (int i = 0; i < t; ++i) s += pre.at(i, j);
        pooled.at(0, j) = static_cast<float>(s / t);
    }
    Tensor g = oracle::feed_forward(pooled, p.filter_gate);
    Tensor alpha({c});
    for (int j = 0; j < c; ++j) {
        alpha.at(j) = static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(g.at(0, j)))));
    }
    return alpha;
}

Tensor encode_oracle(const Tensor& prior_tokens, const Tensor& ft, const AtTransParams& p,
                     const ATTransToggles& toggles) {
    const int heads = p.attn.num_heads;
    const Tensor& q = toggles.query_choice == QueryChoice::previous_prior ? prior_tokens : ft;

    auto residual_norm = [&](const Tensor& x, const Tensor& sub, const LayerNormParams& n) {
        Tensor summed(x.shape());
        for (std::size_t i = 0; i < x.size(); ++i) {
            summed.data()[i] = x.data()[i] + sub.data()[i];
        }
        return oracle::layer_norm(summed, n.gamma, n.beta, 1e-5f);
    };

    const Tensor f1 =
        residual_norm(ft, oracle::multi_head_attention(q, ft, ft, p.enc_fuse, heads), p.enc_norm1);
    const Tensor f2 = residual_norm(
        f1, oracle::multi_head_attention(f1, f1, f1, p.enc_self, heads), p.enc_norm2);

    Tensor ff = f2;
    if (toggles.filter_enabled) {
        const Tensor alpha = gate_oracle(f1, p);
        Tensor cat({f2.dim(0), 2 * f2.dim(1)});
        for (int i = 0; i < f2.dim(0); ++i) {
            for (int j = 0; j < f2.dim(1); ++j) {
                cat.at(i, j) = f2.at(i, j);
                cat.at(i, f2.dim(1) + j) = f1.at(i, j);
            }
        }
        const Tensor fused = conv1x1_oracle(cat, p.fusion);
        for (int i = 0; i < ff.dim(0); ++i) {
            for (int j = 0; j < ff.dim(1); ++j) ff.at(i, j) += fused.at(i, j) * alpha.at(j);
        }
    }
    return residual_norm(ff, oracle::multi_head_attention(ff, ff, ff, p.enc_out, heads),
                         p.enc_norm3);
}

Tensor decode_oracle(const Tensor& ft, const Tensor& prior_tokens, const AtTransParams& p) {
    const int heads = p.attn.num_heads;
    auto residual_norm = [&](const Tensor& x, const Tensor& sub, const LayerNormParams& n) {
        Tensor summed(x.shape());
        for (std::size_t i = 0; i < x.size(); ++i) {
            summed.data()[i] = x.data()[i] + sub.data()[i];
        }
        return oracle::layer_norm(summed, n.gamma, n.beta, 1e-5f);
    };
    const Tensor f3 = residual_norm(
        ft, oracle::multi_head_attention(ft, ft, ft, p.dec_self, heads), p.dec_norm1);
    const Tensor f4 = residual_norm(
        f3, oracle::multi_head_attention(f3, prior_tokens, prior_tokens, p.dec_cross, heads),
        p.dec_norm2);
    return residual_norm(f4, oracle::feed_forward(f4, p.dec_ffn), p.dec_norm3);
}

TemporalPrior make_prior(Tensor tokens) {
    TemporalPrior prior;
    prior.tokens = std::move(tokens);
    prior.frame_index = 0;
    return prior;
}

}  // namespace

// ---------------------------------------------------------------------------
// adjust / init_prior
// ---------------------------------------------------------------------------

TEST(Adjust, IdentityConvTokenizes) {
    const TrackerConfig cfg = tiny_config();
    AtTransParams p = random_attrans(51, cfg);
    std::fill(p.adjust.weights.values().begin(), p.adjust.weights.values().end(), 0.0f);
    std::fill(p.adjust.bias.values().begin(), p.adjust.bias.values().end(), 0.0f);
    for (int c = 0; c < 12; ++c) p.adjust.weights.at(c, c, 1, 1) = 1.0f;

    std::mt19937 rng(52);
    const Tensor r = oracle::random_tensor(rng, {12, 17, 17});
    EXPECT_EQ(adjust(r, p), to_tokens(r));
}

TEST(Adjust, ShapeContracts) {
    {
        const TrackerConfig cfg = full_config();
        const AtTransParams p = random_attrans(53, cfg);
        std::mt19937 rng(54);
        const Tensor r = oracle::random_tensor(rng, {96, 21, 21});
        EXPECT_EQ(adjust(r, p).shape(), (std::vector<int>{441, 96}));
    }
    {
        const TrackerConfig cfg = tiny_config();
        const AtTransParams p = random_attrans(55, cfg);
        std::mt19937 rng(56);
        const Tensor r = oracle::random_tensor(rng, {12, 17, 17});
        EXPECT_EQ(adjust(r, p).shape(), (std::vector<int>{289, 12}));
    }
}

TEST(InitPrior, ZeroMapZeroBiasGivesZeroPrior) {
    const TrackerConfig cfg = tiny_config();
    AtTransParams p = random_attrans(57, cfg);
    std::fill(p.prior_init.bias.values().begin(), p.prior_init.bias.values().end(), 0.0f);
    const TemporalPrior prior = init_prior(Tensor({12, 17, 17}), p, {}, 0);
    EXPECT_EQ(prior.tokens, Tensor({289, 12}));
    EXPECT_EQ(prior.frame_index, 0);
}

TEST(InitPrior, ShapeMatchesAdjustContract) {
    const TrackerConfig cfg = tiny_config();
    const AtTransParams p = random_attrans(58, cfg);
    std::mt19937 rng(59);
    const Tensor r = oracle::random_tensor(rng, {12, 17, 17});
    EXPECT_EQ(init_prior(r, p, {}, 0).tokens.shape(), adjust(r, p).shape());
}

TEST(InitPrior, RandomArmSeededAndReproducible) {
    const TrackerConfig cfg = tiny_config();
    const AtTransParams p = random_attrans(60, cfg);
    std::mt19937 rng(61);
    const Tensor r = oracle::random_tensor(rng, {12, 17, 17});
    ATTransToggles toggles;
    toggles.prior_init = PriorInit::random;
    const TemporalPrior a = init_prior(r, p, toggles, 99);
    const TemporalPrior b = init_prior(r, p, toggles, 99);
    const TemporalPrior c = init_prior(r, p, toggles, 100);
    EXPECT_EQ(a.tokens, b.tokens);
    EXPECT_NE(a.tokens, c.tokens);
    EXPECT_EQ(a.tokens.shape(), (std::vector<int>{289, 12}));
    // unit-normal-ish draw rather than a conv of r
    EXPECT_NE(a.tokens, init_prior(r, p, {}, 99).tokens);
}

// ---------------------------------------------------------------------------
// encode
// ---------------------------------------------------------------------------

TEST(Encode, GateZeroInjectionIsResidualIdentity) {
    std::mt19937 rng(62);
    const Tensor f2 = oracle::random_tensor(rng, {9, 6});
    const Tensor fused = oracle::random_tensor(rng, {9, 6});
    const Tensor alpha({6});
    const Tensor out = apply_information_filter(f2, fused, alpha);
    for (std::size_t i = 0; i < f2.size(); ++i) EXPECT_EQ(out.data()[i], f2.data()[i]);
}

TEST(Encode, ZeroedFilterParamsMatchFilterOffExactly) {
    const TrackerConfig cfg = tiny_config();
    const AtTransParams p = zero_filter(random_attrans(63, cfg));
    std::mt19937 rng(64);
    for (int it = 0; it < 10; ++it) {
        const Tensor ft = oracle::random_tensor(rng, {289, 12});
        const TemporalPrior prior = make_prior(oracle::random_tensor(rng, {289, 12}));
        ATTransToggles on, off;
        on.filter_enabled = true;
        off.filter_enabled = false;
        const TemporalPrior a = encode(prior, ft, p, on, 1);
        const TemporalPrior b = encode(prior, ft, p, off, 1);
        EXPECT_EQ(a.tokens, b.tokens);
    }
}

TEST(Encode, FilterToggleMattersWithNonzeroWeights) {
    const TrackerConfig cfg = tiny_config();
    const AtTransParams p = random_attrans(65, cfg);
    std::mt19937 rng(66);
    const Tensor ft = oracle::random_tensor(rng, {289, 12});
    const TemporalPrior prior = make_prior(oracle::random_tensor(rng, {289, 12}));
    ATTransToggles on, off;
    on.filter_enabled = true;
    off.filter_enabled = false;
    EXPECT_NE(encode(prior, ft, p, on, 1).tokens, encode(prior, ft, p, off, 1).tokens);
}

TEST(Encode, QueryArmsCoincideWhenPriorEqualsMap) {
    const TrackerConfig cfg = tiny_config();
    const AtTransParams p = random_attrans(67, cfg);
    std::mt19937 rng(68);
    const Tensor ft = oracle::random_tensor(rng, {289, 12});
    const TemporalPrior prior = make_prior(ft);
    ATTransToggles prev, cur;
    prev.query_choice = QueryChoice::previous_prior;
    cur.query_choice = QueryChoice::current_map;
    EXPECT_EQ(encode(prior, ft, p, prev, 1).tokens, encode(prior, ft, p, cur, 1).tokens);

    const TemporalPrior different = make_prior(oracle::random_tensor(rng, {289, 12}));
    EXPECT_NE(encode(different, ft, p, prev, 1).tokens,
              encode(different, ft, p, cur, 1).tokens);
}

TEST(Encode, ShapePreservedAndFrameIndexStamped) {
    const TrackerConfig cfg = tiny_config();
    const AtTransParams p = random_attrans(69, cfg);
    std::mt19937 rng(70);
    const Tensor ft = oracle::random_tensor(rng, {289, 12});
    const TemporalPrior prior = make_prior(oracle::random_tensor(rng, {289, 12}));
    const TemporalPrior out = encode(prior, ft, p, {}, 7);
    EXPECT_EQ(out.tokens.shape(), ft.shape());
    EXPECT_EQ(out.frame_index, 7);
}

TEST(Encode, MatchesComposedOracle) {
    const TrackerConfig cfg = tiny_config();
    std::mt19937 rng(71);
    for (int it = 0; it < 5; ++it) {
        const AtTransParams p = random_attrans(72 + it, cfg);
        const Tensor ft = oracle::random_tensor(rng, {289, 12});
        const TemporalPrior prior = make_prior(oracle::random_tensor(rng, {289, 12}));
        for (bool filter : {true, false}) {
            ATTransToggles toggles;
            toggles.filter_enabled = filter;
            const TemporalPrior fast = encode(prior, ft, p, toggles, 1);
            const Tensor ref = encode_oracle(prior.tokens, ft, p, toggles);
            EXPECT_LE(oracle::max_abs_diff(fast.tokens, ref), 1e-4f);
        }
    }
}

TEST(Encode, ErrorPaths) {
    const TrackerConfig cfg = tiny_config();
    const AtTransParams p = random_attrans(80, cfg);
    std::mt19937 rng(81);
    const Tensor ft = oracle::random_tensor(rng, {289, 12});
    EXPECT_THROW(encode(TemporalPrior{}, ft, p, {}, 1), StateError);
    const TemporalPrior wrong = make_prior(oracle::random_tensor(rng, {100, 12}));
    EXPECT_THROW(encode(wrong, ft, p, {}, 1), DimensionError);
}

// ---------------------------------------------------------------------------
// decode
// ---------------------------------------------------------------------------

TEST(Decode, ShapeContract) {
    const TrackerConfig cfg = tiny_config();
    const AtTransParams p = random_attrans(82, cfg);
    std::mt19937 rng(83);
    const Tensor ft = oracle::random_tensor(rng, {289, 12});
    const TemporalPrior prior = make_prior(oracle::random_tensor(rng, {289, 12}));
    EXPECT_EQ(decode(ft, prior, p).shape(), ft.shape());
}

TEST(Decode, ConstantPriorRowsGiveUniformCrossAttention) {
    // when every prior row equals v, the cross-attention output is the same
    // projected v for every query token
    const TrackerConfig cfg = tiny_config();
    const AtTransParams p = random_attrans(84, cfg);
    std::mt19937 rng(85);
    const Tensor f3 = oracle::random_tensor(rng, {289, 12});
    Tensor constant({289, 12});
    const Tensor v = oracle::random_tensor(rng, {1, 12});
    for (int i = 0; i < 289; ++i) {
        for (int j = 0; j < 12; ++j) constant.at(i, j) = v.at(0, j);
    }
    const Tensor cross = multi_head_attention(f3, constant, constant, p.dec_cross, p.attn);
    const Tensor expected = matmul(matmul(v, p.dec_cross.wv), p.dec_cross.wo);
    for (int i = 0; i < 289; ++i) {
        for (int j = 0; j < 12; ++j) EXPECT_NEAR(cross.at(i, j), expected.at(0, j), 1e-4f);
    }
}

TEST(Decode, MatchesComposedOracle) {
    const TrackerConfig cfg = tiny_config();
    std::mt19937 rng(86);
    for (int it = 0; it < 5; ++it) {
        const AtTransParams p = random_attrans(87 + it, cfg);
        const Tensor ft = oracle::random_tensor(rng, {289, 12});
        const TemporalPrior prior = make_prior(oracle::random_tensor(rng, {289, 12}));
        EXPECT_LE(oracle::max_abs_diff(decode(ft, prior, p),
                                       decode_oracle(ft, prior.tokens, p)),
                  1e-4f);
    }
}

// ---------------------------------------------------------------------------
// step
// ---------------------------------------------------------------------------

TEST(Step, DeterministicAndSingleReplacement) {
    const TrackerConfig cfg = tiny_config();
    const AtTransParams p = random_attrans(92, cfg);
    std::mt19937 rng(93);
    const Tensor r = oracle::random_tensor(rng, {12, 17, 17});
    const TemporalPrior prior = make_prior(oracle::random_tensor(rng, {289, 12}));

    const StepResult a = step(prior, r, p, {}, 2);
    const StepResult b = step(prior, r, p, {}, 2);
    EXPECT_EQ(a.refined_map, b.refined_map);
    EXPECT_EQ(a.prior.tokens, b.prior.tokens);
    EXPECT_EQ(a.prior.frame_index, 2);
    EXPECT_EQ(a.refined_map.shape(), (std::vector<int>{12, 17, 17}));
}

TEST(Step, PriorFootprintUnchanged) {
    const TrackerConfig cfg = tiny_config();
    const AtTransParams p = random_attrans(94, cfg);
    std::mt19937 rng(95);
    TemporalPrior prior = make_prior(oracle::random_tensor(rng, {289, 12}));
    const std::size_t before = prior.tokens.size() * sizeof(float);
    for (int t = 2; t <= 6; ++t) {
        const Tensor r = oracle::random_tensor(rng, {12, 17, 17});
        prior = step(prior, r, p, {}, t).prior;
        EXPECT_EQ(prior.tokens.size() * sizeof(float), before);
        EXPECT_EQ(prior.frame_index, t);
    }
}

TEST(Step, UninitializedPriorThrows) {
    const TrackerConfig cfg = tiny_config();
    const AtTransParams p = random_attrans(96, cfg);
    std::mt19937 rng(97);
    const Tensor r = oracle::random_tensor(rng, {12, 17, 17});
    EXPECT_THROW(step(TemporalPrior{}, r, p, {}, 2), StateError);
}

TEST(Step, ProbeRecordsGateAndRowSums) {
    const TrackerConfig cfg = tiny_config();
    const AtTransParams p = random_attrans(98, cfg);
    std::mt19937 rng(99);
    const Tensor r = oracle::random_tensor(rng, {12, 17, 17});
    const TemporalPrior prior = make_prior(oracle::random_tensor(rng, {289, 12}));

    StepProbe probe;
    step(prior, r, p, {}, 2, &probe);
    ASSERT_TRUE(probe.attention.any());
    EXPECT_NEAR(probe.attention.row_sum_min, 1.0, 1e-5);
    EXPECT_NEAR(probe.attention.row_sum_max, 1.0, 1e-5);
    ASSERT_FALSE(probe.gate.empty());
    for (float g : probe.gate.values()) {
        EXPECT_GT(g, 0.0f);
        EXPECT_LT(g, 1.0f);
    }
    EXPECT_GT(probe.prior_norm, 0.0);

    ATTransToggles off;
    off.filter_enabled = false;
    StepProbe probe_off;
    step(prior, r, p, off, 2, &probe_off);
    EXPECT_TRUE(probe_off.gate.empty());
}
