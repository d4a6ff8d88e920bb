#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "tempotrack/archive.hpp"
#include "tempotrack/bench.hpp"
#include "tempotrack/harness.hpp"
#include "tempotrack/pipeline.hpp"
#include "tempotrack/synth.hpp"

namespace tempotrack {

// Built-in invariant battery behind the `selftest` subcommand. Each check is
// self-contained and uses its own small reference computations.

struct SelfTestReport {
    struct Row {
        std::string name;
        bool pass = false;
        std::string detail;
    };
    std::vector<Row> rows;

    bool all_pass() const {
        for (const Row& r : rows) {
            if (!r.pass) return false;
        }
        return true;
    }
};

namespace selftest_detail {

inline Tensor rand_tensor(SplitMix64& rng, std::vector<int> shape, float lo = -1.0f,
                          float hi = 1.0f) {
    Tensor t(std::move(shape));
    for (float& v : t.values()) v = rng.uniform(lo, hi);
    return t;
}

inline float max_abs_diff(const Tensor& a, const Tensor& b) {
    float m = 0.0f;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    }
    return m;
}

}  // namespace selftest_detail

inline SelfTestReport selftest() {
    using selftest_detail::max_abs_diff;
    using selftest_detail::rand_tensor;

    SelfTestReport report;
    auto check = [&](const std::string& name, const std::function<bool(std::string&)>& f) {
        SelfTestReport::Row row;
        row.name = name;
        try {
            row.pass = f(row.detail);
        } catch (const std::exception& e) {
            row.pass = false;
            row.detail = e.what();
        }
        report.rows.push_back(std::move(row));
    };

    check("softmax rows normalized", [&](std::string& detail) {
        SplitMix64 rng(1001);
        const Tensor s = softmax(rand_tensor(rng, {40, 9}, -20.0f, 20.0f));
        double worst = 0.0;
        for (int i = 0; i < 40; ++i) {
            double sum = 0.0;
            for (int j = 0; j < 9; ++j) sum += s.at(i, j);
            worst = std::max(worst, std::abs(sum - 1.0));
        }
        detail = "max |row sum - 1| = " + std::to_string(worst);
        return worst <= 1e-5;
    });

    check("softmax shift invariance", [&](std::string&) {
        SplitMix64 rng(1002);
        const Tensor t = rand_tensor(rng, {4, 6});
        Tensor shifted = t;
        for (float& v : shifted.values()) v += 13.5f;
        return max_abs_diff(softmax(t), softmax(shifted)) <= 1e-6f;
    });

    check("map/token round trip bit exact", [&](std::string&) {
        SplitMix64 rng(1003);
        const Tensor map = rand_tensor(rng, {5, 7, 6});
        return to_map(to_tokens(map), 7, 6) == map;
    });

    check("conv2d matches direct sum", [&](std::string& detail) {
        SplitMix64 rng(1004);
        float worst = 0.0f;
        for (int it = 0; it < 20; ++it) {
            const Tensor in = rand_tensor(rng, {3, 7, 7});
            const Tensor w = rand_tensor(rng, {2, 3, 3, 3});
            const Tensor b = rand_tensor(rng, {2});
            const Tensor fast = conv2d(in, w, b, 1, 0);
            for (int co = 0; co < 2; ++co) {
                for (int oy = 0; oy < 5; ++oy) {
                    for (int ox = 0; ox < 5; ++ox) {
                        double acc = b.at(co);
                        for (int ci = 0; ci < 3; ++ci) {
                            for (int ky = 0; ky < 3; ++ky) {
                                for (int kx = 0; kx < 3; ++kx) {
                                    acc += static_cast<double>(w.at(co, ci, ky, kx)) *
                                           in.at(ci, oy + ky, ox + kx);
                                }
                            }
                        }
                        worst = std::max(worst,
                                         std::abs(fast.at(co, oy, ox) - static_cast<float>(acc)));
                    }
                }
            }
        }
        detail = "max abs diff = " + std::to_string(worst);
        return worst <= 1e-5f;
    });

    check("depthwise correlation matches direct sum", [&](std::string& detail) {
        SplitMix64 rng(1005);
        float worst = 0.0f;
        for (int it = 0; it < 10; ++it) {
            const Tensor search = rand_tensor(rng, {4, 8, 8});
            const Tensor templ = rand_tensor(rng, {4, 3, 3});
            const Tensor fast = depthwise_xcorr(search, templ);
            for (int c = 0; c < 4; ++c) {
                for (int oy = 0; oy < 6; ++oy) {
                    for (int ox = 0; ox < 6; ++ox) {
                        double acc = 0.0;
                        for (int ty = 0; ty < 3; ++ty) {
                            for (int tx = 0; tx < 3; ++tx) {
                                acc += static_cast<double>(search.at(c, oy + ty, ox + tx)) *
                                       templ.at(c, ty, tx);
                            }
                        }
                        worst = std::max(worst,
                                         std::abs(fast.at(c, oy, ox) - static_cast<float>(acc)));
                    }
                }
            }
        }
        detail = "max abs diff = " + std::to_string(worst);
        return worst <= 1e-5f;
    });

    check("attention rows normalized", [&](std::string& detail) {
        SplitMix64 rng(1006);
        const AttentionConfig cfg(6, 12);
        MhaParams p{rand_tensor(rng, {12, 12}), rand_tensor(rng, {12, 12}),
                    rand_tensor(rng, {12, 12}), rand_tensor(rng, {12, 12})};
        const Tensor q = rand_tensor(rng, {10, 12});
        AttentionProbe probe;
        multi_head_attention(q, q, q, p, cfg, &probe);
        detail = "row sums in [" + std::to_string(probe.row_sum_min) + ", " +
                 std::to_string(probe.row_sum_max) + "]";
        return probe.any() && std::abs(probe.row_sum_min - 1.0) <= 1e-5 &&
               std::abs(probe.row_sum_max - 1.0) <= 1e-5;
    });

    check("layer norm row statistics", [&](std::string&) {
        SplitMix64 rng(1007);
        const Tensor x = rand_tensor(rng, {8, 16}, -4.0f, 4.0f);
        const Tensor out = layer_norm(x, Tensor::full({16}, 1.0f), Tensor({16}));
        for (int i = 0; i < 8; ++i) {
            double mean = 0.0;
            for (int j = 0; j < 16; ++j) mean += out.at(i, j);
            mean /= 16.0;
            double var = 0.0;
            for (int j = 0; j < 16; ++j) var += (out.at(i, j) - mean) * (out.at(i, j) - mean);
            var /= 16.0;
            if (std::abs(mean) > 1e-5 || std::abs(var - 1.0) > 1e-4) return false;
        }
        return true;
    });

    check("temporal queue fill rule", [&](std::string&) {
        TemporalContextQueue q(3, 2);
        q.push(Tensor::full({2}, 1.0f));
        if (q.as_tensor() != Tensor({3, 2}, {1, 1, 1, 1, 1, 1})) return false;
        for (float v : {2.0f, 3.0f, 4.0f}) q.push(Tensor::full({2}, v));
        return q.as_tensor() == Tensor({3, 2}, {4, 4, 3, 3, 2, 2});
    });

    check("zero-init calibration is identity", [&](std::string&) {
        const TrackerConfig cfg = tiny_config();
        ModelParams params = build_model(cfg);
        init_weights(params, 77);
        ModelParams plain = params;
        for (StageParams& st : plain.backbone.stages) st.temporal = false;
        BackboneState state = make_backbone_state(cfg);
        BackboneState unused = make_backbone_state(cfg);
        SplitMix64 rng(1008);
        for (int t = 0; t < 4; ++t) {
            const Tensor frame = rand_tensor(rng, {3, 32, 32}, 0.0f, 1.0f);
            const Tensor a = extract_features(params.backbone, state, frame, true);
            const Tensor b = extract_features(plain.backbone, unused, frame, true);
            if (max_abs_diff(a, b) > 1e-6f) return false;
        }
        return true;
    });

    check("information filter gate-zero identity", [&](std::string&) {
        const TrackerConfig cfg = tiny_config();
        ModelParams params = build_model(cfg);
        SplitMix64 seed(1009);
        randomize_all(params, seed);
        for (Tensor* t : {&params.attrans.filter_pre.weights, &params.attrans.filter_pre.bias,
                          &params.attrans.filter_gate.w1, &params.attrans.filter_gate.b1,
                          &params.attrans.filter_gate.w2, &params.attrans.filter_gate.b2,
                          &params.attrans.fusion.weights, &params.attrans.fusion.bias}) {
            std::fill(t->values().begin(), t->values().end(), 0.0f);
        }
        SplitMix64 rng(1010);
        TemporalPrior prior;
        prior.tokens = rand_tensor(rng, {289, 12});
        prior.frame_index = 0;
        const Tensor ft = rand_tensor(rng, {289, 12});
        ATTransToggles on, off;
        on.filter_enabled = true;
        off.filter_enabled = false;
        return encode(prior, ft, params.attrans, on, 1).tokens ==
               encode(prior, ft, params.attrans, off, 1).tokens;
    });

    check("archive round trip bit exact", [&](std::string&) {
        const TrackerConfig cfg = tiny_config();
        ModelParams params = build_model(cfg);
        SplitMix64 seed(1011);
        randomize_all(params, seed);
        const std::string path =
            (std::filesystem::temp_directory_path() / "tempotrack_selftest.tarc").string();
        save_archive(params, path);
        const ModelParams loaded = load_archive(path, cfg);
        std::filesystem::remove(path);
        bool same = true;
        for_each_tensor(params, [&](const std::string& name, const Tensor& t) {
            bool found = false;
            for_each_tensor(loaded, [&](const std::string& n2, const Tensor& t2) {
                if (n2 == name) {
                    found = true;
                    if (!(t2 == t)) same = false;
                }
            });
            if (!found) same = false;
        });
        return same;
    });

    check("synthetic generation seed deterministic", [&](std::string&) {
        const SynthResult a = synth_frames(99, 3, 64, 48);
        const SynthResult b = synth_frames(99, 3, 64, 48);
        for (int t = 0; t < 3; ++t) {
            if (!(a.frames[static_cast<std::size_t>(t)] ==
                  b.frames[static_cast<std::size_t>(t)])) {
                return false;
            }
            if (!(a.boxes[static_cast<std::size_t>(t)] == b.boxes[static_cast<std::size_t>(t)])) {
                return false;
            }
        }
        return true;
    });

    check("tracker replay deterministic", [&](std::string&) {
        const TrackerConfig cfg = tiny_config();
        TrackerModel model{cfg, build_model(cfg)};
        init_weights(model.params, cfg.weight_seed);
        const SynthResult seq = synth_frames(5, 4, 96, 96);
        auto run_once = [&]() {
            TrackerState state = init(seq.frames[0], seq.boxes[0], model);
            std::vector<BBox> boxes;
            for (std::size_t i = 1; i < seq.frames.size(); ++i) {
                boxes.push_back(track(state, seq.frames[i]).box);
            }
            return boxes;
        };
        const auto a = run_once();
        const auto b = run_once();
        return a == b;
    });

    check("tracker state size fixed over frames", [&](std::string& detail) {
        const TrackerConfig cfg = tiny_config();
        TrackerModel model{cfg, build_model(cfg)};
        init_weights(model.params, cfg.weight_seed);
        const SynthResult seq = synth_frames(6, 6, 96, 96);
        TrackerState state = init(seq.frames[0], seq.boxes[0], model);
        const std::size_t baseline = serialize_state(state).size();
        detail = std::to_string(baseline) + " bytes";
        for (std::size_t i = 1; i < seq.frames.size(); ++i) {
            track(state, seq.frames[i]);
            if (serialize_state(state).size() != baseline) return false;
        }
        return true;
    });

    return report;
}

inline void print_selftest(const SelfTestReport& report, std::ostream& out) {
    for (const SelfTestReport::Row& row : report.rows) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%-44s %s", row.name.c_str(),
                      row.pass ? "PASS" : "FAIL");
        out << buf;
        if (!row.detail.empty()) out << "  (" << row.detail << ")";
        out << "\n";
    }
    out << (report.all_pass() ? "all checks passed\n" : "FAILURES present\n");
}

}  // namespace tempotrack
