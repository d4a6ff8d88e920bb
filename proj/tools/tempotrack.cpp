// Command-line front end: synthetic sequence generation, tracking runs,
// latency benchmarking, the invariant selftest, weight-archive creation and
// offline evaluation.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tempotrack/tempotrack.hpp"

namespace {

std::pair<int, int> parse_size(const std::string& text) {
    int w = 0, h = 0;
    if (std::sscanf(text.c_str(), "%dx%d", &w, &h) != 2 || w < 1 || h < 1) {
        throw tempotrack::InputError("--size must be WxH, got '" + text + "'");
    }
    return {w, h};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tempotrack: streaming temporal-context tracker"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic sequence");
    std::uint64_t synth_seed = 1;
    int synth_frames_n = 50;
    std::string synth_size = "256x192";
    std::string synth_script;
    std::string synth_out;
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->add_option("--frames", synth_frames_n, "frame count")->check(CLI::PositiveNumber);
    synth->add_option("--size", synth_size, "frame size WxH");
    synth->add_option("--script", synth_script, "event script file");
    synth->add_option("--out", synth_out, "output directory")->required();

    // run
    auto* run = app.add_subcommand("run", "track one sequence");
    tempotrack::RunOptions run_opts;
    run->add_option("--weights", run_opts.weights_path, "weight archive")->required();
    run->add_option("--config", run_opts.config_path, "config file")->required();
    run->add_option("--seq", run_opts.sequence_dir, "sequence directory")->required();
    run->add_option("--init", run_opts.init_box, "initial box x,y,w,h")->required();
    run->add_option("--out", run_opts.out_path, "output boxes file")->required();
    run->add_option("--trace", run_opts.trace_path, "JSONL trace file");
    run->add_option("--toggle", run_opts.toggles,
                    "ablation toggle (filter=on|off, query=previous|current, init=conv|random)");

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "latency benchmark on a synthetic sequence");
    std::string bench_config;
    int bench_frames = 200;
    int bench_frame_size = 128;
    std::string bench_out;
    bench_cmd->add_option("--config", bench_config, "config file")->required();
    bench_cmd->add_option("--frames", bench_frames, "frame count")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--frame-size", bench_frame_size, "synthetic frame side");
    bench_cmd->add_option("--out", bench_out, "report CSV")->required();

    // selftest
    auto* selftest_cmd = app.add_subcommand("selftest", "run the invariant battery");
    std::string corrupt;
    selftest_cmd->add_option("--corrupt", corrupt,
                             "deliberately break a kernel (softmax) to verify the checks bite");

    // init-weights
    auto* initw = app.add_subcommand("init-weights", "write a seeded random weight archive");
    std::string initw_config, initw_out;
    std::uint64_t initw_seed = 0;
    bool initw_seed_set = false;
    initw->add_option("--config", initw_config, "config file")->required();
    initw->add_option("--out", initw_out, "archive path")->required();
    initw->add_option("--seed", initw_seed, "override the config's weight seed")
        ->each([&](const std::string&) { initw_seed_set = true; });

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "precision/success curves for a boxes file");
    std::string eval_pred, eval_gt;
    eval_cmd->add_option("--pred", eval_pred, "predicted boxes file")->required();
    eval_cmd->add_option("--gt", eval_gt, "ground-truth boxes file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) {
            const auto [w, h] = parse_size(synth_size);
            tempotrack::SynthScript script;
            if (!synth_script.empty()) script = tempotrack::SynthScript::parse_file(synth_script);
            tempotrack::synth_sequence(synth_seed, synth_frames_n, w, h, script, synth_out);
            std::printf("wrote %d frames to %s\n", synth_frames_n, synth_out.c_str());
        } else if (*run) {
            tempotrack::run_tracker(run_opts);
            std::printf("wrote %s\n", run_opts.out_path.c_str());
        } else if (*bench_cmd) {
            const tempotrack::TrackerConfig cfg = tempotrack::load_config(bench_config);
            const tempotrack::BenchReport report =
                tempotrack::bench(cfg, bench_frames, bench_frame_size);
            tempotrack::write_bench_csv(report, bench_out);
            std::printf("median %.3f ms  p95 %.3f ms  %.1f fps  peak state %zu bytes\n",
                        report.median_ms, report.p95_ms, report.fps, report.peak_state_bytes);
        } else if (*selftest_cmd) {
            if (corrupt == "softmax") {
                tempotrack::testing_hooks::softmax_skip_normalize = true;
            } else if (!corrupt.empty()) {
                throw tempotrack::InputError("unknown --corrupt target '" + corrupt + "'");
            }
            const tempotrack::SelfTestReport report = tempotrack::selftest();
            tempotrack::print_selftest(report, std::cout);
            return report.all_pass() ? 0 : 1;
        } else if (*initw) {
            tempotrack::TrackerConfig cfg = tempotrack::load_config(initw_config);
            tempotrack::ModelParams params = tempotrack::build_model(cfg);
            tempotrack::init_weights(params, initw_seed_set ? initw_seed : cfg.weight_seed);
            tempotrack::save_archive(params, initw_out);
            std::printf("wrote %zu tensors (%zu parameters) to %s\n",
                        [&] {
                            std::size_t n = 0;
                            tempotrack::for_each_tensor(
                                params, [&](const std::string&, const tempotrack::Tensor&) { ++n; });
                            return n;
                        }(),
                        tempotrack::parameter_count(params), initw_out.c_str());
        } else if (*eval_cmd) {
            const auto pred = tempotrack::read_boxes(eval_pred);
            const auto gt = tempotrack::read_boxes(eval_gt);
            const tempotrack::EvalCurves curves = tempotrack::evaluate(pred, gt);
            std::printf("auc %.4f  precision@20 %.4f\n", curves.auc, curves.prec_at_20);
            std::printf("success:");
            for (double v : curves.success) std::printf(" %.3f", v);
            std::printf("\nprecision:");
            for (double v : curves.precision) std::printf(" %.3f", v);
            std::printf("\n");
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
