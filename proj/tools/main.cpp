// Command-line driver: train / sample / eval / bench / dataset subcommands
// over a JSON config. Exit codes: 0 success, 2 config error, 3 I/O error,
// 4 numerical failure.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "wcad/error.hpp"
#include "wcad/runner.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string checkpoint;
    std::string out_dir;
    long long seed = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON config file")->required();
    cmd->add_option("--checkpoint", args.checkpoint, "checkpoint path (overrides config)");
    cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", args.seed, "seed override for this command");
}

wcad::Config resolve(const CommonArgs& args, const std::string& command) {
    wcad::Config cfg = wcad::load_config_file(args.config_path);
    if (!args.checkpoint.empty()) cfg.paths.checkpoint = args.checkpoint;
    if (!args.out_dir.empty()) cfg.paths.out_dir = args.out_dir;
    if (args.seed >= 0) {
        uint64_t s = static_cast<uint64_t>(args.seed);
        if (command == "train") cfg.training.seed = s;
        else if (command == "sample") cfg.sampling.seed = s;
        else if (command == "eval") cfg.sampling.seed = s;
        else if (command == "bench") cfg.bench.seed = s;
        else if (command == "dataset") cfg.dataset.base_seed = s;
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"geometry-controlled diffusion toolkit"};
    app.require_subcommand(1);

    CommonArgs train_args, sample_args, eval_args, bench_args, dataset_args;
    CLI::App* train_cmd = app.add_subcommand("train", "train a model per the config");
    add_common(train_cmd, train_args);
    CLI::App* sample_cmd = app.add_subcommand("sample", "DDIM-sample images from a checkpoint");
    add_common(sample_cmd, sample_args);
    CLI::App* eval_cmd = app.add_subcommand("eval", "fid + alignment table over checkpoints");
    add_common(eval_cmd, eval_args);
    CLI::App* bench_cmd = app.add_subcommand("bench", "runtime/parameter/flop table");
    add_common(bench_cmd, bench_args);
    CLI::App* dataset_cmd = app.add_subcommand("dataset", "export the synthetic dataset");
    add_common(dataset_cmd, dataset_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) {
            wcad::TrainResult result = wcad::run_train(resolve(train_args, "train"));
            std::printf("checkpoint: %s\nloss curve: %s\n", result.checkpoint_path.c_str(),
                        result.loss_csv_path.c_str());
        } else if (sample_cmd->parsed()) {
            wcad::run_sample(resolve(sample_args, "sample"));
        } else if (eval_cmd->parsed()) {
            wcad::run_eval(resolve(eval_args, "eval"));
        } else if (bench_cmd->parsed()) {
            wcad::run_bench(resolve(bench_args, "bench"));
        } else if (dataset_cmd->parsed()) {
            wcad::run_dataset_export(resolve(dataset_args, "dataset"));
        }
    } catch (const wcad::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const wcad::IoError& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return 3;
    } catch (const wcad::NumericError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 4;
    } catch (const wcad::ShapeError& e) {
        std::fprintf(stderr, "shape contract violation: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
