#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lad/eval.hpp"
#include "lad/io.hpp"
#include "lad/sim/train.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct GenArgs {
    std::string config_path;
    int count = 0;
    std::string out_path;
};

struct TrainArgs {
    std::string config_path;
    std::string dataset_path;
    std::string out_path;
    int threads_override = 0;
};

struct EvalArgs {
    std::string config_path;
    std::string checkpoint_path;
    std::string dataset_path;
    std::string csv_path;
    std::string run_id;
};

struct AssignArgs {
    std::string config_path;
    std::string checkpoint_path;
    std::string dataset_path;
    std::int64_t scene_id = 0;
};

struct GmmFitArgs {
    std::string input_path;  // empty: stdin
};

int run_gen(const GenArgs& args) {
    const lad::ExperimentConfig cfg = lad::io::load_config(args.config_path);
    const lad::rng::Stream scenes_stream(cfg.train.seed, "scenes");
    std::vector<lad::sim::Scene> scenes;
    scenes.reserve(args.count);
    for (int i = 0; i < args.count; ++i)
        scenes.push_back(lad::sim::generate_scene(cfg.world, scenes_stream.fork(i), i));
    lad::io::atomic_write(args.out_path, lad::io::dataset_to_jsonl(scenes));
    std::cerr << "wrote " << scenes.size() << " scenes to " << args.out_path << "\n";
    return kExitOk;
}

int run_train(const TrainArgs& args) {
    lad::ExperimentConfig cfg = lad::io::load_config(args.config_path);
    if (args.threads_override > 0) cfg.train.threads = args.threads_override;
    const std::vector<lad::sim::Scene> dataset =
        lad::io::load_dataset(args.dataset_path, cfg.world);

    lad::sim::StrategySpec strategy;
    strategy.kind = cfg.strategy.kind;
    strategy.distill_loss = cfg.strategy.distill_loss;
    strategy.criterion = cfg.strategy.criterion;

    lad::io::Checkpoint teacher;
    const bool needs_teacher = strategy.kind == lad::StrategyKind::SoftLabel ||
                               strategy.kind == lad::StrategyKind::Lad ||
                               strategy.kind == lad::StrategyKind::SoLad;
    if (needs_teacher) {
        if (cfg.strategy.teacher_path.empty())
            throw lad::io::ConfigError("strategy.teacher_path", "required for this strategy");
        teacher = lad::io::load_checkpoint(cfg.strategy.teacher_path);
        strategy.teacher = &teacher.params;
    }

    const lad::sim::TrainResult result = lad::sim::train(cfg, dataset, strategy);
    const std::string hash = lad::io::config_hash(cfg);
    if (result.partner) {
        lad::io::save_checkpoint(args.out_path + ".a", result.params, hash);
        lad::io::save_checkpoint(args.out_path + ".b", *result.partner, hash);
    } else {
        lad::io::save_checkpoint(args.out_path, result.params, hash);
    }
    lad::io::atomic_write(args.out_path + ".history.jsonl",
                          lad::io::history_to_jsonl(result.history));
    std::cerr << "trained " << result.history.size() << " iterations ("
              << lad::io::strategy_name(strategy.kind) << ")\n";
    return kExitOk;
}

int run_eval(const EvalArgs& args) {
    const lad::ExperimentConfig cfg = lad::io::load_config(args.config_path);
    const lad::io::Checkpoint ckpt = lad::io::load_checkpoint(args.checkpoint_path);
    if (ckpt.params.num_classes != cfg.world.num_classes ||
        ckpt.params.feature_dim != lad::sim::feature_dim(cfg.world.num_classes))
        throw lad::io::ConfigError("checkpoint",
                                   "shape-incompatible with world.num_classes in the config");
    if (!ckpt.config_hash.empty() && ckpt.config_hash != lad::io::config_hash(cfg))
        std::cerr << "warning: checkpoint config_hash differs from this config\n";

    const std::vector<lad::sim::Scene> dataset =
        lad::io::load_dataset(args.dataset_path, cfg.world);
    const lad::MetricsReport report = lad::evaluate_model(ckpt.params, dataset, cfg);
    std::cout << lad::io::metrics_to_json(report) << "\n";
    if (!args.csv_path.empty()) {
        std::string run_id = args.run_id;
        if (run_id.empty()) run_id = args.checkpoint_path;
        lad::io::append_metrics_csv(args.csv_path, run_id,
                                    lad::io::strategy_name(cfg.strategy.kind), cfg.train.seed,
                                    report);
    }
    return kExitOk;
}

int run_assign(const AssignArgs& args) {
    const lad::ExperimentConfig cfg = lad::io::load_config(args.config_path);
    const lad::io::Checkpoint ckpt = lad::io::load_checkpoint(args.checkpoint_path);
    const std::vector<lad::sim::Scene> dataset =
        lad::io::load_dataset(args.dataset_path, cfg.world);

    const lad::sim::Scene* scene = nullptr;
    for (const lad::sim::Scene& s : dataset)
        if (s.id == args.scene_id) scene = &s;
    if (scene == nullptr)
        throw lad::io::ConfigError("scene-id", "no scene with id " + std::to_string(args.scene_id));

    const lad::AnchorGrid grid = lad::generate_anchors(cfg.anchor_levels);
    const lad::sim::FeatureMatrix feats = lad::sim::extract_features(*scene, grid, cfg.world);
    const lad::sim::ForwardOutput fwd = lad::sim::forward(ckpt.params, feats, grid);
    const lad::AssignResult result =
        lad::paa_assign(fwd.preds, grid, scene->objects, cfg.train.gamma_assign);
    for (int oi : result.objects_without_candidates)
        std::cerr << "warning: object " << oi << " has no candidate anchors (IoU >= 0.1)\n";
    std::cout << lad::io::assign_dump_to_json(result, *scene) << "\n";
    return kExitOk;
}

int run_gmm_fit(const GmmFitArgs& args) {
    std::vector<double> samples;
    auto consume = [&samples](std::istream& in) {
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            samples.push_back(std::stod(line));
        }
    };
    if (args.input_path.empty()) {
        consume(std::cin);
    } else {
        std::ifstream in(args.input_path);
        if (!in) throw lad::io::ConfigError("input", "cannot open '" + args.input_path + "'");
        consume(in);
    }
    if (samples.empty()) throw lad::io::ConfigError("input", "no samples provided");
    const lad::FitReport report = lad::fit_gmm2(samples);
    std::cout << lad::io::fit_report_to_json(report) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Desk-scale detection benchmark with GMM label assignment and distillation"};
    app.require_subcommand(1);

    GenArgs gen_args;
    CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic scene dataset (JSONL)");
    gen->add_option("--config", gen_args.config_path, "Experiment config JSON")->required();
    gen->add_option("--count", gen_args.count, "Number of scenes")->required();
    gen->add_option("--out", gen_args.out_path, "Output dataset path")->required();

    TrainArgs train_args;
    CLI::App* train = app.add_subcommand("train", "Train a detector under the configured strategy");
    train->add_option("--config", train_args.config_path, "Experiment config JSON")->required();
    train->add_option("--dataset", train_args.dataset_path, "Training dataset JSONL")->required();
    train->add_option("--out", train_args.out_path, "Checkpoint output path")->required();
    train->add_option("--threads", train_args.threads_override, "Override train.threads");

    EvalArgs eval_args;
    CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint (JSON report on stdout)");
    eval->add_option("--config", eval_args.config_path, "Experiment config JSON")->required();
    eval->add_option("--checkpoint", eval_args.checkpoint_path, "Checkpoint JSON")->required();
    eval->add_option("--dataset", eval_args.dataset_path, "Evaluation dataset JSONL")->required();
    eval->add_option("--csv", eval_args.csv_path, "Append a metrics row to this CSV");
    eval->add_option("--run-id", eval_args.run_id, "Run id for the CSV row");

    AssignArgs assign_args;
    CLI::App* assign =
        app.add_subcommand("assign", "Dump one scene's assignment stage (costs, fits, labels)");
    assign->add_option("--config", assign_args.config_path, "Experiment config JSON")->required();
    assign->add_option("--checkpoint", assign_args.checkpoint_path, "Checkpoint JSON")->required();
    assign->add_option("--dataset", assign_args.dataset_path, "Dataset JSONL")->required();
    assign->add_option("--scene-id", assign_args.scene_id, "Scene id to dump")->required();

    GmmFitArgs gmm_args;
    CLI::App* gmm_fit =
        app.add_subcommand("gmm-fit", "Fit a two-component 1-D Gaussian mixture to costs");
    gmm_fit->add_option("--input", gmm_args.input_path,
                        "Newline-separated samples (default: stdin)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (gen->parsed()) return run_gen(gen_args);
        if (train->parsed()) return run_train(train_args);
        if (eval->parsed()) return run_eval(eval_args);
        if (assign->parsed()) return run_assign(assign_args);
        if (gmm_fit->parsed()) return run_gmm_fit(gmm_args);
    } catch (const lad::io::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const lad::sim::TrainAbort& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
