#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lfrid/lfrid.hpp"

namespace {

struct StageArgs {
    std::string config_path;
    std::string out_dir;
};

void add_stage_command(CLI::App& app, const std::string& name, const std::string& desc,
                       StageArgs& args, lfrid::PipelineStage stage,
                       lfrid::PipelineStage& selected, bool& triggered) {
    CLI::App* cmd = app.add_subcommand(name, desc);
    cmd->add_option("--config", args.config_path, "experiment config (JSON)")->required();
    cmd->add_option("--out", args.out_dir, "output directory")->required();
    cmd->callback([&selected, &triggered, stage] {
        selected = stage;
        triggered = true;
    });
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string("NL-LFR system identification toolkit (") + lfrid::k_version + ")"};
    app.require_subcommand(1);

    StageArgs args;
    lfrid::PipelineStage stage = lfrid::PipelineStage::Eval;
    bool triggered = false;
    add_stage_command(app, "generate", "generate the configured datasets", args,
                      lfrid::PipelineStage::Data, stage, triggered);
    add_stage_command(app, "bla", "estimate the best linear approximation", args,
                      lfrid::PipelineStage::Bla, stage, triggered);
    add_stage_command(app, "init", "write the BLA-based initial models", args,
                      lfrid::PipelineStage::Init, stage, triggered);
    add_stage_command(app, "fit", "run the restarts and select the best model", args,
                      lfrid::PipelineStage::Fit, stage, triggered);
    add_stage_command(app, "eval", "evaluate models on the test sets", args,
                      lfrid::PipelineStage::Eval, stage, triggered);
    add_stage_command(app, "pipeline", "run the full experiment end-to-end", args,
                      lfrid::PipelineStage::Eval, stage, triggered);

    CLI11_PARSE(app, argc, argv);
    if (!triggered) return 1;

    try {
        const lfrid::ExperimentConfig cfg = lfrid::load_config(args.config_path);
        const lfrid::PipelineResult result = lfrid::run_pipeline(cfg, args.out_dir, stage);
        if (stage == lfrid::PipelineStage::Eval) {
            std::cout << "best seed " << result.best_seed << ", estimation cost "
                      << result.best_cost << "\n";
            std::cout << "metrics written to " << args.out_dir << "/metrics.csv\n";
        } else {
            std::cout << "artifacts written to " << args.out_dir << "\n";
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
