// Operator entry point: create worlds, sample codes, train, evaluate,
// inspect masks, and reenact persisted codes. Every command is a pure
// function of its arguments and input files.
//
// Exit codes: 0 success, 2 usage or parse problems, 3 numeric failures,
// 4 artifacts that do not belong together.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "maskmix/digest.hpp"
#include "maskmix/errors.hpp"
#include "maskmix/serialize.hpp"
#include "maskmix/tensor_ops.hpp"

namespace fs = std::filesystem;
using namespace maskmix;

namespace {

std::string iso_utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

bool verbose_logging() {
    const char* v = std::getenv("MASKMIX_VERBOSE");
    return v != nullptr && *v != '\0' && std::string(v) != "0";
}

void require_world_match(const Checkpoint& checkpoint, const SurrogateWorld& world) {
    if (checkpoint.world_digest != world.digest)
        throw MismatchError("checkpoint was trained against world " +
                            to_hex(checkpoint.world_digest) + " but got " + to_hex(world.digest));
}

Json semantics_to_json(const CodeSemantics& s) {
    Json j;
    j["pose"] = Json{{"yaw", s.pose.yaw}, {"pitch", s.pose.pitch}, {"roll", s.pose.roll}};
    j["expr"] = tensor_to_json(s.expr);
    j["shape"] = tensor_to_json(s.shape);
    j["id_feature"] = tensor_to_json(s.id_feature);
    return j;
}

struct WorldCreateArgs {
    std::string layout_name;
    std::uint64_t seed = 0;
    std::string out_path;
};

int run_world_create(const WorldCreateArgs& args) {
    const StyleLayout layout = builtin_layout(args.layout_name);
    const SurrogateWorld world = make_world(layout, WorldSizes{}, args.seed);
    save_json_file(args.out_path, world_to_json(world));
    std::cout << "layout " << world.layout.name << " total_dims " << world.layout.total_dims
              << " active_dims " << world.layout.active_dims << "\n"
              << "world digest " << to_hex(world.digest) << "\n"
              << "wrote " << args.out_path << "\n";
    return 0;
}

struct CodeSampleArgs {
    std::string world_path;
    std::uint64_t seed = 0;
    std::string out_path;
};

int run_code_sample(const CodeSampleArgs& args) {
    const SurrogateWorld world = load_world(args.world_path);
    const StyleCode code = sample_code(world, args.seed);
    save_json_file(args.out_path, code_to_json(code));
    std::cout << "sampled code (seed " << args.seed << ") from world " << to_hex(world.digest)
              << "\n"
              << "wrote " << args.out_path << "\n";
    return 0;
}

struct TrainArgs {
    std::string config_path;
    std::string resume_path;
    std::string out_dir = ".";
};

int run_train(const TrainArgs& args) {
    const TrainConfig config = normalize_config(config_from_json(load_json_file(args.config_path)));
    if (config.world_path.empty())
        throw ShapeError("config: world_path is required to train");
    const SurrogateWorld world = load_world(config.world_path);

    fs::create_directories(args.out_dir);
    const fs::path out_dir(args.out_dir);
    const std::string checkpoint_path = (out_dir / "checkpoint.json").string();
    const std::string log_path = (out_dir / "train_log.csv").string();
    const std::string manifest_path = (out_dir / "manifest.json").string();

    std::ofstream log(log_path, std::ios::binary | std::ios::trunc);
    if (!log) throw std::runtime_error("cannot write file '" + log_path + "'");
    log << log_csv_header();
    const bool verbose = verbose_logging();

    TrainSinks sinks;
    sinks.on_log = [&log, verbose](const TrainLogRow& row) {
        const std::string line = log_csv_row(row);
        log << line;
        log.flush();
        if (verbose) std::cerr << line;
    };
    sinks.on_checkpoint = [&checkpoint_path](const Checkpoint& ck) {
        save_json_file(checkpoint_path, checkpoint_to_json(ck));
    };

    RunManifest manifest;
    manifest.world_digest = world.digest;
    manifest.checkpoint_path = checkpoint_path;
    manifest.log_path = log_path;
    manifest.tool_version = MASKMIX_TOOL_VERSION;
    manifest.started_at = iso_utc_now();

    TrainStats stats;
    const Checkpoint final_state =
        args.resume_path.empty()
            ? train(config, world, sinks, &stats)
            : resume(load_checkpoint(args.resume_path), config, world, sinks, &stats);
    save_json_file(checkpoint_path, checkpoint_to_json(final_state));
    log.flush();
    if (!log) throw std::runtime_error("cannot write file '" + log_path + "'");

    manifest.config = final_state.config;
    manifest.finished_at = iso_utc_now();
    save_json_file(manifest_path, manifest_to_json(manifest));

    std::cout << "world digest " << to_hex(world.digest) << "\n"
              << "ran " << stats.iterations_run << " iterations to " << final_state.iteration
              << " of " << final_state.config.iterations << "\n";
    if (stats.iterations_run > 0)
        std::cout << "batch total " << format_double(stats.initial_total) << " -> "
                  << format_double(stats.final_total) << "\n";
    std::cout << "checkpoint digest " << to_hex(final_state.digest) << "\n"
              << "wrote " << checkpoint_path << ", " << log_path << ", " << manifest_path << "\n";
    return 0;
}

struct EvalArgs {
    std::string checkpoint_path;
    std::string world_path;
    std::size_t pairs = 500;
    std::uint64_t seed = 0;
    std::string format = "json";
    std::string probe = "none";
    bool self_pairs = false;
    std::string out_path;
};

int run_eval(const EvalArgs& args) {
    const Checkpoint checkpoint = load_checkpoint(args.checkpoint_path);
    const SurrogateWorld world = load_world(args.world_path);
    EvalOptions options;
    options.n_pairs = args.pairs;
    options.seed = args.seed;
    options.probe = probe_from_name(args.probe);
    options.self_pairs = args.self_pairs;
    const MetricsReport report = evaluate(checkpoint, world, options);

    std::string text;
    if (args.format == "json")
        text = report_to_json(report).dump(2) + "\n";
    else if (args.format == "csv")
        text = report_to_csv(report);
    else
        text = report_to_table(report);
    std::cout << text;
    if (!args.out_path.empty()) write_text_file(args.out_path, text);
    return 0;
}

struct InspectArgs {
    std::string checkpoint_path;
    std::string world_path;
    std::size_t pairs = 500;
    std::uint64_t seed = 0;
    std::string out_path;
};

int run_inspect_mask(const InspectArgs& args) {
    const Checkpoint checkpoint = load_checkpoint(args.checkpoint_path);
    const SurrogateWorld world = load_world(args.world_path);
    const MaskRecovery recovery = mask_recovery(checkpoint, world, args.pairs, args.seed);
    write_text_file(args.out_path, inspect_mask_csv(world, recovery));
    std::cout << "precision " << format_double(recovery.precision) << "\n"
              << "recall " << format_double(recovery.recall) << "\n"
              << "f1 " << format_double(recovery.f1) << "\n"
              << "wrote " << args.out_path << "\n";
    return 0;
}

struct ReenactArgs {
    std::string checkpoint_path;
    std::string world_path;
    std::string source_path;
    std::string target_path;
    std::string out_path;
};

int run_reenact(const ReenactArgs& args) {
    const Checkpoint checkpoint = load_checkpoint(args.checkpoint_path);
    const SurrogateWorld world = load_world(args.world_path);
    require_world_match(checkpoint, world);
    const StyleCode source = load_code(args.source_path, world.layout);
    const StyleCode target = load_code(args.target_path, world.layout);

    const auto rotation = training_rotation(checkpoint.config, world.layout);
    ReenactOptions options;
    options.rotation = rotation ? &*rotation : nullptr;
    const ReenactResult result = reenact(world, checkpoint.params, source, target, options);

    Json out = code_to_json(result.reenacted);
    out["semantics"] = Json{{"source", semantics_to_json(result.source)},
                            {"target", semantics_to_json(result.target)},
                            {"output", semantics_to_json(result.output)}};
    save_json_file(args.out_path, out);

    const PoseAngles& op = result.output.pose;
    const PoseAngles& tp = result.target.pose;
    std::cout << "output pose " << format_double(op.yaw) << " " << format_double(op.pitch) << " "
              << format_double(op.roll) << " (target " << format_double(tp.yaw) << " "
              << format_double(tp.pitch) << " " << format_double(tp.roll) << ")\n"
              << "source-output identity csim "
              << format_double(cosine_sim(result.source.id_feature, result.output.id_feature))
              << "\n"
              << "wrote " << args.out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Channel-mask disentanglement laboratory"};
    app.require_subcommand(1);
    int rc = 0;

    auto* world_cmd = app.add_subcommand("world", "World artifacts");
    world_cmd->require_subcommand(1);
    WorldCreateArgs world_args;
    auto* world_create = world_cmd->add_subcommand("create", "Create a seeded world");
    world_create->add_option("--layout", world_args.layout_name, "Builtin layout name")
        ->required();
    world_create->add_option("--seed", world_args.seed, "World seed")->required();
    world_create->add_option("--out", world_args.out_path, "Output world JSON")->required();
    world_create->callback([&] { rc = run_world_create(world_args); });

    auto* code_cmd = app.add_subcommand("code", "Style-code artifacts");
    code_cmd->require_subcommand(1);
    CodeSampleArgs code_args;
    auto* code_sample = code_cmd->add_subcommand("sample", "Sample a code from a world's prior");
    code_sample->add_option("--world", code_args.world_path, "World JSON")->required();
    code_sample->add_option("--seed", code_args.seed, "Code seed")->required();
    code_sample->add_option("--out", code_args.out_path, "Output code JSON")->required();
    code_sample->callback([&] { rc = run_code_sample(code_args); });

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "Train the mask network");
    train_cmd->add_option("--config", train_args.config_path, "Training config JSON")->required();
    train_cmd->add_option("--resume", train_args.resume_path, "Checkpoint to continue from");
    train_cmd->add_option("--out-dir", train_args.out_dir,
                          "Directory for checkpoint, log, and manifest");
    train_cmd->callback([&] { rc = run_train(train_args); });

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
    eval_cmd->add_option("--checkpoint", eval_args.checkpoint_path, "Checkpoint JSON")->required();
    eval_cmd->add_option("--world", eval_args.world_path, "World JSON")->required();
    eval_cmd->add_option("--pairs", eval_args.pairs, "Number of evaluation pairs");
    eval_cmd->add_option("--seed", eval_args.seed, "Evaluation seed");
    eval_cmd->add_option("--format", eval_args.format, "Report format")
        ->check(CLI::IsMember({"json", "csv", "table"}));
    eval_cmd->add_option("--probe", eval_args.probe, "Force the mask to a constant")
        ->check(CLI::IsMember({"none", "zero", "one"}));
    eval_cmd->add_flag("--self-pairs", eval_args.self_pairs, "Reenact every source onto itself");
    eval_cmd->add_option("--out", eval_args.out_path, "Also write the report here");
    eval_cmd->callback([&] { rc = run_eval(eval_args); });

    InspectArgs inspect_args;
    auto* inspect_cmd = app.add_subcommand("inspect-mask", "Dump per-channel mean masks");
    inspect_cmd->add_option("--checkpoint", inspect_args.checkpoint_path, "Checkpoint JSON")
        ->required();
    inspect_cmd->add_option("--world", inspect_args.world_path, "World JSON")->required();
    inspect_cmd->add_option("--pairs", inspect_args.pairs, "Number of averaging pairs");
    inspect_cmd->add_option("--seed", inspect_args.seed, "Sampling seed");
    inspect_cmd->add_option("--out", inspect_args.out_path, "Output CSV")->required();
    inspect_cmd->callback([&] { rc = run_inspect_mask(inspect_args); });

    ReenactArgs reenact_args;
    auto* reenact_cmd = app.add_subcommand("reenact", "Mix two persisted codes");
    reenact_cmd->add_option("--checkpoint", reenact_args.checkpoint_path, "Checkpoint JSON")
        ->required();
    reenact_cmd->add_option("--world", reenact_args.world_path, "World JSON")->required();
    reenact_cmd->add_option("--source", reenact_args.source_path, "Source code JSON")->required();
    reenact_cmd->add_option("--target", reenact_args.target_path, "Target code JSON")->required();
    reenact_cmd->add_option("--out", reenact_args.out_path, "Output code JSON")->required();
    reenact_cmd->callback([&] { rc = run_reenact(reenact_args); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const ShapeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const MismatchError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return rc;
}
