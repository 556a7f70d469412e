#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dpl/dpl.hpp"

namespace fs = std::filesystem;

namespace
{

struct CommonOptions
{
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    bool deterministic = false;
    std::vector<std::string> toggles;
    std::optional<int> iterations;
    std::optional<int> episodes;
    std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonOptions& o)
{
    cmd->add_option("--config", o.config_path, "JSON run configuration");
    cmd->add_option("--seed", o.seed, "training seed (eval: held-out episode seed)");
    cmd->add_option("--out-dir", o.out_dir, "directory for outputs");
    cmd->add_flag("--deterministic", o.deterministic, "suppress reverse-step noise draws");
    cmd->add_option("--toggle", o.toggles, "forward|reverse|spatial|fusion=on|off (repeatable)");
    cmd->add_option("--iterations", o.iterations, "training iterations");
    cmd->add_option("--episodes", o.episodes, "evaluation episodes");
    cmd->add_option("--threads", o.threads, "evaluation worker threads");
}

void apply_toggle(dpl::PipelineToggles& t, const std::string& spec)
{
    const auto eq = spec.find('=');
    if (eq == std::string::npos)
        throw dpl::ConfigError("--toggle expects name=on|off, got '" + spec + "'");
    const std::string name = spec.substr(0, eq), value = spec.substr(eq + 1);
    bool on;
    if (value == "on")
        on = true;
    else if (value == "off")
        on = false;
    else
        throw dpl::ConfigError("--toggle value must be on or off, got '" + value + "'");
    if (name == "forward")
        t.forward = on;
    else if (name == "reverse")
        t.reverse = on;
    else if (name == "spatial")
        t.spatial = on;
    else if (name == "fusion")
        t.fusion = on;
    else
        throw dpl::ConfigError("unknown toggle '" + name + "'");
}

dpl::RunConfig resolve(const CommonOptions& o, const dpl::RunConfig& base, bool seed_is_eval)
{
    dpl::RunConfig cfg = o.config_path.empty() ? base : dpl::load_run_config(o.config_path);
    if (o.seed)
        (seed_is_eval ? cfg.eval_seed : cfg.seed) = *o.seed;
    if (o.deterministic)
        cfg.deterministic = true;
    for (const auto& t : o.toggles)
        apply_toggle(cfg.toggles, t);
    if (o.iterations)
        cfg.iterations = *o.iterations;
    if (o.episodes)
        cfg.eval_episodes = *o.episodes;
    if (o.threads)
        cfg.threads = *o.threads;
    cfg.validate();
    return cfg;
}

fs::path prepare_dir(const std::string& dir)
{
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec)
        throw dpl::ConfigError("cannot create output directory " + dir + ": " + ec.message());
    return p;
}

void write_json(const fs::path& path, const nlohmann::json& j)
{
    std::ofstream out(path);
    if (!out)
        throw dpl::ConfigError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

int cmd_train(const CommonOptions& o)
{
    const dpl::RunConfig cfg = resolve(o, dpl::RunConfig{}, false);
    const fs::path dir = prepare_dir(o.out_dir);
    std::ofstream metrics(dir / "metrics.csv");
    dpl::write_metrics_header(metrics, cfg.generator.num_classes);
    const dpl::Checkpoint ckpt = dpl::train(cfg, [&](const dpl::MetricsRecord& r) {
        dpl::write_metrics_row(metrics, r);
        metrics.flush();
        std::cerr << "iter " << r.iteration << "  loss " << r.loss.total << "  dice " << r.mean_dice << '\n';
    });
    dpl::save_checkpoint(ckpt, (dir / "checkpoint.json").string());
    std::cout << "checkpoint " << (dir / "checkpoint.json").string() << " (config " << dpl::hash_hex(ckpt.config_hash)
              << ", " << ckpt.iteration << " iterations)\n";
    return 0;
}

int cmd_eval(const CommonOptions& o, const std::string& checkpoint_path, bool trace)
{
    if (checkpoint_path.empty())
        throw dpl::ConfigError("eval requires --checkpoint");
    std::optional<dpl::ModelConfig> expected;
    if (!o.config_path.empty())
        expected = dpl::load_run_config(o.config_path).model;
    const dpl::Checkpoint ckpt = dpl::load_checkpoint(checkpoint_path, expected);
    const dpl::RunConfig cfg = resolve(o, ckpt.config, true);
    const dpl::EvalReport rep =
        dpl::evaluate(ckpt, cfg, cfg.eval_episodes, static_cast<unsigned>(cfg.threads), trace);
    const fs::path dir = prepare_dir(o.out_dir);
    write_json(dir / "eval.json", dpl::report_to_json(rep));
    std::cout << "episodes " << rep.episodes << "  mean dice " << rep.mean_dice << "  std " << rep.std_dice << '\n';
    return 0;
}

int cmd_ablate(const CommonOptions& o)
{
    const dpl::RunConfig cfg = resolve(o, dpl::RunConfig{}, false);
    const fs::path dir = prepare_dir(o.out_dir);
    const auto rows = dpl::ablate(cfg, static_cast<unsigned>(cfg.threads),
                                  [](const std::string& s) { std::cerr << s << '\n'; });
    write_json(dir / "ablation.json", dpl::rows_to_json(rows));
    std::ofstream table(dir / "ablation.txt");
    dpl::write_ablation_table(table, rows);
    dpl::write_ablation_table(std::cout, rows);
    return 0;
}

int cmd_sweep(const CommonOptions& o)
{
    const dpl::RunConfig cfg = resolve(o, dpl::RunConfig{}, false);
    const fs::path dir = prepare_dir(o.out_dir);
    const auto rows = dpl::sweep(cfg, dpl::default_sweep_grid(), static_cast<unsigned>(cfg.threads),
                                 [](const std::string& s) { std::cerr << s << '\n'; });
    write_json(dir / "sweep.json", dpl::rows_to_json(rows));
    std::ofstream csv(dir / "sweep.csv");
    dpl::write_sweep_csv(csv, rows);
    dpl::write_sweep_csv(std::cout, rows);
    return 0;
}

int cmd_selftest()
{
    bool all = true;
    for (const auto& r : dpl::run_selftest())
    {
        std::cout << (r.ok ? "ok    " : "FAIL  ") << r.name;
        if (!r.ok)
            std::cout << ": " << r.detail;
        std::cout << '\n';
        all = all && r.ok;
    }
    return all ? 0 : 1;
}

int cmd_episode(const CommonOptions& o, std::uint64_t index, const std::string& out_path)
{
    const dpl::RunConfig cfg = resolve(o, dpl::RunConfig{}, false);
    auto rng = dpl::derive_stream(cfg.seed, dpl::StreamDomain::train_episode, index);
    const dpl::Episode ep = dpl::generate_episode(rng, cfg.generator, dpl::make_class_bank(cfg.generator));
    std::ofstream out(out_path, std::ios::binary);
    if (!out)
        throw dpl::ConfigError("cannot write " + out_path);
    dpl::write_episode(out, ep);
    std::cout << "episode " << index << " class " << ep.class_id << " -> " << out_path << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Diffusion prototype learning for one-shot segmentation on synthetic episodes"};
    app.require_subcommand(1);

    CommonOptions train_o, eval_o, ablate_o, sweep_o, episode_o;
    std::string checkpoint_path;
    bool trace = false;
    std::uint64_t episode_index = 0;
    std::string episode_out = "episode.bin";

    auto* train = app.add_subcommand("train", "train a model and write a checkpoint");
    add_common(train, train_o);
    auto* eval = app.add_subcommand("eval", "score a checkpoint on held-out episodes");
    add_common(eval, eval_o);
    eval->add_option("--checkpoint", checkpoint_path, "checkpoint JSON")->required();
    eval->add_flag("--trace", trace, "include the first episode's enhancement trace");
    auto* ablate = app.add_subcommand("ablate", "component ablation over seeds");
    add_common(ablate, ablate_o);
    auto* sweep = app.add_subcommand("sweep", "beta / alpha / T sensitivity grid");
    add_common(sweep, sweep_o);
    auto* selftest = app.add_subcommand("selftest", "run built-in sanity checks");
    auto* episode = app.add_subcommand("episode", "export one generated episode in the flat binary layout");
    add_common(episode, episode_o);
    episode->add_option("--index", episode_index, "episode index in the training stream");
    episode->add_option("--out", episode_out, "output file");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp& e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError& e)
    {
        app.exit(e);
        return 2;
    }

    try
    {
        if (*train)
            return cmd_train(train_o);
        if (*eval)
            return cmd_eval(eval_o, checkpoint_path, trace);
        if (*ablate)
            return cmd_ablate(ablate_o);
        if (*sweep)
            return cmd_sweep(sweep_o);
        if (*selftest)
            return cmd_selftest();
        if (*episode)
            return cmd_episode(episode_o, episode_index, episode_out);
    }
    catch (const dpl::ConfigError& e)
    {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
    catch (const dpl::CheckpointError& e)
    {
        std::cerr << "checkpoint error: " << e.what() << '\n';
        return 2;
    }
    catch (const dpl::NumericFailure& e)
    {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return 3;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
