#pragma once

#include <cmath>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpl/config.hpp"
#include "dpl/parallel.hpp"
#include "dpl/trainer.hpp"

namespace dpl
{

struct Variant
{
    std::string name;
    PipelineToggles toggles;
};

/// The six ablation rows, in table order.
inline std::vector<Variant> ablation_variants()
{
    return {{"Baseline", {false, false, false, false}},  {"No-Forward", {false, true, true, true}},
            {"No-Reverse", {true, false, false, true}},  {"No-Spatial", {true, true, false, true}},
            {"No-Fusion", {true, true, true, false}},    {"DPL-Full", {true, true, true, true}}};
}

struct SeedScore
{
    std::uint64_t seed = 0;
    double mean_dice = 0.0;
    double std_dice = 0.0;
};

struct ExperimentRow
{
    std::string name;
    PipelineToggles toggles;
    double beta = 0.0;
    double alpha_scale = 0.0;
    int steps = 0;
    bool reference = false;
    std::vector<SeedScore> seeds;
    double mean_dice = 0.0;   // mean over seeds
    double seed_std = 0.0;    // population std of per-seed means

    void summarize()
    {
        if (seeds.empty())
            return;
        double s = 0.0;
        for (const auto& x : seeds)
            s += x.mean_dice;
        mean_dice = s / static_cast<double>(seeds.size());
        double ss = 0.0;
        for (const auto& x : seeds)
            ss += (x.mean_dice - mean_dice) * (x.mean_dice - mean_dice);
        seed_std = std::sqrt(ss / static_cast<double>(seeds.size()));
    }
};

using ProgressSink = std::function<void(const std::string&)>;

/// Trains and scores one configuration per seed. Seed s trains on streams of
/// s and evaluates on eval_seed + s, so every row sees the same episodes.
inline std::vector<SeedScore> run_seeds(const RunConfig& base, unsigned threads, const ProgressSink& progress = {},
                                        const std::string& label = {})
{
    std::vector<SeedScore> out(base.seeds.size());
    parallel_for(base.seeds.size(), threads, [&](std::size_t k) {
        RunConfig c = base;
        c.seed = base.seeds[k];
        c.eval_seed = base.eval_seed + base.seeds[k];
        const Checkpoint ckpt = train(c);
        const EvalReport r = evaluate(ckpt, c, c.eval_episodes, 1);
        out[k] = {c.seed, r.mean_dice, r.std_dice};
        if (progress)
        {
            std::ostringstream os;
            os << label << " seed " << c.seed << ": " << std::fixed << std::setprecision(2) << r.mean_dice;
            progress(os.str());
        }
    });
    return out;
}

inline std::vector<ExperimentRow> ablate(const RunConfig& cfg, unsigned threads = 1, const ProgressSink& progress = {})
{
    cfg.validate();
    std::vector<ExperimentRow> rows;
    for (const auto& v : ablation_variants())
    {
        RunConfig c = cfg;
        c.toggles = v.toggles;
        ExperimentRow row;
        row.name = v.name;
        row.toggles = v.toggles;
        row.beta = c.beta;
        row.alpha_scale = c.alpha_scale;
        row.steps = c.model.steps;
        row.reference = v.name == "DPL-Full";
        row.seeds = run_seeds(c, threads, progress, v.name);
        row.summarize();
        rows.push_back(std::move(row));
    }
    return rows;
}

struct SweepPoint
{
    double beta;
    double alpha_scale;
    int steps;
};

inline constexpr SweepPoint sweep_reference{0.02, 0.1, 20};

inline std::vector<SweepPoint> default_sweep_grid()
{
    return {{0.01, 0.1, 20}, {0.02, 0.1, 20}, {0.05, 0.1, 20}, {0.1, 0.1, 20},
            {0.02, 0.05, 20}, {0.02, 0.2, 20}, {0.02, 0.1, 10}, {0.02, 0.1, 50}};
}

inline bool is_reference(const SweepPoint& p)
{
    return p.beta == sweep_reference.beta && p.alpha_scale == sweep_reference.alpha_scale &&
           p.steps == sweep_reference.steps;
}

inline std::vector<ExperimentRow> sweep(const RunConfig& cfg, const std::vector<SweepPoint>& grid, unsigned threads = 1,
                                        const ProgressSink& progress = {})
{
    cfg.validate();
    std::vector<ExperimentRow> rows;
    for (const auto& p : grid)
    {
        RunConfig c = cfg;
        c.beta = p.beta;
        c.alpha_scale = p.alpha_scale;
        c.model.steps = p.steps;
        c.validate();
        ExperimentRow row;
        std::ostringstream name;
        name << "beta=" << p.beta << " alpha=" << p.alpha_scale << " T=" << p.steps;
        row.name = name.str();
        row.toggles = c.toggles;
        row.beta = p.beta;
        row.alpha_scale = p.alpha_scale;
        row.steps = p.steps;
        row.reference = is_reference(p);
        row.seeds = run_seeds(c, threads, progress, row.name);
        row.summarize();
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

inline nlohmann::json rows_to_json(const std::vector<ExperimentRow>& rows)
{
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows)
    {
        nlohmann::json seeds = nlohmann::json::array();
        for (const auto& s : r.seeds)
            seeds.push_back({{"seed", s.seed}, {"mean_dice", s.mean_dice}, {"std_dice", s.std_dice}});
        arr.push_back({{"name", r.name},
                       {"toggles", r.toggles},
                       {"beta", r.beta},
                       {"alpha_scale", r.alpha_scale},
                       {"steps", r.steps},
                       {"reference", r.reference},
                       {"mean_dice", r.mean_dice},
                       {"seed_std", r.seed_std},
                       {"seeds", seeds}});
    }
    return arr;
}

inline void write_ablation_table(std::ostream& os, const std::vector<ExperimentRow>& rows)
{
    auto mark = [](bool b) { return b ? "yes" : "-"; };
    os << std::left << std::setw(12) << "Method" << std::setw(9) << "Forward" << std::setw(9) << "Reverse"
       << std::setw(9) << "Spatial" << std::setw(8) << "Fusion" << std::right << std::setw(8) << "Avg"
       << std::setw(8) << "+/-" << '\n';
    for (const auto& r : rows)
        os << std::left << std::setw(12) << r.name << std::setw(9) << mark(r.toggles.forward) << std::setw(9)
           << mark(r.toggles.reverse) << std::setw(9) << mark(r.toggles.spatial) << std::setw(8)
           << mark(r.toggles.fusion) << std::right << std::fixed << std::setprecision(2) << std::setw(8)
           << r.mean_dice << std::setw(8) << r.seed_std << '\n';
    os << "note: No-Forward starts the reverse chain from pure Gaussian noise at t=T (interpretation).\n";
}

inline void write_sweep_csv(std::ostream& os, const std::vector<ExperimentRow>& rows)
{
    std::size_t n_seeds = 0;
    for (const auto& r : rows)
        n_seeds = std::max(n_seeds, r.seeds.size());
    os << "beta,alpha_scale,steps,reference,mean_dice,seed_std";
    for (std::size_t k = 0; k < n_seeds; ++k)
        os << ",seed" << k;
    os << '\n';
    for (const auto& r : rows)
    {
        os << r.beta << ',' << r.alpha_scale << ',' << r.steps << ',' << (r.reference ? 1 : 0) << ','
           << r.mean_dice << ',' << r.seed_std;
        for (const auto& s : r.seeds)
            os << ',' << s.mean_dice;
        os << '\n';
    }
}

} // namespace dpl
