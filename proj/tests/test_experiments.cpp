#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"

using namespace dpl;

TEST(Variants, SixRowsWithExpectedToggles)
{
    const auto v = ablation_variants();
    ASSERT_EQ(v.size(), 6u);
    EXPECT_EQ(v.front().name, "Baseline");
    EXPECT_FALSE(v.front().toggles.any_enhancement());
    EXPECT_EQ(v.back().name, "DPL-Full");
    const auto& full = v.back().toggles;
    EXPECT_TRUE(full.forward && full.reverse && full.spatial && full.fusion);
    for (std::size_t k = 1; k + 1 < v.size(); ++k)
        EXPECT_TRUE(v[k].toggles.any_enhancement()) << v[k].name;
}

TEST(Variants, TraceSemanticsPerRow)
{
    const RunConfig base = fixture::tiny(0);
    const Model m = Model::initialized(base.model, 1);
    const Vector p0(8, 0.5);
    for (const auto& v : ablation_variants())
    {
        RunConfig c = base;
        c.toggles = v.toggles;
        RngStream r(3, 3);
        const PipelineResult pr = run_pipeline(p0, m, r, c.enhance_options());
        EXPECT_EQ(pr.enhancement_invoked, v.toggles.any_enhancement()) << v.name;
        EXPECT_EQ(pr.fusion_invoked, v.toggles.fusion && v.toggles.any_enhancement()) << v.name;
        if (!pr.enhancement_invoked)
            continue;
        EXPECT_EQ(pr.trace.forward_applied, v.toggles.forward) << v.name;
        EXPECT_EQ(pr.trace.reverse_applied, v.toggles.reverse) << v.name;
        EXPECT_EQ(pr.trace.spatial_applied, v.toggles.spatial && v.toggles.reverse) << v.name;
    }
}

TEST(SweepGrid, EightRowsOneReference)
{
    const auto g = default_sweep_grid();
    ASSERT_EQ(g.size(), 8u);
    EXPECT_EQ(std::count_if(g.begin(), g.end(), is_reference), 1);
    auto has = [&](double b, double a, int t) {
        return std::any_of(g.begin(), g.end(),
                           [&](const SweepPoint& p) { return p.beta == b && p.alpha_scale == a && p.steps == t; });
    };
    for (double b : {0.01, 0.02, 0.05, 0.1})
        EXPECT_TRUE(has(b, 0.1, 20));
    for (double a : {0.05, 0.2})
        EXPECT_TRUE(has(0.02, a, 20));
    for (int t : {10, 50})
        EXPECT_TRUE(has(0.02, 0.1, t));
}

TEST(Sweep, SinglePointEqualsTrainThenEvaluate)
{
    RunConfig c = fixture::tiny(6);
    c.seeds = {4};
    const auto rows = sweep(c, {{0.05, 0.2, 10}});
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_FALSE(rows[0].reference);
    RunConfig d = c;
    d.beta = 0.05;
    d.alpha_scale = 0.2;
    d.model.steps = 10;
    d.seed = 4;
    d.eval_seed = c.eval_seed + 4;
    const EvalReport r = evaluate(train(d), d, d.eval_episodes);
    ASSERT_EQ(rows[0].seeds.size(), 1u);
    EXPECT_EQ(rows[0].seeds[0].mean_dice, r.mean_dice);
    EXPECT_EQ(rows[0].mean_dice, r.mean_dice);
    EXPECT_EQ(rows[0].seed_std, 0.0);
}

TEST(Ablate, DeterministicAcrossThreadCounts)
{
    RunConfig c = fixture::tiny(4);
    c.seeds = {1, 2};
    c.eval_episodes = 4;
    const auto a = ablate(c, 1), b = ablate(c, 3);
    ASSERT_EQ(a.size(), 6u);
    for (std::size_t k = 0; k < a.size(); ++k)
    {
        EXPECT_EQ(a[k].name, b[k].name);
        EXPECT_EQ(a[k].mean_dice, b[k].mean_dice);
        EXPECT_EQ(a[k].reference, a[k].name == "DPL-Full");
    }
}

TEST(Output, TableAndCsvShape)
{
    ExperimentRow r;
    r.name = "DPL-Full";
    r.toggles = {true, true, true, true};
    r.beta = 0.02;
    r.alpha_scale = 0.1;
    r.steps = 20;
    r.reference = true;
    r.seeds = {{1, 60.0, 5.0}, {2, 70.0, 5.0}};
    r.summarize();
    EXPECT_EQ(r.mean_dice, 65.0);
    EXPECT_EQ(r.seed_std, 5.0);

    std::ostringstream table;
    write_ablation_table(table, {r});
    EXPECT_NE(table.str().find("Method"), std::string::npos);
    EXPECT_NE(table.str().find("65.00"), std::string::npos);
    EXPECT_NE(table.str().find("No-Forward"), std::string::npos);

    std::ostringstream csv;
    write_sweep_csv(csv, {r});
    EXPECT_EQ(csv.str(), "beta,alpha_scale,steps,reference,mean_dice,seed_std,seed0,seed1\n"
                         "0.02,0.1,20,1,65,5,60,70\n");
    const auto j = rows_to_json({r});
    EXPECT_EQ(j[0].at("seeds").size(), 2u);
    EXPECT_TRUE(j[0].at("reference").get<bool>());
}
