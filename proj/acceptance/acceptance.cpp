// Runs the seven acceptance checks and prints one PASS/FAIL line for each.
// Usage: dpl_acceptance [--only N] [--threads K]

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "oracles.hpp"

using namespace dpl;

namespace
{

// Tolerances and thresholds.
constexpr double marginal_var_tol = 0.05;
constexpr double round_trip_tol = 1e-8;
constexpr double grad_tol = 1e-4;
constexpr int grad_min_params = 100;
constexpr double step_oracle_tol = 1e-10;
constexpr double sgd_oracle_tol = 1e-12;
constexpr double constraint_oracle_tol = 1e-10;
constexpr double fast_budget_s = 60.0;
constexpr double ablation_budget_s = 600.0;
constexpr double full_over_baseline = 2.0;
constexpr double no_fusion_slack = 1.0;
constexpr double beta_noise = 1.0;

struct Result
{
    bool ok = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what)
    {
        if (!cond)
        {
            if (!ok)
                detail << "; ";
            detail << what;
            ok = false;
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int prec = 2)
{
    std::ostringstream os;
    os << std::fixed << std::setprecision(prec) << v;
    return os.str();
}

// ---------------------------------------------------------------------------
// 1. invariants
// ---------------------------------------------------------------------------

Result invariants()
{
    Result r;
    const auto t0 = std::chrono::steady_clock::now();

    for (int T : {10, 20, 50, 100})
    {
        const NoiseSchedule s = build_cosine_schedule(T);
        for (int t = 1; t <= T; ++t)
        {
            r.require(s.beta(t) >= 0.001 && s.beta(t) <= 0.1, "beta outside clip range at T=" + std::to_string(T));
            r.require(s.alpha_bar(t) < s.alpha_bar(t - 1), "alpha_bar not strictly decreasing");
        }
    }

    const NoiseSchedule s = build_cosine_schedule(20);
    const int n = 10000;
    RngStream rng(101, 1);
    const Vector p0{1.5, -0.5, 0.0, 2.0};
    double worst_var = 0.0;
    for (int t : {1, 5, 10, 15, 20})
    {
        std::vector<Vector> draws;
        for (int k = 0; k < n; ++k)
            draws.push_back(forward_diffuse(p0, t, sample_standard_normal(rng, 4), s));
        const double var = 1.0 - s.alpha_bar(t);
        for (std::size_t i = 0; i < p0.size(); ++i)
        {
            double m = 0.0, v = 0.0;
            for (const auto& d : draws)
                m += d[i];
            m /= n;
            for (const auto& d : draws)
                v += (d[i] - m) * (d[i] - m);
            v /= n - 1;
            r.require(std::fabs(m - std::sqrt(s.alpha_bar(t)) * p0[i]) < 3.0 * std::sqrt(var / n),
                      "forward mean outside 3 sigma at t=" + std::to_string(t));
            worst_var = std::max(worst_var, std::fabs(v / var - 1.0));
        }
    }
    r.require(worst_var < marginal_var_tol, "forward variance off by " + fmt(100 * worst_var) + "%");

    double worst_rt = 0.0;
    RngStream rt(102, 1);
    for (int t_start = 1; t_start <= 20; ++t_start)
    {
        const Vector p = sample_standard_normal(rt, 64), eps = sample_standard_normal(rt, 64);
        const auto states = run_reverse_chain(forward_diffuse(p, t_start, eps, s), t_start, s,
                                              oracle::perfect_denoiser(s, p), &rt, false);
        worst_rt = std::max(worst_rt, std::sqrt(squared_distance(states.back(), p)) / norm(p));
    }
    r.require(worst_rt < round_trip_tol, "round-trip rel err " + std::to_string(worst_rt));

    RngStream fr(103, 1);
    for (int k = 0; k < 1000; ++k)
    {
        FusionParams fp;
        fp.theta_fidelity = fr.uniform(-8, 8);
        fp.theta_diversity = fr.uniform(-8, 8);
        const Vector a = sample_standard_normal(fr, 8), b = sample_standard_normal(fr, 8);
        const Vector f = fuse(a, b, fp);
        for (std::size_t i = 0; i < 8; ++i)
            if (f[i] < std::min(a[i], b[i]) - 1e-14 || f[i] > std::max(a[i], b[i]) + 1e-14)
            {
                r.require(false, "fusion output outside the segment");
                k = 1000;
                break;
            }
    }

    RngStream dr(104, 1);
    for (int k = 0; k < 1000; ++k)
    {
        Mask a(6, 6), b(6, 6);
        for (std::size_t i = 0; i < 36; ++i)
        {
            a.values[i] = dr.uniform(0, 1) < 0.4;
            b.values[i] = dr.uniform(0, 1) < 0.4;
        }
        const double d = dice_score(a, b);
        if (d != dice_score(b, a) || d < 0.0 || d > 100.0 || dice_score(a, a) != 100.0)
        {
            r.require(false, "dice symmetry or bounds violated");
            break;
        }
    }

    RngStream pr(105, 1);
    double worst_norm = 0.0;
    for (int k = 0; k < 50; ++k)
    {
        FeatureMap f(16, 10, 10);
        pr.fill_normal(f.values);
        const ProbMap pm = predict_segmentation(f, Prototype{sample_standard_normal(pr, 16)},
                                                Prototype{sample_standard_normal(pr, 16)}, pr.uniform(1, 40));
        for (std::size_t i = 0; i < pm.pixels(); ++i)
        {
            worst_norm = std::max(worst_norm, std::fabs(pm.values[2 * i] + pm.values[2 * i + 1] - 1.0));
            r.require(pm.values[2 * i] >= 0.0 && pm.values[2 * i + 1] >= 0.0, "negative probability");
        }
    }
    r.require(worst_norm < 1e-12, "probabilities do not sum to one");

    const double el = seconds_since(t0);
    r.require(el < fast_budget_s, "took " + fmt(el, 1) + " s");
    if (r.ok)
        r.detail << "round-trip " << worst_rt << ", variance dev " << fmt(100 * worst_var) << "%, " << fmt(el, 1)
                 << " s";
    return r;
}

// ---------------------------------------------------------------------------
// 2. gradients
// ---------------------------------------------------------------------------

struct GradTally
{
    int checked = 0;
    double worst = 0.0;
    void add(double analytic, double numeric)
    {
        worst = std::max(worst, oracle::relative_error(analytic, numeric));
        ++checked;
    }
    bool ok() const { return checked >= grad_min_params && worst < grad_tol; }
    std::string str() const { return std::to_string(checked) + " params, worst " + fmt(worst * 1e6, 3) + "e-6"; }
};

GradTally denoiser_gradients(RngStream& rng)
{
    GradTally tally;
    const int D = 16;
    DenoiserNet net(D);
    net.mlp().initialize(rng, false);
    const Vector p = sample_standard_normal(rng, D), w = sample_standard_normal(rng, D);
    const int t = 9;
    auto loss = [&] { return dot(predict_noise(net, p, t), w); };
    net.mlp().zero_grad();
    predict_noise_for_training(net, p, t);
    backward(net, w);
    std::vector<TensorRef> ts;
    net.mlp().collect_tensors("denoiser", ts);
    for (auto& tr : ts)
    {
        const Vector analytic(tr.grads.begin(), tr.grads.end());
        for (std::size_t i = 0; i < tr.values.size(); i += 5)
            tally.add(analytic[i], oracle::central_difference(&tr.values[i], 1e-6, loss));
    }
    return tally;
}

GradTally encoder_gradients(RngStream& rng)
{
    GradTally tally;
    const int D = 16;
    ConditionEncoder enc(D);
    enc.mlp().initialize(rng, false);
    const Vector p = sample_standard_normal(rng, D), w = sample_standard_normal(rng, D);
    const auto g = normalize_constraints(compute_constraints(p), D);
    auto loss = [&] { return dot(encode_condition(enc, p, g).values, w); };
    enc.mlp().zero_grad();
    encode_condition_for_training(enc, p, g);
    enc.mlp().backward(w);
    std::vector<TensorRef> ts;
    enc.mlp().collect_tensors("encoder", ts);
    for (auto& tr : ts)
    {
        const Vector analytic(tr.grads.begin(), tr.grads.end());
        for (std::size_t i = 0; i < tr.values.size(); i += 3)
            tally.add(analytic[i], oracle::central_difference(&tr.values[i], 1e-6, loss));
    }
    return tally;
}

GradTally fusion_gradients(RngStream& rng)
{
    GradTally tally;
    for (int k = 0; k < 60; ++k)
    {
        FusionParams p;
        p.theta_fidelity = rng.uniform(-3, 3);
        p.theta_diversity = rng.uniform(-3, 3);
        const Vector a = sample_standard_normal(rng, 12), b = sample_standard_normal(rng, 12),
                     g = sample_standard_normal(rng, 12);
        auto loss = [&] { return dot(fuse(a, b, p), g); };
        p.zero_grad();
        fuse_backward(a, b, g, p);
        tally.add(p.grad_fidelity, oracle::central_difference(&p.theta_fidelity, 1e-6, loss));
        tally.add(p.grad_diversity, oracle::central_difference(&p.theta_diversity, 1e-6, loss));
    }
    return tally;
}

GradTally head_gradients(RngStream& rng)
{
    GradTally tally;
    const int D = 64;
    FeatureMap f(D, 8, 8);
    rng.fill_normal(f.values);
    Mask gt(8, 8);
    for (auto& v : gt.values)
        v = rng.uniform(0, 1) < 0.4;
    Prototype fg{sample_standard_normal(rng, D)}, bg{sample_standard_normal(rng, D)};
    const double tau = default_temperature;
    const auto g = segmentation_loss_gradient(f, fg, bg, gt, tau);
    auto loss = [&] { return segmentation_loss(predict_segmentation(f, fg, bg, tau), gt); };
    for (int i = 0; i < D; ++i)
    {
        tally.add(g.grad_fg[i], oracle::central_difference(&fg.vector[i], 1e-6, loss));
        tally.add(g.grad_bg[i], oracle::central_difference(&bg.vector[i], 1e-6, loss));
    }
    return tally;
}

Result gradients()
{
    Result r;
    const auto t0 = std::chrono::steady_clock::now();
    RngStream rng(201, 1);
    const GradTally den = denoiser_gradients(rng), enc = encoder_gradients(rng), fus = fusion_gradients(rng),
                    head = head_gradients(rng);
    r.require(den.ok(), "denoiser " + den.str());
    r.require(enc.ok(), "encoder " + enc.str());
    r.require(fus.ok(), "fusion " + fus.str());
    r.require(head.ok(), "seg head " + head.str());
    const double el = seconds_since(t0);
    r.require(el < fast_budget_s, "took " + fmt(el, 1) + " s");
    if (r.ok)
        r.detail << "denoiser " << den.str() << "; encoder " << enc.str() << "; fusion " << fus.str() << "; head "
                 << head.str();
    return r;
}

// ---------------------------------------------------------------------------
// 3. oracle equivalences
// ---------------------------------------------------------------------------

Result oracles()
{
    Result r;
    const NoiseSchedule s = build_cosine_schedule(20);
    const auto o = oracle::cosine_schedule(20);
    RngStream rng(301, 1);
    double worst_fwd = 0.0, worst_rev = 0.0;
    for (int k = 0; k < 2000; ++k)
    {
        const int t = static_cast<int>(rng.uniform_int(1, 20));
        const double x0 = rng.uniform(-3, 3), e = rng.normal(), z = rng.normal(), xt = rng.uniform(-3, 3);
        const double f = forward_diffuse(Vector{x0}, t, Vector{e}, s)[0];
        worst_fwd = std::max(worst_fwd, std::fabs(f - static_cast<double>(oracle::forward_scalar(x0, e, o.alpha_bar[t]))));
        const double b = reverse_step(Vector{xt}, t, Vector{e}, Vector{z}, s)[0];
        const long double want =
            oracle::reverse_scalar(xt, e, t > 1 ? z : 0.0, o.beta[t], o.alpha_bar[t], o.alpha_bar[t - 1]);
        worst_rev = std::max(worst_rev, std::fabs(b - static_cast<double>(want)));
    }
    r.require(worst_fwd < step_oracle_tol, "forward step off by " + std::to_string(worst_fwd));
    r.require(worst_rev < step_oracle_tol, "reverse step off by " + std::to_string(worst_rev));

    Vector theta{1.0, -2.0}, v{0.0, 0.0};
    long double x = 1.0L, y = -2.0L, vx = 0.0L, vy = 0.0L;
    double worst_sgd = 0.0;
    for (int k = 0; k < 50; ++k)
    {
        sgd_momentum_step(theta, Vector{3.0 * theta[0], theta[1]}, v, 0.1, {0.9, 1e-4});
        vx = 0.9L * vx + 3.0001L * x;
        vy = 0.9L * vy + 1.0001L * y;
        x -= 0.1L * vx;
        y -= 0.1L * vy;
        worst_sgd = std::max({worst_sgd, std::fabs(theta[0] - static_cast<double>(x)),
                              std::fabs(theta[1] - static_cast<double>(y))});
    }
    r.require(worst_sgd < sgd_oracle_tol, "sgd off by " + std::to_string(worst_sgd));

    double worst_geo = 0.0;
    for (int k = 0; k < 1000; ++k)
    {
        Vector p = sample_standard_normal(rng, static_cast<std::size_t>(rng.uniform_int(1, 128)));
        const double scale = rng.uniform(0.01, 4.0), shift = rng.uniform(-2, 2);
        for (double& q : p)
            q = q * scale + shift;
        const auto got = compute_constraints(p).raw();
        const auto want = oracle::constraints(p);
        for (int i = 0; i < 4; ++i)
            worst_geo = std::max(worst_geo, std::fabs(got[i] - static_cast<double>(want[i])));
    }
    r.require(worst_geo < constraint_oracle_tol, "constraints off by " + std::to_string(worst_geo));
    if (r.ok)
        r.detail << "forward " << worst_fwd << ", reverse " << worst_rev << ", sgd " << worst_sgd
                 << ", constraints " << worst_geo;
    return r;
}

// ---------------------------------------------------------------------------
// 4. ablation trend
// ---------------------------------------------------------------------------

const ExperimentRow& find_row(const std::vector<ExperimentRow>& rows, const std::string& name)
{
    for (const auto& r : rows)
        if (r.name == name)
            return r;
    throw std::runtime_error("missing row " + name);
}

Result ablation(unsigned threads)
{
    Result r;
    const auto t0 = std::chrono::steady_clock::now();
    const RunConfig cfg; // moderately hard generator: defaults
    const auto rows = ablate(cfg, threads, [](const std::string& s) { std::cerr << "  " << s << '\n'; });
    write_ablation_table(std::cerr, rows);
    const double base = find_row(rows, "Baseline").mean_dice, full = find_row(rows, "DPL-Full").mean_dice,
                 nofu = find_row(rows, "No-Fusion").mean_dice;
    r.require(full >= base + full_over_baseline,
              "Full " + fmt(full) + " is not >= Baseline " + fmt(base) + " + " + fmt(full_over_baseline));
    const bool between = nofu >= std::min(base, full) && nofu <= std::max(base, full);
    r.require(between || std::fabs(nofu - full) <= no_fusion_slack,
              "No-Fusion " + fmt(nofu) + " neither between Baseline and Full nor within 1 of Full");
    const double el = seconds_since(t0);
    r.require(el < ablation_budget_s, "took " + fmt(el, 0) + " s");
    r.detail << (r.ok ? "" : " | ") << "Baseline " << fmt(base) << ", No-Fusion " << fmt(nofu) << ", Full "
             << fmt(full) << ", " << fmt(el, 0) << " s";
    return r;
}

// ---------------------------------------------------------------------------
// 5. sweep structure
// ---------------------------------------------------------------------------

Result sweep_check(unsigned threads)
{
    Result r;
    const auto t0 = std::chrono::steady_clock::now();
    const RunConfig cfg;
    const auto rows = sweep(cfg, default_sweep_grid(), threads, [](const std::string& s) { std::cerr << "  " << s << '\n'; });
    write_sweep_csv(std::cerr, rows);
    r.require(rows.size() == 8, "grid has " + std::to_string(rows.size()) + " rows");
    int refs = 0;
    double b02 = NAN, b10 = NAN;
    for (const auto& row : rows)
    {
        if (row.reference)
        {
            ++refs;
            r.require(row.beta == 0.02 && row.alpha_scale == 0.1 && row.steps == 20, "wrong row flagged");
        }
        if (row.alpha_scale == 0.1 && row.steps == 20 && row.beta == 0.02)
            b02 = row.mean_dice;
        if (row.alpha_scale == 0.1 && row.steps == 20 && row.beta == 0.1)
            b10 = row.mean_dice;
    }
    r.require(refs == 1, std::to_string(refs) + " reference rows");
    r.require(b10 <= b02 + beta_noise, "beta=0.1 " + fmt(b10) + " beats beta=0.02 " + fmt(b02) + " by > 1");
    r.detail << (r.ok ? "" : " | ") << "8 rows, reference flagged; beta=0.02 " << fmt(b02) << ", beta=0.1 "
             << fmt(b10) << ", " << fmt(seconds_since(t0), 0) << " s";
    return r;
}

// ---------------------------------------------------------------------------
// 6. determinism
// ---------------------------------------------------------------------------

RunConfig reproducibility_config()
{
    RunConfig c;
    c.iterations = 150;
    c.model.dim = c.generator.dim = 16;
    c.generator.height = c.generator.width = 16;
    c.generator.blob_radius_min = 2;
    c.generator.blob_radius_max = 5;
    c.seed = 7;
    return c;
}

std::string checkpoint_text(const Checkpoint& c)
{
    return checkpoint_to_json(c).dump();
}

Result determinism()
{
    Result r;
    const RunConfig c = reproducibility_config();
    const Checkpoint a = train(c), b = train(c);
    r.require(checkpoint_text(a) == checkpoint_text(b), "two training runs differ");
    const EvalReport e1 = evaluate(a, c, 60, 1), e2 = evaluate(b, c, 60, 1), e4 = evaluate(a, c, 60, 4);
    r.require(e1.dice == e2.dice, "two evaluation runs differ");
    r.require(e1.dice == e4.dice && e1.mean_dice == e4.mean_dice, "1 vs 4 threads differ");
    if (r.ok)
        r.detail << "mean dice " << std::setprecision(17) << e1.mean_dice << " identical over 3 evaluations";
    return r;
}

// ---------------------------------------------------------------------------
// 7. checkpoint resume
// ---------------------------------------------------------------------------

Result resume()
{
    Result r;
    const RunConfig c = reproducibility_config();
    Trainer straight(c);
    straight.run_until(40);
    const std::string path = (std::filesystem::temp_directory_path() / "dpl_acceptance_resume.json").string();
    save_checkpoint(straight.checkpoint(), path);

    Trainer resumed(load_checkpoint(path), c);
    for (int k = 0; k < 10; ++k)
    {
        const EpisodeOutcome a = straight.step(), b = resumed.step();
        r.require(a.loss.total == b.loss.total, "loss differs at resumed iteration " + std::to_string(k));
    }
    const Checkpoint x = straight.checkpoint(), y = resumed.checkpoint();
    r.require(checkpoint_text(x) == checkpoint_text(y), "parameters or momentum differ after 10 iterations");
    std::filesystem::remove(path);
    if (r.ok)
        r.detail << "iterations 41-50 identical after reload";
    return r;
}

const char* const names[] = {"", "invariants", "gradient checks", "oracle equivalences", "ablation trend",
                             "sweep structure", "determinism", "checkpoint resume"};

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"acceptance checks"};
    int only = 0;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    app.add_option("--only", only, "run a single criterion (1-7)")->check(CLI::Range(1, 7));
    app.add_option("--threads", threads, "worker threads for training runs");
    CLI11_PARSE(app, argc, argv);

    bool all = true;
    for (int n = 1; n <= 7; ++n)
    {
        if (only && n != only)
            continue;
        Result res;
        try
        {
            switch (n)
            {
            case 1: res = invariants(); break;
            case 2: res = gradients(); break;
            case 3: res = oracles(); break;
            case 4: res = ablation(threads); break;
            case 5: res = sweep_check(threads); break;
            case 6: res = determinism(); break;
            case 7: res = resume(); break;
            }
        }
        catch (const std::exception& e)
        {
            res.ok = false;
            res.detail << "exception: " << e.what();
        }
        std::cout << "criterion " << n << " (" << names[n] << "): " << (res.ok ? "PASS" : "FAIL") << "  "
                  << res.detail.str() << std::endl;
        all = all && res.ok;
    }
    return all ? 0 : 1;
}
