// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

// End-to-end acceptance run. Prints one PASS/FAIL line per criterion on
// stdout (details go to stderr) and exits non-zero if any criterion
// fails. Criteria can be selected by name on the command line.

#include "cli.hpp"
#include "gradcheck.hpp"
#include "hyperwrap/checks.hpp"
#include "hyperwrap/embedding.hpp"
#include "hyperwrap/kernels.hpp"
#include "hyperwrap/vae.hpp"
#include "hyperwrap/wrapped_normal.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace hyperwrap;
namespace fs = std::filesystem;
using ad::Tape;
using ad::Var;

using Clock = std::chrono::steady_clock;

auto seconds_since(Clock::time_point t0) -> double
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome
{
    bool passed;
    std::string detail;
};

auto fmt(double x, int precision = 4) -> std::string
{
    std::ostringstream s;
    s << std::setprecision(precision) << x;
    return s.str();
}

auto median(std::vector<double> v) -> double
{
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

auto mean(const std::vector<double>& v) -> double
{
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    return s / static_cast<double>(v.size());
}

auto point_at_distance(double r, double angle) -> LorentzPoint
{
    const std::vector<double> h {r * std::cos(angle), r * std::sin(angle)};
    return lift_to_manifold(h);
}

// ------------------------------------------------------------- geometry

auto jacobian() -> Outcome
{
    const auto t0 = Clock::now();
    const auto r = checks::jacobian_suite(2024, 20, 1e-4);
    const double t = seconds_since(t0);
    return {r.passed() && t < 10.0,
            std::to_string(r.cases) + " cases, worst rel " + fmt(r.worst)
                + " (bound 1e-4), " + fmt(t, 3) + " s (bound 10 s)"};
}

auto round_trip() -> Outcome
{
    const auto t0 = Clock::now();
    const auto suites = checks::round_trip_suites(2025, 1000);
    const double t = seconds_since(t0);
    bool ok = t < 5.0;
    std::string detail;
    for (const auto& s : suites) {
        ok = ok && s.passed() && s.cases >= 1000;
        detail += s.name + " worst " + fmt(s.worst, 3) + "/" + fmt(s.tolerance, 3)
                  + ", ";
    }
    return {ok, detail + fmt(t, 3) + " s (bound 5 s)"};
}

auto density() -> Outcome
{
    const auto t0 = Clock::now();
    const auto origin = LorentzPoint::origin(2);
    const std::vector<WrappedNormal> settings {
        WrappedNormal::unit(origin),
        WrappedNormal::diagonal(point_at_distance(1.0, 0.7),
                                {std::sqrt(0.5), std::sqrt(2.0)}),
        WrappedNormal::unit(point_at_distance(2.0, -2.1)),
    };
    bool ok = true;
    std::string detail = "integrals";
    for (const auto& d : settings) {
        // geodesic polar grid about the mean, radius 8
        const double total = checks::density_integral(d, d.mu(), 8.0, 64, 256);
        ok = ok && std::abs(total - 1.0) <= 1e-3;
        detail += " " + fmt(total, 8);
    }
    const double t = seconds_since(t0);
    return {ok && t < 30.0,
            detail + " (bound 1 +- 1e-3), " + fmt(t, 3) + " s (bound 30 s)"};
}

// ------------------------------------------------------------- gradients

struct GradTally
{
    std::size_t points {0};
    std::size_t failures {0};
    double worst {0.0}; // max err / allowed

    void add(double excess)
    {
        ++points;
        failures += excess > 1.0 ? 1 : 0;
        worst = std::max(worst, excess);
    }
    [[nodiscard]] auto text(const std::string& name, double rel) const
        -> std::string
    {
        return name + " " + std::to_string(points) + " pts, "
               + std::to_string(failures) + " fail, worst " + fmt(worst, 3)
               + " of rel " + fmt(rel, 1);
    }
};

auto diagonal_params(std::span<const Var> v, std::size_t off, std::size_t n)
    -> WrappedParams<Var>
{
    WrappedParams<Var> p;
    p.kind = CovKind::diagonal;
    p.mu = kernels::lift(v.subspan(off, n));
    p.scale.assign(v.begin() + static_cast<std::ptrdiff_t>(off + n),
                   v.begin() + static_cast<std::ptrdiff_t>(off + 2 * n));
    return p;
}

// Composite losses have no tape-level input vector, so the difference
// quotient runs on the flat parameter array directly.
template <class Loss, class Grad>
auto fd_excess(std::vector<double>& params, const Loss& loss, const Grad& grad,
               double rel) -> double
{
    const std::vector<double> analytic = grad();
    double worst = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double x = params[i];
        const double h = 1e-5 * std::max(1.0, std::abs(x));
        params[i] = x + h;
        const double up = loss();
        params[i] = x - h;
        const double down = loss();
        params[i] = x;
        const double num = (up - down) / (2.0 * h);
        const double allow = checks::allowed_error(analytic[i], num, rel, 1e-7);
        worst = std::max(worst, std::abs(num - analytic[i]) / allow);
    }
    return worst;
}

auto gradients() -> Outcome
{
    const auto t0 = Clock::now();
    Rng rng {2026};

    GradTally lp;
    for (int i = 0; i < 100; ++i) {
        const std::size_t n = 1 + static_cast<std::size_t>(i % 5);
        const auto target = checks::random_point(n, 3.0, rng);
        std::vector<double> x(2 * n);
        for (std::size_t k = 0; k < n; ++k) {
            x[k] = rng.normal();
            x[n + k] = 0.3 + 1.5 * rng.uniform();
        }
        const auto z = target.coords();
        auto f = [n, z](Tape&, std::span<const Var> v) {
            const Coords<Var> zv(z.begin(), z.end());
            return kernels::wrapped_log_prob(diagonal_params(v, 0, n), zv);
        };
        lp.add(checks::check_gradient(f, x, 1e-5).worst_excess);
    }

    GradTally kl;
    for (int i = 0; i < 100; ++i) {
        const std::size_t n = 1 + static_cast<std::size_t>(i % 4);
        std::vector<double> eps(4 * n);
        rng.fill_normal(eps);
        std::vector<double> x(4 * n);
        for (std::size_t j = 0; j < n; ++j) {
            x[j] = rng.normal();
            x[n + j] = 0.3 + 1.5 * rng.uniform();
            x[2 * n + j] = rng.normal();
            x[3 * n + j] = 0.3 + 1.5 * rng.uniform();
        }
        auto f = [n, eps](Tape&, std::span<const Var> v) {
            return kernels::wrapped_kl(diagonal_params(v, 0, n),
                                       diagonal_params(v, 2 * n, n),
                                       std::span<const double> {eps});
        };
        kl.add(checks::check_gradient(f, x, 1e-5).worst_excess);
    }

    GradTally hinge;
    {
        embed::Vocabulary vocab;
        for (const char* w : {"a", "b", "c", "d"}) {
            (void)vocab.intern(w);
        }
        const embed::Triple triples[] = {{0, 1, 2}, {0, 2, 3}, {1, 2, 0},
                                         {3, 0, 1}, {2, 3, 1}};
        for (int i = 0; i < 100; ++i) {
            const auto g = i % 2 == 0 ? Geometry::hyperbolic : Geometry::euclidean;
            const auto c = (i / 2) % 2 == 0 ? CovKind::diagonal : CovKind::unit;
            embed::EmbeddingModel m {vocab.size(), 3, g, c};
            for (auto& p : m.params()) {
                p = 0.7 * rng.normal();
            }
            const double margin = 1.0 + 6.0 * rng.uniform();
            const std::uint64_t noise = 9000 + static_cast<std::uint64_t>(i);
            auto run = [&] {
                Rng r {noise};
                return embed::batch_loss(m, triples, margin, 3, r);
            };
            hinge.add(fd_excess(
                m.params(), [&] { return run().loss; }, [&] { return run().grad; },
                1e-4));
        }
    }

    GradTally elbo;
    {
        const std::vector<std::vector<std::uint8_t>> data {
            {1, 0, 1, 1, 0, 0}, {0, 1, 1, 0, 1, 0}, {1, 1, 0, 0, 0, 1}};
        const std::vector<vae::Row> rows(data.begin(), data.end());
        for (int i = 0; i < 100; ++i) {
            const auto g = i % 2 == 0 ? Geometry::hyperbolic : Geometry::euclidean;
            vae::VaeModel m {6, 2, 3, g, 0.5 + rng.uniform()};
            Rng init {7000 + static_cast<std::uint64_t>(i)};
            m.initialize(init);
            for (auto& w : m.params()) {
                w *= 2.0;
            }
            const std::uint64_t noise = 8000 + static_cast<std::uint64_t>(i);
            auto run = [&](bool with_grad) {
                Rng r {noise};
                return vae::elbo(m, rows, 2, r, with_grad);
            };
            elbo.add(fd_excess(
                m.params(), [&] { return run(false).elbo; },
                [&] { return run(true).grad; }, 1e-4));
        }
    }

    const double t = seconds_since(t0);
    const bool ok = lp.failures == 0 && kl.failures == 0 && hinge.failures == 0
                    && elbo.failures == 0 && t < 60.0;
    return {ok, lp.text("log_prob", 1e-5) + "; " + kl.text("kl", 1e-5) + "; "
                    + hinge.text("hinge", 1e-4) + "; " + elbo.text("elbo", 1e-4)
                    + "; " + fmt(t, 3) + " s (bound 60 s)"};
}

// ------------------------------------------------------------- sampling

auto sampling() -> Outcome
{
    const std::vector<WrappedNormal> dists {
        WrappedNormal::diagonal(point_at_distance(1.5, 0.4), {0.6, 1.7}),
        WrappedNormal::diagonal(
            lift_to_manifold(std::vector<double> {0.8, -1.1, 0.3, 0.5, -0.2}),
            {0.3, 1.0, 2.0, 0.7, 1.3}),
    };
    bool ok = true;
    double worst = 0.0;
    double min_p = 1.0;
    std::size_t tests = 0;
    std::uint64_t seed = 31;
    for (const auto& d : dists) {
        const auto r = checks::sampling_suite(d, 10000, seed++);
        worst = std::max(worst, r.worst_recovery);
        for (double p : r.ks_p_value) {
            min_p = std::min(min_p, p);
            ok = ok && p > 0.01;
            ++tests;
        }
        ok = ok && r.samples == 10000 && r.worst_recovery <= 1e-8;
    }
    return {ok, "1e4 samples x 2 dists, worst recovery " + fmt(worst, 3)
                    + " (bound 1e-8), min KS p " + fmt(min_p, 3) + " over "
                    + std::to_string(tests) + " coordinates (bound 0.01)"};
}

// ------------------------------------------------------------- experiments

auto tree_vae() -> Outcome
{
    const auto t0 = Clock::now();
    std::vector<double> hyp;
    std::vector<double> euc;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        for (auto g : {Geometry::hyperbolic, Geometry::euclidean}) {
            vae::VaeConfig c;
            c.geometry = g;
            c.depth = 6;
            c.latent_dim = 2;
            c.beta = 1.0;
            c.seed = seed;
            const auto data = vae::make_dataset(c);
            auto model = vae::make_model(data.width(), c);
            (void)vae::train_vae(model, data, c);
            const double corr = vae::correlation_metric(model, data.clean_rows());
            (g == Geometry::hyperbolic ? hyp : euc).push_back(corr);
            std::cerr << "  vae " << to_string(g) << " seed " << seed
                      << " correlation " << fmt(corr) << '\n';
        }
    }
    const double mh = median(hyp);
    const double me = median(euc);
    const double t = seconds_since(t0);
    return {mh > me && mh >= 0.55,
            "median correlation hyperbolic " + fmt(mh) + " vs euclidean " + fmt(me)
                + " (need hyperbolic > euclidean and >= 0.55), " + fmt(t / 60.0, 3)
                + " min (target 15)"};
}

// Hyperbolic minus euclidean MAP per seed.
auto embedding_gaps(const embed::Vocabulary& vocab, std::size_t dim,
                    std::vector<double>& hyp, std::vector<double>& euc)
    -> std::vector<double>
{
    std::vector<double> gaps;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        double maps[2] {};
        for (auto g : {Geometry::hyperbolic, Geometry::euclidean}) {
            embed::EmbedConfig c;
            c.geometry = g;
            c.dim = dim;
            c.optimizer = OptimizerKind::sgd;
            c.lr = 2.0;
            c.lr_after_burnin = c.lr / 40.0;
            c.burnin_epochs = 50;
            c.epochs = 100;
            c.kl_samples = 1;
            c.seed = seed;
            auto model = embed::make_model(vocab.size(), c);
            (void)embed::train(model, vocab, c);
            const auto r = embed::evaluate_reconstruction(model, vocab, 32,
                                                          mix_seed(seed, 0x6576));
            maps[g == Geometry::hyperbolic ? 0 : 1] = r.map;
            std::cerr << "  embed n=" << dim << ' ' << to_string(g) << " seed "
                      << seed << " map " << fmt(r.map) << " mean_rank "
                      << fmt(r.mean_rank) << '\n';
        }
        hyp.push_back(maps[0]);
        euc.push_back(maps[1]);
        gaps.push_back(maps[0] - maps[1]);
    }
    return gaps;
}

auto word_embedding() -> Outcome
{
    const auto t0 = Clock::now();
    const auto vocab = embed::balanced_tree_closure(9);
    std::vector<double> h5, e5, h50, e50;
    const double gap5 = mean(embedding_gaps(vocab, 5, h5, e5));
    const double gap50 = mean(embedding_gaps(vocab, 50, h50, e50));
    const double t = seconds_since(t0);
    return {gap5 >= 0.05 && gap50 < gap5,
            std::to_string(vocab.size()) + " nodes; n=5 MAP " + fmt(mean(h5))
                + " vs " + fmt(mean(e5)) + " (gap " + fmt(gap5)
                + ", need >= 0.05); n=50 MAP " + fmt(mean(h50)) + " vs "
                + fmt(mean(e50)) + " (gap " + fmt(gap50) + ", need < n=5 gap), "
                + fmt(t / 60.0, 3) + " min (target 30)"};
}

// ------------------------------------------------------------- determinism

auto slurp(const fs::path& p) -> std::string
{
    std::ifstream in {p, std::ios::binary};
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

auto run_cli(const std::vector<std::string>& args) -> int
{
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::dispatch(args, out, err);
    if (code != cli::kExitOk) {
        std::cerr << "  " << args.front() << " failed: " << err.str();
    }
    return code;
}

auto determinism() -> Outcome
{
    const auto dir = fs::temp_directory_path() / "hyperwrap_acceptance_replay";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto at = [&](const std::string& name) { return (dir / name).string(); };
    {
        std::ofstream edges {at("edges.tsv")};
        edges << "b\ta\nc\ta\nd\tb\ne\tb\nf\tc\ng\tc\n";
    }
    struct Case
    {
        std::string name;
        std::vector<std::string> first;
    };
    const std::vector<Case> cases {
        {"train-embed",
         {"train-embed", "--edges", at("edges.tsv"), "--closure", "--dim", "3",
          "--epochs", "8", "--burnin-epochs", "4", "--lr", "0.5", "--seed", "17",
          "--kl-samples", "2", "--out", at("e1.ckpt")}},
        {"train-embed-adam",
         {"train-embed", "--tree-depth", "3", "--geometry", "euclidean",
          "--optimizer", "adam", "--lr", "0.05", "--epochs", "5", "--seed", "3",
          "--out", at("a1.ckpt")}},
        {"train-vae",
         {"train-vae", "--depth", "3", "--hidden", "16", "--epochs", "5",
          "--per-node", "3", "--seed", "11", "--out", at("v1.bin")}},
    };
    bool ok = true;
    std::string detail;
    for (const auto& c : cases) {
        const std::string first_out = c.first.back();
        const std::string second_out = first_out + ".replay";
        const bool ran =
            run_cli(c.first) == cli::kExitOk
            && run_cli({c.first.front(), "--config", first_out + ".config.json",
                        "--out", second_out})
                   == cli::kExitOk;
        const auto a = slurp(first_out + ".loss.csv");
        const auto b = slurp(second_out + ".loss.csv");
        const bool same = ran && !a.empty() && a == b;
        ok = ok && same;
        detail += c.name + (same ? " identical" : " DIFFERS") + "; ";
    }
    fs::remove_all(dir);
    return {ok, detail + "loss logs compared byte for byte"};
}

struct Criterion
{
    std::string name;
    std::function<Outcome()> run;
};

} // namespace

auto main(int argc, char** argv) -> int
{
    const std::vector<Criterion> all {
        {"jacobian_oracle", jacobian},   {"round_trip", round_trip},
        {"density_normalization", density}, {"gradient_suite", gradients},
        {"sampling", sampling},          {"tree_vae", tree_vae},
        {"word_embedding", word_embedding}, {"determinism", determinism},
    };
    const std::set<std::string> wanted(argv + 1, argv + argc);
    for (const auto& w : wanted) {
        if (std::none_of(all.begin(), all.end(),
                         [&](const Criterion& c) { return c.name == w; })) {
            std::cerr << "unknown criterion '" << w << "'\n";
            return 2;
        }
    }
    // keep per-epoch training chatter out of the report
    ::setenv("HYP_LOG", "error", 1);
    cli::configure_logging();
    int failed = 0;
    for (const auto& c : all) {
        if (!wanted.empty() && !wanted.contains(c.name)) {
            continue;
        }
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string {"error: "} + e.what()};
        }
        failed += o.passed ? 0 : 1;
        std::cout << (o.passed ? "PASS " : "FAIL ") << c.name << ": " << o.detail
                  << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
