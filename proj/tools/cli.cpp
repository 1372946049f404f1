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

#include "cli.hpp"

#include "run_config.hpp"

#include "hyperwrap/checks.hpp"
#include "hyperwrap/embedding.hpp"
#include "hyperwrap/errors.hpp"
#include "hyperwrap/lorentz.hpp"
#include "hyperwrap/vae.hpp"
#include "hyperwrap/wrapped_normal.hpp"

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <sstream>

namespace hyperwrap::cli {

namespace {

// Writes to --out when given, else to the caller's stream.
class Sink
{
public:
    Sink(const std::string& path, std::ostream& fallback) : path_{path}
    {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) {
                throw RuntimeFailure {"cannot write '" + path + "'"};
            }
        }
        stream_ = path.empty() ? &fallback : &file_;
        *stream_ << std::setprecision(17);
    }

    auto stream() -> std::ostream& { return *stream_; }

    void close()
    {
        stream_->flush();
        if (!*stream_) {
            throw RuntimeFailure {"write failed for '"
                                  + (path_.empty() ? "stdout" : path_) + "'"};
        }
        if (file_.is_open()) {
            file_.close();
        }
    }

private:
    std::string path_;
    std::ofstream file_;
    std::ostream* stream_;
};

struct Command
{
    Command(std::string name, Json defaults)
      : config{std::move(name), std::move(defaults)}
    {}

    RunConfig config;
    std::function<int(const RunConfig&, std::ostream&)> run;
};

auto require_out(const RunConfig& cfg) -> std::string
{
    if (cfg.out().empty()) {
        throw ValidationError {cfg.command() + ": --out is required"};
    }
    return cfg.out();
}

auto dump(const Json& j, std::ostream& out)
{
    out << j.dump(2) << '\n';
}

// ------------------------------------------------------ distributions

auto distribution_defaults() -> Json
{
    return {{"dim", 2},
            {"cov", "diag"},
            {"loc", Json::array()},
            {"sigma", Json::array()}};
}

void bind_distribution(RunConfig& cfg, CLI::App& app)
{
    cfg.bind<std::size_t>(app, "dim", "manifold dimension n");
    cfg.bind<std::string>(app, "cov", "covariance: unit or diag");
    cfg.bind<std::vector<double>>(app, "loc",
                                  "tangent location h at the origin (n values)");
    cfg.bind<std::vector<double>>(app, "sigma", "standard deviations (n values)");
}

auto make_distribution(const RunConfig& cfg) -> WrappedNormal
{
    const auto n = cfg.get_size("dim");
    if (n < 1) {
        throw ValidationError {"dim must be >= 1"};
    }
    const auto kind = parse_cov_kind(cfg.get_string("cov"));
    auto loc = cfg.get_vector("loc");
    auto sigma = cfg.get_vector("sigma");
    if (loc.empty()) {
        loc.assign(n, 0.0);
    }
    if (loc.size() != n) {
        throw ValidationError {"loc needs " + std::to_string(n) + " values"};
    }
    const auto mu = lift_to_manifold(loc);
    switch (kind) {
    case CovKind::unit:
        if (!sigma.empty()) {
            throw ValidationError {"sigma is not used with cov unit"};
        }
        return WrappedNormal::unit(mu);
    case CovKind::diagonal:
        if (sigma.empty()) {
            sigma.assign(n, 1.0);
        }
        if (sigma.size() != n) {
            throw ValidationError {"sigma needs " + std::to_string(n) + " values"};
        }
        return WrappedNormal::diagonal(mu, sigma);
    case CovKind::full:
        break;
    }
    throw ValidationError {"cov must be unit or diag"};
}

auto cmd_sample(CLI::App& app) -> std::unique_ptr<Command>
{
    auto defaults = distribution_defaults();
    defaults["count"] = 1000;
    auto c = std::make_unique<Command>("sample", defaults);
    bind_distribution(c->config, app);
    c->config.bind<std::size_t>(app, "count", "number of draws");
    c->run = [](const RunConfig& cfg, std::ostream& stdout_) {
        const auto d = make_distribution(cfg);
        const auto count = cfg.get_size("count");
        const std::size_t n = d.dim();
        Rng rng {mix_seed(cfg.get_seed(), 0x73616d70)};
        Sink sink {cfg.out(), stdout_};
        auto& out = sink.stream();
        for (std::size_t i = 0; i <= n; ++i) {
            out << (i == 0 ? "" : ",") << 'z' << i;
        }
        for (std::size_t i = 1; i <= n; ++i) {
            out << ",v" << i;
        }
        out << ",log_prob\n";
        for (std::size_t s = 0; s < count; ++s) {
            const auto draw = sample(d, rng);
            for (std::size_t i = 0; i <= n; ++i) {
                out << (i == 0 ? "" : ",") << draw.z[i];
            }
            for (double v : draw.base) {
                out << ',' << v;
            }
            out << ',' << log_prob(d, draw.z) << '\n';
        }
        sink.close();
        if (!cfg.out().empty()) {
            cfg.write_next_to(cfg.out());
        }
        return kExitOk;
    };
    return c;
}

// Ambient points from a CSV file of n+1 columns; a non-numeric first line
// is taken as a header.
auto read_points(const std::string& path, std::size_t width)
    -> std::vector<std::vector<double>>
{
    std::ifstream in {path};
    if (!in) {
        throw RuntimeFailure {"cannot open '" + path + "'"};
    }
    std::vector<std::vector<double>> pts;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::vector<double> row;
        std::stringstream ss {line};
        std::string cell;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0') {
                numeric = false;
                break;
            }
            row.push_back(v);
        }
        if (!numeric) {
            if (lineno == 1) {
                continue;
            }
            throw ValidationError {path + ":" + std::to_string(lineno)
                                   + ": expected numbers"};
        }
        if (row.size() != width) {
            throw ValidationError {path + ":" + std::to_string(lineno)
                                   + ": expected " + std::to_string(width)
                                   + " columns"};
        }
        pts.push_back(std::move(row));
    }
    return pts;
}

auto cmd_logpdf(CLI::App& app) -> std::unique_ptr<Command>
{
    auto defaults = distribution_defaults();
    defaults["z"] = Json::array();
    defaults["input"] = "";
    auto c = std::make_unique<Command>("logpdf", defaults);
    bind_distribution(c->config, app);
    c->config.bind<std::vector<double>>(
        app, "z", "ambient coordinates of one or more points, back to back");
    c->config.bind<std::string>(app, "input", "CSV of ambient points");
    c->run = [](const RunConfig& cfg, std::ostream& stdout_) {
        const auto d = make_distribution(cfg);
        const std::size_t width = d.dim() + 1;
        std::vector<std::vector<double>> pts;
        const auto flat = cfg.get_vector("z");
        if (flat.size() % width != 0) {
            throw ValidationError {"z length must be a multiple of "
                                   + std::to_string(width)};
        }
        for (std::size_t i = 0; i < flat.size(); i += width) {
            pts.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(i),
                             flat.begin() + static_cast<std::ptrdiff_t>(i + width));
        }
        if (const auto path = cfg.get_string("input"); !path.empty()) {
            auto more = read_points(path, width);
            pts.insert(pts.end(), more.begin(), more.end());
        }
        if (pts.empty()) {
            throw ValidationError {"logpdf: give points with --z or --input"};
        }
        Json values = Json::array();
        for (auto& p : pts) {
            values.push_back(log_prob(d, LorentzPoint {std::move(p)}));
        }
        Sink sink {cfg.out(), stdout_};
        dump(Json {{"dim", d.dim()}, {"log_prob", values}}, sink.stream());
        sink.close();
        if (!cfg.out().empty()) {
            cfg.write_next_to(cfg.out());
        }
        return kExitOk;
    };
    return c;
}

auto cmd_density_grid(CLI::App& app) -> std::unique_ptr<Command>
{
    auto defaults = distribution_defaults();
    defaults["grid"] = 101;
    defaults["radius"] = 0.99;
    auto c = std::make_unique<Command>("density-grid", defaults);
    bind_distribution(c->config, app);
    c->config.bind<std::size_t>(app, "grid", "grid points per axis");
    c->config.bind<double>(app, "radius", "largest Poincare radius sampled");
    c->run = [](const RunConfig& cfg, std::ostream& stdout_) {
        const auto d = make_distribution(cfg);
        if (d.dim() != 2) {
            throw ValidationError {"density-grid needs dim 2"};
        }
        const auto grid = cfg.get_size("grid");
        const double radius = cfg.get_double("radius");
        if (grid < 2) {
            throw ValidationError {"grid must be >= 2"};
        }
        if (!(radius > 0.0 && radius < 1.0)) {
            throw ValidationError {"radius must be in (0, 1)"};
        }
        Sink sink {cfg.out(), stdout_};
        auto& out = sink.stream();
        out << "x,y,log_prob\n";
        const double step = 2.0 * radius / static_cast<double>(grid - 1);
        for (std::size_t i = 0; i < grid; ++i) {
            for (std::size_t j = 0; j < grid; ++j) {
                const std::vector<double> x {-radius + step * static_cast<double>(i),
                                             -radius + step * static_cast<double>(j)};
                if (x[0] * x[0] + x[1] * x[1] > radius * radius) {
                    continue;
                }
                out << x[0] << ',' << x[1] << ','
                    << log_prob(d, from_poincare(x)) << '\n';
            }
        }
        sink.close();
        if (!cfg.out().empty()) {
            cfg.write_next_to(cfg.out());
        }
        return kExitOk;
    };
    return c;
}

// ---------------------------------------------------------------- VAE

auto tree_defaults(std::size_t per_node) -> Json
{
    return {{"depth", 6}, {"flip_prob", 0.1}, {"per_node", per_node}};
}

void bind_tree(RunConfig& cfg, CLI::App& app)
{
    cfg.bind<std::size_t>(app, "depth", "binary tree depth");
    cfg.bind<double>(app, "flip_prob", "per-bit flip probability");
    cfg.bind<std::size_t>(app, "per_node", "noisy rows per tree node");
}

auto tree_rng(const RunConfig& cfg) -> Rng
{
    // same stream as vae::make_dataset
    return Rng {mix_seed(cfg.get_seed(), 0x74726565)};
}

auto load_or_generate(const RunConfig& cfg) -> vae::TreeDataset
{
    if (const auto path = cfg.get_string("data"); !path.empty()) {
        std::ifstream in {path};
        if (!in) {
            throw RuntimeFailure {"cannot open '" + path + "'"};
        }
        return vae::read_dataset_csv(in, path);
    }
    auto rng = tree_rng(cfg);
    return vae::generate_tree_dataset(cfg.get_size("depth"),
                                      cfg.get_double("flip_prob"),
                                      cfg.get_size("per_node"), rng);
}

auto cmd_gen_tree(CLI::App& app) -> std::unique_ptr<Command>
{
    auto c = std::make_unique<Command>("gen-tree", tree_defaults(0));
    bind_tree(c->config, app);
    c->run = [](const RunConfig& cfg, std::ostream& stdout_) {
        auto rng = tree_rng(cfg);
        const auto ds = vae::generate_tree_dataset(cfg.get_size("depth"),
                                                   cfg.get_double("flip_prob"),
                                                   cfg.get_size("per_node"), rng);
        Sink sink {cfg.out(), stdout_};
        vae::write_dataset_csv(ds, sink.stream());
        sink.close();
        if (!cfg.out().empty()) {
            const Json meta {{"depth", ds.depth},
                             {"flip_prob", ds.flip_prob},
                             {"nodes", ds.nodes},
                             {"clean_rows", ds.nodes},
                             {"noisy_rows", ds.noisy_count()},
                             {"bits", ds.width()},
                             {"seed", cfg.get_seed()},
                             {"coding", "bit j of node u is 1 iff j is on the "
                                        "root-to-u path (BFS numbering)"}};
            std::ofstream m {sibling(cfg.out(), ".meta.json")};
            m << meta.dump(2) << '\n';
            if (!m) {
                throw RuntimeFailure {"cannot write metadata for '" + cfg.out()
                                      + "'"};
            }
            cfg.write_next_to(cfg.out());
        }
        return kExitOk;
    };
    return c;
}

auto vae_config(const RunConfig& cfg, const vae::TreeDataset& ds)
    -> vae::VaeConfig
{
    vae::VaeConfig v;
    v.geometry = parse_geometry(cfg.get_string("geometry"));
    v.depth = ds.depth;
    v.flip_prob = ds.flip_prob;
    v.per_node = std::max<std::size_t>(1, cfg.get_size("per_node"));
    v.latent_dim = cfg.get_size("dim");
    v.hidden = cfg.get_size("hidden");
    v.beta = cfg.get_double("beta");
    v.batch = cfg.get_size("batch");
    v.epochs = cfg.get_size("epochs");
    v.lr = cfg.get_double("lr");
    v.mc_samples = cfg.get_size("kl_samples");
    v.seed = cfg.get_seed();
    v.validate();
    return v;
}

auto correlations(const vae::VaeModel& model, const vae::TreeDataset& ds) -> Json
{
    const auto clean = ds.clean_rows();
    Json j {{"correlation", vae::correlation_metric(model, clean)}};
    if (ds.noisy_count() >= 2) {
        const auto noisy = ds.noisy_rows();
        j["correlation_noisy"] = vae::correlation_metric(model, noisy);
    }
    return j;
}

auto cmd_train_vae(CLI::App& app) -> std::unique_ptr<Command>
{
    auto defaults = tree_defaults(10);
    defaults.update(Json {{"geometry", "hyperbolic"},
                          {"dim", 2},
                          {"hidden", 100},
                          {"beta", 1.0},
                          {"batch", 64},
                          {"epochs", 100},
                          {"lr", 1e-3},
                          {"kl_samples", 1},
                          {"data", ""}});
    auto c = std::make_unique<Command>("train-vae", defaults);
    bind_tree(c->config, app);
    auto& cfg = c->config;
    cfg.bind<std::string>(app, "geometry", "hyperbolic or euclidean");
    cfg.bind<std::size_t>(app, "dim", "latent dimension");
    cfg.bind<std::size_t>(app, "hidden", "hidden units per layer");
    cfg.bind<double>(app, "beta", "KL weight");
    cfg.bind<std::size_t>(app, "batch", "rows per step");
    cfg.bind<std::size_t>(app, "epochs", "passes over the noisy rows");
    cfg.bind<double>(app, "lr", "Adam step size");
    cfg.bind<std::size_t>(app, "kl_samples", "latent draws per row");
    cfg.bind<std::string>(app, "data", "dataset CSV from gen-tree");
    c->run = [](const RunConfig& cfg, std::ostream& stdout_) {
        const auto out = require_out(cfg);
        const auto ds = load_or_generate(cfg);
        if (ds.noisy_count() == 0) {
            throw ValidationError {"dataset has no noisy rows"};
        }
        const auto vc = vae_config(cfg, ds);
        auto model = vae::make_model(ds.width(), vc);
        const auto log = vae::train_vae(model, ds, vc,
                                        [](std::size_t epoch, double loss) {
                                            spdlog::info("epoch {} loss {:.6f}",
                                                         epoch, loss);
                                        });
        vae::save_model(model, out);
        {
            std::ofstream l {sibling(out, ".loss.csv")};
            l << std::setprecision(17) << "epoch,loss\n";
            for (std::size_t e = 0; e < log.epoch_loss.size(); ++e) {
                l << e << ',' << log.epoch_loss[e] << '\n';
            }
            if (!l) {
                throw RuntimeFailure {"cannot write loss log for '" + out + "'"};
            }
        }
        cfg.write_next_to(out);
        Json summary {{"model", out},
                      {"epochs", log.epoch_loss.size()},
                      {"final_loss", log.epoch_loss.empty()
                                         ? Json {}
                                         : Json(log.epoch_loss.back())}};
        summary.update(correlations(model, ds));
        dump(summary, stdout_);
        return kExitOk;
    };
    return c;
}

auto eval_defaults() -> Json
{
    auto d = tree_defaults(10);
    d["model"] = "";
    d["data"] = "";
    return d;
}

void bind_eval(RunConfig& cfg, CLI::App& app)
{
    bind_tree(cfg, app);
    cfg.bind<std::string>(app, "model", "model file from train-vae");
    cfg.bind<std::string>(app, "data", "dataset CSV from gen-tree");
}

auto load_vae(const RunConfig& cfg) -> vae::VaeModel
{
    const auto path = cfg.get_string("model");
    if (path.empty()) {
        throw ValidationError {cfg.command() + ": --model is required"};
    }
    return vae::load_model(path);
}

auto cmd_eval_vae(CLI::App& app) -> std::unique_ptr<Command>
{
    auto defaults = eval_defaults();
    defaults["kl_samples"] = 1;
    defaults["iw_samples"] = 0;
    auto c = std::make_unique<Command>("eval-vae", defaults);
    bind_eval(c->config, app);
    c->config.bind<std::size_t>(app, "kl_samples", "latent draws per row for the ELBO");
    c->config.bind<std::size_t>(app, "iw_samples",
                               "importance samples for log p(x); 0 skips it");
    c->run = [](const RunConfig& cfg, std::ostream& stdout_) {
        const auto model = load_vae(cfg);
        const auto ds = load_or_generate(cfg);
        if (ds.width() != model.input_dim()) {
            throw ValidationError {"dataset width does not match the model"};
        }
        Json j {{"geometry", to_string(model.geometry())},
                {"latent_dim", model.latent_dim()}};
        j.update(correlations(model, ds));
        const auto k = cfg.get_size("kl_samples");
        if (k < 1) {
            throw ValidationError {"kl_samples must be >= 1"};
        }
        if (ds.noisy_count() > 0) {
            const auto rows = ds.noisy_rows();
            Rng rng {mix_seed(cfg.get_seed(), 0x6576616c)};
            const auto e = vae::elbo(model, rows, k, rng, false);
            j["elbo"] = e.elbo;
            j["recon"] = e.recon;
            j["kl"] = e.kl;
            if (const auto iw = cfg.get_size("iw_samples"); iw > 0) {
                double total = 0.0;
                for (const auto& r : rows) {
                    total += vae::importance_log_likelihood(model, r, iw, rng);
                }
                j["log_likelihood"] = total / static_cast<double>(rows.size());
            }
        }
        Sink sink {cfg.out(), stdout_};
        dump(j, sink.stream());
        sink.close();
        if (!cfg.out().empty()) {
            cfg.write_next_to(cfg.out());
        }
        return kExitOk;
    };
    return c;
}

auto cmd_export_latent(CLI::App& app) -> std::unique_ptr<Command>
{
    auto c = std::make_unique<Command>("export-latent",
                                       eval_defaults());
    bind_eval(c->config, app);
    c->run = [](const RunConfig& cfg, std::ostream& stdout_) {
        const auto model = load_vae(cfg);
        const auto ds = load_or_generate(cfg);
        if (ds.width() != model.input_dim()) {
            throw ValidationError {"dataset width does not match the model"};
        }
        Sink sink {cfg.out(), stdout_};
        vae::export_latent_csv(model, ds, sink.stream());
        sink.close();
        if (!cfg.out().empty()) {
            cfg.write_next_to(cfg.out());
        }
        return kExitOk;
    };
    return c;
}

// ---------------------------------------------------------- embedding

auto vocab_defaults() -> Json
{
    return {{"edges", ""}, {"tree_depth", 0}, {"closure", false}};
}

void bind_vocab(RunConfig& cfg, CLI::App& app)
{
    cfg.bind<std::string>(app, "edges", "TSV of child<TAB>parent links");
    cfg.bind<std::size_t>(app, "tree_depth",
                          "use the closure of a balanced binary tree instead");
    cfg.bind_flag(app, "closure", "take the transitive closure of --edges");
}

auto load_vocab(const RunConfig& cfg) -> embed::Vocabulary
{
    const auto path = cfg.get_string("edges");
    const auto depth = cfg.get_size("tree_depth");
    if (path.empty() == (depth == 0)) {
        throw ValidationError {"give exactly one of --edges and --tree-depth"};
    }
    if (depth > 0) {
        if (depth > 16) {
            throw ValidationError {"tree_depth must be <= 16"};
        }
        return embed::balanced_tree_closure(depth);
    }
    auto vocab = embed::read_edges(std::filesystem::path {path});
    return cfg.get_bool("closure") ? embed::transitive_closure(vocab) : vocab;
}

auto cmd_train_embed(CLI::App& app) -> std::unique_ptr<Command>
{
    auto defaults = vocab_defaults();
    defaults.update(Json {{"geometry", "hyperbolic"},
                          {"cov", "diag"},
                          {"dim", 5},
                          {"margin", 1.0},
                          {"negatives", 10},
                          {"batch", 64},
                          {"epochs", 100},
                          {"optimizer", "sgd"},
                          {"lr", 0.1},
                          {"lr_after_burnin", nullptr},
                          {"burnin_epochs", 50},
                          {"kl_samples", 8},
                          {"init_std", 0.01},
                          {"init_sigma", 1.0},
                          {"export", ""}});
    auto c = std::make_unique<Command>("train-embed", defaults);
    auto& cfg = c->config;
    bind_vocab(cfg, app);
    cfg.bind<std::string>(app, "geometry", "hyperbolic or euclidean");
    cfg.bind<std::string>(app, "cov", "unit or diag");
    cfg.bind<std::size_t>(app, "dim", "embedding dimension");
    cfg.bind<double>(app, "margin", "hinge margin");
    cfg.bind<std::size_t>(app, "negatives", "negatives per positive link");
    cfg.bind<std::size_t>(app, "batch", "positive links per step");
    cfg.bind<std::size_t>(app, "epochs", "passes over the links");
    cfg.bind<std::string>(app, "optimizer", "sgd or adam");
    cfg.bind<double>(app, "lr", "step size during burn-in");
    cfg.bind<double>(app, "lr_after_burnin", "step size afterwards (default lr/40)");
    cfg.bind<std::size_t>(app, "burnin_epochs", "length of the burn-in phase");
    cfg.bind<std::size_t>(app, "kl_samples", "Monte-Carlo draws per energy");
    cfg.bind<double>(app, "init_std", "std of the initial locations");
    cfg.bind<double>(app, "init_sigma", "initial standard deviation");
    cfg.bind<std::string>(app, "export", "also write a coordinate CSV here");
    c->run = [](const RunConfig& cfg, std::ostream& stdout_) {
        const auto out = require_out(cfg);
        const auto vocab = load_vocab(cfg);
        embed::EmbedConfig ec;
        ec.geometry = parse_geometry(cfg.get_string("geometry"));
        ec.cov = parse_cov_kind(cfg.get_string("cov"));
        ec.dim = cfg.get_size("dim");
        ec.margin = cfg.get_double("margin");
        ec.negatives = cfg.get_size("negatives");
        ec.batch = cfg.get_size("batch");
        ec.epochs = cfg.get_size("epochs");
        ec.optimizer = parse_optimizer(cfg.get_string("optimizer"));
        ec.lr = cfg.get_double("lr");
        ec.lr_after_burnin = cfg.is_null("lr_after_burnin")
                                 ? ec.lr / 40.0
                                 : cfg.get_double("lr_after_burnin");
        ec.burnin_epochs = cfg.get_size("burnin_epochs");
        ec.kl_samples = cfg.get_size("kl_samples");
        ec.init_std = cfg.get_double("init_std");
        ec.init_sigma = cfg.get_double("init_sigma");
        ec.seed = cfg.get_seed();
        ec.validate();
        if (vocab.edges().empty()) {
            throw ValidationError {"vocabulary has no links"};
        }
        spdlog::info("{} words, {} links", vocab.size(), vocab.edges().size());
        auto model = embed::make_model(vocab.size(), ec);
        std::vector<double> lrs;
        const auto log = embed::train(
            model, vocab, ec, [&](std::size_t epoch, double loss, double lr) {
                lrs.push_back(lr);
                spdlog::info("epoch {} loss {:.6f} lr {}", epoch, loss, lr);
            });
        embed::save_checkpoint(model, vocab, out);
        {
            std::ofstream l {sibling(out, ".loss.csv")};
            l << std::setprecision(17) << "epoch,loss,lr\n";
            for (std::size_t e = 0; e < log.epoch_loss.size(); ++e) {
                l << e << ',' << log.epoch_loss[e] << ',' << lrs[e] << '\n';
            }
            if (!l) {
                throw RuntimeFailure {"cannot write loss log for '" + out + "'"};
            }
        }
        if (const auto path = cfg.get_string("export"); !path.empty()) {
            Sink sink {path, stdout_};
            embed::export_csv(model, vocab, sink.stream());
            sink.close();
        }
        cfg.write_next_to(out);
        dump(Json {{"checkpoint", out},
                   {"words", vocab.size()},
                   {"links", vocab.edges().size()},
                   {"epochs", log.epoch_loss.size()},
                   {"final_loss", log.epoch_loss.empty()
                                      ? Json {}
                                      : Json(log.epoch_loss.back())}},
             stdout_);
        return kExitOk;
    };
    return c;
}

// Reorders checkpoint rows to the ids of `vocab`.
auto align(const embed::Checkpoint& ck, const embed::Vocabulary& vocab)
    -> embed::EmbeddingModel
{
    const auto& src = ck.model;
    if (ck.tokens == vocab.tokens()) {
        return src;
    }
    embed::EmbeddingModel m {vocab.size(), src.dim(), src.geometry(), src.cov()};
    std::map<std::string, std::size_t> row;
    for (std::size_t i = 0; i < ck.tokens.size(); ++i) {
        row.emplace(ck.tokens[i], i);
    }
    const std::size_t n = src.dim();
    const bool diag = src.cov() == CovKind::diagonal;
    for (std::size_t w = 0; w < vocab.size(); ++w) {
        const auto& tok = vocab.tokens()[w];
        const auto it = row.find(tok);
        if (it == row.end()) {
            throw ValidationError {"checkpoint has no word '" + tok + "'"};
        }
        for (std::size_t i = 0; i < n; ++i) {
            m.params()[w * n + i] = src.params()[it->second * n + i];
            if (diag) {
                m.params()[m.raw_offset() + w * n + i] =
                    src.params()[src.raw_offset() + it->second * n + i];
            }
        }
    }
    return m;
}

auto cmd_eval_embed(CLI::App& app) -> std::unique_ptr<Command>
{
    auto defaults = vocab_defaults();
    defaults["checkpoint"] = "";
    defaults["eval_samples"] = 512;
    auto c = std::make_unique<Command>("eval-embed", defaults);
    bind_vocab(c->config, app);
    c->config.bind<std::string>(app, "checkpoint", "checkpoint from train-embed");
    c->config.bind<std::size_t>(app, "eval_samples", "Monte-Carlo draws per query");
    c->run = [](const RunConfig& cfg, std::ostream& stdout_) {
        const auto path = cfg.get_string("checkpoint");
        if (path.empty()) {
            throw ValidationError {"eval-embed: --checkpoint is required"};
        }
        const auto k = cfg.get_size("eval_samples");
        if (k < 1) {
            throw ValidationError {"eval_samples must be >= 1"};
        }
        const auto vocab = load_vocab(cfg);
        const auto model = align(embed::load_checkpoint(path), vocab);
        const auto rec =
            embed::evaluate_reconstruction(model, vocab, k, cfg.get_seed());
        Sink sink {cfg.out(), stdout_};
        dump(Json {{"map", rec.map},
                   {"mean_rank", rec.mean_rank},
                   {"queries", rec.queries},
                   {"eval_samples", k}},
             sink.stream());
        sink.close();
        if (!cfg.out().empty()) {
            cfg.write_next_to(cfg.out());
        }
        return kExitOk;
    };
    return c;
}

// ---------------------------------------------------------- selfcheck

auto cmd_selfcheck(CLI::App& app) -> std::unique_ptr<Command>
{
    auto c = std::make_unique<Command>(
        "selfcheck", Json {{"cases", 1000}, {"pairs", 20}});
    c->config.bind<std::size_t>(app, "cases", "cases per round-trip suite");
    c->config.bind<std::size_t>(app, "pairs",
                               "random pairs per Jacobian setting");
    c->run = [](const RunConfig& cfg, std::ostream& stdout_) {
        const auto seed = cfg.get_seed();
        std::vector<checks::SuiteResult> suites;
        suites.push_back(checks::jacobian_suite(seed, cfg.get_size("pairs")));
        for (auto& r : checks::round_trip_suites(seed, cfg.get_size("cases"))) {
            suites.push_back(std::move(r));
        }
        bool ok = true;
        Json report = Json::array();
        stdout_ << std::setprecision(3);
        for (const auto& s : suites) {
            ok = ok && s.passed();
            stdout_ << (s.passed() ? "PASS " : "FAIL ") << s.name << ": "
                    << s.cases << " cases, " << s.failures
                    << " failures, worst " << s.worst << " (bound "
                    << s.tolerance << ")\n";
            report.push_back({{"name", s.name},
                              {"passed", s.passed()},
                              {"cases", s.cases},
                              {"failures", s.failures},
                              {"worst", s.worst},
                              {"tolerance", s.tolerance},
                              {"seconds", s.seconds}});
        }
        if (!cfg.out().empty()) {
            Sink sink {cfg.out(), stdout_};
            dump(Json {{"passed", ok}, {"suites", report}}, sink.stream());
            sink.close();
            cfg.write_next_to(cfg.out());
        }
        return ok ? kExitOk : kExitFailure;
    };
    return c;
}

} // namespace

void configure_logging()
{
    auto logger = spdlog::get("hyperwrap");
    if (!logger) {
        logger = spdlog::stderr_logger_mt("hyperwrap");
        logger->set_pattern("[%l] %v");
        spdlog::set_default_logger(logger);
    }
    const char* env = std::getenv("HYP_LOG");
    const std::string level = env == nullptr ? "info" : env;
    if (level == "error") {
        spdlog::set_level(spdlog::level::err);
    } else if (level == "debug") {
        spdlog::set_level(spdlog::level::debug);
    } else {
        spdlog::set_level(spdlog::level::info);
        if (level != "info") {
            spdlog::warn("HYP_LOG='{}' not recognized; using info", level);
        }
    }
}

auto dispatch(const std::vector<std::string>& args, std::ostream& out,
              std::ostream& err) -> int
{
    CLI::App app {"Wrapped normal distributions on hyperbolic space", "hyperwrap"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    using Factory = std::unique_ptr<Command> (*)(CLI::App&);
    const std::vector<std::tuple<std::string, std::string, Factory>> table {
        {"sample", "draw from a wrapped normal (CSV)", cmd_sample},
        {"logpdf", "log-density at given points (JSON)", cmd_logpdf},
        {"density-grid", "log-density over a Poincare-disk grid (CSV)",
         cmd_density_grid},
        {"gen-tree", "noisy binary-tree codes (CSV + JSON metadata)", cmd_gen_tree},
        {"train-vae", "train the tree VAE", cmd_train_vae},
        {"eval-vae", "correlation metrics of a trained VAE (JSON)", cmd_eval_vae},
        {"export-latent", "latent coordinates per row (CSV)", cmd_export_latent},
        {"train-embed", "train probabilistic word embeddings", cmd_train_embed},
        {"eval-embed", "reconstruction MAP and mean rank (JSON)", cmd_eval_embed},
        {"selfcheck", "run the Jacobian and round-trip oracles", cmd_selfcheck},
    };
    std::vector<std::pair<CLI::App*, std::unique_ptr<Command>>> commands;
    for (const auto& [name, help, factory] : table) {
        auto* sub = app.add_subcommand(name, help);
        auto cmd = factory(*sub);
        cmd->config.bind_common(*sub);
        commands.emplace_back(sub, std::move(cmd));
    }

    std::vector<std::string> reversed {args.rbegin(), args.rend()};
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        const auto subs = app.get_subcommands();
        out << (subs.empty() ? app.help() : subs.front()->help());
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        const auto subs = app.get_subcommands();
        err << e.what() << "\n\n"
            << (subs.empty() ? app.help() : subs.front()->help());
        return kExitInvalid;
    }

    try {
        for (auto& [sub, cmd] : commands) {
            if (sub->parsed()) {
                cmd->config.resolve();
                spdlog::debug("settings: {}", cmd->config.json().dump());
                return cmd->run(cmd->config, out);
            }
        }
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const std::exception& e) {
        err << "failure: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitInvalid;
}

} // namespace hyperwrap::cli
