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

#include "hyperwrap/vae.hpp"

#include "hyperwrap/autodiff.hpp"
#include "hyperwrap/errors.hpp"
#include "hyperwrap/kernels.hpp"
#include "hyperwrap/lorentz.hpp"
#include "hyperwrap/optim.hpp"
#include "hyperwrap/special.hpp"
#include "hyperwrap/stats.hpp"
#include "hyperwrap/wrapped_normal.hpp"

#include "binary_io.hpp"
#include "mlp.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace hyperwrap::vae {

using ad::Tape;
using ad::Var;
using detail::Mlp;
using Matrix = Mlp::Matrix;

// ----------------------------------------------------------------- data

auto TreeDataset::clean_row(std::size_t u) const -> Row
{
    return Row {clean}.subspan(u * nodes, nodes);
}

auto TreeDataset::noisy_row(std::size_t i) const -> Row
{
    return Row {noisy}.subspan(i * nodes, nodes);
}

auto TreeDataset::clean_rows() const -> std::vector<Row>
{
    std::vector<Row> out;
    for (std::size_t u = 0; u < nodes; ++u) {
        out.push_back(clean_row(u));
    }
    return out;
}

auto TreeDataset::noisy_rows() const -> std::vector<Row>
{
    std::vector<Row> out;
    for (std::size_t i = 0; i < noisy_count(); ++i) {
        out.push_back(noisy_row(i));
    }
    return out;
}

auto tree_distance(std::size_t u, std::size_t v) -> std::size_t
{
    std::size_t d = 0;
    // the larger BFS index is never shallower, so step it up
    while (u != v) {
        if (u > v) {
            u = (u - 1) / 2;
        } else {
            v = (v - 1) / 2;
        }
        ++d;
    }
    return d;
}

auto hamming(Row a, Row b) -> std::size_t
{
    if (a.size() != b.size()) {
        throw DimensionError {"hamming: rows differ in length"};
    }
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += a[i] != b[i] ? 1U : 0U;
    }
    return d;
}

auto generate_tree_dataset(std::size_t depth, double flip_prob,
                           std::size_t per_node, Rng& rng) -> TreeDataset
{
    if (depth < 1 || depth > 16) {
        throw ValidationError {"tree depth must be in [1, 16]"};
    }
    if (!(flip_prob >= 0.0 && flip_prob < 0.5)) {
        throw ValidationError {"flip probability must be in [0, 0.5)"};
    }
    TreeDataset ds;
    ds.depth = depth;
    ds.flip_prob = flip_prob;
    ds.nodes = (std::size_t {2} << depth) - 1;
    const std::size_t m = ds.nodes;
    ds.clean.assign(m * m, 0);
    for (std::size_t u = 0; u < m; ++u) {
        for (std::size_t a = u;; a = (a - 1) / 2) {
            ds.clean[u * m + a] = 1;
            if (a == 0) {
                break;
            }
        }
    }
    ds.noisy.reserve(m * m * per_node);
    for (std::size_t u = 0; u < m; ++u) {
        for (std::size_t s = 0; s < per_node; ++s) {
            for (std::size_t j = 0; j < m; ++j) {
                const bool flip = rng.uniform() < flip_prob;
                ds.noisy.push_back(
                    static_cast<std::uint8_t>(ds.clean[u * m + j] ^ (flip ? 1 : 0)));
            }
            ds.noisy_source.push_back(static_cast<std::int32_t>(u));
        }
    }
    return ds;
}

void write_dataset_csv(const TreeDataset& ds, std::ostream& out)
{
    out << "kind,node";
    for (std::size_t j = 0; j < ds.nodes; ++j) {
        out << ",b" << j;
    }
    out << '\n';
    auto row = [&](const char* kind, std::size_t node, Row r) {
        out << kind << ',' << node;
        for (auto b : r) {
            out << ',' << static_cast<int>(b);
        }
        out << '\n';
    };
    for (std::size_t u = 0; u < ds.nodes; ++u) {
        row("clean", u, ds.clean_row(u));
    }
    for (std::size_t i = 0; i < ds.noisy_count(); ++i) {
        row("noisy", static_cast<std::size_t>(ds.noisy_source[i]), ds.noisy_row(i));
    }
}

auto read_dataset_csv(std::istream& in, const std::string& source)
    -> TreeDataset
{
    auto fail = [&](std::size_t line, const std::string& what) {
        throw ValidationError {source + ":" + std::to_string(line) + ": " + what};
    };
    std::string line;
    if (!std::getline(in, line)) {
        fail(1, "empty dataset");
    }
    const auto width =
        static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) - 1;
    if (line.rfind("kind,node,", 0) != 0 || width < 3) {
        fail(1, "expected header 'kind,node,b0,...'");
    }
    TreeDataset ds;
    ds.nodes = width;
    for (std::size_t d = 1; d <= 16; ++d) {
        if ((std::size_t {2} << d) - 1 == width) {
            ds.depth = d;
        }
    }
    if (ds.depth == 0) {
        fail(1, "bit count is not the size of a complete binary tree");
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::istringstream row {line};
        std::string kind;
        std::string field;
        std::getline(row, kind, ',');
        std::getline(row, field, ',');
        long node = -1;
        try {
            node = std::stol(field);
        } catch (const std::exception&) {
            fail(lineno, "bad node id");
        }
        if (node < 0 || static_cast<std::size_t>(node) >= width) {
            fail(lineno, "node id out of range");
        }
        std::vector<std::uint8_t> bits;
        while (std::getline(row, field, ',')) {
            if (field != "0" && field != "1") {
                fail(lineno, "bits must be 0 or 1");
            }
            bits.push_back(field == "1" ? 1 : 0);
        }
        if (bits.size() != width) {
            fail(lineno, "wrong number of bits");
        }
        if (kind == "clean") {
            ds.clean.insert(ds.clean.end(), bits.begin(), bits.end());
        } else if (kind == "noisy") {
            ds.noisy.insert(ds.noisy.end(), bits.begin(), bits.end());
            ds.noisy_source.push_back(static_cast<std::int32_t>(node));
        } else {
            fail(lineno, "kind must be clean or noisy");
        }
    }
    if (ds.clean.size() != width * width) {
        fail(lineno, "expected one clean row per node");
    }
    return ds;
}

// ---------------------------------------------------------------- model

namespace {

auto encoder_net(const VaeModel& m) -> Mlp
{
    return Mlp {{m.input_dim(), m.hidden(), m.hidden(), 2 * m.latent_dim()}};
}

auto latent_width(const VaeModel& m) -> std::size_t
{
    return m.geometry() == Geometry::hyperbolic ? m.latent_dim() + 1
                                                : m.latent_dim();
}

auto decoder_net(const VaeModel& m) -> Mlp
{
    return Mlp {{latent_width(m), m.hidden(), m.hidden(), m.input_dim()}};
}

auto to_matrix(std::span<const Row> rows, std::size_t width) -> Matrix
{
    Matrix x(static_cast<Eigen::Index>(width),
             static_cast<Eigen::Index>(rows.size()));
    for (std::size_t b = 0; b < rows.size(); ++b) {
        if (rows[b].size() != width) {
            throw DimensionError {"VAE input width does not match the model"};
        }
        for (std::size_t i = 0; i < width; ++i) {
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)) =
                rows[b][i];
        }
    }
    return x;
}

auto bernoulli_log_lik(const Matrix& x, const Matrix& logits, Eigen::Index xcol,
                       Eigen::Index lcol) -> double
{
    double acc = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double l = logits(i, lcol);
        acc += x(i, xcol) * l - softplus(l);
    }
    return acc;
}

} // namespace

VaeModel::VaeModel(std::size_t input_dim, std::size_t latent_dim,
                   std::size_t hidden, Geometry geometry, double beta)
  : input_{input_dim}, latent_{latent_dim}, hidden_{hidden},
    geometry_{geometry}, beta_{beta}
{
    if (input_dim < 1 || latent_dim < 1 || hidden < 1) {
        throw ValidationError {"VaeModel: dimensions must be >= 1"};
    }
    set_beta(beta);
    encoder_size_ = encoder_net(*this).param_count();
    params_.assign(encoder_size_ + decoder_net(*this).param_count(), 0.0);
}

void VaeModel::set_beta(double beta)
{
    if (!(beta >= 0.0) || !std::isfinite(beta)) {
        throw ValidationError {"VaeModel: beta must be >= 0"};
    }
    beta_ = beta;
}

void VaeModel::initialize(Rng& rng)
{
    const std::span<double> p {params_};
    encoder_net(*this).initialize(p.first(encoder_size_), rng);
    decoder_net(*this).initialize(p.subspan(encoder_size_), rng);
}

auto VaeModel::posterior(Row x) const -> Posterior
{
    const Row rows[] = {x};
    const Matrix e = encoder_net(*this).forward(
        std::span<const double> {params_}.first(encoder_size_),
        to_matrix(rows, input_));
    Posterior out;
    for (std::size_t i = 0; i < latent_; ++i) {
        out.location.push_back(e(static_cast<Eigen::Index>(i), 0));
        out.sigma.push_back(
            softplus(e(static_cast<Eigen::Index>(latent_ + i), 0)) + kSigmaFloor);
    }
    return out;
}

auto VaeModel::embed(Row x) const -> std::vector<double>
{
    auto post = posterior(x);
    if (geometry_ == Geometry::hyperbolic) {
        return kernels::lift(std::span<const double> {post.location});
    }
    return post.location;
}

// ----------------------------------------------------------------- elbo

auto elbo(const VaeModel& model, std::span<const Row> batch, std::size_t k,
          Rng& rng, bool with_grad) -> ElboResult
{
    if (batch.empty() || k < 1) {
        throw ValidationError {"elbo: need a non-empty batch and k >= 1"};
    }
    const std::size_t n = model.latent_dim();
    const std::size_t zw = latent_width(model);
    const std::size_t bsz = batch.size();
    const bool hyper = model.geometry() == Geometry::hyperbolic;
    const double beta = model.beta();
    const std::span<const double> p {model.params()};
    const auto pe = p.first(model.encoder_size());
    const auto pd = p.subspan(model.encoder_size());
    const auto enc = encoder_net(model);
    const auto dec = decoder_net(model);

    const Matrix x = to_matrix(batch, model.input_dim());
    Mlp::Cache enc_cache;
    const Matrix e = enc.forward(pe, x, &enc_cache);

    thread_local Tape tape;
    tape.clear();
    std::vector<Var> leaves(2 * n * bsz);
    std::vector<Coords<Var>> zs;
    zs.reserve(bsz * k);
    std::vector<Var> kls;
    kls.reserve(bsz);
    Matrix zm(static_cast<Eigen::Index>(zw), static_cast<Eigen::Index>(bsz * k));
    std::vector<double> eps(n);

    WrappedParams<Var> prior;
    prior.mu.assign(n + 1, Var {0.0});
    prior.mu[0] = Var {1.0};
    prior.kind = CovKind::unit;

    for (std::size_t b = 0; b < bsz; ++b) {
        const auto col = static_cast<Eigen::Index>(b);
        for (std::size_t i = 0; i < 2 * n; ++i) {
            leaves[b * 2 * n + i] =
                tape.variable(e(static_cast<Eigen::Index>(i), col));
        }
        const std::span<const Var> h {leaves.data() + b * 2 * n, n};
        std::vector<Var> sigma(n);
        for (std::size_t i = 0; i < n; ++i) {
            sigma[i] = kernels::softplus(leaves[b * 2 * n + n + i]) + kSigmaFloor;
        }
        WrappedParams<Var> q;
        if (hyper) {
            q.mu = kernels::lift(h);
            q.kind = CovKind::diagonal;
            q.scale = sigma;
        }
        Var kl {0.0};
        for (std::size_t j = 0; j < k; ++j) {
            rng.fill_normal(eps);
            Coords<Var> z;
            if (hyper) {
                Var lq;
                z = kernels::wrapped_sample(q, std::span<const double> {eps}, &lq);
                kl = kl + (lq - kernels::wrapped_log_prob(prior, z))
                              * (1.0 / static_cast<double>(k));
            } else {
                z.resize(n);
                for (std::size_t i = 0; i < n; ++i) {
                    z[i] = h[i] + sigma[i] * eps[i];
                }
            }
            for (std::size_t i = 0; i < zw; ++i) {
                zm(static_cast<Eigen::Index>(i),
                   static_cast<Eigen::Index>(b * k + j)) = z[i].value();
            }
            zs.push_back(std::move(z));
        }
        if (!hyper) {
            const std::vector<Var> zero(n, Var {0.0});
            const std::vector<Var> one(n, Var {1.0});
            kl = kernels::diag_gaussian_kl<Var>(h, sigma, zero, one);
        }
        kls.push_back(kl);
    }

    Mlp::Cache dec_cache;
    const Matrix logits = dec.forward(pd, zm, with_grad ? &dec_cache : nullptr);
    double recon = 0.0;
    for (std::size_t b = 0; b < bsz; ++b) {
        for (std::size_t j = 0; j < k; ++j) {
            recon += bernoulli_log_lik(x, logits, static_cast<Eigen::Index>(b),
                                       static_cast<Eigen::Index>(b * k + j));
        }
    }
    recon /= static_cast<double>(bsz * k);
    double kl_mean = 0.0;
    for (const auto& kl : kls) {
        kl_mean += kl.value();
    }
    kl_mean /= static_cast<double>(bsz);

    ElboResult out {recon - beta * kl_mean, recon, kl_mean, {}};
    if (!with_grad) {
        return out;
    }
    out.grad.assign(p.size(), 0.0);
    const std::span<double> grad {out.grad};

    // d recon / d logits = x - sigmoid(logits), averaged over rows and draws
    Matrix d_logits(logits.rows(), logits.cols());
    const double w = 1.0 / static_cast<double>(bsz * k);
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
        const auto b = c / static_cast<Eigen::Index>(k);
        for (Eigen::Index i = 0; i < logits.rows(); ++i) {
            d_logits(i, c) = w * (x(i, b) - 1.0 / (1.0 + std::exp(-logits(i, c))));
        }
    }
    const Matrix dz =
        dec.backward(pd, dec_cache, d_logits, grad.subspan(model.encoder_size()));

    // surrogate whose gradient in the encoder outputs is the ELBO gradient
    std::vector<Var> terms;
    terms.reserve(bsz * k + bsz);
    std::vector<double> coeff(zw);
    for (std::size_t c = 0; c < bsz * k; ++c) {
        for (std::size_t i = 0; i < zw; ++i) {
            coeff[i] = dz(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
        }
        terms.push_back(ad::dot(std::span<const Var> {zs[c]},
                                std::span<const double> {coeff}));
    }
    for (const auto& kl : kls) {
        terms.push_back(kl * (-beta / static_cast<double>(bsz)));
    }
    const Var surrogate = ad::sum(terms);
    Matrix d_enc = Matrix::Zero(static_cast<Eigen::Index>(2 * n),
                                static_cast<Eigen::Index>(bsz));
    if (!surrogate.is_constant()) {
        const auto g = tape.backward(surrogate);
        for (std::size_t b = 0; b < bsz; ++b) {
            for (std::size_t i = 0; i < 2 * n; ++i) {
                d_enc(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)) =
                    g.wrt(leaves[b * 2 * n + i]);
            }
        }
    }
    (void)enc.backward(pe, enc_cache, d_enc, grad.first(model.encoder_size()));
    return out;
}

auto importance_log_likelihood(const VaeModel& model, Row x,
                               std::size_t samples, Rng& rng) -> double
{
    if (samples < 1) {
        throw ValidationError {"importance_log_likelihood: samples >= 1"};
    }
    const std::size_t n = model.latent_dim();
    const std::size_t zw = latent_width(model);
    const bool hyper = model.geometry() == Geometry::hyperbolic;
    const auto post = model.posterior(x);
    WrappedParams<double> q;
    WrappedParams<double> prior;
    if (hyper) {
        q.mu = kernels::lift(std::span<const double> {post.location});
        q.kind = CovKind::diagonal;
        q.scale = post.sigma;
        prior.mu.assign(n + 1, 0.0);
        prior.mu[0] = 1.0;
        prior.kind = CovKind::unit;
    }
    Matrix zm(static_cast<Eigen::Index>(zw), static_cast<Eigen::Index>(samples));
    std::vector<double> log_w(samples);
    std::vector<double> eps(n);
    for (std::size_t s = 0; s < samples; ++s) {
        rng.fill_normal(eps);
        std::vector<double> z;
        if (hyper) {
            double lq = 0.0;
            z = kernels::wrapped_sample(q, std::span<const double> {eps}, &lq);
            log_w[s] = kernels::wrapped_log_prob(prior, z) - lq;
        } else {
            z.resize(n);
            std::vector<double> dz(n);
            for (std::size_t i = 0; i < n; ++i) {
                z[i] = post.location[i] + post.sigma[i] * eps[i];
                dz[i] = z[i] - post.location[i];
            }
            log_w[s] = kernels::unit_gaussian_log_density<double>(z)
                       - kernels::diag_gaussian_log_density<double>(dz, post.sigma);
        }
        for (std::size_t i = 0; i < zw; ++i) {
            zm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s)) = z[i];
        }
    }
    const Row rows[] = {x};
    const Matrix xm = to_matrix(rows, model.input_dim());
    const Matrix logits = decoder_net(model).forward(
        std::span<const double> {model.params()}.subspan(model.encoder_size()), zm);
    for (std::size_t s = 0; s < samples; ++s) {
        log_w[s] += bernoulli_log_lik(xm, logits, 0, static_cast<Eigen::Index>(s));
    }
    const double top = *std::max_element(log_w.begin(), log_w.end());
    double acc = 0.0;
    for (double lw : log_w) {
        acc += std::exp(lw - top);
    }
    return top + std::log(acc / static_cast<double>(samples));
}

// ---------------------------------------------------------------- train

void VaeConfig::validate() const
{
    auto fail = [](const std::string& what) {
        throw ValidationError {"vae config: " + what};
    };
    if (depth < 1 || depth > 16) {
        fail("depth must be in [1, 16]");
    }
    if (!(flip_prob >= 0.0 && flip_prob < 0.5)) {
        fail("flip probability must be in [0, 0.5)");
    }
    if (per_node < 1 || latent_dim < 1 || hidden < 1 || batch < 1
        || mc_samples < 1) {
        fail("sizes and sample counts must be >= 1");
    }
    if (!(beta >= 0.0)) {
        fail("beta must be >= 0");
    }
    if (!(lr > 0.0)) {
        fail("lr must be > 0");
    }
}

auto make_dataset(const VaeConfig& config) -> TreeDataset
{
    config.validate();
    Rng rng {mix_seed(config.seed, 0x74726565)};
    return generate_tree_dataset(config.depth, config.flip_prob,
                                 config.per_node, rng);
}

auto make_model(std::size_t input_dim, const VaeConfig& config) -> VaeModel
{
    config.validate();
    VaeModel m {input_dim, config.latent_dim, config.hidden, config.geometry,
                config.beta};
    Rng rng {mix_seed(config.seed, 0x696e6974)};
    m.initialize(rng);
    return m;
}

auto train_vae(VaeModel& model, const TreeDataset& data,
               const VaeConfig& config, const EpochCallback& on_epoch)
    -> TrainLog
{
    config.validate();
    if (data.width() != model.input_dim()) {
        throw DimensionError {"train_vae: dataset width does not match model"};
    }
    TrainLog log;
    const auto rows = data.noisy_rows();
    if (config.epochs == 0 || rows.empty()) {
        return log;
    }
    Rng rng {mix_seed(config.seed, 0x766165)};
    Optimizer opt {OptimizerKind::adam};
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), std::size_t {0});
    std::vector<Row> batch;
    std::vector<double> step(model.params().size());
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng.engine());
        double sum = 0.0;
        for (std::size_t start = 0; start < rows.size(); start += config.batch) {
            const std::size_t stop = std::min(rows.size(), start + config.batch);
            batch.clear();
            for (std::size_t i = start; i < stop; ++i) {
                batch.push_back(rows[order[i]]);
            }
            ElboResult r;
            try {
                r = elbo(model, batch, config.mc_samples, rng);
            } catch (const DomainError& e) {
                throw RuntimeFailure {"train_vae: diverged in epoch "
                                      + std::to_string(epoch) + " (" + e.what()
                                      + ")"};
            }
            if (!std::isfinite(r.elbo)) {
                throw RuntimeFailure {"train_vae: loss became non-finite in epoch "
                                      + std::to_string(epoch)};
            }
            for (std::size_t i = 0; i < step.size(); ++i) {
                step[i] = -r.grad[i];
            }
            opt.step(model.params(), step, config.lr);
            sum -= r.elbo * static_cast<double>(stop - start);
        }
        const double mean = sum / static_cast<double>(rows.size());
        for (double p : model.params()) {
            if (!std::isfinite(p)) {
                throw RuntimeFailure {"train_vae: parameters became non-finite in epoch "
                                      + std::to_string(epoch)};
            }
        }
        log.epoch_loss.push_back(mean);
        if (on_epoch) {
            on_epoch(epoch, mean);
        }
    }
    return log;
}

// ----------------------------------------------------------- evaluation

auto latent_distance(Geometry g, std::span<const double> a,
                     std::span<const double> b) -> double
{
    if (a.size() != b.size()) {
        throw DimensionError {"latent_distance: dimension mismatch"};
    }
    if (g == Geometry::hyperbolic) {
        return arccosh(std::max(1.0, -lorentz_inner(a, b)));
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += (a[i] - b[i]) * (a[i] - b[i]);
    }
    return std::sqrt(acc);
}

auto correlation_from_embeddings(Geometry g, std::span<const Row> rows,
                                 std::span<const std::vector<double>> emb)
    -> double
{
    if (rows.size() < 2) {
        throw ValidationError {"correlation_metric: need at least two rows"};
    }
    if (emb.size() != rows.size()) {
        throw DimensionError {"correlation_metric: one embedding per row"};
    }
    std::vector<double> ham;
    std::vector<double> lat;
    const std::size_t pairs = rows.size() * (rows.size() - 1) / 2;
    ham.reserve(pairs);
    lat.reserve(pairs);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = i + 1; j < rows.size(); ++j) {
            ham.push_back(static_cast<double>(hamming(rows[i], rows[j])));
            lat.push_back(latent_distance(g, emb[i], emb[j]));
        }
    }
    return stats::pearson(ham, lat);
}

auto correlation_metric(const VaeModel& model, std::span<const Row> rows)
    -> double
{
    if (rows.size() < 2) {
        throw ValidationError {"correlation_metric: need at least two rows"};
    }
    std::vector<std::vector<double>> emb;
    emb.reserve(rows.size());
    for (const auto& r : rows) {
        emb.push_back(model.embed(r));
    }
    return correlation_from_embeddings(model.geometry(), rows, emb);
}

// ----------------------------------------------------------- persistence

namespace {
constexpr int kModelVersion = 1;
}

void save_model(const VaeModel& model, const std::filesystem::path& path)
{
    nlohmann::json header;
    header["version"] = kModelVersion;
    header["kind"] = "vae";
    header["input_dim"] = model.input_dim();
    header["latent_dim"] = model.latent_dim();
    header["hidden"] = model.hidden();
    header["geometry"] = to_string(model.geometry());
    header["beta"] = model.beta();
    std::ofstream out {path, std::ios::binary};
    if (!out) {
        throw RuntimeFailure {path.string() + ": cannot open for writing"};
    }
    out << header.dump() << '\n';
    hyperwrap::detail::write_le(out, model.params());
    if (!out) {
        throw RuntimeFailure {path.string() + ": write failed"};
    }
}

auto load_model(const std::filesystem::path& path) -> VaeModel
{
    std::ifstream in {path, std::ios::binary};
    if (!in) {
        throw RuntimeFailure {path.string() + ": cannot open model"};
    }
    std::string line;
    std::getline(in, line);
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
        if (header.value("version", 0) != kModelVersion
            || header.value("kind", std::string {}) != "vae") {
            throw ValidationError {path.string() + ": not a VAE model file"};
        }
        VaeModel model {header.at("input_dim").get<std::size_t>(),
                        header.at("latent_dim").get<std::size_t>(),
                        header.at("hidden").get<std::size_t>(),
                        parse_geometry(header.at("geometry").get<std::string>()),
                        header.at("beta").get<double>()};
        hyperwrap::detail::read_le(in, model.params());
        if (!in) {
            throw ValidationError {path.string() + ": truncated parameter block"};
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError {path.string() + ": bad model header: " + e.what()};
    }
}

void export_latent_csv(const VaeModel& model, const TreeDataset& data,
                       std::ostream& out)
{
    const std::size_t n = model.latent_dim();
    out << "kind,index,node";
    for (std::size_t i = 1; i <= n; ++i) {
        out << ",x" << i;
    }
    out << '\n' << std::setprecision(17);
    auto row = [&](const char* kind, std::size_t index, std::size_t node, Row r) {
        const auto e = model.embed(r);
        out << kind << ',' << index << ',' << node;
        if (model.geometry() == Geometry::hyperbolic) {
            for (std::size_t i = 1; i <= n; ++i) {
                out << ',' << e[i] / (1.0 + e[0]);
            }
        } else {
            for (double v : e) {
                out << ',' << v;
            }
        }
        out << '\n';
    };
    for (std::size_t u = 0; u < data.nodes; ++u) {
        row("clean", u, u, data.clean_row(u));
    }
    for (std::size_t i = 0; i < data.noisy_count(); ++i) {
        row("noisy", i, static_cast<std::size_t>(data.noisy_source[i]),
            data.noisy_row(i));
    }
}

} // namespace hyperwrap::vae
