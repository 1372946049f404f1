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

#include "hyperwrap/embedding.hpp"

#include "hyperwrap/errors.hpp"
#include "hyperwrap/kernels.hpp"

#include "binary_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace hyperwrap::embed {

using ad::Tape;
using ad::Var;

// -------------------------------------------------------------- Vocabulary

auto Vocabulary::intern(const std::string& token) -> std::int32_t
{
    if (auto it = ids_.find(token); it != ids_.end()) {
        return it->second;
    }
    const auto id = static_cast<std::int32_t>(tokens_.size());
    tokens_.push_back(token);
    ids_.emplace(token, id);
    adjacency_.emplace_back();
    return id;
}

auto Vocabulary::add_edge(std::int32_t child, std::int32_t parent) -> bool
{
    const auto v = static_cast<std::int32_t>(tokens_.size());
    if (child < 0 || parent < 0 || child >= v || parent >= v) {
        throw ValidationError {"Vocabulary::add_edge: id out of range"};
    }
    if (child == parent) {
        return false;
    }
    auto& adj = adjacency_[static_cast<std::size_t>(child)];
    const auto pos = std::lower_bound(adj.begin(), adj.end(), parent);
    if (pos != adj.end() && *pos == parent) {
        return false;
    }
    adj.insert(pos, parent);
    edges_.push_back({child, parent});
    return true;
}

auto Vocabulary::token(std::int32_t id) const -> const std::string&
{
    return tokens_.at(static_cast<std::size_t>(id));
}

auto Vocabulary::id(const std::string& token) const -> std::int32_t
{
    const auto it = ids_.find(token);
    if (it == ids_.end()) {
        throw ValidationError {"unknown token '" + token + "'"};
    }
    return it->second;
}

auto Vocabulary::parents_of() const -> std::vector<std::vector<std::int32_t>>
{
    return adjacency_;
}

auto Vocabulary::linked() const -> std::vector<std::vector<std::int32_t>>
{
    auto out = adjacency_;
    for (const auto& e : edges_) {
        out[static_cast<std::size_t>(e.parent)].push_back(e.child);
    }
    for (auto& row : out) {
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
    }
    return out;
}

auto read_edges(std::istream& in, const std::string& source) -> Vocabulary
{
    Vocabulary vocab;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto tab = line.find('\t');
        if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos
            || tab == 0 || tab + 1 == line.size()) {
            throw ValidationError {source + ":" + std::to_string(lineno)
                                   + ": expected 'child<TAB>parent'"};
        }
        const auto child = vocab.intern(line.substr(0, tab));
        const auto parent = vocab.intern(line.substr(tab + 1));
        vocab.add_edge(child, parent);
    }
    if (in.bad()) {
        throw RuntimeFailure {source + ": read error"};
    }
    return vocab;
}

auto read_edges(const std::filesystem::path& path) -> Vocabulary
{
    std::ifstream in {path};
    if (!in) {
        throw RuntimeFailure {path.string() + ": cannot open edge list"};
    }
    return read_edges(in, path.string());
}

auto transitive_closure(const Vocabulary& vocab) -> Vocabulary
{
    Vocabulary out;
    for (const auto& t : vocab.tokens()) {
        out.intern(t);
    }
    const auto parents = vocab.parents_of();
    for (std::int32_t w = 0; w < static_cast<std::int32_t>(vocab.size()); ++w) {
        // depth-first walk up the parent links
        std::vector<std::int32_t> stack {w};
        std::vector<bool> seen(vocab.size(), false);
        seen[static_cast<std::size_t>(w)] = true;
        while (!stack.empty()) {
            const auto x = stack.back();
            stack.pop_back();
            for (auto p : parents[static_cast<std::size_t>(x)]) {
                if (!seen[static_cast<std::size_t>(p)]) {
                    seen[static_cast<std::size_t>(p)] = true;
                    out.add_edge(w, p);
                    stack.push_back(p);
                }
            }
        }
    }
    return out;
}

auto balanced_tree_closure(std::size_t depth) -> Vocabulary
{
    Vocabulary vocab;
    const std::size_t nodes = (std::size_t {2} << depth) - 1;
    for (std::size_t i = 0; i < nodes; ++i) {
        vocab.intern("n" + std::to_string(i));
    }
    for (std::size_t i = 1; i < nodes; ++i) {
        for (std::size_t a = (i - 1) / 2;; a = (a - 1) / 2) {
            vocab.add_edge(static_cast<std::int32_t>(i),
                           static_cast<std::int32_t>(a));
            if (a == 0) {
                break;
            }
        }
    }
    return vocab;
}

// ----------------------------------------------------------------- config

void EmbedConfig::validate() const
{
    auto fail = [](const std::string& what) {
        throw ValidationError {"embedding config: " + what};
    };
    if (dim < 1) {
        fail("dim must be >= 1");
    }
    if (cov == CovKind::full) {
        fail("cov must be unit or diag");
    }
    if (negatives < 1) {
        fail("negatives must be >= 1");
    }
    if (batch < 1) {
        fail("batch must be >= 1");
    }
    if (!(lr > 0.0) || !(lr_after_burnin > 0.0)) {
        fail("learning rates must be > 0");
    }
    if (!(margin >= 0.0)) {
        fail("margin must be >= 0");
    }
    if (kl_samples < 1 || eval_samples < 1) {
        fail("sample counts must be >= 1");
    }
    if (!(init_std >= 0.0) || !(init_sigma > kSigmaFloor)) {
        fail("init_std must be >= 0 and init_sigma > 1e-6");
    }
}

// ------------------------------------------------------------------ model

EmbeddingModel::EmbeddingModel(std::size_t vocab, std::size_t dim,
                               Geometry geometry, CovKind cov)
  : vocab_{vocab}, dim_{dim}, geometry_{geometry}, cov_{cov}
{
    if (dim < 1) {
        throw ValidationError {"EmbeddingModel: dim must be >= 1"};
    }
    if (cov == CovKind::full) {
        throw ValidationError {"EmbeddingModel: cov must be unit or diag"};
    }
    const std::size_t blocks = cov == CovKind::diagonal ? 2 : 1;
    params_.assign(blocks * vocab * dim, 0.0);
}

void EmbeddingModel::initialize(double init_std, double init_sigma, Rng& rng)
{
    for (std::size_t i = 0; i < raw_offset(); ++i) {
        params_[i] = init_std * rng.normal();
    }
    const double raw = softplus_inverse(init_sigma - kSigmaFloor);
    std::fill(params_.begin() + static_cast<std::ptrdiff_t>(raw_offset()),
              params_.end(), raw);
}

auto make_model(std::size_t vocab, const EmbedConfig& config) -> EmbeddingModel
{
    config.validate();
    EmbeddingModel m {vocab, config.dim, config.geometry, config.cov};
    Rng rng {mix_seed(config.seed, 0x696e6974)};
    m.initialize(config.init_std, config.init_sigma, rng);
    return m;
}

auto EmbeddingModel::location(std::int32_t w) const -> std::span<const double>
{
    return std::span<const double> {params_}.subspan(
        static_cast<std::size_t>(w) * dim_, dim_);
}

auto EmbeddingModel::raw_sigma(std::int32_t w) const -> std::span<const double>
{
    if (cov_ != CovKind::diagonal) {
        return {};
    }
    return std::span<const double> {params_}.subspan(
        raw_offset() + static_cast<std::size_t>(w) * dim_, dim_);
}

auto EmbeddingModel::sigma(std::int32_t w) const -> std::vector<double>
{
    std::vector<double> s(dim_, 1.0);
    if (cov_ == CovKind::diagonal) {
        const auto raw = raw_sigma(w);
        for (std::size_t i = 0; i < dim_; ++i) {
            s[i] = softplus(raw[i]) + kSigmaFloor;
        }
    }
    return s;
}

auto EmbeddingModel::mean_point(std::int32_t w) const -> LorentzPoint
{
    return lift_to_manifold(location(w));
}

auto EmbeddingModel::distribution(std::int32_t w) const -> WrappedNormal
{
    if (cov_ == CovKind::diagonal) {
        return WrappedNormal::diagonal(mean_point(w), sigma(w));
    }
    return WrappedNormal::unit(mean_point(w));
}

// ------------------------------------------------------------- energies

namespace {

/// Per-word distribution parameters in whichever scalar type is in use.
/// For euclidean geometry `p.mu` holds the n raw coordinates.
template <class T>
struct WordParams
{
    WrappedParams<T> p;
};

template <class T>
auto make_params(const EmbeddingModel& m, std::span<const T> h,
                 std::span<const T> raw) -> WordParams<T>
{
    WordParams<T> w;
    w.p.kind = m.cov();
    if (m.geometry() == Geometry::hyperbolic) {
        w.p.mu = kernels::lift(h);
    } else {
        w.p.mu.assign(h.begin(), h.end());
    }
    if (m.cov() == CovKind::diagonal) {
        w.p.scale.resize(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i) {
            w.p.scale[i] = kernels::softplus(raw[i]) + kSigmaFloor;
        }
    }
    return w;
}

template <class T>
auto euclid_kl(const WordParams<T>& q, const WordParams<T>& p,
               std::size_t n) -> T
{
    const std::span<const T> mq {q.p.mu};
    const std::span<const T> mp {p.p.mu};
    if (q.p.kind == CovKind::diagonal) {
        return kernels::diag_gaussian_kl(mq, std::span<const T> {q.p.scale},
                                         mp, std::span<const T> {p.p.scale});
    }
    T acc {0.0};
    for (std::size_t i = 0; i < n; ++i) {
        const T d = mp[i] - mq[i];
        acc = acc + 0.5 * d * d;
    }
    return acc;
}

/// E(s, t) for all targets with shared draws from q_s.
template <class T>
void energies_generic(Geometry g, const WordParams<T>& q,
                      std::span<const WordParams<T>* const> targets,
                      std::span<const double> eps, std::size_t n,
                      std::vector<T>& out)
{
    out.assign(targets.size(), T {0.0});
    if (g == Geometry::euclidean) {
        for (std::size_t t = 0; t < targets.size(); ++t) {
            out[t] = euclid_kl(q, *targets[t], n);
        }
        return;
    }
    const std::size_t k = eps.size() / n;
    const double inv_k = 1.0 / static_cast<double>(k);
    for (std::size_t j = 0; j < k; ++j) {
        T lq;
        const auto z = kernels::wrapped_sample(q.p, eps.subspan(j * n, n), &lq);
        for (std::size_t t = 0; t < targets.size(); ++t) {
            out[t] = out[t]
                     + (lq - kernels::wrapped_log_prob(targets[t]->p, z)) * inv_k;
        }
    }
}

auto word_params(const EmbeddingModel& m, std::int32_t w) -> WordParams<double>
{
    return make_params<double>(m, m.location(w), m.raw_sigma(w));
}

auto draw_eps(const EmbeddingModel& m, std::size_t k, Rng& rng)
    -> std::vector<double>
{
    if (m.geometry() == Geometry::euclidean) {
        return {};
    }
    std::vector<double> eps(k * m.dim());
    rng.fill_normal(eps);
    return eps;
}

} // namespace

auto energies_from(const EmbeddingModel& model, std::int32_t s,
                   std::span<const std::int32_t> targets, std::size_t k,
                   Rng& rng) -> std::vector<double>
{
    if (k < 1) {
        throw ValidationError {"energy: need at least one sample"};
    }
    const auto q = word_params(model, s);
    std::vector<WordParams<double>> ps;
    ps.reserve(targets.size());
    for (auto t : targets) {
        ps.push_back(word_params(model, t));
    }
    std::vector<const WordParams<double>*> ptrs;
    for (const auto& p : ps) {
        ptrs.push_back(&p);
    }
    const auto eps = draw_eps(model, k, rng);
    std::vector<double> out;
    energies_generic<double>(model.geometry(), q, ptrs, eps, model.dim(), out);
    return out;
}

auto energy(const EmbeddingModel& model, std::int32_t s, std::int32_t t,
            std::size_t k, Rng& rng) -> double
{
    const std::int32_t targets[] = {t};
    return energies_from(model, s, targets, k, rng)[0];
}

// ---------------------------------------------------------------- loss

namespace {

/// Closed-form KL(q_s || q_t) of two euclidean words and, when
/// `scale` != 0, adds scale * dKL/dparams into grad.
auto euclid_kl_grad(const EmbeddingModel& m, std::int32_t s, std::int32_t t,
                    double scale, std::vector<double>& grad) -> double
{
    const std::size_t n = m.dim();
    const auto ms = m.location(s);
    const auto mt = m.location(t);
    const auto so = static_cast<std::size_t>(s) * n;
    const auto to = static_cast<std::size_t>(t) * n;
    double kl = 0.0;
    if (m.cov() == CovKind::unit) {
        for (std::size_t i = 0; i < n; ++i) {
            const double d = mt[i] - ms[i];
            kl += 0.5 * d * d;
            if (scale != 0.0) {
                grad[so + i] -= scale * d;
                grad[to + i] += scale * d;
            }
        }
        return kl;
    }
    const auto rs = m.raw_sigma(s);
    const auto rt = m.raw_sigma(t);
    const std::size_t off = m.raw_offset();
    for (std::size_t i = 0; i < n; ++i) {
        const double ss = softplus(rs[i]) + kSigmaFloor;
        const double st = softplus(rt[i]) + kSigmaFloor;
        const double r = ss / st;
        const double d = (mt[i] - ms[i]) / st;
        kl += 0.5 * (r * r + d * d - 1.0) - std::log(r);
        if (scale != 0.0) {
            // d sigma / d raw is the logistic function
            const double gs = 1.0 / (1.0 + std::exp(-rs[i]));
            const double gt = 1.0 / (1.0 + std::exp(-rt[i]));
            grad[so + i] -= scale * d / st;
            grad[to + i] += scale * d / st;
            grad[off + so + i] += scale * (r / st - 1.0 / ss) * gs;
            grad[off + to + i] += scale * ((1.0 - r * r - d * d) / st) * gt;
        }
    }
    return kl;
}

auto euclid_batch_loss(const EmbeddingModel& model,
                       std::span<const Triple> triples, double margin)
    -> LossGrad
{
    LossGrad out {0.0, std::vector<double>(model.params().size(), 0.0)};
    const double w = 1.0 / static_cast<double>(triples.size());
    std::vector<double> scratch;
    for (const auto& tr : triples) {
        const double pos = euclid_kl_grad(model, tr.s, tr.t, 0.0, scratch);
        const double neg = euclid_kl_grad(model, tr.s, tr.neg, 0.0, scratch);
        const double h = margin + pos - neg;
        if (h > 0.0) {
            out.loss += w * h;
            (void)euclid_kl_grad(model, tr.s, tr.t, w, out.grad);
            (void)euclid_kl_grad(model, tr.s, tr.neg, -w, out.grad);
        }
    }
    return out;
}

} // namespace

auto batch_loss(const EmbeddingModel& model, std::span<const Triple> triples,
                double margin, std::size_t k, Rng& rng) -> LossGrad
{
    LossGrad out {0.0, std::vector<double>(model.params().size(), 0.0)};
    if (triples.empty()) {
        return out;
    }
    if (model.geometry() == Geometry::euclidean) {
        return euclid_batch_loss(model, triples, margin);
    }
    const std::size_t n = model.dim();
    const bool diag = model.cov() == CovKind::diagonal;

    thread_local Tape tape;
    tape.clear();

    // leaves for every word touched, in order of first use
    std::vector<std::int32_t> words;
    std::vector<std::int32_t> slot(model.vocab_size(), -1);
    auto touch = [&](std::int32_t w) {
        if (slot[static_cast<std::size_t>(w)] < 0) {
            slot[static_cast<std::size_t>(w)] =
                static_cast<std::int32_t>(words.size());
            words.push_back(w);
        }
    };
    for (const auto& tr : triples) {
        touch(tr.s);
        touch(tr.t);
        touch(tr.neg);
    }
    std::vector<Var> h(words.size() * n);
    std::vector<Var> raw(diag ? words.size() * n : 0);
    std::vector<WordParams<Var>> wp;
    wp.reserve(words.size());
    for (std::size_t i = 0; i < words.size(); ++i) {
        const auto loc = model.location(words[i]);
        for (std::size_t d = 0; d < n; ++d) {
            h[i * n + d] = tape.variable(loc[d]);
        }
        std::span<const Var> rs;
        if (diag) {
            const auto r = model.raw_sigma(words[i]);
            for (std::size_t d = 0; d < n; ++d) {
                raw[i * n + d] = tape.variable(r[d]);
            }
            rs = std::span<const Var> {raw}.subspan(i * n, n);
        }
        wp.push_back(make_params<Var>(
            model, std::span<const Var> {h}.subspan(i * n, n), rs));
    }

    // group triples by source so each source samples once
    std::vector<std::size_t> order(triples.size());
    std::iota(order.begin(), order.end(), std::size_t {0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return slot[static_cast<std::size_t>(triples[a].s)]
               < slot[static_cast<std::size_t>(triples[b].s)];
    });

    Var total {0.0};
    std::vector<Var> hinge;
    std::vector<Var> es;
    std::vector<const WordParams<Var>*> targets;
    std::vector<std::int32_t> target_ids;
    for (std::size_t a = 0; a < order.size();) {
        const auto s = triples[order[a]].s;
        std::size_t b = a;
        while (b < order.size() && triples[order[b]].s == s) {
            ++b;
        }
        target_ids.clear();
        for (std::size_t i = a; i < b; ++i) {
            target_ids.push_back(triples[order[i]].t);
            target_ids.push_back(triples[order[i]].neg);
        }
        std::sort(target_ids.begin(), target_ids.end());
        target_ids.erase(std::unique(target_ids.begin(), target_ids.end()),
                         target_ids.end());
        targets.clear();
        for (auto t : target_ids) {
            targets.push_back(&wp[static_cast<std::size_t>(
                slot[static_cast<std::size_t>(t)])]);
        }
        const auto eps = draw_eps(model, k, rng);
        energies_generic<Var>(model.geometry(),
                              wp[static_cast<std::size_t>(
                                  slot[static_cast<std::size_t>(s)])],
                              targets, eps, n, es);
        auto energy_of = [&](std::int32_t t) -> const Var& {
            const auto it =
                std::lower_bound(target_ids.begin(), target_ids.end(), t);
            return es[static_cast<std::size_t>(it - target_ids.begin())];
        };
        for (std::size_t i = a; i < b; ++i) {
            const auto& tr = triples[order[i]];
            hinge.push_back(
                ad::max_const0(margin + energy_of(tr.t) - energy_of(tr.neg)));
        }
        a = b;
    }
    total = ad::sum(hinge) * (1.0 / static_cast<double>(triples.size()));
    out.loss = total.value();
    if (total.is_constant()) {
        return out;
    }
    const auto g = tape.backward(total);
    for (std::size_t i = 0; i < words.size(); ++i) {
        const auto w = static_cast<std::size_t>(words[i]);
        for (std::size_t d = 0; d < n; ++d) {
            out.grad[w * n + d] = g.wrt(h[i * n + d]);
            if (diag) {
                out.grad[model.raw_offset() + w * n + d] = g.wrt(raw[i * n + d]);
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------- train

auto train(EmbeddingModel& model, const Vocabulary& vocab,
           const EmbedConfig& config, const EpochCallback& on_epoch)
    -> TrainLog
{
    config.validate();
    if (model.vocab_size() != vocab.size()) {
        throw ValidationError {"train: model and vocabulary sizes differ"};
    }
    TrainLog log;
    if (config.epochs == 0 || vocab.edges().empty()) {
        return log;
    }
    Rng rng {mix_seed(config.seed, 0x656d62)};
    Optimizer opt {config.optimizer};
    const auto linked = vocab.linked();
    const auto v = vocab.size();
    std::vector<Edge> edges = vocab.edges();
    std::vector<Triple> triples;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(edges.begin(), edges.end(), rng.engine());
        const double lr = config.learning_rate(epoch);
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t start = 0; start < edges.size(); start += config.batch) {
            const std::size_t stop = std::min(edges.size(), start + config.batch);
            triples.clear();
            for (std::size_t e = start; e < stop; ++e) {
                const auto s = edges[e].child;
                const auto& excl = linked[static_cast<std::size_t>(s)];
                if (excl.size() + 1 >= v) {
                    continue; // linked to everything: no negatives exist
                }
                for (std::size_t j = 0; j < config.negatives; ++j) {
                    std::int32_t neg;
                    do {
                        neg = static_cast<std::int32_t>(rng.index(v));
                    } while (neg == s
                             || std::binary_search(excl.begin(), excl.end(), neg));
                    triples.push_back({s, edges[e].parent, neg});
                }
            }
            if (triples.empty()) {
                continue;
            }
            LossGrad lg;
            try {
                lg = batch_loss(model, triples, config.margin, config.kl_samples,
                                rng);
            } catch (const DomainError& e) {
                throw RuntimeFailure {"train: diverged in epoch "
                                      + std::to_string(epoch) + " (" + e.what()
                                      + ")"};
            }
            if (!std::isfinite(lg.loss)) {
                throw RuntimeFailure {"train: loss became non-finite in epoch "
                                      + std::to_string(epoch)};
            }
            opt.step(model.params(), lg.grad, lr);
            sum += lg.loss * static_cast<double>(stop - start);
            count += stop - start;
        }
        const double mean = count > 0 ? sum / static_cast<double>(count) : 0.0;
        log.epoch_loss.push_back(mean);
        for (double p : model.params()) {
            if (!std::isfinite(p)) {
                throw RuntimeFailure {"train: parameters became non-finite in epoch "
                                      + std::to_string(epoch)};
            }
        }
        if (on_epoch) {
            on_epoch(epoch, mean, lr);
        }
    }
    return log;
}

// ------------------------------------------------------------ evaluation

auto average_precision(std::span<const std::int32_t> ranked,
                       std::span<const std::int32_t> relevant) -> double
{
    if (relevant.empty()) {
        return 0.0;
    }
    double acc = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (std::binary_search(relevant.begin(), relevant.end(), ranked[i])) {
            ++hits;
            acc += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return acc / static_cast<double>(relevant.size());
}

auto score_query(std::int32_t query, std::span<const double> energies,
                 std::span<const std::int32_t> relevant) -> QueryScore
{
    std::vector<std::int32_t> ranked;
    ranked.reserve(energies.size());
    for (std::int32_t t = 0; t < static_cast<std::int32_t>(energies.size()); ++t) {
        if (t != query) {
            ranked.push_back(t);
        }
    }
    std::sort(ranked.begin(), ranked.end(), [&](std::int32_t a, std::int32_t b) {
        const double ea = energies[static_cast<std::size_t>(a)];
        const double eb = energies[static_cast<std::size_t>(b)];
        return ea < eb || (ea == eb && a < b);
    });
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (std::binary_search(relevant.begin(), relevant.end(), ranked[i])) {
            rank_sum += static_cast<double>(i + 1);
        }
    }
    return {average_precision(ranked, relevant),
            rank_sum / static_cast<double>(relevant.size())};
}

auto evaluate_reconstruction(const EmbeddingModel& model,
                             const Vocabulary& vocab, std::size_t k_eval,
                             std::uint64_t seed) -> Reconstruction
{
    if (model.vocab_size() != vocab.size()) {
        throw ValidationError {"evaluate: model and vocabulary sizes differ"};
    }
    if (k_eval < 1) {
        throw ValidationError {"evaluate: need at least one sample"};
    }
    const auto parents = vocab.parents_of();
    const std::size_t v = vocab.size();
    std::vector<WordParams<double>> ps;
    ps.reserve(v);
    for (std::int32_t w = 0; w < static_cast<std::int32_t>(v); ++w) {
        ps.push_back(word_params(model, w));
    }
    std::vector<const WordParams<double>*> all;
    for (const auto& p : ps) {
        all.push_back(&p);
    }
    double ap_sum = 0.0;
    double rank_sum = 0.0;
    std::size_t queries = 0;
    std::vector<double> es;
    for (std::int32_t s = 0; s < static_cast<std::int32_t>(v); ++s) {
        const auto& rel = parents[static_cast<std::size_t>(s)];
        if (rel.empty()) {
            continue;
        }
        Rng rng {mix_seed(seed, static_cast<std::uint64_t>(s))};
        const auto eps = draw_eps(model, k_eval, rng);
        energies_generic<double>(model.geometry(),
                                 ps[static_cast<std::size_t>(s)], all, eps,
                                 model.dim(), es);
        const auto q = score_query(s, es, rel);
        ap_sum += q.ap;
        rank_sum += q.mean_rank;
        ++queries;
    }
    if (queries == 0) {
        return {0.0, 0.0, 0};
    }
    return {ap_sum / static_cast<double>(queries),
            rank_sum / static_cast<double>(queries), queries};
}

// ----------------------------------------------------------- persistence

namespace {

constexpr int kCheckpointVersion = 1;

} // namespace

void save_checkpoint(const EmbeddingModel& model, const Vocabulary& vocab,
                     const std::filesystem::path& path)
{
    nlohmann::json header;
    header["version"] = kCheckpointVersion;
    header["n"] = model.dim();
    header["V"] = model.vocab_size();
    header["cov_kind"] = to_string(model.cov());
    header["geometry"] = to_string(model.geometry());
    header["tokens"] = vocab.tokens();
    std::ofstream out {path, std::ios::binary};
    if (!out) {
        throw RuntimeFailure {path.string() + ": cannot open for writing"};
    }
    out << header.dump() << '\n';
    detail::write_le(out, model.params());
    if (!out) {
        throw RuntimeFailure {path.string() + ": write failed"};
    }
}

auto load_checkpoint(const std::filesystem::path& path) -> Checkpoint
{
    std::ifstream in {path, std::ios::binary};
    if (!in) {
        throw RuntimeFailure {path.string() + ": cannot open checkpoint"};
    }
    std::string line;
    std::getline(in, line);
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError {path.string() + ": bad checkpoint header: "
                               + e.what()};
    }
    if (header.value("version", 0) != kCheckpointVersion) {
        throw ValidationError {path.string()
                               + ": unsupported checkpoint version"};
    }
    const auto n = header.at("n").get<std::size_t>();
    const auto v = header.at("V").get<std::size_t>();
    EmbeddingModel model {v, n,
                          parse_geometry(header.at("geometry").get<std::string>()),
                          parse_cov_kind(header.at("cov_kind").get<std::string>())};
    detail::read_le(in, model.params());
    if (!in) {
        throw ValidationError {path.string() + ": truncated parameter block"};
    }
    auto tokens = header.at("tokens").get<std::vector<std::string>>();
    if (tokens.size() != v) {
        throw ValidationError {path.string() + ": token count does not match V"};
    }
    return {std::move(model), std::move(tokens)};
}

void export_csv(const EmbeddingModel& model, const Vocabulary& vocab,
                std::ostream& out)
{
    out << "token";
    for (std::size_t i = 1; i <= model.dim(); ++i) {
        out << ",x" << i;
    }
    out << '\n' << std::setprecision(17);
    for (std::int32_t w = 0; w < static_cast<std::int32_t>(model.vocab_size());
         ++w) {
        out << vocab.token(w);
        std::vector<double> x;
        if (model.geometry() == Geometry::hyperbolic) {
            x = to_poincare(model.mean_point(w));
        } else {
            const auto loc = model.location(w);
            x.assign(loc.begin(), loc.end());
        }
        for (double xi : x) {
            out << ',' << xi;
        }
        out << '\n';
    }
}

} // namespace hyperwrap::embed
