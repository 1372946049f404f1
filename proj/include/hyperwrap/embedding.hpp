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

#pragma once

// Probabilistic embedding of a directed hierarchy. Every word is a
// distribution; the energy of a (child, parent) link is KL(q_child ||
// q_parent) and training pushes true links below sampled non-links by a
// margin.

#include "hyperwrap/geometry.hpp"
#include "hyperwrap/optim.hpp"
#include "hyperwrap/random.hpp"
#include "hyperwrap/wrapped_normal.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace hyperwrap::embed {

struct Edge
{
    std::int32_t child;
    std::int32_t parent;

    auto operator<=>(const Edge&) const = default;
};

class Vocabulary
{
public:
    Vocabulary() = default;

    /// Id of `token`, adding it when new.
    auto intern(const std::string& token) -> std::int32_t;
    /// Adds a (child, parent) link; self links and duplicates are ignored.
    /// Returns whether the edge was new.
    auto add_edge(std::int32_t child, std::int32_t parent) -> bool;

    [[nodiscard]] auto size() const noexcept -> std::size_t
    {
        return tokens_.size();
    }
    [[nodiscard]] auto token(std::int32_t id) const -> const std::string&;
    [[nodiscard]] auto id(const std::string& token) const -> std::int32_t;
    [[nodiscard]] auto tokens() const noexcept
        -> const std::vector<std::string>&
    {
        return tokens_;
    }
    [[nodiscard]] auto edges() const noexcept -> const std::vector<Edge>&
    {
        return edges_;
    }

    /// Sorted parents of each word (the true neighbors of a query).
    [[nodiscard]] auto parents_of() const
        -> std::vector<std::vector<std::int32_t>>;
    /// Sorted parents and children of each word (excluded as negatives).
    [[nodiscard]] auto linked() const -> std::vector<std::vector<std::int32_t>>;

private:
    std::vector<std::string> tokens_;
    std::map<std::string, std::int32_t, std::less<>> ids_;
    std::vector<Edge> edges_;
    std::vector<std::vector<std::int32_t>> adjacency_; // for dedup
};

/// Reads "child<TAB>parent" lines; '#' starts a comment line, blank lines
/// are skipped. `source` names the input in error messages.
[[nodiscard]] auto read_edges(std::istream& in, const std::string& source)
    -> Vocabulary;
[[nodiscard]] auto read_edges(const std::filesystem::path& path)
    -> Vocabulary;

/// Adds every implied (descendant, ancestor) pair.
[[nodiscard]] auto transitive_closure(const Vocabulary& vocab) -> Vocabulary;

/// Transitive closure of a complete binary tree of the given depth; node
/// i (BFS order, token "n<i>") has children 2i+1 and 2i+2.
[[nodiscard]] auto balanced_tree_closure(std::size_t depth) -> Vocabulary;

struct EmbedConfig
{
    Geometry geometry {Geometry::hyperbolic};
    CovKind cov {CovKind::diagonal};
    std::size_t dim {5};
    double margin {1.0};
    std::size_t negatives {10};
    std::size_t batch {64}; // positive links per step
    std::size_t epochs {100};
    OptimizerKind optimizer {OptimizerKind::sgd};
    double lr {0.1};
    double lr_after_burnin {0.1 / 40.0};
    std::size_t burnin_epochs {50};
    std::size_t kl_samples {8};    // per energy during training
    std::size_t eval_samples {512}; // per query during evaluation
    double init_std {0.01};
    double init_sigma {1.0};
    std::uint64_t seed {0};

    /// Throws ValidationError on inconsistent settings.
    void validate() const;
    [[nodiscard]] auto learning_rate(std::size_t epoch) const -> double
    {
        return epoch < burnin_epochs ? lr : lr_after_burnin;
    }
};

/// sigma = softplus(raw) + kSigmaFloor
inline constexpr double kSigmaFloor = 1e-6;

class EmbeddingModel
{
public:
    EmbeddingModel(std::size_t vocab, std::size_t dim, Geometry geometry,
                   CovKind cov);

    /// N(0, init_std) locations and sigma = init_sigma everywhere.
    void initialize(double init_std, double init_sigma, Rng& rng);

    [[nodiscard]] auto vocab_size() const noexcept -> std::size_t
    {
        return vocab_;
    }
    [[nodiscard]] auto dim() const noexcept -> std::size_t { return dim_; }
    [[nodiscard]] auto geometry() const noexcept -> Geometry
    {
        return geometry_;
    }
    [[nodiscard]] auto cov() const noexcept -> CovKind { return cov_; }

    /// Flat parameters: h (vocab x dim, row-major), then raw sigma
    /// (vocab x dim) when cov is diagonal.
    [[nodiscard]] auto params() noexcept -> std::vector<double>&
    {
        return params_;
    }
    [[nodiscard]] auto params() const noexcept -> const std::vector<double>&
    {
        return params_;
    }
    [[nodiscard]] auto location(std::int32_t w) const -> std::span<const double>;
    [[nodiscard]] auto raw_sigma(std::int32_t w) const
        -> std::span<const double>;
    [[nodiscard]] auto sigma(std::int32_t w) const -> std::vector<double>;
    [[nodiscard]] auto raw_offset() const noexcept -> std::size_t
    {
        return vocab_ * dim_;
    }

    /// Hyperboloid mean of word w (hyperbolic geometry only).
    [[nodiscard]] auto mean_point(std::int32_t w) const -> LorentzPoint;
    [[nodiscard]] auto distribution(std::int32_t w) const -> WrappedNormal;

private:
    std::size_t vocab_;
    std::size_t dim_;
    Geometry geometry_;
    CovKind cov_;
    std::vector<double> params_;
};

/// Model sized for `vocab` words and initialized from config.seed.
[[nodiscard]] auto make_model(std::size_t vocab, const EmbedConfig& config)
    -> EmbeddingModel;

/// KL(q_s || q_t): Monte-Carlo with k samples for hyperbolic geometry,
/// closed form for euclidean (k and rng unused).
[[nodiscard]] auto energy(const EmbeddingModel& model, std::int32_t s,
                          std::int32_t t, std::size_t k, Rng& rng) -> double;

/// Energies E(s, t) for every t in `targets`, all from the same k draws of
/// q_s (common random numbers).
[[nodiscard]] auto energies_from(const EmbeddingModel& model, std::int32_t s,
                                 std::span<const std::int32_t> targets,
                                 std::size_t k, Rng& rng)
    -> std::vector<double>;

struct Triple
{
    std::int32_t s;
    std::int32_t t;   // true neighbor
    std::int32_t neg; // non-neighbor
};

struct LossGrad
{
    double loss;
    std::vector<double> grad; // same layout as model.params()
};

/// Mean hinge max(0, m + E(s,t) - E(s,t')) over `triples` with a gradient
/// for every parameter. Each distinct s draws `k` noise vectors from `rng`
/// once and reuses them for all of its targets.
[[nodiscard]] auto batch_loss(const EmbeddingModel& model,
                              std::span<const Triple> triples, double margin,
                              std::size_t k, Rng& rng) -> LossGrad;

struct TrainLog
{
    std::vector<double> epoch_loss;
};

using EpochCallback =
    std::function<void(std::size_t epoch, double loss, double lr)>;

/// SGD or Adam over shuffled positive links with fresh negatives each
/// epoch. Deterministic for a fixed config.seed.
[[nodiscard]] auto train(EmbeddingModel& model, const Vocabulary& vocab,
                         const EmbedConfig& config,
                         const EpochCallback& on_epoch = {}) -> TrainLog;

struct Reconstruction
{
    double map;
    double mean_rank;
    std::size_t queries;
};

/// Average precision of one ranking; `ranked` lists candidate ids best
/// first, `relevant` is sorted.
[[nodiscard]] auto average_precision(std::span<const std::int32_t> ranked,
                                     std::span<const std::int32_t> relevant)
    -> double;

/// Ranks all other words by ascending score (ties by id) and returns the
/// query's average precision and mean raw rank of the relevant ids.
struct QueryScore
{
    double ap;
    double mean_rank;
};
[[nodiscard]] auto score_query(std::int32_t query,
                               std::span<const double> energies,
                               std::span<const std::int32_t> relevant)
    -> QueryScore;

/// MAP and mean rank over every word with at least one parent. Draws for
/// query s come from Rng(mix_seed(seed, s)).
[[nodiscard]] auto evaluate_reconstruction(const EmbeddingModel& model,
                                           const Vocabulary& vocab,
                                           std::size_t k_eval,
                                           std::uint64_t seed)
    -> Reconstruction;

// ------------------------------------------------------------ persistence

void save_checkpoint(const EmbeddingModel& model, const Vocabulary& vocab,
                     const std::filesystem::path& path);

struct Checkpoint
{
    EmbeddingModel model;
    std::vector<std::string> tokens;
};

[[nodiscard]] auto load_checkpoint(const std::filesystem::path& path)
    -> Checkpoint;

/// CSV "token,x1,...,xn" of Poincare-ball coordinates (hyperbolic) or raw
/// locations (euclidean).
void export_csv(const EmbeddingModel& model, const Vocabulary& vocab,
                std::ostream& out);

} // namespace hyperwrap::embed
