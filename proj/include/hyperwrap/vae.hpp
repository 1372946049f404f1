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

// Variational autoencoder with a wrapped-normal (or Gaussian) latent,
// trained on noisy codes of a binary tree.

#include "hyperwrap/geometry.hpp"
#include "hyperwrap/random.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace hyperwrap::vae {

using Row = std::span<const std::uint8_t>;

/// Nodes of a complete binary tree in BFS order (children of i are 2i+1
/// and 2i+2). Code bit j of node u is 1 iff j lies on the root-to-u path,
/// so the Hamming distance of two codes equals their graph distance.
struct TreeDataset
{
    std::size_t depth {0};
    double flip_prob {0.0};
    std::size_t nodes {0};
    std::vector<std::uint8_t> clean;        // nodes x nodes
    std::vector<std::uint8_t> noisy;        // noisy_source.size() x nodes
    std::vector<std::int32_t> noisy_source; // node each noisy row came from

    [[nodiscard]] auto width() const noexcept -> std::size_t { return nodes; }
    [[nodiscard]] auto noisy_count() const noexcept -> std::size_t
    {
        return noisy_source.size();
    }
    [[nodiscard]] auto clean_row(std::size_t u) const -> Row;
    [[nodiscard]] auto noisy_row(std::size_t i) const -> Row;
    [[nodiscard]] auto clean_rows() const -> std::vector<Row>;
    [[nodiscard]] auto noisy_rows() const -> std::vector<Row>;
};

/// Path length between BFS-indexed nodes of a binary tree.
[[nodiscard]] auto tree_distance(std::size_t u, std::size_t v) -> std::size_t;
[[nodiscard]] auto hamming(Row a, Row b) -> std::size_t;

/// `per_node` noisy rows for every node, each bit flipped with
/// probability flip_prob. Throws ValidationError unless depth >= 1 and
/// 0 <= flip_prob < 0.5.
[[nodiscard]] auto generate_tree_dataset(std::size_t depth, double flip_prob,
                                         std::size_t per_node, Rng& rng)
    -> TreeDataset;

/// CSV "kind,node,b0,...": one clean row per node, then the noisy rows.
void write_dataset_csv(const TreeDataset& ds, std::ostream& out);
[[nodiscard]] auto read_dataset_csv(std::istream& in, const std::string& source)
    -> TreeDataset;

inline constexpr double kSigmaFloor = 1e-6;

/// Encoder input -> hidden -> hidden -> 2n (location, raw scale) and
/// decoder latent -> hidden -> hidden -> input logits, tanh hidden units.
/// The hyperbolic decoder reads the n+1 ambient coordinates of z.
class VaeModel
{
public:
    VaeModel(std::size_t input_dim, std::size_t latent_dim, std::size_t hidden,
             Geometry geometry, double beta);

    /// Glorot-uniform weights, zero biases.
    void initialize(Rng& rng);

    [[nodiscard]] auto input_dim() const noexcept -> std::size_t { return input_; }
    [[nodiscard]] auto latent_dim() const noexcept -> std::size_t
    {
        return latent_;
    }
    [[nodiscard]] auto hidden() const noexcept -> std::size_t { return hidden_; }
    [[nodiscard]] auto geometry() const noexcept -> Geometry { return geometry_; }
    [[nodiscard]] auto beta() const noexcept -> double { return beta_; }
    void set_beta(double beta);

    /// Encoder weights then decoder weights; each layer is W (out x in,
    /// column-major) followed by its bias.
    [[nodiscard]] auto params() noexcept -> std::vector<double>& { return params_; }
    [[nodiscard]] auto params() const noexcept -> const std::vector<double>&
    {
        return params_;
    }
    [[nodiscard]] auto encoder_size() const noexcept -> std::size_t
    {
        return encoder_size_;
    }

    struct Posterior
    {
        std::vector<double> location; // h
        std::vector<double> sigma;
    };
    [[nodiscard]] auto posterior(Row x) const -> Posterior;

    /// Posterior mean location: ambient hyperboloid coordinates (n+1) or
    /// the Gaussian mean (n).
    [[nodiscard]] auto embed(Row x) const -> std::vector<double>;

private:
    std::size_t input_;
    std::size_t latent_;
    std::size_t hidden_;
    Geometry geometry_;
    double beta_;
    std::size_t encoder_size_ {0};
    std::vector<double> params_;
};

struct ElboResult
{
    double elbo;  // batch mean
    double recon; // batch mean of E_q log p(x|z)
    double kl;    // batch mean KL estimate (closed form for euclidean)
    std::vector<double> grad; // d elbo / d params, empty unless requested
};

/// Mean ELBO over `batch` with k latent draws per row. The same draws feed
/// the reconstruction term and the Monte-Carlo KL (hyperbolic).
[[nodiscard]] auto elbo(const VaeModel& model, std::span<const Row> batch,
                        std::size_t k, Rng& rng, bool with_grad = true)
    -> ElboResult;

/// log p(x) estimated by importance sampling with `samples` posterior
/// draws.
[[nodiscard]] auto importance_log_likelihood(const VaeModel& model, Row x,
                                             std::size_t samples, Rng& rng)
    -> double;

struct VaeConfig
{
    Geometry geometry {Geometry::hyperbolic};
    std::size_t depth {6};
    double flip_prob {0.1};
    std::size_t per_node {10};
    std::size_t latent_dim {2};
    std::size_t hidden {100};
    double beta {1.0};
    std::size_t batch {64};
    std::size_t epochs {100};
    double lr {1e-3};
    std::size_t mc_samples {1};
    std::uint64_t seed {0};

    void validate() const;
};

/// Dataset and initial model for a run, both derived from config.seed.
[[nodiscard]] auto make_dataset(const VaeConfig& config) -> TreeDataset;
[[nodiscard]] auto make_model(std::size_t input_dim, const VaeConfig& config)
    -> VaeModel;

struct TrainLog
{
    std::vector<double> epoch_loss; // mean negative ELBO
};

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

/// Adam on the noisy rows, reshuffled each epoch. Throws RuntimeFailure
/// if the loss or a parameter becomes non-finite.
[[nodiscard]] auto train_vae(VaeModel& model, const TreeDataset& data,
                             const VaeConfig& config,
                             const EpochCallback& on_epoch = {}) -> TrainLog;

/// Pearson correlation between all-pairs Hamming distances of `rows` and
/// all-pairs latent distances of their embeddings.
[[nodiscard]] auto correlation_metric(const VaeModel& model,
                                      std::span<const Row> rows) -> double;

/// Same metric from precomputed embeddings (one per row).
[[nodiscard]] auto correlation_from_embeddings(
    Geometry g, std::span<const Row> rows,
    std::span<const std::vector<double>> embeddings) -> double;

/// Geodesic distance for ambient hyperboloid points, Euclidean otherwise.
[[nodiscard]] auto latent_distance(Geometry g, std::span<const double> a,
                                   std::span<const double> b) -> double;

void save_model(const VaeModel& model, const std::filesystem::path& path);
[[nodiscard]] auto load_model(const std::filesystem::path& path) -> VaeModel;

/// CSV "kind,index,node,x1,...,xn"; hyperbolic embeddings are given in
/// Poincare-ball coordinates.
void export_latent_csv(const VaeModel& model, const TreeDataset& data,
                       std::ostream& out);

} // namespace hyperwrap::vae
