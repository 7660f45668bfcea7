#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "scog/probe/archive.hpp"
#include "scog/probe/pairs.hpp"

namespace scog::probe {

enum class Arch { linear, sim_mlp, enh_mlp, attention };
std::string to_string(Arch arch);
Arch parse_arch(const std::string& name);

/// Parameters for one architecture at hidden size d. Blocks not used by the
/// architecture stay empty.
///   linear    w (2d), b
///   sim_mlp   W1 (d x 2d), b1 (d), W2 (2 x d), b2 (2)
///   enh_mlp   W1 (d x 4d), b1 (d), W2 (2 x d), b2 (2)
///   attention Wq (d x d), Wk (d x d)
struct ProbeParams {
  Arch arch = Arch::linear;
  std::size_t d = 0;
  Vector w;
  double b = 0.0;
  Matrix W1;
  Vector b1;
  Matrix W2;
  Vector b2;
  Matrix Wq;
  Matrix Wk;

  static ProbeParams zeros(Arch arch, std::size_t d);
  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) per block, biases included.
  static ProbeParams random(Arch arch, std::size_t d, std::uint64_t seed);
  /// Wq = Wk = I.
  static ProbeParams identity_attention(std::size_t d);

  /// Block names in a fixed order, for errors and serialization.
  std::vector<std::string> block_names() const;
  std::vector<double> flatten() const;
  void unflatten(std::span<const double> values);
  std::size_t size() const;

  nlohmann::json to_json() const;
  static ProbeParams from_json(const nlohmann::json& j);
};

double sigmoid(double x);

/// Input feature of the pair probes: [e; a] or [e; a; |e - a|; e * a].
Vector pair_features(Arch arch, const Vector& h_e, const Vector& h_a);

/// Positive-class probability for linear, sim_mlp and enh_mlp. For the MLPs
/// this is softmax(W2 relu(W1 z + b1) + b2)[1].
double forward(const ProbeParams& params, const Vector& h_e, const Vector& h_a);
double forward_linear(const ProbeParams& params, const Vector& h_e, const Vector& h_a);
double forward_sim_mlp(const ProbeParams& params, const Vector& h_e, const Vector& h_a);
double forward_enh_mlp(const ProbeParams& params, const Vector& h_e, const Vector& h_a);

/// softmax_j((Wq h_e) . (Wk c_j) / sqrt(d)).
Vector attention_scores(const ProbeParams& params, const Vector& h_e,
                        const std::vector<Vector>& candidates);

struct LossAndGrad {
  double loss = 0.0;
  ProbeParams grad;  // same shapes as the parameters
};

/// Mean binary cross-entropy (linear) or two-class cross-entropy (MLPs).
LossAndGrad loss_and_gradients(const ProbeParams& params, std::span<const PairExample> batch);
LossAndGrad loss_and_gradients(const ProbeParams& params,
                               std::span<const PairExample* const> batch);
/// Mean categorical cross-entropy over each candidate set.
LossAndGrad loss_and_gradients(const ProbeParams& params,
                               std::span<const AttentionExample> batch);
LossAndGrad loss_and_gradients(const ProbeParams& params,
                               std::span<const AttentionExample* const> batch);

struct ProbeMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  double threshold = 0.5;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  bool no_positives = false;            // recall reported as 0
  bool no_predicted_positives = false;  // precision reported as 0
};

nlohmann::json to_json(const ProbeMetrics& m);
ProbeMetrics probe_metrics_from_json(const nlohmann::json& j);

/// Predicts positive iff probability >= threshold.
ProbeMetrics evaluate_probe(const ProbeParams& params, std::span<const PairExample> pairs,
                            double threshold = 0.5);
ProbeMetrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn,
                                 double threshold);

/// Share of candidate sets whose highest score is the target.
double attention_accuracy(const ProbeParams& params, std::span<const AttentionExample> examples);

struct TrainConfig {
  int epochs = 5;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  std::size_t batch_size = 32;
  double split_fraction = 0.7;
  double negative_ratio = 1.13;
  std::size_t max_steps = 0;  // 0 = no cap
  double threshold = 0.5;
};

void validate(const TrainConfig& config);

struct EpochStats {
  int epoch = 0;
  std::size_t steps = 0;
  double train_loss = 0.0;  // mean loss over the training set after the epoch
  ProbeMetrics heldout;     // pair probes
  double heldout_accuracy = 0.0;
};

nlohmann::json to_json(const EpochStats& e);

struct TrainResult {
  ProbeParams params;
  std::vector<EpochStats> history;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> heldout_indices;
};

/// Seeded split into train/held-out by `split_fraction`.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n,
                                                                            double fraction,
                                                                            std::uint64_t seed);

/// Mini-batch gradient descent. Splits `pairs` per config first.
TrainResult train_probe(const std::vector<PairExample>& pairs, Arch arch,
                        const TrainConfig& config);
/// Trains on `train`, reporting held-out metrics on `heldout` each epoch.
TrainResult train_probe(const std::vector<PairExample>& train,
                        const std::vector<PairExample>& heldout, Arch arch,
                        const TrainConfig& config);

/// Attention probe with categorical cross-entropy; starts from identity
/// matrices when `init` is not given.
TrainResult train_attention(const std::vector<AttentionExample>& examples,
                            const TrainConfig& config,
                            std::optional<ProbeParams> init = std::nullopt);

struct ScoreSummary {
  double avg = 0.0;
  double max = 0.0;
  double min = 0.0;
  std::size_t count = 0;
};

struct AttentionSummary {
  ScoreSummary target;
  ScoreSummary non_target;
  std::size_t examples = 0;
};

nlohmann::json to_json(const AttentionSummary& s);
AttentionSummary attention_summary_from_json(const nlohmann::json& j);

/// Aggregates target and non-target scores over examples with at least two
/// candidates. Throws ValidationError if there are none.
AttentionSummary attention_analysis(const ProbeParams& params,
                                    std::span<const AttentionExample> examples);

}  // namespace scog::probe
