#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "alforge/dataset.hpp"
#include "alforge/matrix.hpp"

namespace alforge {

struct MlpConfig {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden_dims = {16, 8};
    double drop_prob = 0.8;

    /// Throws ConfigError on degenerate dimensions or drop_prob outside [0,1).
    /// An empty hidden stack is allowed and degenerates to logistic regression.
    void validate() const;
};

/// ReLU MLP with a single-logit head. Immutable once trained; every read
/// operation below is safe to call concurrently.
struct MlpModel {
    MlpConfig config;
    std::vector<Matrix> weights;              // layer l: (fan_in x fan_out), last fan_out = 1
    std::vector<std::vector<double>> biases;  // one vector per layer

    std::size_t depth() const { return weights.size(); }
    std::size_t last_hidden_dim() const;  // width feeding the output unit (input_dim if no hidden)
    void validate() const;                // shape chain + finiteness
};

/// He-style init: weights ~ N(0, 2/fan_in), biases zero. Bit-reproducible per seed.
MlpModel build_model(const MlpConfig& config, std::uint64_t seed);

/// One logit per row. Deterministic unless a dropout seed is given, in which
/// case each hidden unit is zeroed independently with probability drop_prob
/// and survivors are rescaled by 1/(1-drop_prob).
std::vector<double> forward_logits(const MlpModel& model, const Matrix& X,
                                   std::optional<std::uint64_t> dropout_seed = std::nullopt);

/// sigma(logit), stable for |z| up to 500 and clamped to the open interval (0,1).
std::vector<double> predict_proba(const MlpModel& model, const Matrix& X);
double sigmoid(double z);

/// Numerically stable binary cross-entropy from a logit, in nats.
double bce_from_logit(double z, int y);

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t max_epochs = 200;
    std::size_t batch_size = 64;
    std::size_t patience = 20;  // early-stopping rounds on validation AUC
    std::uint64_t seed = 0;
    // Keep the last epoch's parameters instead of the best-validation ones;
    // useful when the calibrated logit surface matters more than ranking.
    bool keep_final_epoch = false;
    double lr_decay = 1.0;  // per-epoch multiplier on the learning rate

    void validate() const;
};

struct TrainResult {
    MlpModel model;                    // parameters of the best-validation epoch
    std::vector<double> loss_history;  // mean training BCE per epoch actually run
    std::size_t best_epoch = 0;
    bool single_class_labels = false;  // labeled set had one class; trained anyway
    bool val_metric_fallback = false;  // validation AUC undefined, used -loss instead
};

/// Adam on mean BCE with dropout active during training. Deterministic given
/// tc.seed: shuffle order, batch masks and the kept parameters are all fixed.
TrainResult train(const MlpModel& model, const Dataset& labeled, const Dataset& val,
                  const TrainConfig& tc);

/// Per-sample local linear coefficients: row i is the gradient of the logit
/// at x_i, and offsets[i] = z_i - I_i . x_i. Within one ReLU activation
/// region the logit is exactly I . x + b.
struct InterpretationMatrix {
    Matrix weights;
    std::vector<double> offsets;
};

InterpretationMatrix input_gradients(const MlpModel& model, const Matrix& X);

/// Activations feeding the output unit (the input itself when depth is 1).
Matrix last_layer_embedding(const MlpModel& model, const Matrix& X);

/// Per-sample on/off configuration of every hidden ReLU, flattened layer by
/// layer. Inputs sharing a pattern share one local linear region.
std::vector<std::vector<std::uint8_t>> activation_patterns(const MlpModel& model, const Matrix& X);

/// Expected gradient length: sum over y in {0,1} of p(y|x) * ||grad_W BCE||_2
/// over the weight matrices, with the expectation under the model's own label
/// posterior. Gradients of a linear map vanish with its input, so an all-zero
/// activation stack scores zero.
std::vector<double> egl_scores(const MlpModel& model, const Matrix& X);

/// Loss gradient w.r.t. the last-layer representation under the model's own
/// predicted label (ties at p = 0.5 resolve to 1): g = (p - y_hat) * w_out.
Matrix badge_embeddings(const MlpModel& model, const Matrix& X);

/// T stochastic forward passes per row; entry (i, t) is the probability from
/// pass t. Reproducible per seed. Throws ConfigError for T = 0.
Matrix mc_dropout_probs(const MlpModel& model, const Matrix& X, std::size_t T, std::uint64_t seed);

}  // namespace alforge
