#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "goar/common.hpp"
#include "goar/data.hpp"

namespace goar {

struct DenseLayer {
    Matrix weights;  // d_out x d_in
    Vector bias;     // d_out
};

// Feed-forward network: ReLU after every layer except the last, which emits
// raw logits.
struct ModelParams {
    std::vector<DenseLayer> layers;

    Index input_dim() const { return layers.front().weights.cols(); }
    Index output_dim() const { return layers.back().weights.rows(); }
    void validate() const;
};

enum class Optimizer { adam, sgd };

struct TrainConfig {
    double learning_rate = 3e-4;
    std::size_t batch_size = 256;
    std::size_t max_epochs = 200;
    std::size_t early_stop_patience = 5;
    Optimizer optimizer = Optimizer::adam;
    std::uint64_t seed = 0;
    std::vector<std::size_t> hidden_layers{128, 128, 128};
    double validation_fraction = 0.2;
    double l2 = 1e-4;  // ridge strength for fit_logistic only

    void validate() const;
};

// Multinomial logistic regression: logits = weights * x + bias.
struct LinearModel {
    Matrix weights;  // c x d
    Vector bias;     // c
};

// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
ModelParams init_mlp(std::span<const std::size_t> layer_sizes, std::uint64_t seed);

// Fresh network of shape [input_dim, cfg.hidden_layers..., n_classes].
ModelParams init_classifier(Index input_dim, int n_classes, const TrainConfig& cfg);

Vector forward(const ModelParams& model, const Vector& x);
// Rows of `inputs` are samples; returns one row of logits per sample.
Matrix forward_batch(const ModelParams& model, const Matrix& inputs);

// d logit[class_index] / dx by reverse-mode differentiation.
Vector input_gradient(const ModelParams& model, const Vector& x, Index class_index);
// Row i holds d logit[classes[i]] / d inputs.row(i).
Matrix input_gradients(const ModelParams& model, const Matrix& inputs, std::span<const int> classes);

// Minibatch softmax cross-entropy training with early stopping on the
// validation set. Returns the parameters with the best validation accuracy
// (validation loss breaks ties).
ModelParams train(ModelParams model, const Dataset& train_set, const Dataset& val_set, const TrainConfig& cfg);

// Same, but every training-minibatch input coordinate is zeroed independently
// with probability mask_prob. mask_prob = 0 is exactly `train`.
ModelParams train_with_input_masking(ModelParams model, const Dataset& train_set, const Dataset& val_set,
                                     const TrainConfig& cfg, double mask_prob);

// Seeded init + seeded validation split of `data` + train.
ModelParams fit_classifier(const Dataset& data, const TrainConfig& cfg);

// Ridge-regularized multinomial logistic regression fitted by damped Newton
// iterations until the gradient norm of the mean loss is below 1e-10.
LinearModel fit_logistic(const Dataset& train_set, const TrainConfig& cfg);

// Mean softmax cross-entropy plus cfg.l2/2 * |theta|^2; what fit_logistic minimizes.
double logistic_objective(const LinearModel& model, const Dataset& data, double l2);

Vector forward(const LinearModel& model, const Vector& x);

// Index of the largest logit; lowest index wins ties.
Index argmax_class(const Eigen::Ref<const Vector>& logits);

// Per-sample correctness of argmax predictions.
std::vector<bool> correct_predictions(const ModelParams& model, const Dataset& data);

double accuracy(const ModelParams& model, const Dataset& data);
double accuracy(const LinearModel& model, const Dataset& data);

}  // namespace goar
