#include "goar/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "goar/rng.hpp"

namespace goar {

void ModelParams::validate() const {
    if (layers.empty()) throw std::invalid_argument("ModelParams: no layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        if (layer.bias.size() != layer.weights.rows())
            throw std::invalid_argument("ModelParams: bias size mismatch in layer " + std::to_string(l));
        if (l > 0 && layer.weights.cols() != layers[l - 1].weights.rows())
            throw std::invalid_argument("ModelParams: layer " + std::to_string(l) + " input width " +
                                        std::to_string(layer.weights.cols()) + " != previous output width " +
                                        std::to_string(layers[l - 1].weights.rows()));
        if (!layer.weights.allFinite() || !layer.bias.allFinite())
            throw std::invalid_argument("ModelParams: non-finite entries in layer " + std::to_string(l));
    }
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (max_epochs < 1) throw std::invalid_argument("TrainConfig: max_epochs must be >= 1");
    if (early_stop_patience < 1) throw std::invalid_argument("TrainConfig: early_stop_patience must be >= 1");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
        throw std::invalid_argument("TrainConfig: validation_fraction must be in (0, 1)");
    if (!(l2 >= 0.0)) throw std::invalid_argument("TrainConfig: l2 must be >= 0");
    for (auto h : hidden_layers)
        if (h < 1) throw std::invalid_argument("TrainConfig: hidden layer widths must be positive");
}

ModelParams init_mlp(std::span<const std::size_t> layer_sizes, std::uint64_t seed) {
    if (layer_sizes.size() < 2) throw std::invalid_argument("init_mlp: need at least 2 layer sizes");
    for (auto s : layer_sizes)
        if (s < 1) throw std::invalid_argument("init_mlp: layer sizes must be positive");

    Rng rng(seed);
    ModelParams model;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const auto fan_in = static_cast<Index>(layer_sizes[l]);
        const auto fan_out = static_cast<Index>(layer_sizes[l + 1]);
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> uniform(-bound, bound);
        DenseLayer layer{Matrix(fan_out, fan_in), Vector::Zero(fan_out)};
        for (Index j = 0; j < fan_in; ++j)
            for (Index i = 0; i < fan_out; ++i) layer.weights(i, j) = uniform(rng);
        model.layers.push_back(std::move(layer));
    }
    return model;
}

ModelParams init_classifier(Index input_dim, int n_classes, const TrainConfig& cfg) {
    std::vector<std::size_t> sizes{static_cast<std::size_t>(input_dim)};
    sizes.insert(sizes.end(), cfg.hidden_layers.begin(), cfg.hidden_layers.end());
    sizes.push_back(static_cast<std::size_t>(n_classes));
    return init_mlp(sizes, derive_seed(cfg.seed, 0x1417));
}

namespace {

void check_input(const ModelParams& model, Index width) {
    if (model.layers.empty()) throw std::invalid_argument("model has no layers");
    if (width != model.input_dim())
        throw std::invalid_argument("input dimension " + std::to_string(width) + " does not match model input " +
                                    std::to_string(model.input_dim()));
}

// Column-major activations: one sample per column.
struct ForwardCache {
    std::vector<Matrix> inputs;       // input to each layer
    std::vector<Matrix> preactivations;
};

Matrix forward_columns(const ModelParams& model, const Matrix& columns, ForwardCache* cache) {
    Matrix a = columns;
    const std::size_t last = model.layers.size() - 1;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const auto& layer = model.layers[l];
        Matrix z = layer.weights * a;
        z.colwise() += layer.bias;
        if (cache) {
            cache->inputs.push_back(std::move(a));
            cache->preactivations.push_back(z);
        }
        a = l == last ? std::move(z) : Matrix(z.cwiseMax(0.0));
    }
    return a;
}

// Back-propagates d loss / d logits (c x n) through the cached forward pass.
// Returns d loss / d input columns; fills parameter gradients when requested.
Matrix backward_columns(const ModelParams& model, const ForwardCache& cache, Matrix upstream,
                        std::vector<DenseLayer>* param_grads) {
    const std::size_t n_layers = model.layers.size();
    for (std::size_t l = n_layers; l-- > 0;) {
        if (l + 1 < n_layers)
            upstream = upstream.cwiseProduct((cache.preactivations[l].array() > 0.0).cast<double>().matrix());
        if (param_grads) {
            (*param_grads)[l].weights.noalias() = upstream * cache.inputs[l].transpose();
            (*param_grads)[l].bias = upstream.rowwise().sum();
        }
        upstream = model.layers[l].weights.transpose() * upstream;
    }
    return upstream;
}

}  // namespace

Vector forward(const ModelParams& model, const Vector& x) {
    check_input(model, x.size());
    return forward_columns(model, x, nullptr);
}

Matrix forward_batch(const ModelParams& model, const Matrix& inputs) {
    check_input(model, inputs.cols());
    return forward_columns(model, inputs.transpose(), nullptr).transpose();
}

Vector input_gradient(const ModelParams& model, const Vector& x, Index class_index) {
    check_input(model, x.size());
    if (class_index < 0 || class_index >= model.output_dim())
        throw std::invalid_argument("input_gradient: class index " + std::to_string(class_index) +
                                    " out of range for " + std::to_string(model.output_dim()) + " outputs");
    ForwardCache cache;
    forward_columns(model, x, &cache);
    Matrix seed = Matrix::Zero(model.output_dim(), 1);
    seed(class_index, 0) = 1.0;
    return backward_columns(model, cache, std::move(seed), nullptr).col(0);
}

Matrix input_gradients(const ModelParams& model, const Matrix& inputs, std::span<const int> classes) {
    check_input(model, inputs.cols());
    if (static_cast<Index>(classes.size()) != inputs.rows())
        throw std::invalid_argument("input_gradients: need one class per sample");
    const Index n = inputs.rows();
    Matrix seed = Matrix::Zero(model.output_dim(), n);
    for (Index i = 0; i < n; ++i) {
        const int k = classes[static_cast<std::size_t>(i)];
        if (k < 0 || k >= model.output_dim())
            throw std::invalid_argument("input_gradients: class index " + std::to_string(k) + " out of range");
        seed(k, i) = 1.0;
    }
    ForwardCache cache;
    forward_columns(model, inputs.transpose(), &cache);
    return backward_columns(model, cache, std::move(seed), nullptr).transpose();
}

Index argmax_class(const Eigen::Ref<const Vector>& logits) {
    Index best = 0;
    for (Index k = 1; k < logits.size(); ++k)
        if (logits[k] > logits[best]) best = k;
    return best;
}

namespace {

void check_labels(const Dataset& data, Index n_outputs, const char* what) {
    data.validate();
    if (data.n_classes > n_outputs)
        throw std::invalid_argument(std::string(what) + ": dataset has " + std::to_string(data.n_classes) +
                                    " classes but model has " + std::to_string(n_outputs) + " outputs");
}

// Mean cross-entropy and accuracy of `model` on `data`.
std::pair<double, double> evaluate(const ModelParams& model, const Dataset& data) {
    const Matrix logits = forward_columns(model, data.features.transpose(), nullptr);
    double loss = 0.0;
    Index correct = 0;
    for (Index i = 0; i < logits.cols(); ++i) {
        const auto col = logits.col(i);
        const double max = col.maxCoeff();
        const double lse = max + std::log((col.array() - max).exp().sum());
        const int y = data.labels[static_cast<std::size_t>(i)];
        loss += lse - col[y];
        if (argmax_class(col) == y) ++correct;
    }
    const double n = static_cast<double>(logits.cols());
    return {loss / n, static_cast<double>(correct) / n};
}

struct AdamState {
    std::vector<DenseLayer> m, v;
    long step = 0;
};

ModelParams train_impl(ModelParams model, const Dataset& train_set, const Dataset& val_set,
                       const TrainConfig& cfg, double mask_prob) {
    cfg.validate();
    model.validate();
    check_input(model, train_set.dim());
    check_input(model, val_set.dim());
    check_labels(train_set, model.output_dim(), "train");
    check_labels(val_set, model.output_dim(), "train (validation)");
    if (!(mask_prob >= 0.0 && mask_prob < 1.0)) throw std::invalid_argument("mask probability must be in [0, 1)");

    constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    constexpr double kMinLossDelta = 1e-3;
    const Index n = train_set.size();
    const Index c = model.output_dim();

    Rng shuffle_rng(derive_seed(cfg.seed, 0x5117));
    Rng mask_rng(derive_seed(cfg.seed, 0x3a5c));
    std::bernoulli_distribution drop(mask_prob);

    std::vector<DenseLayer> grads(model.layers.size());
    AdamState adam;
    for (const auto& layer : model.layers) {
        adam.m.push_back({Matrix::Zero(layer.weights.rows(), layer.weights.cols()), Vector::Zero(layer.bias.size())});
        adam.v.push_back(adam.m.back());
    }

    auto [best_loss, best_acc] = evaluate(model, val_set);
    double best_model_loss = best_loss;
    ModelParams best = model;
    std::size_t stale = 0;

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    const Index batch = static_cast<Index>(cfg.batch_size);

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (Index start = 0; start < n; start += batch) {
            const Index m = std::min(batch, n - start);
            Matrix columns(train_set.dim(), m);
            Matrix target = Matrix::Zero(c, m);
            for (Index j = 0; j < m; ++j) {
                const Index row = order[static_cast<std::size_t>(start + j)];
                columns.col(j) = train_set.features.row(row).transpose();
                target(train_set.labels[static_cast<std::size_t>(row)], j) = 1.0;
            }
            if (mask_prob > 0.0)
                for (Index j = 0; j < m; ++j)
                    for (Index i = 0; i < columns.rows(); ++i)
                        if (drop(mask_rng)) columns(i, j) = 0.0;

            ForwardCache cache;
            Matrix logits = forward_columns(model, columns, &cache);
            // softmax - onehot, averaged over the batch
            for (Index j = 0; j < m; ++j) {
                auto col = logits.col(j);
                col.array() -= col.maxCoeff();
                col = col.array().exp().matrix();
                col /= col.sum();
            }
            Matrix upstream = (logits - target) / static_cast<double>(m);
            backward_columns(model, cache, std::move(upstream), &grads);

            if (cfg.optimizer == Optimizer::sgd) {
                for (std::size_t l = 0; l < model.layers.size(); ++l) {
                    model.layers[l].weights -= cfg.learning_rate * grads[l].weights;
                    model.layers[l].bias -= cfg.learning_rate * grads[l].bias;
                }
            } else {
                ++adam.step;
                const double c1 = 1.0 - std::pow(beta1, static_cast<double>(adam.step));
                const double c2 = 1.0 - std::pow(beta2, static_cast<double>(adam.step));
                const double step = cfg.learning_rate * std::sqrt(c2) / c1;
                for (std::size_t l = 0; l < model.layers.size(); ++l) {
                    auto& mw = adam.m[l].weights;
                    auto& vw = adam.v[l].weights;
                    mw = beta1 * mw + (1.0 - beta1) * grads[l].weights;
                    vw = beta2 * vw + (1.0 - beta2) * grads[l].weights.cwiseAbs2();
                    model.layers[l].weights.array() -= step * mw.array() / (vw.array().sqrt() + adam_eps);
                    auto& mb = adam.m[l].bias;
                    auto& vb = adam.v[l].bias;
                    mb = beta1 * mb + (1.0 - beta1) * grads[l].bias;
                    vb = beta2 * vb + (1.0 - beta2) * grads[l].bias.cwiseAbs2();
                    model.layers[l].bias.array() -= step * mb.array() / (vb.array().sqrt() + adam_eps);
                }
            }
        }

        const auto [loss, acc] = evaluate(model, val_set);
        if (!std::isfinite(loss)) throw std::runtime_error("train: validation loss diverged at epoch " + std::to_string(epoch));
        if (acc > best_acc || (acc == best_acc && loss < best_model_loss)) {
            best = model;
            best_model_loss = loss;
        }
        // Progress on either accuracy or loss resets the patience counter.
        const bool improved = acc > best_acc || loss < best_loss - kMinLossDelta;
        best_acc = std::max(best_acc, acc);
        best_loss = std::min(best_loss, loss);
        stale = improved ? 0 : stale + 1;
        if (stale >= cfg.early_stop_patience) break;
    }
    return best;
}

}  // namespace

ModelParams train(ModelParams model, const Dataset& train_set, const Dataset& val_set, const TrainConfig& cfg) {
    return train_impl(std::move(model), train_set, val_set, cfg, 0.0);
}

ModelParams train_with_input_masking(ModelParams model, const Dataset& train_set, const Dataset& val_set,
                                     const TrainConfig& cfg, double mask_prob) {
    return train_impl(std::move(model), train_set, val_set, cfg, mask_prob);
}

ModelParams fit_classifier(const Dataset& data, const TrainConfig& cfg) {
    cfg.validate();
    data.validate();
    const auto parts = split(data, cfg.validation_fraction, derive_seed(cfg.seed, 0x7a1d));
    return train(init_classifier(data.dim(), data.n_classes, cfg), parts.train, parts.test, cfg);
}

Vector forward(const LinearModel& model, const Vector& x) {
    if (x.size() != model.weights.cols())
        throw std::invalid_argument("linear model input dimension mismatch");
    return model.weights * x + model.bias;
}

namespace {

// theta layout: [W row-major by class (c*d), b (c)]
LinearModel unpack(const Vector& theta, Index c, Index d) {
    LinearModel lm{Matrix(c, d), Vector(c)};
    for (Index k = 0; k < c; ++k) {
        lm.weights.row(k) = theta.segment(k * d, d).transpose();
        lm.bias[k] = theta[c * d + k];
    }
    return lm;
}

struct LogisticEval {
    double loss = 0.0;
    Vector grad;
    Matrix hessian;
};

LogisticEval logistic_eval(const Vector& theta, const Dataset& data, double l2, bool want_hessian) {
    const Index c = data.n_classes, d = data.dim(), n = data.size();
    const Index p = c * (d + 1);
    const LinearModel lm = unpack(theta, c, d);
    LogisticEval out;
    out.grad = Vector::Zero(p);
    if (want_hessian) out.hessian = Matrix::Zero(p, p);
    Vector xt(d + 1);
    for (Index i = 0; i < n; ++i) {
        xt.head(d) = data.features.row(i).transpose();
        xt[d] = 1.0;
        Vector logits = lm.weights * xt.head(d) + lm.bias;
        const double max = logits.maxCoeff();
        const double lse = max + std::log((logits.array() - max).exp().sum());
        const Vector prob = (logits.array() - lse).exp().matrix();
        const int y = data.labels[static_cast<std::size_t>(i)];
        out.loss += lse - logits[y];
        for (Index k = 0; k < c; ++k) {
            const double r = prob[k] - (k == y ? 1.0 : 0.0);
            out.grad.segment(k * d, d) += r * xt.head(d);
            out.grad[c * d + k] += r;
        }
        if (want_hessian) {
            const Matrix outer = xt * xt.transpose();
            for (Index a = 0; a < c; ++a)
                for (Index b = 0; b < c; ++b) {
                    const double s = prob[a] * ((a == b ? 1.0 : 0.0) - prob[b]);
                    if (s == 0.0) continue;
                    // block (a, b) over [w_a, b_a] x [w_b, b_b]
                    out.hessian.block(a * d, b * d, d, d) += s * outer.topLeftCorner(d, d);
                    out.hessian.block(a * d, c * d + b, d, 1) += s * outer.block(0, d, d, 1);
                    out.hessian.block(c * d + a, b * d, 1, d) += s * outer.block(d, 0, 1, d);
                    out.hessian(c * d + a, c * d + b) += s;
                }
        }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    out.loss = out.loss * inv_n + 0.5 * l2 * theta.squaredNorm();
    out.grad = out.grad * inv_n + l2 * theta;
    if (want_hessian) {
        out.hessian *= inv_n;
        out.hessian.diagonal().array() += l2;
    }
    return out;
}

}  // namespace

double logistic_objective(const LinearModel& model, const Dataset& data, double l2) {
    const Index c = model.weights.rows(), d = model.weights.cols();
    Vector theta(c * (d + 1));
    for (Index k = 0; k < c; ++k) theta.segment(k * d, d) = model.weights.row(k).transpose();
    theta.tail(c) = model.bias;
    return logistic_eval(theta, data, l2, false).loss;
}

LinearModel fit_logistic(const Dataset& train_set, const TrainConfig& cfg) {
    cfg.validate();
    train_set.validate();
    if (!(cfg.l2 > 0.0)) throw std::invalid_argument("fit_logistic: l2 must be > 0 for a unique minimizer");
    const Index c = train_set.n_classes, d = train_set.dim();
    Vector theta = Vector::Zero(c * (d + 1));
    constexpr int max_iterations = 500;
    for (int it = 0; it < max_iterations; ++it) {
        const auto eval = logistic_eval(theta, train_set, cfg.l2, true);
        if (eval.grad.norm() < 1e-10) break;
        const Vector step = eval.hessian.ldlt().solve(-eval.grad);
        double t = 1.0;
        const double slope = eval.grad.dot(step);
        while (t > 1e-12) {
            const double trial = logistic_eval(theta + t * step, train_set, cfg.l2, false).loss;
            if (trial <= eval.loss + 1e-4 * t * slope) break;
            t *= 0.5;
        }
        if (t <= 1e-12) break;
        theta += t * step;
    }
    return unpack(theta, c, d);
}

std::vector<bool> correct_predictions(const ModelParams& model, const Dataset& data) {
    check_input(model, data.dim());
    const Matrix logits = forward_columns(model, data.features.transpose(), nullptr);
    std::vector<bool> out(static_cast<std::size_t>(data.size()));
    for (Index i = 0; i < data.size(); ++i)
        out[static_cast<std::size_t>(i)] = argmax_class(logits.col(i)) == data.labels[static_cast<std::size_t>(i)];
    return out;
}

double accuracy(const ModelParams& model, const Dataset& data) {
    if (data.size() < 1) throw std::invalid_argument("accuracy: empty dataset");
    const auto correct = correct_predictions(model, data);
    return static_cast<double>(std::count(correct.begin(), correct.end(), true)) / static_cast<double>(correct.size());
}

double accuracy(const LinearModel& model, const Dataset& data) {
    if (data.size() < 1) throw std::invalid_argument("accuracy: empty dataset");
    Index correct = 0;
    for (Index i = 0; i < data.size(); ++i)
        if (argmax_class(forward(model, data.sample(i))) == data.labels[static_cast<std::size_t>(i)]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace goar
