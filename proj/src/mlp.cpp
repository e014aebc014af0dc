#include "alforge/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "alforge/metrics.hpp"
#include "alforge/rng.hpp"

namespace alforge {

void MlpConfig::validate() const {
    if (input_dim == 0) throw ConfigError("mlp: input_dim must be >= 1");
    for (std::size_t d : hidden_dims)
        if (d == 0) throw ConfigError("mlp: hidden layer width must be >= 1");
    if (!(drop_prob >= 0.0 && drop_prob < 1.0))
        throw ConfigError("mlp: drop_prob must be in [0, 1)");
}

std::size_t MlpModel::last_hidden_dim() const {
    return depth() > 1 ? weights[depth() - 2].cols : config.input_dim;
}

void MlpModel::validate() const {
    if (weights.empty() || weights.size() != biases.size())
        throw ConfigError("mlp: malformed layer stack");
    std::size_t prev = config.input_dim;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (weights[l].rows != prev || biases[l].size() != weights[l].cols)
            throw ConfigError("mlp: weight shapes do not chain");
        prev = weights[l].cols;
    }
    if (prev != 1) throw ConfigError("mlp: output head must be a single unit");
    for (const auto& w : weights)
        if (!w.all_finite()) throw NumericError("mlp: non-finite weight");
    for (const auto& b : biases)
        for (double v : b)
            if (!std::isfinite(v)) throw NumericError("mlp: non-finite bias");
}

MlpModel build_model(const MlpConfig& config, std::uint64_t seed) {
    config.validate();
    MlpModel m;
    m.config = config;
    std::vector<std::size_t> dims;
    dims.push_back(config.input_dim);
    dims.insert(dims.end(), config.hidden_dims.begin(), config.hidden_dims.end());
    dims.push_back(1);

    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        Matrix w(dims[l], dims[l + 1]);
        const double scale = std::sqrt(2.0 / static_cast<double>(dims[l]));
        for (double& v : w.data) v = scale * rng.normal();
        m.weights.push_back(std::move(w));
        m.biases.emplace_back(dims[l + 1], 0.0);
    }
    m.validate();
    return m;
}

double sigmoid(double z) {
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

double bce_from_logit(double z, int y) {
    return std::max(z, 0.0) - z * static_cast<double>(y) + std::log1p(std::exp(-std::abs(z)));
}

namespace {

constexpr double kProbFloor = std::numeric_limits<double>::min();
const double kProbCeil = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;

double proba_from_logit(double z) { return std::clamp(sigmoid(z), kProbFloor, kProbCeil); }

void check_input(const MlpModel& model, const Matrix& X) {
    if (X.cols != model.config.input_dim)
        throw DimensionError("mlp: input has " + std::to_string(X.cols) + " features, model expects " +
                             std::to_string(model.config.input_dim));
    if (!X.all_finite()) throw DataError("mlp: non-finite input feature");
}

struct ForwardCache {
    // Per layer l: pre[l] holds the pre-activations (B x d_l). For hidden
    // layers, act[l] holds relu(pre) after any dropout and dropmult[l] holds
    // the per-unit dropout multiplier (0 or 1/(1-p)); dropmult stays empty in
    // deterministic mode. logits is the final pre-activation column.
    std::vector<Matrix> pre;
    std::vector<Matrix> act;
    std::vector<Matrix> dropmult;
    std::vector<double> logits;
};

// Dropout draws one mask entry per (row, unit), row-major, layer by layer.
ForwardCache forward_pass(const MlpModel& model, const Matrix& X, Rng* dropout_rng) {
    const std::size_t n = X.rows;
    const std::size_t depth = model.depth();
    const double p = model.config.drop_prob;
    const double keep_scale = 1.0 / (1.0 - p);

    ForwardCache c;
    c.pre.resize(depth);
    c.act.resize(depth);
    if (dropout_rng) c.dropmult.resize(depth);
    const Matrix* input = &X;
    for (std::size_t l = 0; l < depth; ++l) {
        const Matrix& w = model.weights[l];
        const auto& b = model.biases[l];
        Matrix z(n, w.cols);
        for (std::size_t i = 0; i < n; ++i) {
            auto in_row = input->row(i);
            auto z_row = z.row(i);
            for (std::size_t j = 0; j < w.cols; ++j) z_row[j] = b[j];
            for (std::size_t k = 0; k < w.rows; ++k) {
                const double v = in_row[k];
                if (v == 0.0) continue;
                const double* wrow = &w.data[k * w.cols];
                for (std::size_t j = 0; j < w.cols; ++j) z_row[j] += v * wrow[j];
            }
        }
        c.pre[l] = std::move(z);
        if (l + 1 < depth) {
            Matrix a(n, c.pre[l].cols);
            if (dropout_rng) {
                Matrix mult(n, a.cols);
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < a.cols; ++j) {
                        mult(i, j) = dropout_rng->bernoulli(p) ? 0.0 : keep_scale;
                        a(i, j) = std::max(c.pre[l](i, j), 0.0) * mult(i, j);
                    }
                c.dropmult[l] = std::move(mult);
            } else {
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < a.cols; ++j) a(i, j) = std::max(c.pre[l](i, j), 0.0);
            }
            c.act[l] = std::move(a);
            input = &c.act[l];
        }
    }
    c.logits.resize(n);
    for (std::size_t i = 0; i < n; ++i) c.logits[i] = c.pre[depth - 1](i, 0);
    return c;
}

MlpModel clone_params(const MlpModel& src) { return src; }

}  // namespace

std::vector<double> forward_logits(const MlpModel& model, const Matrix& X,
                                   std::optional<std::uint64_t> dropout_seed) {
    model.validate();
    check_input(model, X);
    if (!dropout_seed) return forward_pass(model, X, nullptr).logits;
    Rng rng(*dropout_seed);
    return forward_pass(model, X, &rng).logits;
}

std::vector<double> predict_proba(const MlpModel& model, const Matrix& X) {
    auto z = forward_logits(model, X);
    for (double& v : z) v = proba_from_logit(v);
    return z;
}

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw ConfigError("train: learning_rate must be > 0");
    if (max_epochs == 0) throw ConfigError("train: max_epochs must be > 0");
    if (batch_size == 0) throw ConfigError("train: batch_size must be > 0");
    if (lr_decay <= 0.0 || lr_decay > 1.0) throw ConfigError("train: lr_decay must be in (0, 1]");
}

TrainResult train(const MlpModel& model, const Dataset& labeled, const Dataset& val,
                  const TrainConfig& tc) {
    tc.validate();
    model.validate();
    if (labeled.size() == 0 || !labeled.has_labels())
        throw TrainingError("train: labeled set is empty");
    if (val.size() == 0) throw TrainingError("train: validation set is empty");
    check_input(model, labeled.features);
    check_input(model, val.features);

    TrainResult res;
    res.model = clone_params(model);
    res.single_class_labels =
        std::all_of(labeled.labels.begin(), labeled.labels.end(),
                    [&](int y) { return y == labeled.labels.front(); });
    bool val_single_class = true;
    if (val.has_labels())
        val_single_class = std::all_of(val.labels.begin(), val.labels.end(),
                                       [&](int y) { return y == val.labels.front(); });
    res.val_metric_fallback = val_single_class;

    const std::size_t n = labeled.size();
    const std::size_t batch = std::min(tc.batch_size, n);
    MlpModel cur = clone_params(model);

    // Adam state, one slot per parameter tensor.
    const std::size_t depth = cur.depth();
    std::vector<Matrix> mW(depth), vW(depth);
    std::vector<std::vector<double>> mB(depth), vB(depth);
    for (std::size_t l = 0; l < depth; ++l) {
        mW[l] = Matrix(cur.weights[l].rows, cur.weights[l].cols);
        vW[l] = Matrix(cur.weights[l].rows, cur.weights[l].cols);
        mB[l].assign(cur.biases[l].size(), 0.0);
        vB[l].assign(cur.biases[l].size(), 0.0);
    }
    const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    std::size_t adam_step = 0;

    Rng shuffle_rng(derive_seed(tc.seed, "train_shuffle"));
    Rng dropout_rng(derive_seed(tc.seed, "train_dropout"));
    const bool use_dropout = cur.config.drop_prob > 0.0;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    double best_metric = -std::numeric_limits<double>::infinity();
    MlpModel best = clone_params(cur);
    std::size_t epochs_since_best = 0;

    auto val_metric = [&]() {
        const auto probs = predict_proba(cur, val.features);
        if (!val_single_class) return auc(probs, val.labels);
        // AUC is undefined on a single-class validation set; fall back to -loss.
        const auto logits = forward_logits(cur, val.features);
        double loss = 0.0;
        for (std::size_t i = 0; i < val.size(); ++i)
            loss += bce_from_logit(logits[i], val.has_labels() ? val.labels[i] : 1);
        return -loss / static_cast<double>(val.size());
    };

    double lr = tc.learning_rate;
    for (std::size_t epoch = 0; epoch < tc.max_epochs; ++epoch) {
        if (epoch > 0) lr *= tc.lr_decay;
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t bs = std::min(batch, n - start);
            std::vector<std::size_t> rows(order.begin() + start, order.begin() + start + bs);
            Matrix xb = labeled.features.take_rows(rows);
            std::vector<int> yb(bs);
            for (std::size_t i = 0; i < bs; ++i) yb[i] = labeled.labels[rows[i]];

            ForwardCache cache = forward_pass(cur, xb, use_dropout ? &dropout_rng : nullptr);

            double batch_loss = 0.0;
            for (std::size_t i = 0; i < bs; ++i) batch_loss += bce_from_logit(cache.logits[i], yb[i]);
            batch_loss /= static_cast<double>(bs);
            epoch_loss += batch_loss * static_cast<double>(bs);

            // Backward: delta(i, j) = d(mean loss)/d(pre-activation of layer l).
            Matrix delta(bs, 1);
            for (std::size_t i = 0; i < bs; ++i)
                delta(i, 0) = (sigmoid(cache.logits[i]) - static_cast<double>(yb[i])) /
                              static_cast<double>(bs);

            ++adam_step;
            const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(adam_step));
            const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(adam_step));

            for (std::size_t li = depth; li-- > 0;) {
                const Matrix& a_in = li == 0 ? xb : cache.act[li - 1];
                Matrix gw(cur.weights[li].rows, cur.weights[li].cols);
                std::vector<double> gb(cur.biases[li].size(), 0.0);
                for (std::size_t i = 0; i < bs; ++i) {
                    auto drow = delta.row(i);
                    auto arow = a_in.row(i);
                    for (std::size_t j = 0; j < gw.cols; ++j) gb[j] += drow[j];
                    for (std::size_t k = 0; k < gw.rows; ++k) {
                        const double av = arow[k];
                        if (av == 0.0) continue;
                        double* grow = &gw.data[k * gw.cols];
                        for (std::size_t j = 0; j < gw.cols; ++j) grow[j] += av * drow[j];
                    }
                }

                if (li > 0) {
                    // Push delta through W, the dropout multiplier and the ReLU gate.
                    const Matrix& w = cur.weights[li];
                    Matrix nd(bs, w.rows);
                    for (std::size_t i = 0; i < bs; ++i) {
                        auto drow = delta.row(i);
                        auto ndrow = nd.row(i);
                        for (std::size_t k = 0; k < w.rows; ++k) {
                            double s = 0.0;
                            const double* wrow = &w.data[k * w.cols];
                            for (std::size_t j = 0; j < w.cols; ++j) s += wrow[j] * drow[j];
                            double gate = cache.pre[li - 1](i, k) > 0.0 ? 1.0 : 0.0;
                            if (use_dropout) gate *= cache.dropmult[li - 1](i, k);
                            ndrow[k] = s * gate;
                        }
                    }
                    delta = std::move(nd);
                }

                auto adam_update = [&](double& param, double g, double& m1, double& v1) {
                    m1 = beta1 * m1 + (1.0 - beta1) * g;
                    v1 = beta2 * v1 + (1.0 - beta2) * g * g;
                    param -= lr * (m1 / bc1) / (std::sqrt(v1 / bc2) + adam_eps);
                };
                for (std::size_t t = 0; t < gw.data.size(); ++t)
                    adam_update(cur.weights[li].data[t], gw.data[t], mW[li].data[t], vW[li].data[t]);
                for (std::size_t t = 0; t < gb.size(); ++t)
                    adam_update(cur.biases[li][t], gb[t], mB[li][t], vB[li][t]);
            }
        }
        res.loss_history.push_back(epoch_loss / static_cast<double>(n));

        const double metric = val_metric();
        if (metric > best_metric) {
            best_metric = metric;
            if (!tc.keep_final_epoch) best = clone_params(cur);
            res.best_epoch = epoch;
            epochs_since_best = 0;
        } else if (++epochs_since_best > tc.patience) {
            break;
        }
    }

    res.model = tc.keep_final_epoch ? std::move(cur) : std::move(best);
    res.model.validate();
    return res;
}

InterpretationMatrix input_gradients(const MlpModel& model, const Matrix& X) {
    model.validate();
    check_input(model, X);
    const std::size_t n = X.rows;
    const std::size_t depth = model.depth();
    ForwardCache cache = forward_pass(model, X, nullptr);

    InterpretationMatrix out;
    out.weights = Matrix(n, model.config.input_dim);
    out.offsets.resize(n);

    std::vector<double> g, next;
    for (std::size_t i = 0; i < n; ++i) {
        // Backward product of masked layer maps; depends only on the ReLU
        // pattern, so rows within one region come out bit-identical.
        g.assign(model.weights[depth - 1].rows, 0.0);
        for (std::size_t k = 0; k < g.size(); ++k) g[k] = model.weights[depth - 1](k, 0);
        for (std::size_t li = depth - 1; li-- > 0;) {
            for (std::size_t k = 0; k < g.size(); ++k)
                if (cache.pre[li](i, k) <= 0.0) g[k] = 0.0;
            const Matrix& w = model.weights[li];
            next.assign(w.rows, 0.0);
            for (std::size_t r = 0; r < w.rows; ++r) {
                double s = 0.0;
                const double* wrow = &w.data[r * w.cols];
                for (std::size_t k = 0; k < w.cols; ++k) s += wrow[k] * g[k];
                next[r] = s;
            }
            g = next;
        }
        auto irow = out.weights.row(i);
        std::copy(g.begin(), g.end(), irow.begin());
        out.offsets[i] = cache.logits[i] - dot(irow, X.row(i));
    }
    return out;
}

Matrix last_layer_embedding(const MlpModel& model, const Matrix& X) {
    model.validate();
    check_input(model, X);
    if (model.depth() == 1) return X;
    ForwardCache cache = forward_pass(model, X, nullptr);
    return cache.act[model.depth() - 2];
}

std::vector<std::vector<std::uint8_t>> activation_patterns(const MlpModel& model, const Matrix& X) {
    model.validate();
    check_input(model, X);
    ForwardCache cache = forward_pass(model, X, nullptr);
    std::vector<std::vector<std::uint8_t>> out(X.rows);
    for (std::size_t i = 0; i < X.rows; ++i) {
        for (std::size_t l = 0; l + 1 < model.depth(); ++l)
            for (std::size_t j = 0; j < cache.pre[l].cols; ++j)
                out[i].push_back(cache.pre[l](i, j) > 0.0 ? 1 : 0);
    }
    return out;
}

std::vector<double> egl_scores(const MlpModel& model, const Matrix& X) {
    model.validate();
    check_input(model, X);
    const std::size_t n = X.rows;
    const std::size_t depth = model.depth();
    ForwardCache cache = forward_pass(model, X, nullptr);

    std::vector<double> scores(n);
    std::vector<double> delta, next;
    for (std::size_t i = 0; i < n; ++i) {
        // ||grad_W z||^2 accumulated layer by layer: the weight-gradient block
        // of layer l is the outer product a_{l-1} (x) delta_l.
        double norm2 = 0.0;
        delta.assign(1, 1.0);
        for (std::size_t li = depth; li-- > 0;) {
            const double a2 = li == 0 ? squared_norm(X.row(i)) : squared_norm(cache.act[li - 1].row(i));
            norm2 += a2 * squared_norm(delta);
            if (li == 0) break;
            const Matrix& w = model.weights[li];
            next.assign(w.rows, 0.0);
            for (std::size_t r = 0; r < w.rows; ++r) {
                double s = 0.0;
                const double* wrow = &w.data[r * w.cols];
                for (std::size_t k = 0; k < w.cols; ++k) s += wrow[k] * delta[k];
                next[r] = cache.pre[li - 1](i, r) > 0.0 ? s : 0.0;
            }
            delta = next;
        }
        if (!std::isfinite(norm2)) throw NumericError("egl: non-finite gradient norm");
        const double grad_len = std::sqrt(norm2);
        const double p = proba_from_logit(cache.logits[i]);
        // Expectation over the label posterior: ||grad BCE(z, y)|| = |p - y| * ||grad z||.
        scores[i] = p * (1.0 - p) * grad_len + (1.0 - p) * p * grad_len;
    }
    return scores;
}

Matrix badge_embeddings(const MlpModel& model, const Matrix& X) {
    model.validate();
    check_input(model, X);
    const auto probs = predict_proba(model, X);
    const Matrix& w_out = model.weights.back();

    // Closed form of d BCE(z, y_hat) / d h: the chain through the output unit
    // contributes (p - y_hat) and d z / d h = w_out.
    Matrix g(X.rows, model.last_hidden_dim());
    for (std::size_t i = 0; i < X.rows; ++i) {
        const double p = probs[i];
        const int y_hat = p >= 0.5 ? 1 : 0;
        const double scale = p - static_cast<double>(y_hat);
        for (std::size_t j = 0; j < g.cols; ++j) g(i, j) = scale * w_out(j, 0);
    }
    return g;
}

Matrix mc_dropout_probs(const MlpModel& model, const Matrix& X, std::size_t T, std::uint64_t seed) {
    if (T == 0) throw ConfigError("mc_dropout: T must be >= 1");
    model.validate();
    check_input(model, X);
    Matrix probs(X.rows, T);
    for (std::size_t t = 0; t < T; ++t) {
        const auto logits = forward_logits(model, X, derive_seed(seed, "mc_pass", t));
        for (std::size_t i = 0; i < X.rows; ++i) probs(i, t) = proba_from_logit(logits[i]);
    }
    return probs;
}

}  // namespace alforge
