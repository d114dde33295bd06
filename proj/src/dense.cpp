#include "reqa/dense.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <thread>

#include "reqa/error.hpp"

namespace reqa::dense {

namespace {

// splitmix64 + Box-Muller; pinned here so runs reproduce bit-for-bit across
// standard library implementations.
struct Rng {
    std::uint64_t state;

    explicit Rng(std::uint64_t seed) : state(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool has_spare = false;
    double spare = 0.0;

    double next_gaussian() {
        if (has_spare) {
            has_spare = false;
            return spare;
        }
        double u1 = next_unit();
        while (u1 <= 0.0) u1 = next_unit();
        const double u2 = next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare = r * std::sin(theta);
        has_spare = true;
        return r * std::cos(theta);
    }

    std::size_t next_below(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[next_below(i)]);
    }
};

std::uint64_t fnv1a_bytes(std::uint64_t h, const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

constexpr double kNormFloor = 1e-12;

}  // namespace

EncoderModel::EncoderModel(const ModelDims& dims) : dims_(dims) {
    if (dims.vocab_size == 0 || dims.d_tok == 0 || dims.d_hidden == 0 || dims.d_out == 0)
        throw FormatError("encoder dims must all be positive");
    const std::size_t total = off_a_b2() + dims_.d_out;
    params_.assign(total, 0.0);
}

std::size_t EncoderModel::off_type_emb() const { return dims_.vocab_size * dims_.d_tok; }
std::size_t EncoderModel::off_q_w1() const { return off_type_emb() + 2 * dims_.d_tok; }
std::size_t EncoderModel::off_q_b1() const { return off_q_w1() + dims_.d_tok * dims_.d_hidden; }
std::size_t EncoderModel::off_q_w2() const { return off_q_b1() + dims_.d_hidden; }
std::size_t EncoderModel::off_q_b2() const { return off_q_w2() + dims_.d_hidden * dims_.d_out; }
std::size_t EncoderModel::off_a_w1() const { return off_q_b2() + dims_.d_out; }
std::size_t EncoderModel::off_a_b1() const {
    return off_a_w1() + 2 * dims_.d_tok * dims_.d_hidden;
}
std::size_t EncoderModel::off_a_w2() const { return off_a_b1() + dims_.d_hidden; }
std::size_t EncoderModel::off_a_b2() const { return off_a_w2() + dims_.d_hidden * dims_.d_out; }

std::span<const double> EncoderModel::token_embedding(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= dims_.vocab_size)
        throw OutOfBounds("token id " + std::to_string(id) + " outside vocab of size " +
                          std::to_string(dims_.vocab_size));
    return {params_.data() + static_cast<std::size_t>(id) * dims_.d_tok, dims_.d_tok};
}

std::span<const double> EncoderModel::type_embedding(int type) const {
    if (type != 0 && type != 1) throw OutOfBounds("input type must be 0 or 1");
    return {params_.data() + off_type_emb() + static_cast<std::size_t>(type) * dims_.d_tok,
            dims_.d_tok};
}

EncoderModel EncoderModel::random_init(const ModelDims& dims, std::uint64_t seed,
                                       double embedding_scale, double head_scale) {
    EncoderModel model(dims);
    Rng rng(seed);
    auto fill = [&](std::size_t off, std::size_t count, double scale) {
        for (std::size_t i = 0; i < count; ++i)
            model.params_[off + i] = scale * rng.next_gaussian();
    };
    fill(0, dims.vocab_size * dims.d_tok, embedding_scale);
    const double w1_scale = 1.0 / std::sqrt(static_cast<double>(dims.d_tok));
    const double wa1_scale = 1.0 / std::sqrt(static_cast<double>(2 * dims.d_tok));
    const double w2_scale = head_scale / std::sqrt(static_cast<double>(dims.d_hidden));
    fill(model.off_q_w1(), dims.d_tok * dims.d_hidden, w1_scale);
    fill(model.off_q_w2(), dims.d_hidden * dims.d_out, w2_scale);
    fill(model.off_a_w1(), 2 * dims.d_tok * dims.d_hidden, wa1_scale);
    fill(model.off_a_w2(), dims.d_hidden * dims.d_out, w2_scale);
    // Type embeddings and biases stay zero.
    return model;
}

std::uint64_t params_fingerprint(const EncoderModel& model) {
    std::uint64_t h = 14695981039346656037ULL;
    const auto& d = model.dims();
    h = fnv1a_bytes(h, &d.vocab_size, sizeof(d.vocab_size));
    h = fnv1a_bytes(h, &d.d_tok, sizeof(d.d_tok));
    h = fnv1a_bytes(h, &d.d_hidden, sizeof(d.d_hidden));
    h = fnv1a_bytes(h, &d.d_out, sizeof(d.d_out));
    h = fnv1a_bytes(h, &model.score_scale, sizeof(model.score_scale));
    h = fnv1a_bytes(h, model.params().data(), model.params().size() * sizeof(double));
    return h;
}

namespace {

struct TowerCache {
    std::vector<double> x;  // layer input
    std::vector<double> h;  // post-tanh hidden
    std::vector<double> z;  // pre-normalization output
    std::vector<double> y;  // unit-norm output
    double norm = 0.0;
};

struct TowerOffsets {
    std::size_t w1, b1, w2, b2;
    std::size_t d_in, d_h, d_out;
};

TowerOffsets question_tower(const EncoderModel& m) {
    return {m.off_q_w1(), m.off_q_b1(), m.off_q_w2(), m.off_q_b2(),
            m.dims().d_tok, m.dims().d_hidden, m.dims().d_out};
}

TowerOffsets answer_tower(const EncoderModel& m) {
    return {m.off_a_w1(), m.off_a_b1(), m.off_a_w2(), m.off_a_b2(),
            2 * m.dims().d_tok, m.dims().d_hidden, m.dims().d_out};
}

TowerCache forward_tower(const EncoderModel& m, const TowerOffsets& t, std::vector<double> x) {
    const double* p = m.params().data();
    TowerCache cache;
    cache.h.assign(t.d_h, 0.0);
    for (std::size_t j = 0; j < t.d_h; ++j) {
        double acc = p[t.b1 + j];
        for (std::size_t i = 0; i < t.d_in; ++i) acc += x[i] * p[t.w1 + i * t.d_h + j];
        cache.h[j] = std::tanh(acc);
    }
    cache.z.assign(t.d_out, 0.0);
    for (std::size_t j = 0; j < t.d_out; ++j) {
        double acc = p[t.b2 + j];
        for (std::size_t i = 0; i < t.d_h; ++i) acc += cache.h[i] * p[t.w2 + i * t.d_out + j];
        cache.z[j] = acc;
    }
    double norm_sq = 0.0;
    for (double v : cache.z) norm_sq += v * v;
    cache.norm = std::sqrt(norm_sq);
    if (!(cache.norm > kNormFloor))
        throw NormalizationDegenerate(
            "embedding norm " + std::to_string(cache.norm) +
            " is too small to normalize; the model output collapsed to ~zero");
    cache.y.assign(t.d_out, 0.0);
    for (std::size_t j = 0; j < t.d_out; ++j) cache.y[j] = cache.z[j] / cache.norm;
    cache.x = std::move(x);
    return cache;
}

// Accumulates tower parameter gradients and returns the gradient w.r.t. x.
std::vector<double> backward_tower(const EncoderModel& m, const TowerOffsets& t,
                                   const TowerCache& cache, std::span<const double> dy,
                                   std::vector<double>& grads) {
    const double* p = m.params().data();
    // Through y = z / ||z||:  dz = (dy - (dy . y) y) / ||z||.
    double dy_dot_y = 0.0;
    for (std::size_t j = 0; j < t.d_out; ++j) dy_dot_y += dy[j] * cache.y[j];
    std::vector<double> dz(t.d_out);
    for (std::size_t j = 0; j < t.d_out; ++j)
        dz[j] = (dy[j] - dy_dot_y * cache.y[j]) / cache.norm;

    std::vector<double> dh(t.d_h, 0.0);
    for (std::size_t j = 0; j < t.d_out; ++j) {
        grads[t.b2 + j] += dz[j];
        for (std::size_t i = 0; i < t.d_h; ++i) {
            grads[t.w2 + i * t.d_out + j] += cache.h[i] * dz[j];
            dh[i] += p[t.w2 + i * t.d_out + j] * dz[j];
        }
    }
    std::vector<double> dx(t.d_in, 0.0);
    for (std::size_t i = 0; i < t.d_h; ++i) {
        const double dpre = dh[i] * (1.0 - cache.h[i] * cache.h[i]);
        grads[t.b1 + i] += dpre;
        for (std::size_t k = 0; k < t.d_in; ++k) {
            grads[t.w1 + k * t.d_h + i] += cache.x[k] * dpre;
            dx[k] += p[t.w1 + k * t.d_h + i] * dpre;
        }
    }
    return dx;
}

// Mean of (token embedding + type embedding) over the sequence.
std::vector<double> pool_tokens(const EncoderModel& m, std::span<const TokenId> tokens,
                                int type) {
    const std::size_t d = m.dims().d_tok;
    std::vector<double> out(d, 0.0);
    for (TokenId id : tokens) {
        const auto emb = m.token_embedding(id);
        for (std::size_t j = 0; j < d; ++j) out[j] += emb[j];
    }
    const double inv = 1.0 / static_cast<double>(tokens.size());
    const auto type_emb = m.type_embedding(type);
    for (std::size_t j = 0; j < d; ++j) out[j] = out[j] * inv + type_emb[j];
    return out;
}

void backprop_pool(const EncoderModel& m, std::span<const TokenId> tokens, int type,
                   std::span<const double> dpool, std::vector<double>& grads) {
    const std::size_t d = m.dims().d_tok;
    const std::size_t type_off =
        m.off_type_emb() + static_cast<std::size_t>(type) * d;
    for (std::size_t j = 0; j < d; ++j) grads[type_off + j] += dpool[j];
    const double inv = 1.0 / static_cast<double>(tokens.size());
    for (TokenId id : tokens) {
        const std::size_t off = static_cast<std::size_t>(id) * d;
        for (std::size_t j = 0; j < d; ++j) grads[off + j] += dpool[j] * inv;
    }
}

std::vector<double> answer_input(const EncoderModel& m, std::span<const TokenId> answer,
                                 std::span<const TokenId> context, bool use_context) {
    const std::size_t d = m.dims().d_tok;
    std::vector<double> x(2 * d, 0.0);
    const auto a_pool = pool_tokens(m, answer, 1);
    std::copy(a_pool.begin(), a_pool.end(), x.begin());
    if (use_context && !context.empty()) {
        const auto c_pool = pool_tokens(m, context, 1);
        std::copy(c_pool.begin(), c_pool.end(), x.begin() + static_cast<std::ptrdiff_t>(d));
    }
    return x;
}

}  // namespace

std::vector<double> encode_question(const EncoderModel& model, std::span<const TokenId> tokens) {
    if (tokens.empty()) throw EmptyInput("cannot encode an empty question token sequence");
    return forward_tower(model, question_tower(model), pool_tokens(model, tokens, 0)).y;
}

std::vector<double> encode_answer(const EncoderModel& model, std::span<const TokenId> answer,
                                  std::span<const TokenId> context, bool use_context) {
    if (answer.empty()) throw EmptyInput("cannot encode an empty answer token sequence");
    return forward_tower(model, answer_tower(model),
                         answer_input(model, answer, context, use_context))
        .y;
}

SoftmaxLoss softmax_xent(const std::vector<std::vector<double>>& phi) {
    const std::size_t b = phi.size();
    if (b < 2) throw BatchTooSmall("in-batch softmax needs at least 2 examples, got " +
                                   std::to_string(b));
    SoftmaxLoss out;
    out.probs.assign(b, std::vector<double>(b, 0.0));
    double loss_sum = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        if (phi[i].size() != b) throw FormatError("phi matrix must be square");
        const double row_max = *std::max_element(phi[i].begin(), phi[i].end());
        double denom = 0.0;
        for (std::size_t j = 0; j < b; ++j) denom += std::exp(phi[i][j] - row_max);
        for (std::size_t j = 0; j < b; ++j)
            out.probs[i][j] = std::exp(phi[i][j] - row_max) / denom;
        loss_sum += -(phi[i][i] - row_max - std::log(denom));
    }
    out.loss = loss_sum / static_cast<double>(b);
    return out;
}

namespace {

struct BatchForward {
    std::vector<TowerCache> q;
    std::vector<TowerCache> a;
    SoftmaxLoss softmax;
};

BatchForward forward_batch(const EncoderModel& model, std::span<const TrainingPair> batch,
                           bool use_context) {
    const std::size_t b = batch.size();
    if (b < 2)
        throw BatchTooSmall("in-batch softmax needs at least 2 examples, got " +
                            std::to_string(b));
    BatchForward fwd;
    fwd.q.reserve(b);
    fwd.a.reserve(b);
    for (const auto& pair : batch) {
        if (pair.question.empty()) throw EmptyInput("empty question token sequence in batch");
        if (pair.answer.empty()) throw EmptyInput("empty answer token sequence in batch");
        fwd.q.push_back(
            forward_tower(model, question_tower(model), pool_tokens(model, pair.question, 0)));
        fwd.a.push_back(forward_tower(model, answer_tower(model),
                                      answer_input(model, pair.answer, pair.context,
                                                   use_context)));
    }
    std::vector<std::vector<double>> phi(b, std::vector<double>(b, 0.0));
    const std::size_t d = model.dims().d_out;
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < b; ++j) {
            double dot = 0.0;
            for (std::size_t k = 0; k < d; ++k) dot += fwd.q[i].y[k] * fwd.a[j].y[k];
            phi[i][j] = model.score_scale * dot;
        }
    }
    fwd.softmax = softmax_xent(phi);
    return fwd;
}

}  // namespace

SoftmaxLoss batch_loss(const EncoderModel& model, std::span<const TrainingPair> batch,
                       bool use_context) {
    return forward_batch(model, batch, use_context).softmax;
}

BatchGradients batch_gradients(const EncoderModel& model, std::span<const TrainingPair> batch,
                               bool use_context) {
    const std::size_t b = batch.size();
    BatchForward fwd = forward_batch(model, batch, use_context);

    BatchGradients out;
    out.loss = fwd.softmax.loss;
    out.grads.assign(model.n_params(), 0.0);

    const std::size_t d = model.dims().d_out;
    const double inv_b = 1.0 / static_cast<double>(b);
    // d loss / d phi[i][j] = (P[i][j] - [i==j]) / B, then through the scale.
    std::vector<std::vector<double>> dq(b, std::vector<double>(d, 0.0));
    std::vector<std::vector<double>> da(b, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < b; ++j) {
            const double dphi =
                model.score_scale * inv_b *
                (fwd.softmax.probs[i][j] - (i == j ? 1.0 : 0.0));
            for (std::size_t k = 0; k < d; ++k) {
                dq[i][k] += dphi * fwd.a[j].y[k];
                da[j][k] += dphi * fwd.q[i].y[k];
            }
        }
    }

    const std::size_t d_tok = model.dims().d_tok;
    for (std::size_t i = 0; i < b; ++i) {
        const auto dxq = backward_tower(model, question_tower(model), fwd.q[i], dq[i], out.grads);
        backprop_pool(model, batch[i].question, 0, dxq, out.grads);

        const auto dxa = backward_tower(model, answer_tower(model), fwd.a[i], da[i], out.grads);
        backprop_pool(model, batch[i].answer, 1,
                      std::span<const double>(dxa.data(), d_tok), out.grads);
        if (use_context && !batch[i].context.empty()) {
            backprop_pool(model, batch[i].context, 1,
                          std::span<const double>(dxa.data() + d_tok, d_tok), out.grads);
        }
    }
    return out;
}

TrainConfig TrainConfig::useqa_style() {
    TrainConfig c;
    c.batch_size = 64;
    c.optimizer = Optimizer::Sgd;
    c.lr_initial = 0.01;
    c.lr_final = 0.001;
    c.epochs = 10;
    return c;
}

TrainConfig TrainConfig::bert_style() {
    TrainConfig c;
    c.batch_size = 128;
    c.optimizer = Optimizer::AdamW;
    c.lr_initial = 1e-4;
    c.lr_final = 1e-4;
    c.epochs = 10;
    return c;
}

void TrainConfig::validate() const {
    if (epochs < 1) throw FormatError("train: epochs must be >= 1");
    if (!(lr_final > 0.0) || !(lr_final <= lr_initial))
        throw FormatError("train: need 0 < lr_final <= lr_initial");
    if (batch_size < 2) throw FormatError("train: batch size must be >= 2");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
        throw FormatError("train: validation fraction must lie in [0,1)");
}

double learning_rate_at(const TrainConfig& config, std::size_t step, std::size_t total_steps) {
    const double t = static_cast<double>(step) / static_cast<double>(total_steps);
    return config.lr_initial * std::pow(config.lr_final / config.lr_initial, t);
}

TrainResult train(EncoderModel& model, std::vector<TrainingPair> pairs,
                  const TrainConfig& config) {
    config.validate();
    Rng rng(config.seed);
    rng.shuffle(pairs);

    const std::size_t n_val =
        static_cast<std::size_t>(config.validation_fraction * static_cast<double>(pairs.size()));
    std::vector<TrainingPair> val(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<TrainingPair> training(pairs.begin() + static_cast<std::ptrdiff_t>(n_val),
                                       pairs.end());
    if (training.size() < 2)
        throw InsufficientData("need at least 2 training pairs after the validation split, got " +
                               std::to_string(training.size()));

    // Desk-scale corpora may be smaller than the preset batch size; shrink and
    // report the effective size.
    const std::size_t batch = std::min(config.batch_size, training.size());
    const std::size_t full_batches = training.size() / batch;
    const std::size_t remainder = training.size() % batch;
    const std::size_t steps_per_epoch = full_batches + (remainder >= 2 ? 1 : 0);
    const std::size_t total_steps = steps_per_epoch * config.epochs;

    TrainResult result;
    result.effective_batch_size = batch;
    result.total_steps = total_steps;
    result.n_train_pairs = training.size();
    result.n_val_pairs = val.size();

    std::vector<double> adam_m, adam_v;
    if (config.optimizer == TrainConfig::Optimizer::AdamW) {
        adam_m.assign(model.n_params(), 0.0);
        adam_v.assign(model.n_params(), 0.0);
    }

    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(training);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t begin = 0; begin + 2 <= training.size(); begin += batch) {
            const std::size_t size = std::min(batch, training.size() - begin);
            if (size < 2) break;
            auto g = batch_gradients(
                model, std::span<const TrainingPair>(training.data() + begin, size),
                config.use_context);
            ++step;
            const double lr = learning_rate_at(config, step, total_steps);
            auto& params = model.params();
            if (config.optimizer == TrainConfig::Optimizer::Sgd) {
                for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * g.grads[i];
            } else {
                const double bc1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(step));
                const double bc2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(step));
                for (std::size_t i = 0; i < params.size(); ++i) {
                    adam_m[i] = config.adam_beta1 * adam_m[i] + (1.0 - config.adam_beta1) * g.grads[i];
                    adam_v[i] =
                        config.adam_beta2 * adam_v[i] + (1.0 - config.adam_beta2) * g.grads[i] * g.grads[i];
                    const double mhat = adam_m[i] / bc1;
                    const double vhat = adam_v[i] / bc2;
                    params[i] -= lr * (mhat / (std::sqrt(vhat) + config.adam_epsilon) +
                                       config.adam_weight_decay * params[i]);
                }
            }
            loss_sum += g.loss;
            ++batches;
        }
        result.train_loss_per_epoch.push_back(batches ? loss_sum / static_cast<double>(batches)
                                                      : 0.0);
        if (val.size() >= 2)
            result.val_loss_per_epoch.push_back(batch_loss(model, val, config.use_context).loss);
    }
    return result;
}

EmbeddingMatrix embed_candidates(
    const EncoderModel& model,
    const std::vector<std::pair<std::vector<TokenId>, std::vector<TokenId>>>& answer_context,
    bool use_context, unsigned threads) {
    EmbeddingMatrix out;
    out.n = answer_context.size();
    out.d = model.dims().d_out;
    out.use_context = use_context;
    out.model_fingerprint = params_fingerprint(model);
    out.data.assign(out.n * out.d, 0.0);

    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto embed_range = [&](std::size_t lo, std::size_t hi) {
        try {
            for (std::size_t i = lo; i < hi; ++i) {
                const auto y = encode_answer(model, answer_context[i].first,
                                             answer_context[i].second, use_context);
                std::copy(y.begin(), y.end(),
                          out.data.begin() + static_cast<std::ptrdiff_t>(i * out.d));
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };
    if (threads <= 1 || out.n < 2 * threads) {
        embed_range(0, out.n);
    } else {
        std::vector<std::thread> workers;
        const std::size_t chunk = (out.n + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t lo = t * chunk;
            if (lo >= out.n) break;
            workers.emplace_back(embed_range, lo, std::min(lo + chunk, out.n));
        }
        for (auto& w : workers) w.join();
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

std::vector<ScoredCandidate> retrieve_topk(const EmbeddingMatrix& pool,
                                           std::span<const double> query, std::size_t k) {
    if (pool.n == 0) throw EmptyPool("candidate embedding matrix is empty");
    if (query.size() != pool.d)
        throw FormatError("query dimension " + std::to_string(query.size()) +
                          " does not match pool dimension " + std::to_string(pool.d));
    if (k == 0) return {};
    k = std::min(k, pool.n);
    std::vector<ScoredCandidate> scored;
    scored.reserve(pool.n);
    for (std::size_t i = 0; i < pool.n; ++i) {
        const auto row = pool.row(i);
        double dot = 0.0;
        for (std::size_t j = 0; j < pool.d; ++j) dot += query[j] * row[j];
        scored.push_back({static_cast<CandidateId>(i), dot});
    }
    auto better = [](const ScoredCandidate& a, const ScoredCandidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    };
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k),
                      scored.end(), better);
    scored.resize(k);
    return scored;
}

// ---- binary formats ----

namespace {

constexpr char kModelMagic[8] = {'R', 'E', 'Q', 'A', 'D', 'E', 'N', '1'};
constexpr char kEmbMagic[8] = {'R', 'E', 'Q', 'A', 'E', 'M', 'B', '1'};

void write_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_f64(std::ostream& out, double v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

double read_f64(std::istream& in) {
    double v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

}  // namespace

void save_model(const EncoderModel& model, std::uint64_t vocab_fingerprint,
                std::uint64_t config_fingerprint, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(kModelMagic, sizeof(kModelMagic));
    write_u64(out, model.dims().vocab_size);
    write_u64(out, model.dims().d_tok);
    write_u64(out, model.dims().d_hidden);
    write_u64(out, model.dims().d_out);
    write_f64(out, model.score_scale);
    write_u64(out, vocab_fingerprint);
    write_u64(out, config_fingerprint);
    write_u64(out, model.params().size());
    out.write(reinterpret_cast<const char*>(model.params().data()),
              static_cast<std::streamsize>(model.params().size() * sizeof(double)));
    if (!out) throw IoError("failed writing checkpoint: " + path);
}

LoadedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kModelMagic, sizeof(magic)) != 0)
        throw FormatError("not a reqa model checkpoint: " + path);
    ModelDims dims;
    dims.vocab_size = read_u64(in);
    dims.d_tok = read_u64(in);
    dims.d_hidden = read_u64(in);
    dims.d_out = read_u64(in);
    const double scale = read_f64(in);
    LoadedModel loaded{EncoderModel(dims), 0, 0};
    loaded.model.score_scale = scale;
    loaded.vocab_fingerprint = read_u64(in);
    loaded.config_fingerprint = read_u64(in);
    const std::uint64_t count = read_u64(in);
    if (count != loaded.model.params().size())
        throw FormatError("checkpoint parameter count does not match its shape header");
    in.read(reinterpret_cast<char*>(loaded.model.params().data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw FormatError("checkpoint is truncated: " + path);
    return loaded;
}

void save_embeddings(const EmbeddingMatrix& embeddings, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(kEmbMagic, sizeof(kEmbMagic));
    write_u64(out, embeddings.n);
    write_u64(out, embeddings.d);
    write_u64(out, embeddings.use_context ? 1 : 0);
    write_u64(out, embeddings.model_fingerprint);
    write_u64(out, embeddings.source_fingerprint.size());
    out.write(embeddings.source_fingerprint.data(),
              static_cast<std::streamsize>(embeddings.source_fingerprint.size()));
    out.write(reinterpret_cast<const char*>(embeddings.data.data()),
              static_cast<std::streamsize>(embeddings.data.size() * sizeof(double)));
    if (!out) throw IoError("failed writing embeddings: " + path);
}

EmbeddingMatrix load_embeddings(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kEmbMagic, sizeof(magic)) != 0)
        throw FormatError("not a reqa embedding cache: " + path);
    EmbeddingMatrix m;
    m.n = read_u64(in);
    m.d = read_u64(in);
    m.use_context = read_u64(in) != 0;
    m.model_fingerprint = read_u64(in);
    const std::uint64_t fp_len = read_u64(in);
    m.source_fingerprint.resize(fp_len);
    in.read(m.source_fingerprint.data(), static_cast<std::streamsize>(fp_len));
    m.data.resize(m.n * m.d);
    in.read(reinterpret_cast<char*>(m.data.data()),
            static_cast<std::streamsize>(m.data.size() * sizeof(double)));
    if (!in) throw FormatError("embedding cache is truncated: " + path);
    return m;
}

}  // namespace reqa::dense
