#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "reqa/corpus.hpp"
#include "reqa/tokenizers.hpp"

namespace reqa::dense {

struct ModelDims {
    std::size_t vocab_size = 0;
    std::size_t d_tok = 64;
    std::size_t d_hidden = 64;
    std::size_t d_out = 64;

    bool operator==(const ModelDims&) const = default;
};

// Toy dual-encoder parameter bundle, stored as one flat 64-bit vector.
//
// Question tower: mean over tokens of (token embedding + type-0 embedding),
// then a two-layer feed-forward with tanh, then l2 normalization. Answer
// tower: separate mean-pooled encodings of the answer and its context (both
// with the type-1 embedding) are concatenated and fed through the answer
// feed-forward; the first answer-layer weight matrix spans the concatenated
// vector and acts as the context combiner. Output embeddings are unit norm.
class EncoderModel {
public:
    explicit EncoderModel(const ModelDims& dims);

    // Token embeddings draw from N(0, embedding_scale^2); type embeddings and
    // biases start at zero; feed-forward layers use 1/sqrt(fan-in) scaling
    // except the final projection, which is shrunk by head_scale so the l2
    // normalization amplifies early gradients.
    static EncoderModel random_init(const ModelDims& dims, std::uint64_t seed,
                                    double embedding_scale = 1.0, double head_scale = 0.02);

    const ModelDims& dims() const { return dims_; }
    std::size_t n_params() const { return params_.size(); }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    std::span<const double> token_embedding(TokenId id) const;
    std::span<const double> type_embedding(int type) const;

    // Block layout within the flat parameter vector.
    std::size_t off_token_emb() const { return 0; }
    std::size_t off_type_emb() const;
    std::size_t off_q_w1() const;
    std::size_t off_q_b1() const;
    std::size_t off_q_w2() const;
    std::size_t off_q_b2() const;
    std::size_t off_a_w1() const;
    std::size_t off_a_b1() const;
    std::size_t off_a_w2() const;
    std::size_t off_a_b2() const;

    // Optional multiplier on the dot-product score inside the softmax;
    // defaults to the raw dot product.
    double score_scale = 1.0;

private:
    ModelDims dims_;
    std::vector<double> params_;
};

std::uint64_t params_fingerprint(const EncoderModel& model);

// One (question, answer, context) example, already tokenized to vocab ids.
struct TrainingPair {
    std::vector<TokenId> question;
    std::vector<TokenId> answer;
    std::vector<TokenId> context;
};

// Unit-norm question embedding. Throws EmptyInput on an empty token sequence
// and NormalizationDegenerate when the pre-normalization vector is ~zero.
std::vector<double> encode_question(const EncoderModel& model, std::span<const TokenId> tokens);

// Unit-norm answer embedding. With use_context false the context pathway
// receives an all-zero encoding, so the output is independent of the context
// tokens.
std::vector<double> encode_answer(const EncoderModel& model, std::span<const TokenId> answer,
                                  std::span<const TokenId> context, bool use_context);

struct SoftmaxLoss {
    double loss = 0.0;
    std::vector<std::vector<double>> probs;  // row-stochastic B x B matrix
};

// In-batch-negatives softmax cross entropy over a given score matrix
// phi[i][j]; row i's positive is column i. Uses max-subtraction
// stabilization.
SoftmaxLoss softmax_xent(const std::vector<std::vector<double>>& phi);

// Mean negative log-likelihood of the aligned pairs with all other answers in
// the batch as negatives. Throws BatchTooSmall when the batch has fewer than
// two examples.
SoftmaxLoss batch_loss(const EncoderModel& model, std::span<const TrainingPair> batch,
                       bool use_context = true);

struct BatchGradients {
    double loss = 0.0;
    std::vector<double> grads;  // same layout as EncoderModel::params()
};

// Exact analytic gradients of batch_loss with respect to every parameter,
// including through the l2 normalization and the type embedding table.
BatchGradients batch_gradients(const EncoderModel& model, std::span<const TrainingPair> batch,
                               bool use_context = true);

struct TrainConfig {
    enum class Optimizer { Sgd, AdamW };

    std::size_t batch_size = 64;
    Optimizer optimizer = Optimizer::Sgd;
    double lr_initial = 0.01;
    double lr_final = 0.001;
    std::size_t epochs = 10;
    std::uint64_t seed = 1;
    double validation_fraction = 0.1;
    bool use_context = true;

    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    double adam_weight_decay = 0.01;

    // Batch 64, SGD, learning rate decaying exponentially 0.01 -> 0.001.
    static TrainConfig useqa_style();
    // Batch 128, AdamW, constant learning rate 1e-4.
    static TrainConfig bert_style();

    void validate() const;  // epochs >= 1, 0 < lr_final <= lr_initial
};

// lr at step `step` (1-based) of `total_steps`:
//   lr_initial * (lr_final / lr_initial)^(step / total_steps)
double learning_rate_at(const TrainConfig& config, std::size_t step, std::size_t total_steps);

struct TrainResult {
    std::vector<double> train_loss_per_epoch;
    std::vector<double> val_loss_per_epoch;  // empty when no validation split
    std::size_t effective_batch_size = 0;    // batch may shrink on desk-scale data
    std::size_t total_steps = 0;
    std::size_t n_train_pairs = 0;
    std::size_t n_val_pairs = 0;
};

// Shuffles per epoch with the seeded generator; runs are bit-reproducible for
// a fixed seed. A 10% validation split is carved from the pairs before
// training.
TrainResult train(EncoderModel& model, std::vector<TrainingPair> pairs,
                  const TrainConfig& config);

// Dense row-major matrix of unit-norm candidate embeddings, aligned with
// candidate ids 0..N-1.
struct EmbeddingMatrix {
    std::size_t n = 0;
    std::size_t d = 0;
    bool use_context = true;  // context mode the rows were encoded with
    std::uint64_t model_fingerprint = 0;
    std::string source_fingerprint;
    std::vector<double> data;

    std::span<const double> row(std::size_t i) const { return {data.data() + i * d, d}; }
};

EmbeddingMatrix embed_candidates(
    const EncoderModel& model,
    const std::vector<std::pair<std::vector<TokenId>, std::vector<TokenId>>>& answer_context,
    bool use_context, unsigned threads = 1);

// Exhaustive maximum-dot-product retrieval; ties broken by ascending id.
// Unit-norm inputs keep scores within [-1, 1].
std::vector<ScoredCandidate> retrieve_topk(const EmbeddingMatrix& pool,
                                           std::span<const double> query, std::size_t k);

// Checkpoint: magic + shape header + config fingerprint + 64-bit payload.
void save_model(const EncoderModel& model, std::uint64_t vocab_fingerprint,
                std::uint64_t config_fingerprint, const std::string& path);
struct LoadedModel {
    EncoderModel model;
    std::uint64_t vocab_fingerprint = 0;
    std::uint64_t config_fingerprint = 0;
};
LoadedModel load_model(const std::string& path);

void save_embeddings(const EmbeddingMatrix& embeddings, const std::string& path);
EmbeddingMatrix load_embeddings(const std::string& path);

}  // namespace reqa::dense
