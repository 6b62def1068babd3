#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "simt/models/translation_model.hpp"

namespace simt::models {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class EncoderMode { Bidirectional, Unidirectional };

std::string_view to_string(EncoderMode mode);
EncoderMode parse_encoder_mode(std::string_view text);

struct MicroConfig {
    std::size_t vocab_size = 0;
    int d = 32;
    int max_len = 64;
    EncoderMode mode = EncoderMode::Bidirectional;
    TokenId bos = 0;
};

/// Parameter tensors of the micro encoder-decoder, in a fixed order.
enum class Tensor : std::size_t {
    Embed,     // |V| x d, shared by encoder and decoder inputs
    Pos,       // max_len x d, learned positions
    EncQ,
    EncK,
    EncV,
    EncO,
    DecSelfQ,
    DecSelfK,
    DecSelfV,
    DecSelfO,
    DecCrossQ,
    DecCrossK,
    DecCrossV,
    DecCrossO,
    FfnIn,     // d x 4d
    FfnOut,    // 4d x d
    Out,       // d x |V|
    Count
};

inline constexpr std::size_t kTensorCount = static_cast<std::size_t>(Tensor::Count);

std::string_view tensor_name(Tensor t);

/// Named parameter (or gradient) set.
struct MicroParams {
    std::array<Matrix, kTensorCount> tensors;

    Matrix &operator[](Tensor t) { return tensors[static_cast<std::size_t>(t)]; }
    const Matrix &operator[](Tensor t) const { return tensors[static_cast<std::size_t>(t)]; }

    /// Zero tensors shaped for `cfg`.
    static MicroParams zeros(const MicroConfig &cfg);
    /// Name of the first tensor holding a NaN/Inf, if any.
    std::optional<Tensor> first_non_finite() const;
};

/// One training sequence. `cross_limits[t]` is the number of leading encoder
/// positions decoder position t may attend to; empty means all of them.
struct TrainingExample {
    TokenSeq source;
    TokenSeq target;
    std::vector<int> cross_limits;
};

struct LossAndGrads {
    double loss = 0.0;
    MicroParams grads;
    std::size_t tokens = 0;
};

/// One-layer, single-head encoder-decoder with hand-written backprop.
///
/// Encoder: embeddings + positions, self-attention (causal when
/// UNIDIRECTIONAL), residual. Decoder: causal self-attention, cross-attention
/// and a GELU feed-forward block, each residual, then the output projection.
/// No layer norm, no biases.
class MicroModel final : public TranslationModel {
  public:
    /// Draws every tensor from uniform(-0.1, 0.1) with `seed`.
    MicroModel(const MicroConfig &cfg, std::uint64_t seed);
    MicroModel(const MicroConfig &cfg, MicroParams params);

    /// Next-token distribution after `target_prefix`. With `cross_limit`, the
    /// decoder only attends to the first `cross_limit` encoder positions.
    Distribution forward(std::span<const TokenId> source_prefix,
                         std::span<const TokenId> target_prefix,
                         std::optional<int> cross_limit = std::nullopt) const;

    Distribution next_dist(std::span<const TokenId> source_prefix,
                           std::span<const TokenId> target_prefix) const override {
        return forward(source_prefix, target_prefix);
    }
    std::size_t vocab_size() const override { return cfg_.vocab_size; }

    /// Mean token cross-entropy over the batch and its exact gradient.
    LossAndGrads loss_and_grads(std::span<const TrainingExample> batch) const;
    /// Same loss without the backward pass.
    double loss(std::span<const TrainingExample> batch) const;

    /// params -= lr * grads. Atomic: a non-finite result throws NumericError
    /// and leaves the parameters untouched.
    void sgd_step(const MicroParams &grads, double lr);

    const MicroConfig &config() const { return cfg_; }
    const MicroParams &params() const { return params_; }
    MicroParams &mutable_params() { return params_; }

  private:
    MicroConfig cfg_;
    MicroParams params_;
};

} // namespace simt::models
