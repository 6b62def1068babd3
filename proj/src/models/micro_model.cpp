#include "simt/models/micro_model.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "simt/error.hpp"

namespace simt::models {

namespace {

constexpr std::array<std::string_view, kTensorCount> kTensorNames = {
    "embed",        "pos",          "enc.q",         "enc.k",         "enc.v",         "enc.o",
    "dec.self.q",   "dec.self.k",   "dec.self.v",    "dec.self.o",    "dec.cross.q",   "dec.cross.k",
    "dec.cross.v",  "dec.cross.o",  "ffn.in",        "ffn.out",       "out"};

constexpr double kGeluC = 0.7978845608028654; // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;

double gelu(double x) {
    const double u = kGeluC * (x + kGeluA * x * x * x);
    return 0.5 * x * (1.0 + std::tanh(u));
}

double gelu_grad(double x) {
    const double u = kGeluC * (x + kGeluA * x * x * x);
    const double t = std::tanh(u);
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
}

struct AttentionCache {
    Matrix q, k, v, probs, ctx;
    std::vector<int> limits;
};

struct AttentionWeights {
    const Matrix &q, &k, &v, &o;
};

struct AttentionGrads {
    Matrix &q, &k, &v, &o;
};

// Row r of the query side attends to key rows [0, limits[r]). Masked columns
// are never touched, so their contents cannot leak into the result.
Matrix attention_forward(const Matrix &xq, const Matrix &xkv, const AttentionWeights &w,
                         std::vector<int> limits, AttentionCache &c) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(w.q.cols()));
    c.q = xq * w.q;
    c.k = xkv * w.k;
    c.v = xkv * w.v;
    c.probs = Matrix::Zero(xq.rows(), xkv.rows());
    c.ctx = Matrix::Zero(xq.rows(), w.v.cols());
    for (Eigen::Index r = 0; r < xq.rows(); ++r) {
        const int lim = limits[static_cast<std::size_t>(r)];
        double mx = -std::numeric_limits<double>::infinity();
        for (int col = 0; col < lim; ++col) {
            const double s = c.q.row(r).dot(c.k.row(col)) * scale;
            c.probs(r, col) = s;
            mx = std::max(mx, s);
        }
        double sum = 0.0;
        for (int col = 0; col < lim; ++col) {
            const double e = std::exp(c.probs(r, col) - mx);
            c.probs(r, col) = e;
            sum += e;
        }
        for (int col = 0; col < lim; ++col) {
            c.probs(r, col) /= sum;
            c.ctx.row(r) += c.probs(r, col) * c.v.row(col);
        }
    }
    c.limits = std::move(limits);
    return c.ctx * w.o;
}

void attention_backward(const Matrix &dout, const Matrix &xq, const Matrix &xkv,
                        const AttentionWeights &w, const AttentionCache &c, AttentionGrads g,
                        Matrix &dxq, Matrix &dxkv) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(w.q.cols()));
    g.o += c.ctx.transpose() * dout;
    const Matrix dctx = dout * w.o.transpose();
    Matrix dq = Matrix::Zero(c.q.rows(), c.q.cols());
    Matrix dk = Matrix::Zero(c.k.rows(), c.k.cols());
    Matrix dv = Matrix::Zero(c.v.rows(), c.v.cols());
    std::vector<double> dprob;
    for (Eigen::Index r = 0; r < dctx.rows(); ++r) {
        const int lim = c.limits[static_cast<std::size_t>(r)];
        dprob.assign(static_cast<std::size_t>(lim), 0.0);
        double weighted = 0.0;
        for (int col = 0; col < lim; ++col) {
            dprob[col] = dctx.row(r).dot(c.v.row(col));
            weighted += c.probs(r, col) * dprob[col];
        }
        for (int col = 0; col < lim; ++col) {
            const double p = c.probs(r, col);
            dv.row(col) += p * dctx.row(r);
            const double ds = p * (dprob[col] - weighted) * scale;
            dq.row(r) += ds * c.k.row(col);
            dk.row(col) += ds * c.q.row(r);
        }
    }
    g.q += xq.transpose() * dq;
    g.k += xkv.transpose() * dk;
    g.v += xkv.transpose() * dv;
    dxq = dq * w.q.transpose();
    dxkv = dk * w.k.transpose() + dv * w.v.transpose();
}

struct Pass {
    TokenSeq source;
    TokenSeq dec_in;
    Matrix x0, h;
    AttentionCache enc;
    Matrix u0, u1, u2, f1, act, u3, logits;
    AttentionCache self, cross;
};

void check_finite(const Matrix &m, const char *name) {
    if (!m.allFinite()) {
        throw NumericError(std::string("micro model: non-finite values in ") + name);
    }
}

void check_ids(std::span<const TokenId> ids, std::size_t vocab, const char *side) {
    for (TokenId id : ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
            throw ValidationError(std::string("micro model: ") + side + " id " + std::to_string(id) +
                                  " out of vocabulary range");
        }
    }
}

AttentionWeights weights(const MicroParams &p, Tensor q, Tensor k, Tensor v, Tensor o) {
    return {p[q], p[k], p[v], p[o]};
}

AttentionGrads grads_of(MicroParams &g, Tensor q, Tensor k, Tensor v, Tensor o) {
    return {g[q], g[k], g[v], g[o]};
}

// Runs the full network; `pass.logits` row t scores the token after dec_in[0..t].
void run_forward(const MicroParams &p, const MicroConfig &cfg, std::span<const TokenId> source,
                 std::span<const TokenId> target_prefix, std::vector<int> cross_limits, Pass &pass) {
    if (source.empty()) {
        throw ValidationError("micro model: empty source");
    }
    const auto s_len = static_cast<Eigen::Index>(source.size());
    const auto t_len = static_cast<Eigen::Index>(target_prefix.size() + 1);
    if (s_len > cfg.max_len || t_len > cfg.max_len) {
        throw CapacityError("micro model: sequence length exceeds max_len=" +
                            std::to_string(cfg.max_len));
    }
    check_ids(source, cfg.vocab_size, "source");
    check_ids(target_prefix, cfg.vocab_size, "target");

    pass.source.assign(source.begin(), source.end());
    pass.dec_in.clear();
    pass.dec_in.push_back(cfg.bos);
    pass.dec_in.insert(pass.dec_in.end(), target_prefix.begin(), target_prefix.end());

    const Matrix &embed = p[Tensor::Embed];
    const Matrix &pos = p[Tensor::Pos];

    pass.x0.resize(s_len, cfg.d);
    for (Eigen::Index i = 0; i < s_len; ++i) {
        pass.x0.row(i) = embed.row(pass.source[i]) + pos.row(i);
    }
    std::vector<int> enc_limits(static_cast<std::size_t>(s_len));
    for (Eigen::Index i = 0; i < s_len; ++i) {
        enc_limits[i] = cfg.mode == EncoderMode::Unidirectional ? static_cast<int>(i) + 1
                                                                 : static_cast<int>(s_len);
    }
    pass.h = pass.x0 + attention_forward(pass.x0, pass.x0,
                                         weights(p, Tensor::EncQ, Tensor::EncK, Tensor::EncV, Tensor::EncO),
                                         std::move(enc_limits), pass.enc);
    check_finite(pass.h, "encoder output");

    pass.u0.resize(t_len, cfg.d);
    for (Eigen::Index i = 0; i < t_len; ++i) {
        pass.u0.row(i) = embed.row(pass.dec_in[i]) + pos.row(i);
    }
    std::vector<int> self_limits(static_cast<std::size_t>(t_len));
    for (Eigen::Index i = 0; i < t_len; ++i) {
        self_limits[i] = static_cast<int>(i) + 1;
    }
    pass.u1 = pass.u0 + attention_forward(pass.u0, pass.u0,
                                          weights(p, Tensor::DecSelfQ, Tensor::DecSelfK,
                                                  Tensor::DecSelfV, Tensor::DecSelfO),
                                          std::move(self_limits), pass.self);

    if (cross_limits.empty()) {
        cross_limits.assign(static_cast<std::size_t>(t_len), static_cast<int>(s_len));
    }
    if (static_cast<Eigen::Index>(cross_limits.size()) != t_len) {
        throw ValidationError("micro model: cross limit count differs from target length");
    }
    for (int lim : cross_limits) {
        if (lim < 1 || lim > s_len) {
            throw ValidationError("micro model: cross limit " + std::to_string(lim) +
                                  " outside [1, source length]");
        }
    }
    pass.u2 = pass.u1 + attention_forward(pass.u1, pass.h,
                                          weights(p, Tensor::DecCrossQ, Tensor::DecCrossK,
                                                  Tensor::DecCrossV, Tensor::DecCrossO),
                                          std::move(cross_limits), pass.cross);

    pass.f1 = pass.u2 * p[Tensor::FfnIn];
    pass.act = pass.f1.unaryExpr([](double x) { return gelu(x); });
    pass.u3 = pass.u2 + pass.act * p[Tensor::FfnOut];
    check_finite(pass.u3, "decoder output");
    pass.logits = pass.u3 * p[Tensor::Out];
    check_finite(pass.logits, "logits");
}

// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix &logits) {
    Matrix out(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double mx = logits.row(r).maxCoeff();
        double sum = 0.0;
        for (Eigen::Index c = 0; c < logits.cols(); ++c) {
            out(r, c) = std::exp(logits(r, c) - mx);
            sum += out(r, c);
        }
        out.row(r) /= sum;
    }
    return out;
}

double log_prob(const Matrix &logits, Eigen::Index row, TokenId id) {
    const double mx = logits.row(row).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
        sum += std::exp(logits(row, c) - mx);
    }
    return logits(row, id) - mx - std::log(sum);
}

void backward(const MicroParams &p, const Pass &pass, const Matrix &dlogits,
              MicroParams &g) {
    g[Tensor::Out] += pass.u3.transpose() * dlogits;
    const Matrix du3 = dlogits * p[Tensor::Out].transpose();

    g[Tensor::FfnOut] += pass.act.transpose() * du3;
    const Matrix dact = du3 * p[Tensor::FfnOut].transpose();
    Matrix df1(dact.rows(), dact.cols());
    for (Eigen::Index r = 0; r < dact.rows(); ++r) {
        for (Eigen::Index c = 0; c < dact.cols(); ++c) {
            df1(r, c) = dact(r, c) * gelu_grad(pass.f1(r, c));
        }
    }
    g[Tensor::FfnIn] += pass.u2.transpose() * df1;
    const Matrix du2 = du3 + df1 * p[Tensor::FfnIn].transpose();

    Matrix dxq, dxkv;
    attention_backward(du2, pass.u1, pass.h,
                       weights(p, Tensor::DecCrossQ, Tensor::DecCrossK, Tensor::DecCrossV, Tensor::DecCrossO),
                       pass.cross,
                       grads_of(g, Tensor::DecCrossQ, Tensor::DecCrossK, Tensor::DecCrossV, Tensor::DecCrossO),
                       dxq, dxkv);
    const Matrix du1 = du2 + dxq;
    const Matrix dh = dxkv;

    attention_backward(du1, pass.u0, pass.u0,
                       weights(p, Tensor::DecSelfQ, Tensor::DecSelfK, Tensor::DecSelfV, Tensor::DecSelfO),
                       pass.self,
                       grads_of(g, Tensor::DecSelfQ, Tensor::DecSelfK, Tensor::DecSelfV, Tensor::DecSelfO),
                       dxq, dxkv);
    const Matrix du0 = du1 + dxq + dxkv;

    attention_backward(dh, pass.x0, pass.x0,
                       weights(p, Tensor::EncQ, Tensor::EncK, Tensor::EncV, Tensor::EncO), pass.enc,
                       grads_of(g, Tensor::EncQ, Tensor::EncK, Tensor::EncV, Tensor::EncO), dxq, dxkv);
    const Matrix dx0 = dh + dxq + dxkv;

    Matrix &gembed = g[Tensor::Embed];
    Matrix &gpos = g[Tensor::Pos];
    for (Eigen::Index i = 0; i < dx0.rows(); ++i) {
        gembed.row(pass.source[i]) += dx0.row(i);
        gpos.row(i) += dx0.row(i);
    }
    for (Eigen::Index i = 0; i < du0.rows(); ++i) {
        gembed.row(pass.dec_in[i]) += du0.row(i);
        gpos.row(i) += du0.row(i);
    }
}

std::size_t count_tokens(std::span<const TrainingExample> batch) {
    std::size_t tokens = 0;
    for (const auto &ex : batch) {
        if (ex.target.empty()) {
            throw ValidationError("micro model: empty target in batch");
        }
        tokens += ex.target.size();
    }
    return tokens;
}

} // namespace

std::string_view to_string(EncoderMode mode) {
    return mode == EncoderMode::Bidirectional ? "bidirectional" : "unidirectional";
}

EncoderMode parse_encoder_mode(std::string_view text) {
    if (text == "bidirectional" || text == "bi") {
        return EncoderMode::Bidirectional;
    }
    if (text == "unidirectional" || text == "uni") {
        return EncoderMode::Unidirectional;
    }
    throw ConfigError("unknown encoder mode '" + std::string(text) + "'");
}

std::string_view tensor_name(Tensor t) { return kTensorNames[static_cast<std::size_t>(t)]; }

MicroParams MicroParams::zeros(const MicroConfig &cfg) {
    const auto v = static_cast<Eigen::Index>(cfg.vocab_size);
    const Eigen::Index d = cfg.d;
    MicroParams p;
    p[Tensor::Embed] = Matrix::Zero(v, d);
    p[Tensor::Pos] = Matrix::Zero(cfg.max_len, d);
    for (Tensor t : {Tensor::EncQ, Tensor::EncK, Tensor::EncV, Tensor::EncO, Tensor::DecSelfQ,
                     Tensor::DecSelfK, Tensor::DecSelfV, Tensor::DecSelfO, Tensor::DecCrossQ,
                     Tensor::DecCrossK, Tensor::DecCrossV, Tensor::DecCrossO}) {
        p[t] = Matrix::Zero(d, d);
    }
    p[Tensor::FfnIn] = Matrix::Zero(d, 4 * d);
    p[Tensor::FfnOut] = Matrix::Zero(4 * d, d);
    p[Tensor::Out] = Matrix::Zero(d, v);
    return p;
}

std::optional<Tensor> MicroParams::first_non_finite() const {
    for (std::size_t i = 0; i < kTensorCount; ++i) {
        if (!tensors[i].allFinite()) {
            return static_cast<Tensor>(i);
        }
    }
    return std::nullopt;
}

namespace {

void validate_config(const MicroConfig &cfg) {
    if (cfg.vocab_size < 1 || cfg.d < 1 || cfg.max_len < 1) {
        throw ConfigError("micro model: vocab_size, d and max_len must be positive");
    }
    if (cfg.bos < 0 || static_cast<std::size_t>(cfg.bos) >= cfg.vocab_size) {
        throw ConfigError("micro model: BOS id outside vocabulary");
    }
}

} // namespace

MicroModel::MicroModel(const MicroConfig &cfg, std::uint64_t seed)
    : cfg_(cfg), params_(MicroParams::zeros(cfg)) {
    validate_config(cfg_);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> init(-0.1, 0.1);
    for (auto &t : params_.tensors) {
        for (Eigen::Index i = 0; i < t.size(); ++i) {
            t.data()[i] = init(rng);
        }
    }
}

MicroModel::MicroModel(const MicroConfig &cfg, MicroParams params)
    : cfg_(cfg), params_(std::move(params)) {
    validate_config(cfg_);
    const MicroParams shape = MicroParams::zeros(cfg_);
    for (std::size_t i = 0; i < kTensorCount; ++i) {
        if (params_.tensors[i].rows() != shape.tensors[i].rows() ||
            params_.tensors[i].cols() != shape.tensors[i].cols()) {
            throw ValidationError("micro model: tensor '" +
                                  std::string(tensor_name(static_cast<Tensor>(i))) +
                                  "' has the wrong shape");
        }
    }
    if (auto bad = params_.first_non_finite()) {
        throw NumericError("micro model: tensor '" + std::string(tensor_name(*bad)) +
                           "' holds non-finite values");
    }
}

Distribution MicroModel::forward(std::span<const TokenId> source_prefix,
                                 std::span<const TokenId> target_prefix,
                                 std::optional<int> cross_limit) const {
    std::vector<int> limits;
    if (cross_limit) {
        limits.assign(target_prefix.size() + 1, *cross_limit);
    }
    Pass pass;
    run_forward(params_, cfg_, source_prefix, target_prefix, std::move(limits), pass);
    const Eigen::Index last = pass.logits.rows() - 1;
    const Matrix probs = softmax_rows(pass.logits.row(last));
    return Distribution(std::vector<double>(probs.data(), probs.data() + probs.size()));
}

LossAndGrads MicroModel::loss_and_grads(std::span<const TrainingExample> batch) const {
    if (batch.empty()) {
        throw ValidationError("micro model: empty batch");
    }
    LossAndGrads out{0.0, MicroParams::zeros(cfg_), count_tokens(batch)};
    const double weight = 1.0 / static_cast<double>(out.tokens);
    Pass pass;
    for (const auto &ex : batch) {
        const std::span<const TokenId> target(ex.target);
        run_forward(params_, cfg_, ex.source, target.first(target.size() - 1), ex.cross_limits, pass);
        Matrix dlogits = softmax_rows(pass.logits);
        for (Eigen::Index t = 0; t < dlogits.rows(); ++t) {
            out.loss -= log_prob(pass.logits, t, ex.target[t]);
            dlogits(t, ex.target[t]) -= 1.0;
        }
        dlogits *= weight;
        backward(params_, pass, dlogits, out.grads);
    }
    out.loss *= weight;
    return out;
}

double MicroModel::loss(std::span<const TrainingExample> batch) const {
    if (batch.empty()) {
        throw ValidationError("micro model: empty batch");
    }
    const std::size_t tokens = count_tokens(batch);
    double total = 0.0;
    Pass pass;
    for (const auto &ex : batch) {
        const std::span<const TokenId> target(ex.target);
        run_forward(params_, cfg_, ex.source, target.first(target.size() - 1), ex.cross_limits, pass);
        for (Eigen::Index t = 0; t < pass.logits.rows(); ++t) {
            total -= log_prob(pass.logits, t, ex.target[t]);
        }
    }
    return total / static_cast<double>(tokens);
}

void MicroModel::sgd_step(const MicroParams &grads, double lr) {
    if (!(lr >= 0.0) || !std::isfinite(lr)) {
        throw ConfigError("sgd: learning rate must be finite and non-negative");
    }
    MicroParams next = params_;
    for (std::size_t i = 0; i < kTensorCount; ++i) {
        const Matrix &g = grads.tensors[i];
        if (g.rows() != next.tensors[i].rows() || g.cols() != next.tensors[i].cols()) {
            throw ValidationError("sgd: gradient '" + std::string(tensor_name(static_cast<Tensor>(i))) +
                                  "' has the wrong shape");
        }
        if (lr != 0.0) {
            next.tensors[i] -= lr * g;
        }
    }
    if (auto bad = next.first_non_finite()) {
        throw NumericError("sgd: tensor '" + std::string(tensor_name(*bad)) +
                           "' became non-finite after the step");
    }
    params_ = std::move(next);
}

} // namespace simt::models
