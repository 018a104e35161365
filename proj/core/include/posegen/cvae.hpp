#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "posegen/autodiff.hpp"
#include "posegen/geometry.hpp"
#include "posegen/mlp.hpp"
#include "posegen/optimizer.hpp"
#include "posegen/rng.hpp"
#include "posegen/scene.hpp"

namespace posegen::vae {

/// Inference network: 9-dimensional pose sample -> five 128-wide ReLU layers
/// -> mean and log-variance of the latent Gaussian.
struct EncoderSpec {
    std::int64_t input_width = 9;
    std::vector<std::int64_t> hidden = {128, 128, 128, 128, 128};
    std::int64_t latent_dim = 4;

    std::vector<std::int64_t> widths() const {
        std::vector<std::int64_t> w;
        w.push_back(input_width);
        w.insert(w.end(), hidden.begin(), hidden.end());
        w.push_back(2 * latent_dim);
        return w;
    }
};

/// Generative model: observation features and latent sample each projected
/// to the fusion width with ReLU, added, then a five-layer 128-wide trunk
/// emits the 9-dimensional pose (6D rotation + translation). The feature
/// extractor is a small trainable head standing in for an image backbone;
/// its output carries a learnable scale.
struct DecoderSpec {
    std::int64_t obs_dim = 3;
    std::vector<std::int64_t> extractor_widths = {16};  // obs -> features, <= 512
    std::int64_t fusion_width = 64;
    std::vector<std::int64_t> hidden = {128, 128, 128, 128, 128};
    std::int64_t latent_dim = 4;

    std::int64_t feature_width() const { return extractor_widths.back(); }

    std::vector<std::int64_t> trunk_widths() const {
        std::vector<std::int64_t> w;
        w.push_back(fusion_width);
        w.insert(w.end(), hidden.begin(), hidden.end());
        w.push_back(9);
        return w;
    }

    std::vector<std::int64_t> extractor_full_widths() const {
        std::vector<std::int64_t> w;
        w.push_back(obs_dim);
        w.insert(w.end(), extractor_widths.begin(), extractor_widths.end());
        return w;
    }
};

struct TrainConfig {
    std::int64_t latent_dim = 4;
    double beta = 0.3;
    std::int64_t warmup_start = 1000;
    std::int64_t warmup_length = 4000;
    std::int64_t batch_size = 16;
    std::int64_t mc_train_samples = 64;  // Monte Carlo reconstructions per pose
    double lambda_r = 1.0;
    double lambda_t = 1.0;
    std::int64_t total_iterations = 12000;
    std::uint64_t seed = 1;
    ad::OptimizerConfig optimizer;

    void validate() const {
        if (latent_dim < 1) throw ConfigError("latent_dim must be positive");
        if (!(beta >= 0)) throw ConfigError("beta must be >= 0");
        if (warmup_start < 0) throw ConfigError("warmup_start must be >= 0");
        if (warmup_length < 0) throw ConfigError("warmup_length must be >= 0");
        if (batch_size < 1) throw ConfigError("batch_size must be positive");
        if (mc_train_samples < 1 || mc_train_samples > 1000)
            throw ConfigError("mc_train_samples must be in [1, 1000]");
        if (!(lambda_r > 0 && lambda_t > 0)) throw ConfigError("loss weights must be positive");
        if (total_iterations < 0) throw ConfigError("total_iterations must be >= 0");
        optimizer.validate();
    }
};

/// Diagonal Gaussian q(z|y). log_variance is clamped to [-10, 10] upstream.
template <typename T>
struct LatentGaussianT {
    std::vector<T> mean;
    std::vector<T> log_variance;
};
using LatentGaussian = LatentGaussianT<double>;

inline constexpr double kLogVarClamp = 10.0;

/// All trainable weights: encoder phi, decoder theta, and the observation
/// feature extractor.
template <typename T>
struct ModelParams {
    EncoderSpec encoder;
    DecoderSpec decoder;
    ad::ParamStore<T> store;

    ad::MlpSpec encoder_mlp() const { return {"enc", encoder.widths()}; }
    ad::MlpSpec extractor_mlp() const { return {"dec.feat", decoder.extractor_full_widths()}; }
    ad::MlpSpec trunk_mlp() const { return {"dec.trunk", decoder.trunk_widths()}; }
};

template <typename T>
void init_model(ModelParams<T>& model, Rng& rng) {
    if (model.encoder.latent_dim != model.decoder.latent_dim)
        throw ConfigError("encoder and decoder latent dims differ");
    if (model.decoder.feature_width() > 512)
        throw ConfigError("feature extractor output exceeds 512");
    init_mlp(model.store, model.encoder_mlp(), rng);
    init_mlp(model.store, model.extractor_mlp(), rng);
    model.store.add("dec.feat.scale", Tensor<T>::scalar(T(1)), /*decay=*/false);
    {
        const std::int64_t fi = model.decoder.feature_width();
        const std::int64_t fo = model.decoder.fusion_width;
        ad::MlpSpec fuse_obs{"dec.fuse_obs", {fi, fo}};
        init_mlp(model.store, fuse_obs, rng);
        ad::MlpSpec fuse_z{"dec.fuse_z", {model.decoder.latent_dim, fo}};
        init_mlp(model.store, fuse_z, rng);
    }
    init_mlp(model.store, model.trunk_mlp(), rng);
}

// ---------------------------------------------------------------------------
// graph builders (shared by training and inference)
// ---------------------------------------------------------------------------

template <typename T>
struct EncoderHeads {
    ad::Var mu;       // [B x d]
    ad::Var logvar;   // [B x d], clamped
};

/// pose9 rows are (rot6, trans): the first two rotation columns then the
/// translation.
template <typename T>
EncoderHeads<T> encoder_graph(ad::Graph<T>& g, const ModelParams<T>& model, ad::Var pose9) {
    const ad::Var out = mlp_forward(g, model.encoder_mlp(), pose9);
    const std::int64_t d = model.encoder.latent_dim;
    EncoderHeads<T> heads;
    heads.mu = g.slice_cols(out, 0, d);
    heads.logvar = g.clamp(g.slice_cols(out, d, 2 * d), T(-kLogVarClamp), T(kLogVarClamp));
    return heads;
}

/// Observation-side path: extractor (ReLU stack, scaled output) plus fusion
/// projection. Returns [B x fusion_width] before the trunk.
template <typename T>
ad::Var decoder_obs_path(ad::Graph<T>& g, const ModelParams<T>& model, ad::Var obs) {
    const ad::MlpSpec ext = model.extractor_mlp();
    ad::Var x = obs;
    for (std::int64_t k = 0; k < ext.layer_count(); ++k) {
        x = g.relu(g.add_rowvec(g.matmul(x, g.param(ext.weight_name(k))),
                                g.param(ext.bias_name(k))));
    }
    x = g.mul_scalar(x, g.param("dec.feat.scale"));
    return g.relu(g.add_rowvec(g.matmul(x, g.param("dec.fuse_obs.fc0.w")),
                               g.param("dec.fuse_obs.fc0.b")));
}

template <typename T>
ad::Var decoder_z_path(ad::Graph<T>& g, const ModelParams<T>& /*model*/, ad::Var z) {
    return g.relu(g.add_rowvec(g.matmul(z, g.param("dec.fuse_z.fc0.w")),
                               g.param("dec.fuse_z.fc0.b")));
}

/// fused [S x fusion_width] -> pose9 [S x 9] (rot6 | trans).
template <typename T>
ad::Var decoder_trunk(ad::Graph<T>& g, const ModelParams<T>& model, ad::Var fused) {
    return mlp_forward(g, model.trunk_mlp(), fused);
}

/// Batched Gram-Schmidt: rot6 rows -> rotation matrices flattened
/// column-major (b1 | b2 | b1 x b2) as [S x 9]. The Frobenius distance to a
/// target rotation flattened the same way equals the matrix Frobenius
/// distance.
template <typename T>
ad::Var rot6d_to_colmajor9(ad::Graph<T>& g, ad::Var rot6) {
    const ad::Var a1 = g.slice_cols(rot6, 0, 3);
    const ad::Var a2 = g.slice_cols(rot6, 3, 6);
    const ad::Var b1 = g.normalize_rows(a1);
    const ad::Var dot = g.row_sum(g.mul(b1, a2));
    const ad::Var u2 = g.sub(a2, g.mul_colvec(b1, dot));
    const ad::Var b2 = g.normalize_rows(u2);
    const ad::Var b3 = g.cross_rows(b1, b2);
    return g.concat_cols(g.concat_cols(b1, b2), b3);
}

/// Closed-form KL against the standard normal, one row per batch element.
template <typename T>
ad::Var kl_rows(ad::Graph<T>& g, const EncoderHeads<T>& q) {
    const ad::Var t = g.add_const(
        g.sub(g.add(g.square(q.mu), g.exp(q.logvar)), q.logvar), T(-1));
    return g.scale(g.row_sum(t), T(0.5));
}

struct ElboTerms {
    ad::Var loss;   // scalar
    ad::Var kl;     // scalar, mean KL over the batch (unweighted)
    ad::Var recon;  // scalar, mean reconstruction distance
};

/// Host-side row tiling matching Graph::repeat_rows.
template <typename T>
Tensor<T> tile_rows(const Tensor<T>& a, std::int64_t times) {
    Tensor<T> out(a.rows() * times, a.cols());
    for (std::int64_t i = 0; i < a.rows(); ++i)
        for (std::int64_t r = 0; r < times; ++r)
            for (std::int64_t j = 0; j < a.cols(); ++j)
                out(i * times + r, j) = a(i, j);
    return out;
}

/// Batch inputs for one optimization step, all row-major host tensors.
template <typename T>
struct BatchInputs {
    Tensor<T> obs;          // [B x F]
    Tensor<T> enc_pose9;    // [B x 9]  (rot6 | trans) of the target
    Tensor<T> target_rot9;  // [B x 9]  target rotation flattened column-major
    Tensor<T> target_trans; // [B x 3]
};

/// Eq. of the training objective: beta * KL + mean Monte Carlo
/// reconstruction, averaged over the batch. noise is [B*M x d], one block of
/// M consecutive rows per batch element.
template <typename T>
ElboTerms elbo_graph(ad::Graph<T>& g, const ModelParams<T>& model, const BatchInputs<T>& batch,
                     std::int64_t mc_samples, double beta_effective, double lambda_r,
                     double lambda_t, const Tensor<T>& noise) {
    const std::int64_t B = batch.obs.rows();
    const std::int64_t M = mc_samples;
    const std::int64_t d = model.encoder.latent_dim;
    if (noise.rows() != B * M || noise.cols() != d)
        throw ShapeMismatch("noise must be [batch*mc x d], got " + noise.shape_str());

    const ad::Var pose9 = g.input(batch.enc_pose9);
    const EncoderHeads<T> q = encoder_graph(g, model, pose9);

    // reparameterized posterior samples, M per pose
    const ad::Var sigma = g.exp(g.scale(g.repeat_rows(q.logvar, M), T(0.5)));
    const ad::Var z = g.add(g.repeat_rows(q.mu, M), g.mul(sigma, g.input(noise)));

    const ad::Var obs_fused = decoder_obs_path(g, model, g.input(batch.obs));
    const ad::Var fused = g.add(g.repeat_rows(obs_fused, M), decoder_z_path(g, model, z));
    const ad::Var out9 = decoder_trunk(g, model, fused);

    const ad::Var rhat = rot6d_to_colmajor9(g, g.slice_cols(out9, 0, 6));
    const ad::Var rot_err = g.l2_norm_rows(g.sub(rhat, g.input(tile_rows(batch.target_rot9, M))));
    const ad::Var trans_err = g.l2_norm_rows(
        g.sub(g.slice_cols(out9, 6, 9), g.input(tile_rows(batch.target_trans, M))));
    const ad::Var d_pose = g.add(g.scale(rot_err, static_cast<T>(lambda_r)),
                                 g.scale(trans_err, static_cast<T>(lambda_t)));

    ElboTerms terms;
    terms.kl = g.mean(kl_rows(g, q));
    terms.recon = g.mean(d_pose);
    terms.loss = g.add(g.scale(terms.kl, static_cast<T>(beta_effective)), terms.recon);
    return terms;
}

// ---------------------------------------------------------------------------
// spec-level operations
// ---------------------------------------------------------------------------

/// KL weight at an iteration: zero before warmup_start, linear ramp over
/// warmup_length, beta afterwards.
double beta_schedule(std::int64_t iteration, const TrainConfig& config);

/// Closed-form KL(q || N(0, I)) = 0.5 sum(mu^2 + sigma^2 - 1 - log sigma^2).
template <typename T>
double kl_standard_normal(const LatentGaussianT<T>& q) {
    if (q.mean.size() != q.log_variance.size())
        throw ShapeMismatch("latent mean/log-variance lengths differ");
    double acc = 0;
    for (std::size_t k = 0; k < q.mean.size(); ++k) {
        const double mu = static_cast<double>(q.mean[k]);
        const double lv = static_cast<double>(q.log_variance[k]);
        acc += mu * mu + std::exp(lv) - 1.0 - lv;
    }
    return 0.5 * acc;
}

/// z = mu + exp(log_variance / 2) * noise, elementwise.
template <typename T>
std::vector<T> reparameterize(const LatentGaussianT<T>& q, const std::vector<T>& noise) {
    if (noise.size() != q.mean.size())
        throw ShapeMismatch("noise length does not match latent dim");
    std::vector<T> z(q.mean.size());
    for (std::size_t k = 0; k < z.size(); ++k)
        z[k] = q.mean[k] + std::exp(q.log_variance[k] / T(2)) * noise[k];
    return z;
}

/// Eq.-style pose distance: lambda_r * ||Rhat - R||_F + lambda_t * ||that - t||.
/// Throws DegenerateRotation6D when the prediction's rot6 cannot be
/// orthonormalized.
double reconstruction_loss(const geo::PoseVec9& predicted, const geo::Pose& target,
                           double lambda_r, double lambda_t);

template <typename T>
LatentGaussianT<T> encode(const ModelParams<T>& model, const geo::PoseVec9& pose) {
    ad::Graph<T> g(const_cast<ad::ParamStore<T>*>(&model.store));
    Tensor<T> in(1, 9);
    const auto flat = pose.flat();
    for (int k = 0; k < 9; ++k) in[k] = static_cast<T>(flat[k]);
    const EncoderHeads<T> heads = encoder_graph(g, model, g.input(std::move(in)));
    LatentGaussianT<T> q;
    const std::int64_t d = model.encoder.latent_dim;
    q.mean.resize(d);
    q.log_variance.resize(d);
    for (std::int64_t k = 0; k < d; ++k) {
        q.mean[k] = g.value(heads.mu)[k];
        q.log_variance[k] = g.value(heads.logvar)[k];
    }
    return q;
}

/// Decode one latent sample conditioned on observation features.
template <typename T>
geo::PoseVec9 decode(const ModelParams<T>& model, const std::vector<T>& z,
                     const std::vector<T>& obs_features) {
    if (static_cast<std::int64_t>(z.size()) != model.decoder.latent_dim)
        throw ShapeMismatch("latent sample has wrong dimension");
    if (static_cast<std::int64_t>(obs_features.size()) != model.decoder.obs_dim)
        throw ShapeMismatch("observation feature width does not match decoder");
    ad::Graph<T> g(const_cast<ad::ParamStore<T>*>(&model.store));
    Tensor<T> zt(1, model.decoder.latent_dim);
    for (std::size_t k = 0; k < z.size(); ++k) zt[k] = z[k];
    Tensor<T> ot(1, model.decoder.obs_dim);
    for (std::size_t k = 0; k < obs_features.size(); ++k) ot[k] = obs_features[k];
    const ad::Var fused = g.add(decoder_obs_path(g, model, g.input(std::move(ot))),
                                decoder_z_path(g, model, g.input(std::move(zt))));
    const Tensor<T>& out = g.value(decoder_trunk(g, model, fused));
    geo::PoseVec9 pv;
    for (int k = 0; k < 6; ++k) pv.rot6[k] = static_cast<double>(out[k]);
    for (int k = 0; k < 3; ++k) pv.trans[k] = static_cast<double>(out[6 + k]);
    return pv;
}

/// One row per logged iteration.
struct LossLogRow {
    std::int64_t iteration = 0;
    double beta_effective = 0;
    double kl = 0;
    double recon = 0;
    double total = 0;
};
using LossLog = std::vector<LossLogRow>;

/// Training batch assembly shared by elbo_loss and train.
template <typename T>
BatchInputs<T> make_batch(const std::vector<const scene::Sample*>& rows, std::int64_t obs_dim) {
    const std::int64_t B = static_cast<std::int64_t>(rows.size());
    BatchInputs<T> b{Tensor<T>(B, obs_dim), Tensor<T>(B, 9), Tensor<T>(B, 9), Tensor<T>(B, 3)};
    for (std::int64_t i = 0; i < B; ++i) {
        const scene::Sample& s = *rows[i];
        if (static_cast<std::int64_t>(s.obs.features.size()) != obs_dim)
            throw ShapeMismatch("dataset feature width does not match decoder");
        for (std::int64_t j = 0; j < obs_dim; ++j)
            b.obs(i, j) = static_cast<T>(s.obs.features[j]);
        const geo::Vec6 rot6 = geo::matrix_to_rot6d(s.pose.rotation);
        for (int j = 0; j < 6; ++j) b.enc_pose9(i, j) = static_cast<T>(rot6[j]);
        for (int j = 0; j < 3; ++j) b.enc_pose9(i, 6 + j) = static_cast<T>(s.pose.translation[j]);
        // column-major flatten: (c1 | c2 | c3)
        for (int c = 0; c < 3; ++c)
            for (int r = 0; r < 3; ++r)
                b.target_rot9(i, c * 3 + r) = static_cast<T>(s.pose.rotation(r, c));
        for (int j = 0; j < 3; ++j) b.target_trans(i, j) = static_cast<T>(s.pose.translation[j]);
    }
    return b;
}

/// Training objective on one batch, forward value only. noise is
/// [batch*mc x d] supplied by the caller.
template <typename T>
double elbo_loss(const ModelParams<T>& model, const std::vector<const scene::Sample*>& batch,
                 std::int64_t iteration, const TrainConfig& config, const Tensor<T>& noise) {
    ad::Graph<T> g(const_cast<ad::ParamStore<T>*>(&model.store));
    const BatchInputs<T> inputs = make_batch<T>(batch, model.decoder.obs_dim);
    const ElboTerms terms =
        elbo_graph(g, model, inputs, config.mc_train_samples, beta_schedule(iteration, config),
                   config.lambda_r, config.lambda_t, noise);
    return static_cast<double>(g.value(terms.loss)[0]);
}

/// Minibatch AdamW on the training objective. Mutates model.store in place
/// and returns the per-iteration loss log. NonFiniteValue aborts with the
/// iteration index in the message.
template <typename T>
LossLog train(ModelParams<T>& model, const scene::Dataset& dataset, const TrainConfig& config) {
    config.validate();
    if (dataset.samples.empty()) throw EmptySamples("training dataset is empty");

    LossLog log;
    log.reserve(config.total_iterations);
    Rng rng(config.seed);
    const std::int64_t B = config.batch_size;
    const std::int64_t M = config.mc_train_samples;
    const std::int64_t d = model.encoder.latent_dim;
    const std::int64_t N = static_cast<std::int64_t>(dataset.samples.size());

    for (std::int64_t it = 0; it < config.total_iterations; ++it) {
        std::vector<const scene::Sample*> batch(B);
        for (std::int64_t i = 0; i < B; ++i)
            batch[i] = &dataset.samples[rng.below(static_cast<std::uint64_t>(N))];
        Tensor<T> noise(B * M, d);
        for (std::int64_t i = 0; i < noise.size(); ++i)
            noise[i] = static_cast<T>(rng.normal());

        const double beta_eff = beta_schedule(it, config);
        try {
            ad::Graph<T> g(&model.store);
            const BatchInputs<T> inputs = make_batch<T>(batch, model.decoder.obs_dim);
            const ElboTerms terms = elbo_graph(g, model, inputs, M, beta_eff, config.lambda_r,
                                               config.lambda_t, noise);
            const double total = static_cast<double>(g.backward(terms.loss));
            adamw_step(model.store, g.param_grads(), config.optimizer);

            LossLogRow row;
            row.iteration = it;
            row.beta_effective = beta_eff;
            row.kl = static_cast<double>(g.value(terms.kl)[0]);
            row.recon = static_cast<double>(g.value(terms.recon)[0]);
            row.total = total;
            log.push_back(row);
        } catch (const NonFiniteValue& e) {
            throw NonFiniteValue("at iteration " + std::to_string(it) + ": " + e.what());
        }
    }
    return log;
}

/// Draw M poses from the posterior of one observation: z ~ N(0, I) from a
/// seeded generator, decoded and orthonormalized. Degenerate 6D outputs are
/// resampled and counted; more than 1% degenerate draws aborts.
template <typename T>
std::vector<geo::Pose> sample_posterior(const ModelParams<T>& model,
                                        const std::vector<double>& obs_features, std::int64_t m,
                                        std::uint64_t seed, std::int64_t* degenerate_draws = nullptr) {
    if (m < 1) throw ConfigError("sample count must be >= 1");
    if (static_cast<std::int64_t>(obs_features.size()) != model.decoder.obs_dim)
        throw ShapeMismatch("observation feature width does not match decoder");

    Rng rng(seed);
    const std::int64_t d = model.decoder.latent_dim;
    std::vector<geo::Pose> poses;
    poses.reserve(m);
    std::int64_t total_draws = 0, degenerate = 0;
    std::int64_t pending = m;

    Tensor<T> obs(1, model.decoder.obs_dim);
    for (std::int64_t k = 0; k < model.decoder.obs_dim; ++k)
        obs[k] = static_cast<T>(obs_features[k]);

    while (pending > 0) {
        Tensor<T> z(pending, d);
        for (std::int64_t i = 0; i < z.size(); ++i) z[i] = static_cast<T>(rng.normal());
        total_draws += pending;

        ad::Graph<T> g(const_cast<ad::ParamStore<T>*>(&model.store));
        const ad::Var obs_fused = decoder_obs_path(g, model, g.input(obs));
        const ad::Var fused = g.add(g.repeat_rows(obs_fused, pending),
                                    decoder_z_path(g, model, g.input(std::move(z))));
        const Tensor<T>& out = g.value(decoder_trunk(g, model, fused));

        std::int64_t still_pending = 0;
        for (std::int64_t i = 0; i < out.rows(); ++i) {
            geo::Vec6 rot6;
            for (int k = 0; k < 6; ++k) rot6[k] = static_cast<double>(out(i, k));
            try {
                geo::Pose p;
                p.rotation = geo::rot6d_to_matrix(rot6);
                for (int k = 0; k < 3; ++k) p.translation[k] = static_cast<double>(out(i, 6 + k));
                poses.push_back(p);
            } catch (const DegenerateRotation6D&) {
                degenerate += 1;
                still_pending += 1;
            }
        }
        if (degenerate > 0 &&
            static_cast<double>(degenerate) > 0.01 * static_cast<double>(total_draws))
            throw ExcessiveDegeneracy(std::to_string(degenerate) + " of " +
                                      std::to_string(total_draws) +
                                      " draws produced degenerate rotations");
        pending = still_pending;
    }
    if (degenerate_draws) *degenerate_draws = degenerate;
    return poses;
}

}  // namespace posegen::vae
