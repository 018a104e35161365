#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "posegen/cvae.hpp"
#include "posegen/grad_check.hpp"
#include "posegen/rng.hpp"

using namespace posegen;

namespace {

/// Tiny architecture for hand-checkable and finite-difference tests.
template <typename T>
vae::ModelParams<T> tiny_model(std::uint64_t seed, std::int64_t latent = 2) {
    vae::ModelParams<T> m;
    m.encoder.input_width = 9;
    m.encoder.hidden = {8, 8};
    m.encoder.latent_dim = latent;
    m.decoder.obs_dim = 3;
    m.decoder.extractor_widths = {4};
    m.decoder.fusion_width = 8;
    m.decoder.hidden = {8, 8};
    m.decoder.latent_dim = latent;
    Rng rng(seed);
    vae::init_model(m, rng);
    return m;
}

/// Paper-sized model (five 128-wide layers) with a given latent dim.
template <typename T>
vae::ModelParams<T> full_model(std::uint64_t seed, std::int64_t obs_dim = 3,
                               std::int64_t latent = 4) {
    vae::ModelParams<T> m;
    m.encoder.latent_dim = latent;
    m.decoder.latent_dim = latent;
    m.decoder.obs_dim = obs_dim;
    Rng rng(seed);
    vae::init_model(m, rng);
    return m;
}

template <typename T>
void zero_params(vae::ModelParams<T>& m) {
    for (std::size_t i = 0; i < m.store.size(); ++i) m.store.entry(i).value.fill(T(0));
}

scene::Dataset toy_dataset(const scene::SceneSpec& spec, std::int64_t n, std::uint64_t seed) {
    return scene::generate_dataset(spec, n, 0, seed, "train");
}

std::vector<const scene::Sample*> all_rows(const scene::Dataset& ds) {
    std::vector<const scene::Sample*> rows;
    for (const auto& s : ds.samples) rows.push_back(&s);
    return rows;
}

}  // namespace

TEST_SUITE("cvae") {

TEST_CASE("encode: zero-initialized network predicts the standard normal") {
    auto m = tiny_model<double>(3);
    zero_params(m);
    geo::PoseVec9 pose;
    pose.trans = geo::Vec3(0.3, -0.2, 0.9);
    const vae::LatentGaussian q = vae::encode(m, pose);
    for (double v : q.mean) CHECK(v == 0.0);
    for (double v : q.log_variance) CHECK(v == 0.0);
}

TEST_CASE("encode matches a plain matrix-arithmetic oracle") {
    auto m = tiny_model<double>(5);
    geo::PoseVec9 pose;
    pose.rot6 << 0.3, -0.7, 0.64, 0.41, 0.9, -0.2;
    pose.trans = geo::Vec3(1.2, -0.4, 0.8);
    const vae::LatentGaussian q = vae::encode(m, pose);

    // hand forward: 9 -> 8 -> 8 -> 4, ReLU between
    const auto flat = pose.flat();
    std::vector<double> x(flat.begin(), flat.end());
    const ad::MlpSpec spec = m.encoder_mlp();
    for (std::int64_t layer = 0; layer < spec.layer_count(); ++layer) {
        const Tensor<double>& w = m.store.value(spec.weight_name(layer));
        const Tensor<double>& b = m.store.value(spec.bias_name(layer));
        std::vector<double> y(w.cols());
        for (std::int64_t j = 0; j < w.cols(); ++j) {
            double acc = b[j];
            for (std::int64_t k = 0; k < w.rows(); ++k) acc += x[k] * w(k, j);
            y[j] = (layer + 1 < spec.layer_count() && acc < 0) ? 0 : acc;
        }
        x = std::move(y);
    }
    for (int k = 0; k < 2; ++k) {
        CHECK(q.mean[k] == doctest::Approx(x[k]).epsilon(1e-12));
        CHECK(q.log_variance[k] == doctest::Approx(std::clamp(x[2 + k], -10.0, 10.0)).epsilon(1e-12));
    }
}

TEST_CASE("encode separates distinct poses") {
    auto m = tiny_model<double>(7);
    geo::PoseVec9 a, b;
    a.trans = geo::Vec3(0.1, 0.0, 0.0);
    b.trans = geo::Vec3(2.5, 0.0, 0.0);
    const auto qa = vae::encode(m, a);
    const auto qb = vae::encode(m, b);
    double diff = 0;
    for (std::size_t k = 0; k < qa.mean.size(); ++k) diff += std::abs(qa.mean[k] - qb.mean[k]);
    CHECK(diff > 1e-8);
}

TEST_CASE("kl_standard_normal closed-form anchors") {
    vae::LatentGaussian q;
    q.mean = {0, 0, 0, 0};
    q.log_variance = {0, 0, 0, 0};
    CHECK(vae::kl_standard_normal(q) == doctest::Approx(0.0).epsilon(1e-15));

    q.mean = {1, 0, 0, 0};
    CHECK(vae::kl_standard_normal(q) == doctest::Approx(0.5).epsilon(1e-15));

    q.mean = {0, 0, 0, 0};
    const double ln2 = std::log(2.0);
    q.log_variance = {ln2, ln2, ln2, ln2};
    CHECK(vae::kl_standard_normal(q) == doctest::Approx(2.0 * (1.0 - ln2)).epsilon(1e-12));
}

TEST_CASE("kl_standard_normal is non-negative and zero only at the prior") {
    Rng rng(31);
    for (int i = 0; i < 200; ++i) {
        vae::LatentGaussian q;
        for (int k = 0; k < 4; ++k) {
            q.mean.push_back(rng.normal());
            q.log_variance.push_back(rng.normal());
        }
        CHECK(vae::kl_standard_normal(q) >= 0.0);
    }
}

TEST_CASE("reparameterize") {
    vae::LatentGaussianT<double> q;
    q.mean = {0.5, -1.0};
    q.log_variance = {0.0, 2.0 * std::log(3.0)};

    const auto z0 = vae::reparameterize(q, {0.0, 0.0});
    CHECK(z0[0] == 0.5);
    CHECK(z0[1] == -1.0);

    q.mean = {0, 0};
    q.log_variance = {0, 0};
    const auto zn = vae::reparameterize(q, {0.7, -0.3});
    CHECK(zn[0] == 0.7);
    CHECK(zn[1] == -0.3);
}

TEST_CASE("reparameterize gradient of |z|^2 w.r.t. mean is 2z") {
    // graph route: z = mu + exp(logvar/2) * noise with fixed noise
    ad::ParamStore<double> params;
    Tensor<double> mu(1, 3);
    mu[0] = 0.3;
    mu[1] = -0.8;
    mu[2] = 0.1;
    params.add("mu", mu, false);
    Tensor<double> lv(1, 3);
    lv[0] = 0.2;
    lv[1] = -0.4;
    lv[2] = 0.0;
    params.add("lv", lv, false);
    Tensor<double> noise(1, 3);
    noise[0] = 1.1;
    noise[1] = -0.5;
    noise[2] = 0.25;

    const auto build = [&noise](ad::Graph<double>& g) {
        const ad::Var sigma = g.exp(g.scale(g.param("lv"), 0.5));
        const ad::Var z = g.add(g.param("mu"), g.mul(sigma, g.input(noise)));
        return g.sum(g.square(z));
    };
    ad::Graph<double> g(&params);
    const ad::Var sigma = g.exp(g.scale(g.param("lv"), 0.5));
    const ad::Var z = g.add(g.param("mu"), g.mul(sigma, g.input(noise)));
    g.backward(g.sum(g.square(z)));
    const auto grads = g.param_grads();
    for (int k = 0; k < 3; ++k)
        CHECK((*ad::find_grad(grads, "mu"))[k] ==
              doctest::Approx(2.0 * g.value(z)[k]).epsilon(1e-12));
    CHECK(ad::finite_difference_check(params, build) <= 1e-8);
}

TEST_CASE("decode: zero-initialized network emits a degenerate 6D rotation") {
    auto m = tiny_model<double>(9);
    zero_params(m);
    const geo::PoseVec9 out = vae::decode(m, {0.5, -0.5}, {1.0, 0.0, 0.0});
    CHECK(out.rot6.norm() == 0.0);
    CHECK_THROWS_AS(geo::rot6d_to_matrix(out.rot6), DegenerateRotation6D);
}

TEST_CASE("decode matches a plain matrix-arithmetic oracle") {
    auto m = tiny_model<double>(13);
    const std::vector<double> z = {0.4, -1.2};
    const std::vector<double> obs = {0.9, 0.1, 0.05};
    const geo::PoseVec9 out = vae::decode(m, z, obs);

    auto dense = [&m](const std::string& w_name, const std::string& b_name,
                      const std::vector<double>& x, bool relu) {
        const Tensor<double>& w = m.store.value(w_name);
        const Tensor<double>& b = m.store.value(b_name);
        std::vector<double> y(w.cols());
        for (std::int64_t j = 0; j < w.cols(); ++j) {
            double acc = b[j];
            for (std::int64_t k = 0; k < w.rows(); ++k) acc += x[k] * w(k, j);
            y[j] = (relu && acc < 0) ? 0 : acc;
        }
        return y;
    };

    std::vector<double> feat = dense("dec.feat.fc0.w", "dec.feat.fc0.b", obs, true);
    const double scale = m.store.value("dec.feat.scale")[0];
    for (double& f : feat) f *= scale;
    const std::vector<double> ho = dense("dec.fuse_obs.fc0.w", "dec.fuse_obs.fc0.b", feat, true);
    const std::vector<double> hz = dense("dec.fuse_z.fc0.w", "dec.fuse_z.fc0.b", z, true);
    std::vector<double> h(ho.size());
    for (std::size_t k = 0; k < h.size(); ++k) h[k] = ho[k] + hz[k];
    h = dense("dec.trunk.fc0.w", "dec.trunk.fc0.b", h, true);
    h = dense("dec.trunk.fc1.w", "dec.trunk.fc1.b", h, true);
    h = dense("dec.trunk.fc2.w", "dec.trunk.fc2.b", h, false);

    for (int k = 0; k < 6; ++k) CHECK(out.rot6[k] == doctest::Approx(h[k]).epsilon(1e-12));
    for (int k = 0; k < 3; ++k) CHECK(out.trans[k] == doctest::Approx(h[6 + k]).epsilon(1e-12));
}

TEST_CASE("reconstruction_loss anchors") {
    geo::PoseVec9 pred;
    geo::Pose target;
    target.translation = geo::Vec3(0.2, 0.4, -0.1);
    pred.rot6 = geo::matrix_to_rot6d(target.rotation);
    pred.trans = target.translation;
    CHECK(vae::reconstruction_loss(pred, target, 1.0, 1.0) == doctest::Approx(0.0));

    // 180-degree z rotation against identity: ||diag(-2,-2,0)||_F = 2 sqrt(2)
    pred.rot6 = geo::matrix_to_rot6d(geo::axis_angle_deg(geo::Vec3::UnitZ(), 180.0));
    pred.trans = target.translation;
    CHECK(vae::reconstruction_loss(pred, target, 1.0, 1.0) ==
          doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));

    pred.rot6 = geo::matrix_to_rot6d(target.rotation);
    pred.trans = target.translation + geo::Vec3(3, 4, 0);
    CHECK(vae::reconstruction_loss(pred, target, 1.0, 1.0) == doctest::Approx(5.0).epsilon(1e-12));

    geo::PoseVec9 degenerate;
    degenerate.rot6.setZero();
    CHECK_THROWS_AS(vae::reconstruction_loss(degenerate, target, 1.0, 1.0), DegenerateRotation6D);
}

TEST_CASE("beta_schedule") {
    vae::TrainConfig cfg;  // beta 0.3, warm-up 4000 after 1000
    CHECK(vae::beta_schedule(0, cfg) == 0.0);
    CHECK(vae::beta_schedule(999, cfg) == 0.0);
    CHECK(vae::beta_schedule(1000, cfg) == 0.0);
    CHECK(vae::beta_schedule(3000, cfg) == doctest::Approx(0.15));
    CHECK(vae::beta_schedule(5000, cfg) == doctest::Approx(0.3));
    CHECK(vae::beta_schedule(100000, cfg) == doctest::Approx(0.3));

    cfg.warmup_start = 0;
    cfg.warmup_length = 0;  // step schedule
    CHECK(vae::beta_schedule(0, cfg) == doctest::Approx(0.3));
}

TEST_CASE("elbo_loss is zero for a perfect decoder at beta zero") {
    auto m = tiny_model<double>(17);
    zero_params(m);
    // trunk output bias = the target pose9 (identity rotation, fixed translation)
    geo::Pose target;
    target.translation = geo::Vec3(0.5, 0.5, 0.5);
    Tensor<double>& out_bias = m.store.value("dec.trunk.fc2.b");
    const geo::Vec6 rot6 = geo::matrix_to_rot6d(target.rotation);
    for (int k = 0; k < 6; ++k) out_bias[k] = rot6[k];
    for (int k = 0; k < 3; ++k) out_bias[6 + k] = target.translation[k];

    scene::Dataset ds;
    ds.split = "train";
    scene::Sample s;
    s.pose = target;
    s.obs.features = {1.0, 0.0, 0.0};
    ds.samples.push_back(s);

    vae::TrainConfig cfg;
    cfg.latent_dim = 2;
    cfg.mc_train_samples = 3;
    cfg.warmup_start = 10;  // beta_effective = 0 at iteration 0

    Rng rng(1);
    Tensor<double> noise(3, 2);
    for (std::int64_t k = 0; k < noise.size(); ++k) noise[k] = rng.normal();
    const double loss = vae::elbo_loss(m, all_rows(ds), 0, cfg, noise);
    CHECK(loss == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("elbo_loss matches a scalar pipeline oracle on a 1x1 batch") {
    auto m = tiny_model<double>(19);
    scene::Dataset ds;
    ds.split = "train";
    scene::Sample s;
    s.pose.rotation = geo::axis_angle_deg(geo::Vec3(0.3, -1.0, 0.2), 35.0);
    s.pose.translation = geo::Vec3(1.4, -0.3, 0.6);
    s.obs.features = {0.0, 1.0, 0.0};
    ds.samples.push_back(s);

    vae::TrainConfig cfg;
    cfg.latent_dim = 2;
    cfg.mc_train_samples = 1;
    cfg.warmup_start = 0;
    cfg.warmup_length = 0;
    cfg.beta = 0.3;
    cfg.lambda_r = 0.8;
    cfg.lambda_t = 1.7;

    Tensor<double> noise(1, 2);
    noise[0] = 0.9;
    noise[1] = -1.3;
    const double loss = vae::elbo_loss(m, all_rows(ds), 123, cfg, noise);

    // oracle: encode -> closed-form KL -> reparameterize -> decode ->
    // reconstruction_loss, all through the scalar single-sample APIs
    geo::PoseVec9 pose9;
    pose9.rot6 = geo::matrix_to_rot6d(s.pose.rotation);
    pose9.trans = s.pose.translation;
    const auto q = vae::encode(m, pose9);
    const double kl = vae::kl_standard_normal(q);
    const auto z = vae::reparameterize(q, {noise[0], noise[1]});
    const geo::PoseVec9 pred = vae::decode(m, z, s.obs.features);
    const double recon = vae::reconstruction_loss(pred, s.pose, cfg.lambda_r, cfg.lambda_t);
    CHECK(loss == doctest::Approx(0.3 * kl + recon).epsilon(1e-9));
}

TEST_CASE("elbo gradient matches finite differences on tiny instances") {
    for (std::uint64_t seed : {42ull, 43ull, 44ull}) {
        auto m = tiny_model<double>(seed);
        Rng rng(seed * 7 + 1);
        scene::Dataset ds;
        ds.split = "train";
        for (int i = 0; i < 2; ++i) {
            scene::Sample s;
            s.pose.rotation = geo::random_rotation(rng);
            s.pose.translation = geo::Vec3(rng.normal(), rng.normal(), rng.normal());
            s.obs.features = {rng.uniform01(), rng.uniform01(), rng.uniform01()};
            ds.samples.push_back(s);
        }
        vae::TrainConfig cfg;
        cfg.latent_dim = 2;
        cfg.mc_train_samples = 2;
        cfg.warmup_start = 0;
        cfg.warmup_length = 0;

        Tensor<double> noise(4, 2);
        for (std::int64_t k = 0; k < noise.size(); ++k) noise[k] = rng.normal();
        const auto rows = all_rows(ds);
        const auto build = [&](ad::Graph<double>& g) {
            const auto inputs = vae::make_batch<double>(rows, 3);
            return vae::elbo_graph(g, m, inputs, 2, 0.3, 1.0, 1.0, noise).loss;
        };
        CHECK(ad::finite_difference_check(m.store, build) <= 1e-4);
    }
}

TEST_CASE("train: zero iterations leaves parameters at initialization") {
    auto m = full_model<float>(21);
    const auto before = m;
    const scene::SceneSpec spec = scene::build_tricolor_scene(1, {});
    const scene::Dataset ds = toy_dataset(spec, 10, 5);
    vae::TrainConfig cfg;
    cfg.total_iterations = 0;
    cfg.mc_train_samples = 2;
    const vae::LossLog log = vae::train(m, ds, cfg);
    CHECK(log.empty());
    for (std::size_t i = 0; i < m.store.size(); ++i)
        for (std::int64_t k = 0; k < m.store.entry(i).value.size(); ++k)
            CHECK(m.store.entry(i).value[k] == before.store.entry(i).value[k]);
}

TEST_CASE("train is bitwise deterministic for a fixed seed") {
    const scene::SceneSpec spec = scene::build_tricolor_scene(1, {});
    const scene::Dataset ds = toy_dataset(spec, 10, 5);
    vae::TrainConfig cfg;
    cfg.total_iterations = 30;
    cfg.mc_train_samples = 4;
    cfg.seed = 77;

    auto m1 = full_model<float>(23);
    auto m2 = full_model<float>(23);
    const vae::LossLog log1 = vae::train(m1, ds, cfg);
    const vae::LossLog log2 = vae::train(m2, ds, cfg);
    REQUIRE(log1.size() == log2.size());
    for (std::size_t i = 0; i < log1.size(); ++i) {
        CHECK(log1[i].total == log2[i].total);
        CHECK(log1[i].kl == log2[i].kl);
        CHECK(log1[i].recon == log2[i].recon);
    }
    for (std::size_t i = 0; i < m1.store.size(); ++i)
        for (std::int64_t k = 0; k < m1.store.entry(i).value.size(); ++k)
            CHECK(m1.store.entry(i).value[k] == m2.store.entry(i).value[k]);
}

TEST_CASE("train: loss decreases on a small unambiguous set") {
    scene::SceneOptions opts;
    opts.pattern = {0, 1, 2};  // three distinct colors, no ambiguity
    const scene::SceneSpec spec = scene::build_tricolor_scene(2, opts);
    const scene::Dataset ds = toy_dataset(spec, 10, 6);

    auto m = full_model<float>(25);
    vae::TrainConfig cfg;
    cfg.total_iterations = 500;
    cfg.mc_train_samples = 8;
    cfg.seed = 99;
    const vae::LossLog log = vae::train(m, ds, cfg);

    double head = 0, tail = 0;
    for (int i = 0; i < 50; ++i) {
        head += log[i].total;
        tail += log[log.size() - 1 - i].total;
    }
    CHECK(tail < head);
}

TEST_CASE("train: large beta collapses the posterior toward the prior") {
    const scene::SceneSpec spec = scene::build_tricolor_scene(3, {});
    const scene::Dataset ds = toy_dataset(spec, 8, 7);
    auto m = tiny_model<float>(27, 4);
    vae::TrainConfig cfg;
    cfg.latent_dim = 4;
    cfg.beta = 100.0;
    cfg.warmup_start = 0;
    cfg.warmup_length = 0;
    cfg.total_iterations = 400;
    cfg.batch_size = 8;
    cfg.mc_train_samples = 2;
    cfg.optimizer.learning_rate = 1e-3;  // reach collapse quickly at this scale
    vae::train(m, ds, cfg);

    double mean_kl = 0;
    for (const auto& s : ds.samples) {
        geo::PoseVec9 p9;
        p9.rot6 = geo::matrix_to_rot6d(s.pose.rotation);
        p9.trans = s.pose.translation;
        mean_kl += vae::kl_standard_normal(vae::encode(m, p9));
    }
    mean_kl /= static_cast<double>(ds.samples.size());
    CHECK(mean_kl < 0.1);
}

TEST_CASE("train aborts with the iteration index on non-finite loss") {
    const scene::SceneSpec spec = scene::build_tricolor_scene(4, {});
    const scene::Dataset ds = toy_dataset(spec, 8, 9);
    auto m = full_model<float>(29);
    m.store.value("dec.trunk.fc5.b")[0] = std::numeric_limits<float>::infinity();
    vae::TrainConfig cfg;
    cfg.total_iterations = 5;
    cfg.mc_train_samples = 2;
    try {
        vae::train(m, ds, cfg);
        FAIL("expected NonFiniteValue");
    } catch (const NonFiniteValue& e) {
        CHECK(std::string(e.what()).find("iteration 0") != std::string::npos);
    }
}

TEST_CASE("sample_posterior: contract on sample count and pose validity") {
    auto m = full_model<float>(31);
    const std::vector<geo::Pose> poses = vae::sample_posterior(m, {1.0, 0.0, 0.0}, 1000, 5);
    REQUIRE(poses.size() == 1000);
    for (const geo::Pose& p : poses) {
        CHECK(geo::is_rotation(p.rotation, 1e-5));
        CHECK(p.translation.allFinite());
    }
}

TEST_CASE("sample_posterior is deterministic per seed") {
    auto m = full_model<float>(33);
    const auto a = vae::sample_posterior(m, {0.0, 1.0, 0.0}, 64, 17);
    const auto b = vae::sample_posterior(m, {0.0, 1.0, 0.0}, 64, 17);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK((a[i].rotation - b[i].rotation).cwiseAbs().maxCoeff() == 0.0);
        CHECK((a[i].translation - b[i].translation).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("sample_posterior aborts on an all-degenerate model") {
    auto m = full_model<float>(35);
    zero_params(m);
    CHECK_THROWS_AS(vae::sample_posterior(m, {1.0, 0.0, 0.0}, 100, 3), ExcessiveDegeneracy);
}

TEST_CASE("sample_posterior distribution is seed-invariant (KS check)") {
    auto m = full_model<float>(37);
    const auto a = vae::sample_posterior(m, {1.0, 0.0, 0.0}, 1000, 101);
    const auto b = vae::sample_posterior(m, {1.0, 0.0, 0.0}, 1000, 202);

    std::vector<double> xa, xb;
    for (const auto& p : a) xa.push_back(p.translation[0]);
    for (const auto& p : b) xb.push_back(p.translation[0]);
    std::sort(xa.begin(), xa.end());
    std::sort(xb.begin(), xb.end());

    // two-sample Kolmogorov-Smirnov statistic
    double d = 0;
    std::size_t i = 0, j = 0;
    while (i < xa.size() && j < xb.size()) {
        if (xa[i] <= xb[j]) ++i;
        else ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / xa.size() -
                                 static_cast<double>(j) / xb.size()));
    }
    // critical value at alpha = 0.01 for n = m = 1000
    const double crit = 1.628 * std::sqrt(2.0 / 1000.0);
    CHECK(d < crit);
}

}  // TEST_SUITE
