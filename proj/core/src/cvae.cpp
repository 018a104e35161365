#include "posegen/cvae.hpp"

namespace posegen::vae {

double beta_schedule(std::int64_t iteration, const TrainConfig& config) {
    if (iteration < 0) throw ConfigError("iteration must be >= 0");
    if (iteration < config.warmup_start) return 0.0;
    if (config.warmup_length <= 0 || iteration >= config.warmup_start + config.warmup_length)
        return config.beta;
    return config.beta * static_cast<double>(iteration - config.warmup_start) /
           static_cast<double>(config.warmup_length);
}

double reconstruction_loss(const geo::PoseVec9& predicted, const geo::Pose& target,
                           double lambda_r, double lambda_t) {
    const geo::Mat3 rhat = geo::rot6d_to_matrix(predicted.rot6);
    const double rot_err = (rhat - target.rotation).norm();  // Frobenius
    const double trans_err = (predicted.trans - target.translation).norm();
    return lambda_r * rot_err + lambda_t * trans_err;
}

}  // namespace posegen::vae
