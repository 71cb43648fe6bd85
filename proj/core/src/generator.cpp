#include "motionlab/generator.hpp"

#include "motionlab/errors.hpp"
#include "motionlab/rotations.hpp"

namespace motionlab {

RegressorParams RegressorParams::init(int feature_size, int hidden, int joints,
                                      int iterations, Rng& rng) {
    if (iterations < 1) throw ContractError("regressor: iterations must be >= 1");
    RegressorParams p;
    p.joints = joints;
    p.iterations = iterations;
    const int state = p.state_dim();
    const int in = feature_size + state;
    p.fc1_w = init_matrix(hidden, in, rng);
    p.fc1_b = init_vector(hidden, rng, 1.0 / std::sqrt(static_cast<double>(in)));
    p.fc2_w = init_matrix(hidden, hidden, rng);
    p.fc2_b = init_vector(hidden, rng, 1.0 / std::sqrt(static_cast<double>(hidden)));
    p.out_w = init_matrix(state, hidden, rng);
    p.out_b = init_vector(state, rng, 1.0 / std::sqrt(static_cast<double>(hidden)));

    std::vector<double> mean(static_cast<std::size_t>(state), 0.0);
    for (int j = 0; j < joints; ++j) {
        mean[static_cast<std::size_t>(j) * 6 + 0] = 1.0;  // identity in 6D form
        mean[static_cast<std::size_t>(j) * 6 + 4] = 1.0;
    }
    mean[static_cast<std::size_t>(joints) * 6 + kShapeCoeffs] = 1.0;  // camera scale
    p.mean_state = Tensor::leaf({state}, std::move(mean), false);
    return p;
}

void RegressorParams::collect(const std::string& prefix, NamedParams& out) const {
    out.emplace_back(prefix + ".fc1_w", fc1_w);
    out.emplace_back(prefix + ".fc1_b", fc1_b);
    out.emplace_back(prefix + ".fc2_w", fc2_w);
    out.emplace_back(prefix + ".fc2_b", fc2_b);
    out.emplace_back(prefix + ".out_w", out_w);
    out.emplace_back(prefix + ".out_b", out_b);
}

GeneratorParams GeneratorParams::init(int feature_size, int gru_hidden,
                                      int gru_layers, bool bidirectional,
                                      int regressor_hidden, int joints,
                                      int iterations, Rng& rng) {
    GeneratorParams p;
    p.gru = GruParams::init(feature_size, gru_hidden, gru_layers, bidirectional, rng);
    p.regressor = RegressorParams::init(p.gru.output_size(), regressor_hidden,
                                        joints, iterations, rng);
    return p;
}

NamedParams GeneratorParams::named() const {
    NamedParams out;
    gru.collect("generator.gru", out);
    regressor.collect("generator.regressor", out);
    return out;
}

std::vector<Tensor> GeneratorParams::trainable() const {
    std::vector<Tensor> out;
    for (auto& [name, t] : named()) out.push_back(t);
    return out;
}

Tensor GeneratorOutput::frame_params(int t) const {
    return concat({theta[static_cast<std::size_t>(t)], beta,
                   cam[static_cast<std::size_t>(t)]}, 0);
}

GeneratorOutput generator_forward(const std::vector<Tensor>& features,
                                  const GeneratorParams& params) {
    if (features.empty()) throw ContractError("generator: empty feature sequence");
    const auto latents = gru_stack(features, params.gru);

    const RegressorParams& reg = params.regressor;
    const int joints = reg.joints;
    const int rot_span = joints * 6;

    GeneratorOutput out;
    out.rotmats.reserve(latents.size());
    out.theta.reserve(latents.size());
    out.cam.reserve(latents.size());
    std::vector<Tensor> beta_rows;
    beta_rows.reserve(latents.size());

    for (const Tensor& latent : latents) {
        Tensor state = reg.mean_state;
        for (int k = 0; k < reg.iterations; ++k) {
            const Tensor in = concat({latent, state}, 0);
            const Tensor h1 = tanh(affine(in, reg.fc1_w, reg.fc1_b));
            const Tensor h2 = tanh(affine(h1, reg.fc2_w, reg.fc2_b));
            state = add(state, affine(h2, reg.out_w, reg.out_b));
        }
        const Tensor rot6d = reshape(slice(state, 0, 0, rot_span), {joints, 6});
        const Tensor rotmats = rot6d_to_rotmat_batch(rot6d);
        out.rotmats.push_back(rotmats);
        out.theta.push_back(
            reshape(rotmat_to_axis_angle_batch(rotmats), {joints * 3}));
        beta_rows.push_back(reshape(slice(state, 0, rot_span, kShapeCoeffs),
                                    {1, kShapeCoeffs}));
        out.cam.push_back(slice(state, 0, rot_span + kShapeCoeffs, kCamParams));
    }

    out.beta = mean_axis(concat(beta_rows, 0), 0);
    return out;
}

}  // namespace motionlab
