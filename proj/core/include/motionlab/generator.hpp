#pragma once

#include <vector>

#include "motionlab/body_model.hpp"
#include "motionlab/gru.hpp"
#include "motionlab/tensor.hpp"

namespace motionlab {

// Iterative-feedback regressor head. Internally the per-frame state keeps
// rotations in 6D form (6J + 10 + 3 entries); the emitted pose is axis-angle.
struct RegressorParams {
    Tensor fc1_w, fc1_b;
    Tensor fc2_w, fc2_b;
    Tensor out_w, out_b;
    Tensor mean_state;  // rest-pose 6D rotations, zero shape, unit camera
    int joints = 0;
    int iterations = 3;

    int state_dim() const { return joints * 6 + kShapeCoeffs + kCamParams; }
    static RegressorParams init(int feature_size, int hidden, int joints,
                                int iterations, Rng& rng);
    void collect(const std::string& prefix, NamedParams& out) const;
};

struct GeneratorParams {
    GruParams gru;
    RegressorParams regressor;

    static GeneratorParams init(int feature_size, int gru_hidden, int gru_layers,
                                bool bidirectional, int regressor_hidden,
                                int joints, int iterations, Rng& rng);
    NamedParams named() const;
    std::vector<Tensor> trainable() const;
};

// Temporal generator output: per-frame pose (axis-angle and rotation form),
// per-frame camera, and the sequence shape obtained by average pooling the
// per-frame shape estimates.
struct GeneratorOutput {
    std::vector<Tensor> rotmats;  // per frame (J,9)
    std::vector<Tensor> theta;    // per frame (3J)
    std::vector<Tensor> cam;      // per frame (3)
    Tensor beta;                  // (10) pooled over frames

    int frames() const { return static_cast<int>(theta.size()); }
    // per-frame full parameter vector [theta | pooled beta | cam]
    Tensor frame_params(int t) const;
};

GeneratorOutput generator_forward(const std::vector<Tensor>& features,
                                  const GeneratorParams& params);

}  // namespace motionlab
