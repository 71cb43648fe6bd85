#pragma once

#include <string>
#include <utility>
#include <vector>

#include "motionlab/rng.hpp"
#include "motionlab/tensor.hpp"

namespace motionlab {

using NamedParams = std::vector<std::pair<std::string, Tensor>>;

// y = W x + b
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b);

// uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) init, the usual recurrent default
Tensor init_matrix(int rows, int cols, Rng& rng);
Tensor init_vector(int n, Rng& rng, double scale);

struct GruLayerParams {
    Tensor w_update, u_update, b_update;
    Tensor w_reset, u_reset, b_reset;
    Tensor w_cand, u_cand, b_cand;

    static GruLayerParams init(int input, int hidden, Rng& rng);
    void collect(const std::string& prefix, NamedParams& out) const;
};

struct GruParams {
    int input_size = 0;
    int hidden_size = 0;
    int layers = 0;
    bool bidirectional = false;
    std::vector<GruLayerParams> fwd;  // one per layer
    std::vector<GruLayerParams> bwd;  // one per layer when bidirectional

    static GruParams init(int input, int hidden, int layers, bool bidirectional,
                          Rng& rng);
    int output_size() const { return bidirectional ? 2 * hidden_size : hidden_size; }
    void collect(const std::string& prefix, NamedParams& out) const;
};

// One step of the standard GRU:
//   z = sigmoid(Wz x + Uz h + bz)
//   r = sigmoid(Wr x + Ur h + br)
//   n = tanh(Wn x + Un (r*h) + bn)
//   h' = z*h + (1-z)*n
Tensor gru_cell(const Tensor& x, const Tensor& h, const GruLayerParams& p);

// Runs the stacked (optionally bidirectional) GRU over a sequence of frame
// vectors; returns one hidden vector per frame, forward and backward halves
// concatenated when bidirectional. Hidden states start at zero.
std::vector<Tensor> gru_stack(const std::vector<Tensor>& seq, const GruParams& p);

}  // namespace motionlab
