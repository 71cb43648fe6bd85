#include "motionlab/gru.hpp"

#include <cmath>

#include "motionlab/errors.hpp"

namespace motionlab {

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
    return add(matvec(w, x), b);
}

Tensor init_matrix(int rows, int cols, Rng& rng) {
    const double k = 1.0 / std::sqrt(static_cast<double>(cols));
    std::vector<double> data(static_cast<std::size_t>(rows) * cols);
    for (auto& v : data) v = rng.uniform(-k, k);
    return Tensor::leaf({rows, cols}, std::move(data), true);
}

Tensor init_vector(int n, Rng& rng, double scale) {
    std::vector<double> data(static_cast<std::size_t>(n));
    for (auto& v : data) v = rng.uniform(-scale, scale);
    return Tensor::leaf({n}, std::move(data), true);
}

GruLayerParams GruLayerParams::init(int input, int hidden, Rng& rng) {
    const double k = 1.0 / std::sqrt(static_cast<double>(hidden));
    GruLayerParams p;
    p.w_update = init_matrix(hidden, input, rng);
    p.u_update = init_matrix(hidden, hidden, rng);
    p.b_update = init_vector(hidden, rng, k);
    p.w_reset = init_matrix(hidden, input, rng);
    p.u_reset = init_matrix(hidden, hidden, rng);
    p.b_reset = init_vector(hidden, rng, k);
    p.w_cand = init_matrix(hidden, input, rng);
    p.u_cand = init_matrix(hidden, hidden, rng);
    p.b_cand = init_vector(hidden, rng, k);
    return p;
}

void GruLayerParams::collect(const std::string& prefix, NamedParams& out) const {
    out.emplace_back(prefix + ".w_update", w_update);
    out.emplace_back(prefix + ".u_update", u_update);
    out.emplace_back(prefix + ".b_update", b_update);
    out.emplace_back(prefix + ".w_reset", w_reset);
    out.emplace_back(prefix + ".u_reset", u_reset);
    out.emplace_back(prefix + ".b_reset", b_reset);
    out.emplace_back(prefix + ".w_cand", w_cand);
    out.emplace_back(prefix + ".u_cand", u_cand);
    out.emplace_back(prefix + ".b_cand", b_cand);
}

GruParams GruParams::init(int input, int hidden, int layers, bool bidirectional,
                          Rng& rng) {
    if (input < 1 || hidden < 1 || layers < 1)
        throw ContractError("gru: sizes must be positive");
    GruParams p;
    p.input_size = input;
    p.hidden_size = hidden;
    p.layers = layers;
    p.bidirectional = bidirectional;
    for (int l = 0; l < layers; ++l) {
        const int in = l == 0 ? input : (bidirectional ? 2 * hidden : hidden);
        p.fwd.push_back(GruLayerParams::init(in, hidden, rng));
        if (bidirectional) p.bwd.push_back(GruLayerParams::init(in, hidden, rng));
    }
    return p;
}

void GruParams::collect(const std::string& prefix, NamedParams& out) const {
    for (int l = 0; l < layers; ++l) {
        fwd[l].collect(prefix + ".l" + std::to_string(l) + ".f", out);
        if (bidirectional)
            bwd[l].collect(prefix + ".l" + std::to_string(l) + ".b", out);
    }
}

Tensor gru_cell(const Tensor& x, const Tensor& h, const GruLayerParams& p) {
    if (x.rank() != 1 || h.rank() != 1)
        throw DimensionError("gru_cell: inputs must be vectors");
    const Tensor z = sigmoid(add(affine(x, p.w_update, p.b_update), matvec(p.u_update, h)));
    const Tensor r = sigmoid(add(affine(x, p.w_reset, p.b_reset), matvec(p.u_reset, h)));
    const Tensor n = tanh(add(affine(x, p.w_cand, p.b_cand), matvec(p.u_cand, mul(r, h))));
    const Tensor keep = mul(z, h);
    const Tensor blend = sub(n, mul(z, n));  // (1-z)*n without a ones constant
    return add(keep, blend);
}

namespace {

std::vector<Tensor> run_direction(const std::vector<Tensor>& seq,
                                  const GruLayerParams& p, int hidden,
                                  bool reverse) {
    const int frames = static_cast<int>(seq.size());
    std::vector<Tensor> out(static_cast<std::size_t>(frames));
    Tensor h = Tensor::zeros({hidden});
    for (int i = 0; i < frames; ++i) {
        const int t = reverse ? frames - 1 - i : i;
        h = gru_cell(seq[static_cast<std::size_t>(t)], h, p);
        out[static_cast<std::size_t>(t)] = h;
    }
    return out;
}

}  // namespace

std::vector<Tensor> gru_stack(const std::vector<Tensor>& seq, const GruParams& p) {
    if (seq.empty()) throw ContractError("gru_stack: empty sequence");
    std::vector<Tensor> layer_in = seq;  // frame sizes are checked by the matvecs
    for (int l = 0; l < p.layers; ++l) {
        const auto forward = run_direction(layer_in, p.fwd[static_cast<std::size_t>(l)],
                                           p.hidden_size, false);
        if (!p.bidirectional) {
            layer_in = forward;
            continue;
        }
        const auto backward = run_direction(layer_in, p.bwd[static_cast<std::size_t>(l)],
                                            p.hidden_size, true);
        std::vector<Tensor> merged(seq.size());
        for (std::size_t t = 0; t < seq.size(); ++t)
            merged[t] = concat({forward[t], backward[t]}, 0);
        layer_in = merged;
    }
    return layer_in;
}

}  // namespace motionlab
