#include "motionlab/gradcheck.hpp"

#include <cmath>
#include <sstream>

#include "motionlab/errors.hpp"

namespace motionlab {

std::string GradCheckReport::to_string() const {
    std::ostringstream os;
    os << "max_rel_error=" << max_rel_error << " at point " << worst_point
       << " coord " << worst_coord;
    return os.str();
}

GradCheckReport grad_check(const ScalarFn& f, const std::vector<Tensor>& point,
                           double eps) {
    if (eps <= 0.0) throw ContractError("grad_check: eps must be positive");

    // fresh grad-enabled copies so caller tensors stay untouched
    std::vector<Tensor> x;
    x.reserve(point.size());
    for (const auto& p : point) x.push_back(Tensor::leaf(p.shape(), p.values(), true));

    Tensor out = f(x);
    if (out.size() != 1)
        throw ContractError("grad_check: function output must be scalar");
    if (!std::isfinite(out.item()))
        throw NumericError("grad_check: function returned non-finite value at point");
    backward(out);

    // frozen copies for perturbed evaluations (no graph recording)
    std::vector<Tensor> frozen;
    frozen.reserve(point.size());
    for (const auto& p : point) frozen.push_back(Tensor::leaf(p.shape(), p.values(), false));

    auto eval = [&]() {
        const Tensor y = f(frozen);
        const double v = y.item();
        if (!std::isfinite(v))
            throw NumericError("grad_check: function returned non-finite value "
                               "at a perturbed point");
        return v;
    };

    GradCheckReport report;
    for (std::size_t pi = 0; pi < x.size(); ++pi) {
        const auto& analytic = x[pi].grad();
        auto& vals = frozen[pi].mutable_values();
        for (std::size_t ci = 0; ci < vals.size(); ++ci) {
            const double saved = vals[ci];
            vals[ci] = saved + eps;
            const double up = eval();
            vals[ci] = saved - eps;
            const double down = eval();
            vals[ci] = saved;
            const double fd = (up - down) / (2.0 * eps);
            const double a = analytic[ci];
            const double err = std::abs(a - fd) / std::max(1.0, std::abs(a));
            if (err > report.max_rel_error) {
                report.max_rel_error = err;
                report.worst_point = static_cast<int>(pi);
                report.worst_coord = static_cast<int>(ci);
            }
        }
    }
    return report;
}

double grad_check_error(const ScalarFn& f, const std::vector<Tensor>& point,
                        double eps) {
    return grad_check(f, point, eps).max_rel_error;
}

}  // namespace motionlab
