#pragma once

#include <functional>
#include <string>
#include <vector>

#include "motionlab/tensor.hpp"

namespace motionlab {

// Scalar-valued function of a list of leaf tensors.
using ScalarFn = std::function<Tensor(const std::vector<Tensor>&)>;

struct GradCheckReport {
    double max_rel_error = 0.0;
    int worst_point = -1;   // index into the flattened point list
    int worst_coord = -1;
    std::string to_string() const;
};

// Compares the analytic gradient of f at `point` against central finite
// differences. Per coordinate the error is
//   |analytic - (f(x+eps) - f(x-eps)) / (2 eps)| / max(1, |analytic|)
// and the report carries the max over all coordinates. Throws NumericError
// if f evaluates to a non-finite value at the point or any perturbation.
GradCheckReport grad_check(const ScalarFn& f, const std::vector<Tensor>& point,
                           double eps);

// Convenience: the max relative error alone.
double grad_check_error(const ScalarFn& f, const std::vector<Tensor>& point,
                        double eps);

}  // namespace motionlab
