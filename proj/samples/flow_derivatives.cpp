// One path of (X, X', X'') for a smooth nonlinear model with jumps, dumped as CSV.

#include <iostream>
#include <vector>

#include "jumpflow/jumpflow.hpp"

int main() {
    using namespace jumpflow;
    PolyTanhParams params;
    params.drift_poly = {0.0, -0.5};
    params.jump_poly = {0.1};
    params.jump_tanh = 0.2;
    const auto coeffs = make_polynomial_tanh(params, 2);
    const auto jm = JumpModel::linear(0.5, 1.5, 1.0, SizeLaw::gaussian(0.0, 0.2));
    const std::vector<PathRecord> paths{simulate_path(coeffs, jm, 0.5, 2, TimeGrid(1.0, 50), path_seed(42, 0))};
    write_paths_csv(std::cout, paths);
}
