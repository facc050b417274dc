// Delta of a call under Merton jump diffusion, pathwise vs finite difference.

#include <cstdio>

#include "jumpflow/jumpflow.hpp"

int main() {
    using namespace jumpflow;
    const auto coeffs = make_merton(0.03, 0.2, 1);
    const auto jm = JumpModel::constant(0.8, SizeLaw::gaussian(-0.1, 0.15));
    const McSettings mc{50000, 17, 0};
    const auto call = Payoff::call(1.0);

    const auto delta = estimate_semigroup_derivative(coeffs, jm, call, 1, 1.0, 1.0, 100, mc);
    const auto fd = finite_difference_oracle(coeffs, jm, call, 1.0, 1.0, 0.01, 100, mc);
    std::printf("pathwise delta  %.5f +- %.5f\n", delta.mean, delta.stderr_);
    std::printf("finite diff     %.5f +- %.5f\n", fd.mean, fd.stderr_);
    std::printf("z = %.2f\n", combined_z(delta, fd));
}
