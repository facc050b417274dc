// E[sup |X|^p] for GBM against the explicit Gronwall bound C(p,T).

#include <cstdio>

#include "jumpflow/jumpflow.hpp"

int main() {
    using namespace jumpflow;
    const auto coeffs = make_gbm(0.1, 0.2);
    const auto jm = JumpModel::none();
    const TimeGrid grid(1.0, 200);
    for (double p : {2.0, 3.0, 4.0}) {
        GronwallBound g;
        const auto rep = verify_moment_bound(coeffs, jm, 1.0, p, grid, {20000, 99, 0}, std::nullopt, &g);
        std::printf("p=%.0f  estimate %.4f  bound %.4g  (log %.3f)  %s\n", p, rep.estimate.mean, g.c_pT.value,
                    g.c_pT.log, to_string(rep.verdict));
    }
}
