// Lift a random tuple into the CAR algebra and compare the lift's norm with
// the weighted norm of the tuple.

#include <cstdio>
#include <random>

#include "nck/lifting.hpp"

int main() {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    const std::size_t d = 3;
    const Eigen::Index n = 2;

    std::vector<nck::Matrix> xs;
    for (std::size_t i = 0; i < d; ++i) {
        nck::Matrix m(n, n);
        for (Eigen::Index a = 0; a < n; ++a)
            for (Eigen::Index b = 0; b < n; ++b) m(a, b) = {g(rng), g(rng)};
        xs.push_back(m);
    }
    const nck::MatrixTuple x(xs);
    const nck::CarSystem sys(nck::WeightedSpace({0.2, 0.5, 0.9}));

    const auto rep = nck::lift(x, nck::CarSetting(sys), nck::LiftConfig::car());
    std::printf("|||x|||_A = %.6f\n", rep.target_norm);
    std::printf("||X||     = %.6f  (ratio %.6f, bound %.6f)\n", rep.achieved_norm, rep.ratio,
                nck::LiftConfig::car().constant());
    std::printf("steps     = %zu, reconstruction error %.2e\n", rep.iterations, rep.reconstruction_error);

    const auto dual = nck::dual_norm(x, sys.weights());
    std::printf("|||x|||*  = %.6f  (gap %.1e)\n", dual.value, dual.gap);
}
