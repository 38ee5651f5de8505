#include "robroute/usets.hpp"

#include <algorithm>

#include "robroute/errors.hpp"
#include "robroute/rng.hpp"

namespace robroute {

BudgetedSet build_budgeted(const ScenarioMatrix& D, int gamma) {
    require(gamma >= 0 && gamma <= D.n_segments(), ErrorCode::BadGamma,
            "gamma must lie in [0, n]");
    BudgetedSet set;
    set.c_lo = D.values().colwise().minCoeff();
    set.d = D.values().colwise().maxCoeff() - set.c_lo.transpose();
    set.gamma = gamma;
    return set;
}

EllipsoidSet build_ellipsoid(const ScenarioMatrix& D, double lambda_size, double ridge_scale) {
    require(lambda_size >= 0.0, ErrorCode::InvalidArgument, "lambda must be >= 0");
    const Moments m = empirical_moments(D);
    EllipsoidSet set;
    set.center = m.mean;
    set.shape = m.covariance;
    set.lambda_size = lambda_size;
    const int n = D.n_segments();
    set.ridge = ridge_scale * set.shape.trace() / static_cast<double>(n);
    set.shape.diagonal().array() += set.ridge;
    return set;
}

WassersteinAmbiguity build_wasserstein(const ScenarioMatrix& train, const FreeFlowVector& freeflow,
                                       double epsilon, double alpha, int n_samples,
                                       std::uint64_t seed) {
    require(epsilon >= 0.0, ErrorCode::BadEpsilon, "epsilon must be >= 0");
    require(alpha > 0.0 && alpha <= 1.0, ErrorCode::BadAlpha, "alpha must be in (0, 1]");
    require(n_samples >= 1 && n_samples <= train.n_scenarios(), ErrorCode::InvalidArgument,
            "n_samples must be in [1, rows]");
    require(static_cast<int>(freeflow.values.size()) == train.n_segments(),
            ErrorCode::DimensionMismatch, "free-flow width != scenario width");

    WassersteinAmbiguity amb;
    amb.epsilon = epsilon;
    amb.alpha = alpha;
    amb.support_lo = freeflow.values;
    amb.support_hi = train.values().colwise().maxCoeff();

    std::vector<int> idx;
    if (n_samples == train.n_scenarios()) {
        for (int i = 0; i < n_samples; ++i) idx.push_back(i);
    } else {
        Rng rng(stable_hash({seed, 0x77617373ULL}));
        idx = rng.sample_without_replacement(train.n_scenarios(), n_samples);
        std::sort(idx.begin(), idx.end());
    }

    amb.samples.resize(n_samples, train.n_segments());
    for (int i = 0; i < n_samples; ++i) amb.samples.row(i) = train.values().row(idx[static_cast<std::size_t>(i)]);

    // Numerical guard: clip any sample into the support interval.
    for (int i = 0; i < amb.samples.rows(); ++i) {
        for (int j = 0; j < amb.samples.cols(); ++j) {
            double& v = amb.samples(i, j);
            const double lo = amb.support_lo(j);
            const double hi = amb.support_hi(j);
            if (v < lo - 1e-9 || v > hi + 1e-9) ++amb.clipped_entries;
            v = std::clamp(v, lo, hi);
        }
    }
    return amb;
}

} // namespace robroute
