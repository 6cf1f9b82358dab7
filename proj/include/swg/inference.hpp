#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "swg/kernels.hpp"
#include "swg/model.hpp"
#include "swg/rng.hpp"
#include "swg/series.hpp"

namespace swg {

// Variances are kept above this floor through the fitting
// reparameterization var = floor + exp(v), which rules out the usual
// mixture-likelihood collapse onto single points.
inline constexpr double kVarFloor = 1e-4;

struct EmConfig {
    int max_iters = 500;
    // Stop when |ll - ll_prev| / (1 + |ll|) drops below this.
    double rel_tol = 1e-6;
    int n_restarts = 20;
    std::uint64_t seed = 1;
    // Objective evaluation budget of each block optimization inside one
    // M-step. The M-step is partial (never worse than the current point),
    // which is all EM monotonicity needs.
    int mstep_max_evals = 40;
    ExecPolicy policy;
};

// Smoothed state probabilities. xi_at(t, i, j) is the probability of being
// in state i on day t and state j on day t+1, for t in 1..n-1.
struct Posteriors {
    long n = 0;
    int n_states = 0;
    Matrix gamma;            // n x K
    std::vector<double> xi;  // (n-1) x K x K

    double& xi_at(long t, int i, int j) {
        return xi[(static_cast<size_t>(t - 1) * n_states + i) * n_states + j];
    }
    double xi_at(long t, int i, int j) const {
        return xi[(static_cast<size_t>(t - 1) * n_states + i) * n_states + j];
    }
};

struct ForwardBackwardResult {
    double loglik = 0.0;
    Posteriors post;
};

// Exact log likelihood and smoothed posteriors by the forward-backward
// recursions in log space.
ForwardBackwardResult forward_backward(const Parameters& params, const DailySeries& series,
                                       const ModelSpec& spec, ExecPolicy policy = {});

// Model choice criterion: negative log likelihood plus half the parameter
// count times log(sample size). Smaller is better.
double bic(double loglik, int n_params, long n_obs);

// One EM run from a given starting point.
struct EmRun {
    Parameters params;
    double loglik = 0.0;
    int iterations = 0;  // number of likelihood evaluations performed
    bool converged = false;
    std::vector<double> loglik_trace;  // one entry per E-step, non-decreasing
};

// Data-informed random starting point: seasonal cycle from the day-of-year
// climatology, component offsets from residual quantiles, everything
// perturbed by the stream so that restarts differ.
Parameters random_initial_parameters(const DailySeries& series, const ModelSpec& spec,
                                     RngStream& rng);

EmRun em_run(const DailySeries& series, const ModelSpec& spec, const Parameters& init,
             const EmConfig& cfg);

struct FittedModel {
    std::string station;
    ModelSpec spec;
    Calendar calendar;
    double dryness_threshold = 0.1;
    Parameters params;
    double loglik = 0.0;
    double bic = 0.0;
    int n_params = 0;
    long n_obs = 0;
    int iterations = 0;
    bool converged = false;
    // Final log likelihood of every successful restart, best first.
    std::vector<double> restart_logliks;
};

// Multi-restart EM fit. Restart r draws its starting point from stream
// (seed, r), so each restart is reproducible regardless of how many run or
// in what order. Throws FitFailureError if every restart fails.
FittedModel em_fit(const DailySeries& series, const ModelSpec& spec, const EmConfig& cfg);

// Fit several candidate specs and keep the one with the smallest BIC.
struct SelectionRow {
    ModelSpec spec;
    double loglik = kMissing;
    int n_params = 0;
    double bic = kMissing;
    bool ok = false;
    std::string error;
};
struct SelectionResult {
    FittedModel best;
    std::vector<SelectionRow> table;
};
SelectionResult select_spec(const DailySeries& series, const std::vector<ModelSpec>& candidates,
                            const EmConfig& cfg);

}  // namespace swg
