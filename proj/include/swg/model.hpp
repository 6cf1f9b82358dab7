#pragma once

#include <span>
#include <string>
#include <vector>

#include "swg/common.hpp"
#include "swg/series.hpp"

namespace swg {

// Shape of the long-term temperature trend shared by all mixture components
// of a state.
enum class TrendKind { Constant, Linear, PiecewiseLinear };

struct TrendForm {
    TrendKind kind = TrendKind::Constant;
    // Slope is allowed to change after this calendar year (PiecewiseLinear
    // only).
    int break_year = 0;

    int dof() const {
        switch (kind) {
            case TrendKind::Constant: return 1;
            case TrendKind::Linear: return 2;
            case TrendKind::PiecewiseLinear: return 3;
        }
        return 1;
    }
    std::string name() const {
        switch (kind) {
            case TrendKind::Constant: return "constant";
            case TrendKind::Linear: return "linear";
            case TrendKind::PiecewiseLinear: return "piecewise";
        }
        return "constant";
    }
};

// Structural hyper-parameters of the weather model: number of hidden states,
// mixture components per state (of which the first n_dirac put all
// precipitation mass on zero), the trigonometric degree of every seasonal
// function, the period in days, and the temperature trend form.
struct ModelSpec {
    int n_states = 1;
    int n_components = 1;
    int n_dirac = 0;
    int degree = 0;
    int period = 365;
    TrendForm trend;

    int n_harmonic_coeffs() const { return 2 * degree + 1; }
};

// Throws InvalidParameterError unless the spec is internally consistent.
void validate_spec(const ModelSpec& spec);

// Coefficients of the seasonal transition logits. Entry (i, j, l) is the
// l-th trigonometric coefficient of the logit of moving from state i to
// state j; the last state is the softmax reference and carries no
// coefficients, so j runs over 0..n_states-2.
struct TransitionParams {
    TransitionParams() = default;
    TransitionParams(int n_states, int degree)
        : n_states(n_states),
          degree(degree),
          coeffs(static_cast<size_t>(n_states) * (n_states > 1 ? n_states - 1 : 0) *
                     (2 * degree + 1),
                 0.0) {}

    int n_states = 0;
    int degree = 0;
    std::vector<double> coeffs;

    size_t idx(int i, int j, int l) const {
        const int b = 2 * degree + 1;
        return (static_cast<size_t>(i) * (n_states - 1) + j) * b + l;
    }
    double& at(int i, int j, int l) { return coeffs[idx(i, j, l)]; }
    double at(int i, int j, int l) const { return coeffs[idx(i, j, l)]; }
};

// Emission parameters of one hidden state. Component m < n_dirac is dry
// (precipitation exactly zero); wet component m >= n_dirac draws
// precipitation from an exponential whose rate is rate_base[m - n_dirac]
// divided by the seasonal scale exp(seasonal value of precip_season).
// Temperature in component m is normal with mean trend + seasonal cycle +
// temp_mean[m] and variance temp_var[m].
struct StateEmissionParams {
    std::vector<double> weights;        // n_components, sums to 1
    std::vector<double> rate_base;      // n_components - n_dirac, positive
    std::vector<double> precip_season;  // 2*degree+1, log of the seasonal scale
    std::vector<double> temp_mean;      // n_components
    std::vector<double> temp_var;       // n_components, positive
    std::vector<double> temp_season;    // 2*degree+1
    std::vector<double> trend_coeffs;   // trend.dof()

    // Probability of a dry day under this state.
    double dry_weight(int n_dirac) const {
        double s = 0.0;
        for (int m = 0; m < n_dirac; ++m) s += weights[m];
        return s;
    }
};

struct Parameters {
    TransitionParams transition;
    std::vector<StateEmissionParams> emission;  // n_states
    std::vector<double> initial;                // n_states, sums to 1
};

// Throws InvalidParameterError on any shape or domain violation.
void validate_parameters(const Parameters& params, const ModelSpec& spec);

// Fills out (length 2*degree+1) with [1, cos(w), sin(w), cos(2w), sin(2w),
// ...] where w = 2*pi*day_of_year/period.
void harmonic_basis(int degree, int period, int day_of_year, std::span<double> out);

// Value at day t of the trigonometric polynomial with the given
// coefficients; t is reduced modulo the period.
double seasonal_value(std::span<const double> coeffs, long t, const ModelSpec& spec);

// Value at day t of the state trend: a constant, a line in calendar years,
// or a broken line whose slope changes after the break year.
double trend_value(std::span<const double> coeffs, long t, const TrendForm& trend,
                   const Calendar& calendar);

// Row-stochastic transition matrix in effect on day t.
Matrix transition_matrix(const TransitionParams& tp, long t, const ModelSpec& spec);

// Log emission density of one day's observation under one state, with
// missing coordinates marginalized out. Returns -inf exactly when the
// observation has density zero under the state (e.g. rain in a state with
// no wet component).
double emission_log_density(const StateEmissionParams& state, const Observation& obs,
                            const ModelSpec& spec, const Calendar& calendar);

// Log likelihood by brute-force enumeration of all state paths. Only for
// cross-checking the recursive algorithms: guarded to n <= 12 days and
// n_states <= 3.
double exact_log_likelihood(const Parameters& params, const DailySeries& series,
                            const ModelSpec& spec);

// Relabels states: state i of the result is state perm[i] of the input.
// Transition coefficients are rebuilt so the resulting matrix is the
// permuted matrix at every day of the year.
Parameters permute_states(const Parameters& params, std::span<const int> perm,
                          const ModelSpec& spec);

// Fixes the additive gauge freedoms without changing the distribution: the
// constant term of each seasonal function is moved into the precipitation
// rates respectively the trend intercept, and component temperature offsets
// are centred at their weighted mean. Two parameter sets describing the same
// process differ only by state labels after this.
Parameters canonicalize(const Parameters& params, const ModelSpec& spec);

// Number of free scalar parameters of a model with this spec (the model
// selection penalty uses this).
int count_parameters(const ModelSpec& spec);

}  // namespace swg
