#pragma once

#include <cstdint>
#include <vector>

#include "swg/inference.hpp"
#include "swg/model.hpp"
#include "swg/series.hpp"

namespace swg {

struct SimulationRequest {
    long n_days = 0;
    int n_trajectories = 1;
    std::uint64_t seed = 1;
    // Day-1 state: drawn from the stationary distribution of the day-1
    // transition matrix, or fixed.
    enum class InitialState { Stationary, Fixed };
    InitialState initial = InitialState::Stationary;
    int fixed_state = 0;
    bool emit_states = false;
    // Random-stream index of the first trajectory. Trajectory i of this
    // request uses stream (seed, first_index + i), so a batch drawn in blocks
    // equals the same batch drawn in one call.
    long first_index = 0;
};

// One simulated path. Precipitation is the raw model draw; the dryness
// threshold of the ingestion pipeline is applied when a trajectory is turned
// into a DailySeries so that simulated and observed series follow the same
// dry-day convention.
struct Trajectory {
    std::vector<double> precip;
    std::vector<double> temp;
    std::vector<std::uint8_t> state;      // filled when emit_states
    std::vector<std::uint8_t> component;  // filled when emit_states
};

// Stationary distribution of a row-stochastic matrix by damped power
// iteration (the damping handles periodic chains).
std::vector<double> stationary_distribution(const Matrix& q);

// Marginal state probabilities day by day, starting from the model's
// initial distribution.
Matrix state_marginals(const FittedModel& model, long n_days);

// Draws trajectories from the fitted model. Trajectory i uses random stream
// (seed, i), so any single trajectory is reproducible no matter how many are
// drawn or how work is scheduled across threads.
std::vector<Trajectory> simulate(const FittedModel& model, const SimulationRequest& req,
                                 ExecPolicy policy = {});

DailySeries trajectory_to_series(const Trajectory& traj, const FittedModel& model);
DailySeries trajectory_to_series(const Trajectory& traj, const Calendar& calendar,
                                 const std::string& station, double dryness_threshold);

}  // namespace swg
