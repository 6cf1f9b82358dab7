// Microbenchmarks of the data-parallel kernels against their serial
// reference implementations. The parallel kernels are deterministic for any
// thread count, so these runs double as a sanity check that the speedup is
// worth the chunking machinery.

#include <benchmark/benchmark.h>

#include "swg/inference.hpp"
#include "swg/kernels.hpp"
#include "swg/rng.hpp"
#include "swg/simulate.hpp"

namespace {

using namespace swg;

struct Fixture {
    ModelSpec spec;
    Calendar cal{1970, 20};
    Parameters params;
    DailySeries series;
    FittedModel model;

    Fixture() {
        spec.n_states = 3;
        spec.n_components = 3;
        spec.n_dirac = 1;
        spec.degree = 2;
        spec.trend.kind = TrendKind::Linear;

        const int K = spec.n_states, M = spec.n_components, B = spec.n_harmonic_coeffs();
        RngStream rng(77, 0);
        params.transition = TransitionParams(K, spec.degree);
        for (double& c : params.transition.coeffs) c = rng.uniform(-0.8, 0.8);
        params.initial.assign(K, 1.0 / K);
        params.emission.resize(K);
        for (auto& st : params.emission) {
            st.weights.assign(M, 1.0 / M);
            st.rate_base.assign(M - spec.n_dirac, 1.0);
            for (double& r : st.rate_base) r = std::exp(rng.uniform(-1.0, 1.0));
            st.precip_season.assign(B, 0.0);
            st.temp_mean.resize(M);
            for (double& m : st.temp_mean) m = rng.uniform(-3.0, 3.0);
            st.temp_var.assign(M, 1.0);
            st.temp_season.assign(B, 0.0);
            st.temp_season[1] = 5.0;
            st.trend_coeffs = {rng.uniform(-2.0, 2.0), 0.0};
        }

        const long n = cal.n_days();
        series.calendar = cal;
        series.precip.resize(n);
        series.temp.resize(n);
        series.flags.resize(n);
        for (long t = 0; t < n; ++t) {
            series.precip[t] = rng.uniform() < 0.6 ? rng.exponential_mean(2.0) + 0.2 : 0.0;
            series.temp[t] = rng.normal(5.0, 4.0);
        }

        model.spec = spec;
        model.calendar = cal;
        model.params = params;
        model.dryness_threshold = 0.1;
    }
};

const Fixture& fixture() {
    static Fixture f;
    return f;
}

void BM_EmissionMatrix_Reference(benchmark::State& state) {
    const Fixture& f = fixture();
    for (auto _ : state) {
        Matrix m = serial_ref::emission_log_matrix(f.params, f.series, f.spec);
        benchmark::DoNotOptimize(m.data().data());
    }
    state.SetItemsProcessed(state.iterations() * f.series.n_days());
}
BENCHMARK(BM_EmissionMatrix_Reference)->Unit(benchmark::kMillisecond);

void BM_EmissionMatrix_Tabulated_Serial(benchmark::State& state) {
    const Fixture& f = fixture();
    for (auto _ : state) {
        Matrix m = emission_log_matrix(f.params, f.series, f.spec, ExecPolicy{false});
        benchmark::DoNotOptimize(m.data().data());
    }
    state.SetItemsProcessed(state.iterations() * f.series.n_days());
}
BENCHMARK(BM_EmissionMatrix_Tabulated_Serial)->Unit(benchmark::kMillisecond);

void BM_EmissionMatrix_Tabulated_Parallel(benchmark::State& state) {
    const Fixture& f = fixture();
    for (auto _ : state) {
        Matrix m = emission_log_matrix(f.params, f.series, f.spec, ExecPolicy{true});
        benchmark::DoNotOptimize(m.data().data());
    }
    state.SetItemsProcessed(state.iterations() * f.series.n_days());
}
BENCHMARK(BM_EmissionMatrix_Tabulated_Parallel)->Unit(benchmark::kMillisecond);

void BM_ForwardBackward_Serial(benchmark::State& state) {
    const Fixture& f = fixture();
    for (auto _ : state) {
        ForwardBackwardResult r = forward_backward(f.params, f.series, f.spec, ExecPolicy{false});
        benchmark::DoNotOptimize(r.loglik);
    }
    state.SetItemsProcessed(state.iterations() * f.series.n_days());
}
BENCHMARK(BM_ForwardBackward_Serial)->Unit(benchmark::kMillisecond);

void BM_ForwardBackward_Parallel(benchmark::State& state) {
    const Fixture& f = fixture();
    for (auto _ : state) {
        ForwardBackwardResult r = forward_backward(f.params, f.series, f.spec, ExecPolicy{true});
        benchmark::DoNotOptimize(r.loglik);
    }
    state.SetItemsProcessed(state.iterations() * f.series.n_days());
}
BENCHMARK(BM_ForwardBackward_Parallel)->Unit(benchmark::kMillisecond);

void BM_Simulate_Serial(benchmark::State& state) {
    const Fixture& f = fixture();
    SimulationRequest req;
    req.n_days = 3650;
    req.n_trajectories = 16;
    req.seed = 5;
    for (auto _ : state) {
        auto trajs = simulate(f.model, req, ExecPolicy{false});
        benchmark::DoNotOptimize(trajs.data());
    }
    state.SetItemsProcessed(state.iterations() * req.n_days * req.n_trajectories);
}
BENCHMARK(BM_Simulate_Serial)->Unit(benchmark::kMillisecond);

void BM_Simulate_Parallel(benchmark::State& state) {
    const Fixture& f = fixture();
    SimulationRequest req;
    req.n_days = 3650;
    req.n_trajectories = 16;
    req.seed = 5;
    for (auto _ : state) {
        auto trajs = simulate(f.model, req, ExecPolicy{true});
        benchmark::DoNotOptimize(trajs.data());
    }
    state.SetItemsProcessed(state.iterations() * req.n_days * req.n_trajectories);
}
BENCHMARK(BM_Simulate_Parallel)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
