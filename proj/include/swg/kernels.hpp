#pragma once

#include <span>
#include <vector>

#include "swg/common.hpp"
#include "swg/model.hpp"
#include "swg/series.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace swg {

// Number of fixed work chunks used by the deterministic reductions. The
// chunk layout depends only on the problem size, never on the thread count,
// and chunk results are combined in chunk order, so reduced values are
// bit-identical for any number of threads.
inline constexpr int kReduceChunks = 64;

// Accumulates body(t, acc) for t in [0, n) into out[0..dim), where acc is a
// span of length dim the body adds into. Deterministic under any thread
// count; policy.parallel = false runs the identical chunk schedule serially.
template <typename Body>
void chunked_accumulate(long n, int dim, double* out, const Body& body, ExecPolicy policy) {
    const int n_chunks = static_cast<int>(std::min<long>(n, kReduceChunks));
    std::fill(out, out + dim, 0.0);
    if (n_chunks <= 0) return;
    std::vector<double> work(static_cast<size_t>(n_chunks) * dim, 0.0);
    const long chunk_len = (n + n_chunks - 1) / n_chunks;
#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic, 1) if (policy.parallel)
#endif
    for (int c = 0; c < n_chunks; ++c) {
        const long lo = static_cast<long>(c) * chunk_len;
        const long hi = std::min(n, lo + chunk_len);
        std::span<double> acc(work.data() + static_cast<size_t>(c) * dim, dim);
        for (long t = lo; t < hi; ++t) body(t, acc);
    }
    for (int c = 0; c < n_chunks; ++c)
        for (int d = 0; d < dim; ++d) out[d] += work[static_cast<size_t>(c) * dim + d];
}

// Per-day seasonal state of the emission model, tabulated once per fit over
// the 365 days of the year and the years of the series. This is what makes
// the per-day emission evaluation cheap.
struct EmissionTables {
    int n_states = 0;
    int n_components = 0;
    int n_dirac = 0;
    // [state][doy-1]: seasonal temperature cycle and precipitation log-scale
    Matrix temp_season;    // n_states x period
    Matrix precip_lscale;  // n_states x period
    // [state][year_index]: trend level
    Matrix trend_level;  // n_states x n_years
    // [state][m]: component constants
    Matrix log_weight;      // log w (or -inf)
    Matrix log_rate;        // wet components only, index m - n_dirac
    Matrix rate;            // wet components only
    Matrix mu;              // component temperature offsets
    Matrix inv_var;         // 1 / temp_var
    Matrix log_norm_const;  // -(log(2 pi) + log var) / 2
};

EmissionTables build_emission_tables(const Parameters& params, const ModelSpec& spec,
                                     const Calendar& calendar);

// n x K matrix of per-day per-state mixture log emission densities. Throws
// DegenerateLikelihoodError if some day has density zero under every state.
Matrix emission_log_matrix(const Parameters& params, const DailySeries& series,
                           const ModelSpec& spec, ExecPolicy policy = {});

// n x (K*M) tensor of per-component log terms log(w_m) + log density, -inf
// for components incompatible with the day's precipitation. Row layout is
// state-major: column k*M + m.
Matrix emission_component_log(const Parameters& params, const DailySeries& series,
                              const ModelSpec& spec, ExecPolicy policy = {});

namespace serial_ref {

// Straightforward per-day evaluation through emission_log_density; the
// reference the parallel kernel is tested against.
Matrix emission_log_matrix(const Parameters& params, const DailySeries& series,
                           const ModelSpec& spec);

}  // namespace serial_ref

}  // namespace swg
