// End-to-end acceptance checks, one per numbered criterion. Run with no
// arguments for the full battery or with a single number to run one
// criterion (the ctest entries do the latter). Each criterion prints one
// PASS / FAIL / SKIPPED line; the exit code is nonzero if anything failed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "swg/data_io.hpp"
#include "swg/inference.hpp"
#include "swg/model.hpp"
#include "swg/rng.hpp"
#include "swg/simulate.hpp"
#include "swg/stats_util.hpp"
#include "swg/trends.hpp"
#include "swg/validate.hpp"
#include "test_helpers.hpp"

using namespace swg;

namespace {

enum class Outcome { Pass, Fail, Skip };

struct Check {
    bool ok = true;
    std::vector<std::string> notes;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            notes.push_back("FAILED: " + what);
        }
    }
    void note(const std::string& what) { notes.push_back(what); }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

// ---------------------------------------------------------------------------
// 1. The recursive likelihood agrees with brute-force path enumeration on a
//    battery of random small instances, to 1e-10, in under 10 seconds.

Outcome criterion_1(Check& c) {
    RngStream meta(101, 0);
    double worst = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        ModelSpec spec;
        spec.n_states = 1 + static_cast<int>(meta.uniform() * 3.0);
        spec.n_components = 1 + static_cast<int>(meta.uniform() * 3.0);
        spec.n_dirac = static_cast<int>(meta.uniform() * (spec.n_components + 1));
        spec.n_dirac = std::min(spec.n_dirac, spec.n_components);
        spec.degree = rep % 3;
        if (rep % 4 == 0) spec.trend.kind = TrendKind::Linear;
        const Calendar cal{1990, 1};
        RngStream rng(102, static_cast<std::uint64_t>(rep));
        const Parameters p = test::random_parameters(spec, rng);
        const long n = 1 + static_cast<long>(rng.uniform() * 8.0);
        const DailySeries ser = test::random_series(spec, cal, std::min<long>(n, 8), rng, 0.25);
        const double exact = exact_log_likelihood(p, ser, spec);
        const ForwardBackwardResult fb = forward_backward(p, ser, spec);
        worst = std::max(worst, std::fabs(fb.loglik - exact));
    }
    c.note("largest |recursive - enumerated| over 200 instances: " + fmt("%.3e", worst));
    c.require(worst <= 1e-10, "likelihood mismatch above 1e-10");
    return c.ok ? Outcome::Pass : Outcome::Fail;
}

// ---------------------------------------------------------------------------
// 2. The likelihood never decreases across EM iterations (tolerance -1e-8)
//    on 20 synthetic datasets of 2000 days, in under 2 minutes.

Outcome criterion_2(Check& c) {
    ModelSpec spec;
    spec.n_states = 2;
    spec.n_components = 2;
    spec.n_dirac = 1;
    spec.degree = 1;
    const Calendar cal{1980, 6};
    double worst_drop = 0.0;
    long total_iters = 0;
    for (int rep = 0; rep < 20; ++rep) {
        RngStream rng(201, static_cast<std::uint64_t>(rep));
        const double missing = rep % 2 == 0 ? 0.0 : 0.1;
        const DailySeries ser = test::random_series(spec, cal, 2000, rng, missing);
        RngStream init_rng(202, static_cast<std::uint64_t>(rep));
        const Parameters init = random_initial_parameters(ser, spec, init_rng);
        EmConfig cfg;
        cfg.max_iters = 40;
        cfg.rel_tol = 0.0;  // run the full 40 iterations
        const EmRun run = em_run(ser, spec, init, cfg);
        total_iters += static_cast<long>(run.loglik_trace.size());
        for (size_t i = 1; i < run.loglik_trace.size(); ++i)
            worst_drop = std::min(worst_drop, run.loglik_trace[i] - run.loglik_trace[i - 1]);
    }
    c.note("iterations checked: " + std::to_string(total_iters) +
           ", worst step: " + fmt("%.3e", worst_drop));
    c.require(worst_drop >= -1e-8, "an EM iteration decreased the likelihood beyond -1e-8");
    return c.ok ? Outcome::Pass : Outcome::Fail;
}

// ---------------------------------------------------------------------------
// 3. Parameter recovery: 20000 days simulated from a well-separated
//    two-state model; a 10-restart fit recovers dry weights within 0.05,
//    component temperature levels within 0.3 degrees, and day-of-year state
//    frequencies with mean absolute error below 0.05, up to state
//    relabeling. Under 10 minutes.

FittedModel recovery_truth() {
    ModelSpec spec;
    spec.n_states = 2;
    spec.n_components = 2;
    spec.n_dirac = 1;
    spec.degree = 1;
    FittedModel m;
    m.station = "truth";
    m.spec = spec;
    m.calendar = Calendar{1950, 55};
    m.dryness_threshold = 0.1;
    m.params.transition = TransitionParams(2, 1);
    m.params.transition.at(0, 0, 0) = 1.8;
    m.params.transition.at(0, 0, 1) = 0.8;
    m.params.transition.at(1, 0, 0) = -1.8;
    m.params.transition.at(1, 0, 1) = -0.8;
    m.params.initial = {0.5, 0.5};
    m.params.emission.resize(2);
    auto& s0 = m.params.emission[0];  // dry and cold
    s0.weights = {0.85, 0.15};
    s0.rate_base = {0.30};
    s0.precip_season = {0.0, 0.3, 0.0};
    s0.temp_mean = {0.3, -1.7};  // weighted mean zero
    s0.temp_var = {1.0, 1.5};
    s0.temp_season = {0.0, 4.0, 1.0};
    s0.trend_coeffs = {-2.0};
    auto& s1 = m.params.emission[1];  // wet and warm
    s1.weights = {0.15, 0.85};
    s1.rate_base = {0.12};
    s1.precip_season = {0.0, -0.2, 0.1};
    s1.temp_mean = {-1.7, 0.3};
    s1.temp_var = {1.2, 0.8};
    s1.temp_season = {0.0, 3.0, 0.5};
    s1.trend_coeffs = {6.0};
    return m;
}

std::vector<double> doy_state_frequencies(const FittedModel& m, long n_days) {
    const Matrix marg = state_marginals(m, n_days);
    const int P = m.spec.period;
    const int K = m.spec.n_states;
    std::vector<double> freq(static_cast<size_t>(P) * K, 0.0);
    std::vector<long> cnt(P, 0);
    for (long t = 0; t < n_days; ++t) {
        const int d = static_cast<int>(t % P);
        ++cnt[d];
        for (int k = 0; k < K; ++k) freq[static_cast<size_t>(d) * K + k] += marg(t, k);
    }
    for (int d = 0; d < P; ++d)
        for (int k = 0; k < K; ++k) freq[static_cast<size_t>(d) * K + k] /= cnt[d];
    return freq;
}

Outcome criterion_3(Check& c) {
    const FittedModel truth = recovery_truth();
    SimulationRequest req;
    req.n_days = 20000;
    req.n_trajectories = 1;
    req.seed = 301;
    const Trajectory traj = simulate(truth, req)[0];
    DailySeries ser = trajectory_to_series(traj, truth);

    EmConfig cfg;
    cfg.n_restarts = 10;
    cfg.max_iters = 300;
    cfg.rel_tol = 1e-9;
    cfg.seed = 302;
    const FittedModel fit = em_fit(ser, truth.spec, cfg);
    c.note("fit log likelihood " + fmt("%.2f", fit.loglik) + " after " +
           std::to_string(fit.iterations) + " iterations, " +
           std::string(fit.converged ? "converged" : "iteration cap"));

    const Parameters truth_c = canonicalize(truth.params, truth.spec);
    const Parameters fit_c = canonicalize(fit.params, truth.spec);
    const std::vector<double> freq_truth = doy_state_frequencies(truth, 20000);

    // Try both state labelings; accept if one meets every tolerance.
    std::string best_detail;
    bool any_ok = false;
    double best_score = 1e300;
    for (const std::vector<int>& perm : {std::vector<int>{0, 1}, std::vector<int>{1, 0}}) {
        const Parameters cand = permute_states(fit_c, perm, truth.spec);
        FittedModel cand_model = fit;
        cand_model.params = cand;
        double dry_err = 0.0, level_err = 0.0;
        for (int k = 0; k < 2; ++k) {
            dry_err = std::max(dry_err, std::fabs(cand.emission[k].dry_weight(1) -
                                                  truth_c.emission[k].dry_weight(1)));
            for (int m = 0; m < 2; ++m) {
                const double level_fit =
                    cand.emission[k].trend_coeffs[0] + cand.emission[k].temp_mean[m];
                const double level_true =
                    truth_c.emission[k].trend_coeffs[0] + truth_c.emission[k].temp_mean[m];
                level_err = std::max(level_err, std::fabs(level_fit - level_true));
            }
        }
        const std::vector<double> freq_fit = doy_state_frequencies(cand_model, 20000);
        double mae = 0.0;
        for (size_t i = 0; i < freq_fit.size(); ++i)
            mae += std::fabs(freq_fit[i] - freq_truth[i]);
        mae /= static_cast<double>(freq_fit.size());

        const double score = dry_err / 0.05 + level_err / 0.3 + mae / 0.05;
        if (score < best_score) {
            best_score = score;
            best_detail = "dry weight error " + fmt("%.4f", dry_err) + " (limit 0.05), " +
                          "temperature level error " + fmt("%.4f", level_err) +
                          " (limit 0.30), state frequency MAE " + fmt("%.4f", mae) +
                          " (limit 0.05)";
            any_ok = dry_err <= 0.05 && level_err <= 0.3 && mae <= 0.05;
        }
    }
    c.note(best_detail);
    c.require(any_ok, "recovery outside tolerance under both labelings");
    return c.ok ? Outcome::Pass : Outcome::Fail;
}

// ---------------------------------------------------------------------------
// 4. Calibration of the trend selection on 500 seeded replicates of 61-year
//    yearly series: under a pure linear truth the broken line should be
//    chosen in 2..9% of replicates at level 0.05, and under a hinge of 0.05
//    degrees per year (noise sd 0.3) the break year should land within 3
//    years of the truth in at least 90% of replicates. Under 1 minute.

Outcome criterion_4(Check& c) {
    const int reps = 500;
    int rejections = 0, close_breaks = 0;
    for (int rep = 0; rep < reps; ++rep) {
        RngStream rng(401, static_cast<std::uint64_t>(rep));
        YearlySeries pure, hinged;
        pure.first_year = hinged.first_year = 1950;
        for (int y = 0; y < 61; ++y) {
            const int year = 1950 + y;
            pure.mean.push_back(10.0 + 0.01 * year + rng.normal(0.0, 0.3));
            hinged.mean.push_back(10.0 + 0.05 * std::max(0, year - 1980) + rng.normal(0.0, 0.3));
            pure.n_days.push_back(365);
            hinged.n_days.push_back(365);
        }
        if (trend_test(pure).chosen == TrendKind::PiecewiseLinear) ++rejections;
        const TrendTest th = trend_test(hinged);
        if (th.chosen == TrendKind::PiecewiseLinear && std::abs(th.break_year - 1980) <= 3)
            ++close_breaks;
    }
    const double type1 = static_cast<double>(rejections) / reps;
    const double close = static_cast<double>(close_breaks) / reps;
    c.note("false selection rate under the linear truth: " + fmt("%.3f", type1) +
           " (target 0.02..0.09)");
    c.note("break year within 3 years under the hinge truth: " + fmt("%.3f", close) +
           " (target >= 0.90)");
    c.require(type1 >= 0.02 && type1 <= 0.09,
              "false selection rate outside [0.02, 0.09]; the break year search is not "
              "penalized, so the test rejects far above its nominal level");
    c.require(close >= 0.90, "break year accuracy below 0.90");
    return c.ok ? Outcome::Pass : Outcome::Fail;
}

// ---------------------------------------------------------------------------
// 5. Self-consistency of the whole pipeline: fit a model to a synthetic
//    series, draw 1000 trajectories plus one fresh one, and validate the
//    fresh trajectory against the band report. The daily-mean temperature
//    must sit inside its 95% band on at least 90% of days, and every spell
//    and cluster histogram bin with expected count >= 5 must be covered.
//    Under 15 minutes.

Outcome criterion_5(Check& c) {
    const FittedModel truth = recovery_truth();
    SimulationRequest train_req;
    train_req.n_days = 3650;
    train_req.n_trajectories = 1;
    train_req.seed = 501;
    DailySeries train = trajectory_to_series(simulate(truth, train_req)[0], truth);

    EmConfig cfg;
    cfg.n_restarts = 3;
    cfg.max_iters = 60;
    cfg.seed = 502;
    const FittedModel fit = em_fit(train, truth.spec, cfg);

    const int n_sims = 1000;
    SimulationRequest sim_req;
    sim_req.n_days = 3650;
    sim_req.n_trajectories = n_sims + 1;  // the last one is the fresh draw
    sim_req.seed = 504;
    const std::vector<Trajectory> trajs = simulate(fit, sim_req);
    std::vector<DailySeries> sims;
    sims.reserve(n_sims);
    for (int i = 0; i < n_sims; ++i) sims.push_back(trajectory_to_series(trajs[i], fit));
    const DailySeries fresh = trajectory_to_series(trajs[n_sims], fit);

    ValidationConfig vcfg;
    vcfg.statistics = {"temp_daily_mean", "dry_spells", "wet_spells", "hot_clusters_q95",
                       "cold_clusters_q5"};
    const auto reports = build_report(fresh, sims, vcfg);

    for (const auto& rep : reports) {
        c.require(rep.error.empty(), rep.name + " failed: " + rep.error);
        if (!rep.error.empty()) continue;
        if (rep.name == "temp_daily_mean") {
            const double cov = rep.coverage_fraction();
            c.note("daily mean temperature band coverage: " + fmt("%.3f", cov) +
                   " (target >= 0.90)");
            c.require(cov >= 0.90, "daily mean temperature coverage below 0.90");
        } else {
            int qualifying = 0, missed = 0;
            for (size_t b = 0; b < rep.bins.size(); ++b) {
                if (!(rep.sim_mean[b] >= 5.0)) continue;
                ++qualifying;
                if (rep.coverage[b] != 1) ++missed;
            }
            c.note(rep.name + ": " + std::to_string(qualifying) +
                   " bins with expected count >= 5, " + std::to_string(missed) + " outside");
            c.require(missed == 0, rep.name + " has uncovered bins with expected count >= 5");
        }
    }
    return c.ok ? Outcome::Pass : Outcome::Fail;
}

// ---------------------------------------------------------------------------
// 6. Elementary statistics against hand-evaluated fixtures: spells of a
//    six-day series, one exceedance cluster, and the kernel regression on a
//    five-point fixture, all to 1e-12.

Outcome criterion_6(Check& c) {
    const std::vector<double> precip = {0.0, 0.0, 0.0, 5.0, 0.0, 2.0};
    const SpellsResult sp = spells(precip, 6);
    c.require(sp.dry.count[0] == 1.0 && sp.dry.count[2] == 1.0 && sp.dry.count[1] == 0.0,
              "dry spells of [0,0,0,5,0,2] are one run of 3 and one of 1");
    c.require(sp.wet.count[0] == 2.0, "wet spells of [0,0,0,5,0,2] are two runs of 1");

    const std::vector<double> vals = {1.0, 2.0, 3.0, 2.5, 0.7};
    const RunHistogram cl = exceedance_clusters(vals, 1.0, true, 5);
    bool cluster_ok = cl.count[2] == 1.0 && cl.n_qualifying_days == 3;
    for (size_t i = 0; i < cl.count.size(); ++i)
        if (i != 2 && cl.count[i] != 0.0) cluster_ok = false;
    c.require(cluster_ok, "values above 1.0 in (1,2,3,2.5,0.7) form one cluster of length 3");

    // Kernel regression fixture: four complete days, one with a missing
    // coordinate, a single grid point.
    DailySeries s;
    s.calendar = Calendar{2000, 1};
    s.precip = {0.0, 2.0, 0.0, 4.0, kMissing};
    s.temp = {10.0, 11.0, 12.0, 9.5, 10.0};
    s.precip.resize(365, kMissing);
    s.temp.resize(365, kMissing);
    s.flags.resize(365);
    const double h = 1.3;
    auto w = [&](double y) {
        const double z = (y - 10.5) / h;
        return std::exp(-0.5 * z * z);
    };
    const double sw = w(10.0) + w(11.0) + w(12.0) + w(9.5);
    const double swet = w(11.0) + w(9.5);
    const double samt = w(11.0) * 2.0 + w(9.5) * 4.0;
    const std::vector<double> grid = {10.5};
    const double occ = kernel_conditional(s, KernelMode::Occurrence, grid, h)[0];
    const double inten = kernel_conditional(s, KernelMode::Intensity, grid, h)[0];
    c.note("kernel occurrence " + fmt("%.12f", occ) + ", intensity " + fmt("%.12f", inten));
    c.require(std::fabs(occ - swet / sw) <= 1e-12, "kernel occurrence off the hand value");
    c.require(std::fabs(inten - samt / swet) <= 1e-12, "kernel intensity off the hand value");
    return c.ok ? Outcome::Pass : Outcome::Fail;
}

// ---------------------------------------------------------------------------
// 7. Checks against archived station records, when they are available. The
//    record directory is taken from SWG_ECAD_DIR (default ./data/ecad) and
//    must hold <station>/RR.txt and <station>/TG.txt for the five core
//    stations. Without the records the criterion is skipped.

struct StationRef {
    const char* name;
    // Published climate summary (mean yearly precip, max daily, wet-day
    // frequency, mean wet-day amount); NaN = not checked.
    double yearly = kMissing, max_daily = kMissing, freq = kMissing, mean_pos = kMissing;
    // Reference trend analysis: expected choice, p-value, break year
    // (0 = linear expected).
    TrendKind trend = TrendKind::Linear;
    double p_value = kMissing;
    int break_year = 0;
};

// Tolerance rule for printed reference values: the larger of 1% relative
// and half a unit in the last printed digit.
bool close_to(double got, double ref, double last_digit) {
    const double tol = std::max(0.01 * std::fabs(ref), 0.5 * last_digit);
    return std::fabs(got - ref) <= tol;
}

Outcome criterion_7(Check& c) {
    const char* env = std::getenv("SWG_ECAD_DIR");
    const std::filesystem::path dir = env && *env ? env : "data/ecad";
    const StationRef refs[] = {
        {"huelva", 501.5, 160.0, 0.19, 7.3, TrendKind::PiecewiseLinear, 0.026, 1961},
        {"snasa", 964.2, 65.9, 0.62, 4.2, TrendKind::PiecewiseLinear, 0.047, 1980},
        {"dresden", kMissing, kMissing, kMissing, kMissing, TrendKind::Linear, 0.16, 0},
        {"verona", kMissing, kMissing, kMissing, kMissing, TrendKind::PiecewiseLinear, 3e-6,
         1987},
        {"helsinki", kMissing, kMissing, kMissing, kMissing, TrendKind::PiecewiseLinear, 0.049,
         1980},
    };
    for (const StationRef& ref : refs) {
        if (!std::filesystem::exists(dir / ref.name / "RR.txt") ||
            !std::filesystem::exists(dir / ref.name / "TG.txt")) {
            c.note("station records not found under " + dir.string());
            return Outcome::Skip;
        }
    }

    DailySeries verona_series;
    for (const StationRef& ref : refs) {
        const EcadParseResult rr =
            parse_ecad_file((dir / ref.name / "RR.txt").string(), EcadVariable::Precip);
        const EcadParseResult tg =
            parse_ecad_file((dir / ref.name / "TG.txt").string(), EcadVariable::Temp);
        // Use the era both variables cover.
        int lo = 9999, hi = 0;
        for (const auto& recs : {rr.records, tg.records})
            for (const EcadRecord& r : recs)
                if (r.flag == '.') {
                    lo = std::min(lo, r.date / 10000);
                    hi = std::max(hi, r.date / 10000);
                }
        const DailySeries ser = merge_and_normalize(rr, tg, lo, hi, 0.1, ref.name);
        if (std::string(ref.name) == "verona") verona_series = ser;

        if (!is_missing(ref.yearly)) {
            const SummaryStats st = summary_stats(ser);
            c.note(std::string(ref.name) + ": yearly " + fmt("%.1f", st.mean_yearly_precip) +
                   ", max " + fmt("%.1f", st.max_daily_precip) + ", wet frequency " +
                   fmt("%.2f", st.precip_frequency) + ", wet mean " +
                   fmt("%.1f", st.mean_positive_precip));
            c.require(close_to(st.mean_yearly_precip, ref.yearly, 0.1),
                      std::string(ref.name) + " mean yearly precipitation vs " +
                          fmt("%.1f", ref.yearly));
            c.require(close_to(st.max_daily_precip, ref.max_daily, 0.1),
                      std::string(ref.name) + " max daily precipitation vs " +
                          fmt("%.1f", ref.max_daily));
            c.require(close_to(st.precip_frequency, ref.freq, 0.01),
                      std::string(ref.name) + " wet-day frequency vs " + fmt("%.2f", ref.freq));
            c.require(close_to(st.mean_positive_precip, ref.mean_pos, 0.1),
                      std::string(ref.name) + " mean wet-day amount vs " +
                          fmt("%.1f", ref.mean_pos));
        }

        const TrendTest tt = trend_test(yearly_mean_temperature(ser));
        c.note(std::string(ref.name) + ": trend " +
               (tt.chosen == TrendKind::PiecewiseLinear ? "broken at " +
                                                              std::to_string(tt.break_year)
                                                        : std::string("linear")) +
               ", p " + fmt("%.3g", tt.p_value));
        c.require(tt.chosen == ref.trend, std::string(ref.name) + " trend choice");
        if (!is_missing(ref.p_value))
            c.require(tt.p_value >= ref.p_value / 2.0 && tt.p_value <= ref.p_value * 2.0,
                      std::string(ref.name) + " trend p-value within a factor 2 of " +
                          fmt("%.3g", ref.p_value));
        if (ref.trend == TrendKind::PiecewiseLinear)
            c.require(close_to(tt.break_year, ref.break_year, 1.0),
                      std::string(ref.name) + " break year vs " +
                          std::to_string(ref.break_year));
    }

    // Station structure check: a six-state fit to the Verona series should
    // separate clearly dry states from clearly wet ones.
    ModelSpec spec;
    spec.n_states = 6;
    spec.n_components = 4;
    spec.n_dirac = 2;
    spec.degree = 2;
    const TrendTest vt = trend_test(yearly_mean_temperature(verona_series));
    spec.trend.kind = vt.chosen;
    spec.trend.break_year = vt.break_year;
    EmConfig cfg;
    cfg.n_restarts = 2;
    cfg.max_iters = 120;
    cfg.seed = 701;
    const FittedModel fit = em_fit(verona_series, spec, cfg);
    int clearly_dry = 0, clearly_wet = 0;
    std::string weights;
    for (const auto& st : fit.params.emission) {
        const double p0 = st.dry_weight(spec.n_dirac);
        weights += fmt("%.2f ", p0);
        if (p0 > 0.8) ++clearly_dry;
        if (p0 < 0.2) ++clearly_wet;
    }
    c.note("verona state dry weights: " + weights);
    c.require(clearly_dry >= 2, "fewer than 2 states with dry weight above 0.8");
    c.require(clearly_wet >= 2, "fewer than 2 states with dry weight below 0.2");
    return c.ok ? Outcome::Pass : Outcome::Fail;
}

// ---------------------------------------------------------------------------

struct Criterion {
    int number;
    const char* title;
    Outcome (*run)(Check&);
    double budget_seconds;
};

const Criterion kCriteria[] = {
    {1, "recursive likelihood vs path enumeration", criterion_1, 10.0},
    {2, "EM monotonicity on synthetic data", criterion_2, 120.0},
    {3, "parameter recovery from a known model", criterion_3, 600.0},
    {4, "trend selection calibration", criterion_4, 60.0},
    {5, "simulation band self-consistency", criterion_5, 900.0},
    {6, "elementary statistics fixtures", criterion_6, 10.0},
    {7, "archived station records", criterion_7, 0.0},  // no budget without records
};

}  // namespace

int main(int argc, char** argv) {
    int which = 0;
    if (argc > 1) which = std::atoi(argv[1]);
    bool any_fail = false;
    for (const Criterion& cr : kCriteria) {
        if (which != 0 && cr.number != which) continue;
        Check check;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = cr.run(check);
        } catch (const std::exception& e) {
            check.notes.push_back(std::string("unexpected error: ") + e.what());
            out = Outcome::Fail;
        }
        const double elapsed = seconds_since(t0);
        if (out != Outcome::Skip && cr.budget_seconds > 0.0 && elapsed > cr.budget_seconds) {
            check.notes.push_back("over time budget of " + fmt("%.0f", cr.budget_seconds) + "s");
            out = Outcome::Fail;
        }
        const char* verdict = out == Outcome::Pass ? "PASS"
                              : out == Outcome::Fail ? "FAIL"
                                                     : "SKIPPED";
        std::printf("acceptance %d (%s): %s (%.1fs)\n", cr.number, cr.title, verdict, elapsed);
        for (const std::string& n : check.notes) std::printf("    %s\n", n.c_str());
        if (out == Outcome::Fail) any_fail = true;
        std::fflush(stdout);
    }
    return any_fail ? 1 : 0;
}
