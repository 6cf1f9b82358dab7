// Command line front end: ingest -> trend -> fit -> simulate -> validate ->
// report, sharing one declarative config file. Every option can also be set
// on the command line, which wins over the config file. Outputs carry the
// tool version, a hash of the effective configuration, and the seed, and
// reruns with the same inputs are byte-identical.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#if defined(_OPENMP)
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "json.hpp"

#include "swg/data_io.hpp"
#include "swg/inference.hpp"
#include "swg/model_io.hpp"
#include "swg/simulate.hpp"
#include "swg/trends.hpp"
#include "swg/validate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace swg;

namespace {

constexpr const char* kToolVersion = "1.0.0";

std::string hex16(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string num(double v) {
    if (is_missing(v)) return "NA";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

// Header lines stamped onto every output file.
std::vector<std::string> stamp_lines(const std::string& config_desc, std::uint64_t seed) {
    return {std::string("tool_version=") + kToolVersion,
            "config_hash=" + hex16(fnv1a64(config_desc)),
            "seed=" + std::to_string(seed)};
}

void write_stamp(std::ostream& out, const std::vector<std::string>& lines) {
    for (const std::string& s : lines) out << "# " << s << "\n";
}

void ensure_parent(const std::string& path) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

std::ofstream open_out(const std::string& path) {
    ensure_parent(path);
    std::ofstream out(path);
    if (!out) throw DataFormatError("cannot write " + path);
    return out;
}

// Config file access: missing keys leave the target untouched, so the
// priority is built-in default < config file < command line.
template <class T>
void cfg(const json& root, const char* section, const char* key, T& var) {
    auto s = root.find(section);
    if (s == root.end()) return;
    auto k = s->find(key);
    if (k == s->end()) return;
    try {
        var = k->get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config ") + section + "." + key + ": " + e.what());
    }
}

template <class T>
void cfg_top(const json& root, const char* key, T& var) {
    auto k = root.find(key);
    if (k == root.end()) return;
    try {
        var = k->get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config ") + key + ": " + e.what());
    }
}

struct Global {
    std::string config_path;
    std::string out_dir = "out";
    int threads = 0;
    json config = json::object();

    std::string in_out(const std::string& name) const { return (fs::path(out_dir) / name).string(); }
};

// ---------------------------------------------------------------- ingest --

struct IngestOpts {
    std::string precip_file, temp_file, station;
    int first_year = 0, last_year = 0;
    double threshold = 0.1;
    bool keep_suspect = false;
    std::string series_out, summary_out, diagnostics_out;
};

void year_span_of(const EcadParseResult& r, int& lo, int& hi) {
    for (const EcadRecord& rec : r.records) {
        if (is_missing(rec.value)) continue;
        int y = rec.date / 10000;
        if (lo == 0 || y < lo) lo = y;
        if (hi == 0 || y > hi) hi = y;
    }
}

void cmd_ingest(const Global& g, IngestOpts& o) {
    if (o.precip_file.empty() || o.temp_file.empty()) {
        throw ConfigError("ingest needs --precip and --temp files");
    }
    if (o.series_out.empty()) o.series_out = g.in_out("series.tsv");
    if (o.summary_out.empty()) o.summary_out = g.in_out("summary.tsv");
    if (o.diagnostics_out.empty()) o.diagnostics_out = g.in_out("ingest_diagnostics.txt");

    EcadParseResult rr = parse_ecad_file(o.precip_file, EcadVariable::Precip, !o.keep_suspect);
    EcadParseResult tg = parse_ecad_file(o.temp_file, EcadVariable::Temp, !o.keep_suspect);
    if (o.station.empty()) o.station = "station-" + rr.station_id;
    int lo = o.first_year, hi = o.last_year;
    if (lo == 0 || hi == 0) {
        int dlo = 0, dhi = 0;
        year_span_of(rr, dlo, dhi);
        year_span_of(tg, dlo, dhi);
        if (dlo == 0) throw DataFormatError("no valid observations in either input file");
        if (lo == 0) lo = dlo;
        if (hi == 0) hi = dhi;
    }

    std::ostringstream desc;
    desc << "cmd=ingest precip=" << o.precip_file << " temp=" << o.temp_file << " station=" << o.station
         << " first=" << lo << " last=" << hi << " threshold=" << num(o.threshold)
         << " keep_suspect=" << o.keep_suspect;
    std::vector<std::string> stamp = stamp_lines(desc.str(), 0);

    MergeSummary ms;
    DailySeries series = merge_and_normalize(rr, tg, lo, hi, o.threshold, o.station, &ms);
    ensure_parent(o.series_out);
    write_series_file(series, o.series_out, stamp);

    {
        std::ofstream out = open_out(o.diagnostics_out);
        write_stamp(out, stamp);
        out << "precip_rows_flagged\t" << rr.diagnostics.size() << "\n";
        out << "temp_rows_flagged\t" << tg.diagnostics.size() << "\n";
        out << "precip_missing_in_source\t" << rr.n_missing << "\n";
        out << "temp_missing_in_source\t" << tg.n_missing << "\n";
        out << "precip_suspect\t" << rr.n_suspect << "\n";
        out << "temp_suspect\t" << tg.n_suspect << "\n";
        for (const std::string& d : rr.diagnostics) out << o.precip_file << ": " << d << "\n";
        for (const std::string& d : tg.diagnostics) out << o.temp_file << ": " << d << "\n";
    }

    SummaryStats st = summary_stats(series);
    {
        std::ofstream out = open_out(o.summary_out);
        write_stamp(out, stamp);
        out << "key\tvalue\n";
        out << "station\t" << series.station << "\n";
        out << "first_year\t" << lo << "\n";
        out << "last_year\t" << hi << "\n";
        out << "n_days\t" << st.n_days << "\n";
        out << "precip_missing\t" << st.precip_missing << "\n";
        out << "temp_missing\t" << st.temp_missing << "\n";
        out << "values_thresholded\t" << ms.thresholded << "\n";
        out << "mean_yearly_precip_mm\t" << num(st.mean_yearly_precip) << "\n";
        out << "max_daily_precip_mm\t" << num(st.max_daily_precip) << "\n";
        out << "wet_day_frequency\t" << num(st.precip_frequency) << "\n";
        out << "mean_wet_day_precip_mm\t" << num(st.mean_positive_precip) << "\n";
        static const char* season[4] = {"winter", "spring", "summer", "autumn"};
        for (int s = 0; s < 4; ++s) {
            out << "temp_mean_" << season[s] << "_c\t" << num(st.temp_mean[s]) << "\n";
            out << "temp_sd_" << season[s] << "_c\t" << num(st.temp_sd[s]) << "\n";
        }
    }

    std::cout << "wrote " << o.series_out << " (" << series.n_days() << " days, "
              << series.calendar.n_years << " years, station " << series.station << ")\n";
    std::cout << "wrote " << o.summary_out << "\n";
    std::cout << "wrote " << o.diagnostics_out << " (" << rr.diagnostics.size() + tg.diagnostics.size()
              << " flagged rows)\n";
}

// ----------------------------------------------------------------- trend --

struct TrendOpts {
    std::string series;
    double alpha = 0.05;
    int min_days = 300;
    int window = 15;
    std::string force;  // "", "linear", "piecewise"
    std::string out, yearly_out, seasonal_out;
};

void cmd_trend(const Global& g, TrendOpts& o) {
    if (o.series.empty()) o.series = g.in_out("series.tsv");
    if (o.out.empty()) o.out = g.in_out("trend.tsv");
    if (o.yearly_out.empty()) o.yearly_out = g.in_out("trend_yearly.tsv");
    if (o.seasonal_out.empty()) o.seasonal_out = g.in_out("trend_seasonal.tsv");
    if (!o.force.empty() && o.force != "linear" && o.force != "piecewise") {
        throw ConfigError("--force must be linear or piecewise");
    }

    DailySeries series = read_series_file(o.series);
    YearlySeries ys = yearly_mean_temperature(series, o.min_days);
    if (ys.n_valid() < 6) {
        throw ConfigError("trend analysis needs at least 6 years with sufficient coverage; this series has " +
                          std::to_string(ys.n_valid()));
    }
    TrendTest test = trend_test(ys, o.alpha);

    std::string chosen = test.chosen == TrendKind::PiecewiseLinear ? "piecewise" : "linear";
    std::string mode = "tested";
    if (!o.force.empty()) {
        chosen = o.force;
        mode = "forced";
    }

    std::ostringstream desc;
    desc << "cmd=trend series=" << o.series << " alpha=" << num(o.alpha) << " min_days=" << o.min_days
         << " force=" << o.force << " window=" << o.window;
    std::vector<std::string> stamp = stamp_lines(desc.str(), 0);

    {
        std::ofstream out = open_out(o.out);
        write_stamp(out, stamp);
        out << "key\tvalue\n";
        out << "station\t" << series.station << "\n";
        out << "n_years_total\t" << ys.mean.size() << "\n";
        out << "n_years_valid\t" << ys.n_valid() << "\n";
        out << "linear_intercept_c\t" << num(test.linear.intercept) << "\n";
        out << "linear_slope_c_per_year\t" << num(test.linear.slope) << "\n";
        out << "linear_rss\t" << num(test.linear.rss) << "\n";
        out << "piecewise_break_year\t" << test.piecewise.break_year << "\n";
        out << "piecewise_intercept_c\t" << num(test.piecewise.intercept) << "\n";
        out << "piecewise_slope_c_per_year\t" << num(test.piecewise.slope) << "\n";
        out << "piecewise_slope_change_c_per_year\t" << num(test.piecewise.slope_change) << "\n";
        out << "piecewise_rss\t" << num(test.piecewise.rss) << "\n";
        out << "lrt_statistic\t" << num(test.statistic) << "\n";
        out << "lrt_p_value\t" << num(test.p_value) << "\n";
        out << "residual_normality_p\t" << num(test.normality_p) << "\n";
        out << "alpha\t" << num(o.alpha) << "\n";
        out << "chosen_model\t" << chosen << "\n";
        out << "selection_mode\t" << mode << "\n";
    }
    {
        std::ofstream out = open_out(o.yearly_out);
        write_stamp(out, stamp);
        out << "year\tmean_temp_c\tn_days\n";
        for (size_t i = 0; i < ys.mean.size(); ++i) {
            out << ys.first_year + static_cast<int>(i) << '\t' << num(ys.mean[i]) << '\t' << ys.n_days[i] << "\n";
        }
    }
    {
        std::ofstream out = open_out(o.seasonal_out);
        write_stamp(out, stamp);
        out << "year\tsummer_centred_c\twinter_centred_c\n";
        for (const SeasonalMeansRow& row : seasonal_windowed_means(series, o.window)) {
            out << row.year << '\t' << num(row.summer) << '\t' << num(row.winter) << "\n";
        }
    }

    std::cout << "trend: " << chosen << " (" << mode << "), LRT statistic " << num(test.statistic)
              << ", p " << num(test.p_value) << "\n";
    std::cout << "linear slope " << num(test.linear.slope) << " C/year";
    if (chosen == "piecewise") {
        std::cout << "; break year " << test.piecewise.break_year << ", slope change "
                  << num(test.piecewise.slope_change) << " C/year";
    }
    std::cout << "\nwrote " << o.out << "\n";
}

// ------------------------------------------------------------------- fit --

struct FitOpts {
    std::string series;
    std::vector<int> states = {2, 3, 4};
    std::vector<int> components = {3};
    std::vector<int> dirac = {1};
    std::vector<int> degrees = {2};
    std::string trend = "auto";  // auto|constant|linear|piecewise
    int break_year = 0;
    int restarts = 20, max_iters = 500, mstep_evals = 40;
    double rel_tol = 1e-6;
    double alpha = 0.05;
    int min_days = 300;
    std::uint64_t seed = 1;
    std::string model_out, selection_out;
};

TrendForm resolve_trend_form(const DailySeries& series, FitOpts& o) {
    TrendForm form;
    if (o.trend == "constant") {
        form.kind = TrendKind::Constant;
        return form;
    }
    if (o.trend == "linear") {
        form.kind = TrendKind::Linear;
        return form;
    }
    if (o.trend == "piecewise" && o.break_year > 0) {
        form.kind = TrendKind::PiecewiseLinear;
        form.break_year = o.break_year;
        return form;
    }
    if (o.trend != "auto" && o.trend != "piecewise") {
        throw ConfigError("--trend must be auto, constant, linear or piecewise");
    }
    YearlySeries ys = yearly_mean_temperature(series, o.min_days);
    if (ys.n_valid() < 6) {
        throw ConfigError("trend form '" + o.trend + "' needs at least 6 years with sufficient coverage; " +
                          "pass --trend constant or linear for short series");
    }
    if (o.trend == "piecewise") {
        form.kind = TrendKind::PiecewiseLinear;
        form.break_year = fit_piecewise(ys).break_year;
        return form;
    }
    TrendTest test = trend_test(ys, o.alpha);
    form.kind = test.chosen;
    form.break_year = test.break_year;
    return form;
}

void cmd_fit(const Global& g, FitOpts& o) {
    if (o.series.empty()) o.series = g.in_out("series.tsv");
    if (o.model_out.empty()) o.model_out = g.in_out("model.json");
    if (o.selection_out.empty()) o.selection_out = g.in_out("selection.tsv");

    DailySeries series = read_series_file(o.series);
    TrendForm form = resolve_trend_form(series, o);

    std::vector<ModelSpec> candidates;
    for (int k : o.states)
        for (int m : o.components)
            for (int m1 : o.dirac)
                for (int d : o.degrees) {
                    ModelSpec spec;
                    spec.n_states = k;
                    spec.n_components = m;
                    spec.n_dirac = m1;
                    spec.degree = d;
                    spec.trend = form;
                    try {
                        validate_spec(spec);
                    } catch (const InvalidParameterError& e) {
                        throw ConfigError(std::string("candidate K=") + std::to_string(k) + " M=" +
                                          std::to_string(m) + " M1=" + std::to_string(m1) + " d=" +
                                          std::to_string(d) + ": " + e.what());
                    }
                    candidates.push_back(spec);
                }

    EmConfig cfg;
    cfg.max_iters = o.max_iters;
    cfg.rel_tol = o.rel_tol;
    cfg.n_restarts = o.restarts;
    cfg.seed = o.seed;
    cfg.mstep_max_evals = o.mstep_evals;

    std::ostringstream desc;
    desc << "cmd=fit series=" << o.series << " trend=" << form.name() << " break=" << form.break_year
         << " restarts=" << o.restarts << " max_iters=" << o.max_iters << " rel_tol=" << num(o.rel_tol)
         << " mstep_evals=" << o.mstep_evals << " seed=" << o.seed << " grid=";
    for (int k : o.states) desc << k << ",";
    desc << "x";
    for (int m : o.components) desc << m << ",";
    desc << "x";
    for (int m1 : o.dirac) desc << m1 << ",";
    desc << "x";
    for (int d : o.degrees) desc << d << ",";
    std::vector<std::string> stamp = stamp_lines(desc.str(), o.seed);

    SelectionResult sel = select_spec(series, candidates, cfg);

    {
        std::ofstream out = open_out(o.selection_out);
        write_stamp(out, stamp);
        out << "n_states\tn_components\tn_dirac\tdegree\ttrend\tloglik\tn_params\tbic\tstatus\terror\n";
        for (const SelectionRow& row : sel.table) {
            out << row.spec.n_states << '\t' << row.spec.n_components << '\t' << row.spec.n_dirac << '\t'
                << row.spec.degree << '\t' << row.spec.trend.name() << '\t' << num(row.loglik) << '\t'
                << row.n_params << '\t' << num(row.bic) << '\t' << (row.ok ? "ok" : "failed") << '\t'
                << row.error << "\n";
        }
    }
    ensure_parent(o.model_out);
    save_model(sel.best, o.model_out, series_fingerprint(series), o.seed);

    const FittedModel& best = sel.best;
    std::cout << "fitted " << sel.table.size() << " candidate(s); selected K=" << best.spec.n_states
              << " M=" << best.spec.n_components << " M1=" << best.spec.n_dirac << " degree="
              << best.spec.degree << " trend=" << best.spec.trend.name() << "\n";
    std::cout << "loglik " << num(best.loglik) << ", parameters " << best.n_params << ", bic "
              << num(best.bic) << ", " << (best.converged ? "converged" : "hit the iteration cap") << "\n";
    std::cout << "wrote " << o.model_out << "\n";
}

// -------------------------------------------------------------- simulate --

struct SimulateOpts {
    std::string model;
    std::string out;
    long n_days = 0;
    int n_trajectories = 100;
    std::uint64_t seed = 1;
    bool emit_states = false;
    std::string format = "binary";  // binary|text
    int first_year = 0;
    int block = 64;
    std::string start = "stationary";  // stationary|fixed
    int fixed_state = 0;
};

void cmd_simulate(const Global& g, SimulateOpts& o) {
    if (o.model.empty()) o.model = g.in_out("model.json");
    if (o.format != "binary" && o.format != "text") throw ConfigError("--format must be binary or text");
    if (o.out.empty()) o.out = g.in_out(o.format == "binary" ? "trajectories.bin" : "trajectories.tsv");
    if (o.block <= 0) throw ConfigError("--block must be positive");
    if (o.start != "stationary" && o.start != "fixed") throw ConfigError("--start must be stationary or fixed");

    LoadedModel loaded = load_model(o.model);
    const FittedModel& model = loaded.model;
    if (o.n_days <= 0) o.n_days = model.calendar.n_days();
    if (o.first_year == 0) o.first_year = model.calendar.first_year;

    std::ostringstream desc;
    desc << "cmd=simulate model=" << o.model << " n_days=" << o.n_days << " n_trajectories="
         << o.n_trajectories << " seed=" << o.seed << " emit_states=" << o.emit_states << " format="
         << o.format << " first_year=" << o.first_year << " start=" << o.start << " fixed_state="
         << o.fixed_state << " model_fingerprint=" << loaded.data_fingerprint;
    std::vector<std::string> stamp = stamp_lines(desc.str(), o.seed);

    SimulationRequest req;
    req.n_days = o.n_days;
    req.seed = o.seed;
    req.emit_states = o.emit_states;
    if (o.start == "fixed") {
        req.initial = SimulationRequest::InitialState::Fixed;
        req.fixed_state = o.fixed_state;
    }

    Calendar sim_cal = model.calendar;
    sim_cal.first_year = o.first_year;
    sim_cal.n_years = static_cast<int>((o.n_days + sim_cal.period - 1) / sim_cal.period);

    if (o.format == "binary") {
        BatchHeader header;
        header.n_trajectories = o.n_trajectories;
        header.n_days = o.n_days;
        header.seed = o.seed;
        header.emit_states = o.emit_states;
        header.first_year = o.first_year;
        header.period = sim_cal.period;
        header.dryness_threshold = model.dryness_threshold;
        header.station = model.station;
        header.model_fingerprint = loaded.data_fingerprint;
        ensure_parent(o.out);
        BatchWriter writer(o.out, header);
        for (int done = 0; done < o.n_trajectories; done += o.block) {
            SimulationRequest blockreq = req;
            blockreq.first_index = done;
            blockreq.n_trajectories = std::min(o.block, o.n_trajectories - done);
            for (const Trajectory& tr : simulate(model, blockreq)) writer.write(tr);
        }
        writer.close();
    } else {
        std::ofstream out = open_out(o.out);
        write_stamp(out, stamp);
        out << "trajectory\tdate\tprecip_mm\ttemp_c";
        if (o.emit_states) out << "\tstate\tcomponent";
        out << "\n";
        for (int done = 0; done < o.n_trajectories; done += o.block) {
            SimulationRequest blockreq = req;
            blockreq.first_index = done;
            blockreq.n_trajectories = std::min(o.block, o.n_trajectories - done);
            std::vector<Trajectory> block = simulate(model, blockreq);
            for (int i = 0; i < blockreq.n_trajectories; ++i) {
                const Trajectory& tr = block[static_cast<size_t>(i)];
                for (long t = 0; t < o.n_days; ++t) {
                    out << done + i << '\t' << date_of_day(sim_cal, t + 1) << '\t'
                        << num(tr.precip[static_cast<size_t>(t)]) << '\t'
                        << num(tr.temp[static_cast<size_t>(t)]);
                    if (o.emit_states) {
                        out << '\t' << static_cast<int>(tr.state[static_cast<size_t>(t)]) << '\t'
                            << static_cast<int>(tr.component[static_cast<size_t>(t)]);
                    }
                    out << "\n";
                }
            }
        }
    }
    std::cout << "wrote " << o.out << " (" << o.n_trajectories << " trajectories of " << o.n_days
              << " days)\n";
}

// -------------------------------------------------------------- validate --

struct ValidateOpts {
    std::string series;
    std::string batch;
    std::string model;
    int n_trajectories = 0;  // 0: all in the batch, or 100 for fresh draws
    std::uint64_t seed = 2718;
    std::string stats_dir, summary_out;
    int spell_max = 10, cluster_max = 10;
    std::vector<double> hot_alphas = {0.95};
    std::vector<double> cold_alphas = {0.05};
    double kernel_h = 2.0, h1 = 15.0, h2 = 2.0;
    std::vector<int> seasonal_days = {15, 105, 196, 288};
    double ygrid_step = 1.0;
    double band_lo = 0.025, band_hi = 0.975;
    std::vector<std::string> stats;
};

void cmd_validate(const Global& g, ValidateOpts& o) {
    if (o.series.empty()) o.series = g.in_out("series.tsv");
    if (o.stats_dir.empty()) o.stats_dir = g.in_out("validation");
    if (o.summary_out.empty()) o.summary_out = g.in_out("validation_summary.tsv");
    if (o.batch.empty() && o.model.empty()) {
        std::string candidate = g.in_out("trajectories.bin");
        if (fs::exists(candidate)) {
            o.batch = candidate;
        } else {
            o.model = g.in_out("model.json");
        }
    }

    DailySeries observed = read_series_file(o.series);

    ValidationConfig vc;
    vc.spell_max_len = o.spell_max;
    vc.cluster_max_len = o.cluster_max;
    vc.hot_alphas = o.hot_alphas;
    vc.cold_alphas = o.cold_alphas;
    vc.kernel_h = o.kernel_h;
    vc.kernel_h1 = o.h1;
    vc.kernel_h2 = o.h2;
    vc.seasonal_days = o.seasonal_days;
    vc.ygrid_step = o.ygrid_step;
    vc.band_lo = o.band_lo;
    vc.band_hi = o.band_hi;
    vc.statistics = o.stats;

    int n_sims = 0;
    std::function<DailySeries(int)> provider;
    std::shared_ptr<BatchReader> reader;
    std::shared_ptr<LoadedModel> loaded;
    std::string source;
    if (!o.batch.empty()) {
        reader = std::make_shared<BatchReader>(o.batch);
        n_sims = reader->header().n_trajectories;
        if (o.n_trajectories > 0) n_sims = std::min(n_sims, o.n_trajectories);
        if (reader->header().n_days != observed.n_days()) {
            std::cerr << "warning: batch trajectories have " << reader->header().n_days
                      << " days, observed series has " << observed.n_days()
                      << "; statistics are day-of-year aligned and still comparable\n";
        }
        provider = [reader](int i) { return reader->read_series(i); };
        source = "batch=" + o.batch;
    } else {
        loaded = std::make_shared<LoadedModel>(load_model(o.model));
        n_sims = o.n_trajectories > 0 ? o.n_trajectories : 100;
        const FittedModel& model = loaded->model;
        long n_days = observed.n_days();
        std::uint64_t seed = o.seed;
        provider = [loaded, n_days, seed](int i) {
            SimulationRequest req;
            req.n_days = n_days;
            req.n_trajectories = 1;
            req.seed = seed;
            req.first_index = i;
            Trajectory tr = std::move(simulate(loaded->model, req).front());
            return trajectory_to_series(tr, loaded->model);
        };
        source = "model=" + o.model;
        (void)model;
    }
    if (n_sims < 2) throw ConfigError("validation needs at least 2 simulated trajectories");

    std::ostringstream desc;
    desc << "cmd=validate series=" << o.series << " " << source << " n_sims=" << n_sims << " seed="
         << o.seed << " spell_max=" << o.spell_max << " cluster_max=" << o.cluster_max << " kernel_h="
         << num(o.kernel_h) << " h1=" << num(o.h1) << " h2=" << num(o.h2) << " ygrid=" << num(o.ygrid_step)
         << " band=" << num(o.band_lo) << "," << num(o.band_hi);
    for (double a : o.hot_alphas) desc << " hot=" << num(a);
    for (double a : o.cold_alphas) desc << " cold=" << num(a);
    for (int d : o.seasonal_days) desc << " sday=" << d;
    for (const std::string& s : o.stats) desc << " stat=" << s;
    std::vector<std::string> stamp = stamp_lines(desc.str(), o.seed);

    std::vector<StatisticReport> report = build_report(observed, n_sims, provider, vc);

    fs::create_directories(o.stats_dir);
    for (const StatisticReport& r : report) {
        std::ofstream out = open_out((fs::path(o.stats_dir) / (r.name + ".tsv")).string());
        write_stamp(out, stamp);
        if (!r.error.empty()) out << "# error=" << r.error << "\n";
        bool extra = !r.extrapolated.empty();
        out << "bin\tobserved\tsim_mean\tband_lo\tband_hi\tcovered" << (extra ? "\textrapolated" : "")
            << "\n";
        for (size_t b = 0; b < r.bins.size(); ++b) {
            out << r.bins[b] << '\t' << num(r.observed[b]) << '\t' << num(r.sim_mean[b]) << '\t'
                << num(r.band_lo[b]) << '\t' << num(r.band_hi[b]) << '\t' << r.coverage[b];
            if (extra) out << '\t' << static_cast<int>(r.extrapolated[b]);
            out << "\n";
        }
    }
    double total_cov = 0.0;
    int n_cov = 0;
    {
        std::ofstream out = open_out(o.summary_out);
        write_stamp(out, stamp);
        out << "statistic\tn_bins\tcoverage\terror\n";
        for (const StatisticReport& r : report) {
            double c = r.coverage_fraction();
            out << r.name << '\t' << r.bins.size() << '\t' << num(c) << '\t' << r.error << "\n";
            if (!is_missing(c)) {
                total_cov += c;
                ++n_cov;
            }
        }
    }

    std::cout << "validated against " << n_sims << " trajectories (" << source << ")\n";
    for (const StatisticReport& r : report) {
        std::cout << "  " << r.name << ": coverage " << num(r.coverage_fraction());
        if (!r.error.empty()) std::cout << " [" << r.error << "]";
        std::cout << "\n";
    }
    if (n_cov > 0) std::cout << "mean coverage " << num(total_cov / n_cov) << "\n";
    std::cout << "wrote " << o.summary_out << " and " << report.size() << " statistic files under "
              << o.stats_dir << "\n";
}

// ---------------------------------------------------------------- report --

struct ReportOpts {
    std::string out;
};

// Key-value TSVs written by the other subcommands.
std::map<std::string, std::string> read_kv(const std::string& path) {
    std::map<std::string, std::string> kv;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        size_t tab = line.find('\t');
        if (tab == std::string::npos) continue;
        std::string key = line.substr(0, tab);
        if (key == "key") continue;
        kv[key] = line.substr(tab + 1);
    }
    return kv;
}

void append_table(std::ostream& out, const std::string& path) {
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] == '#') continue;
        out << "  " << line << "\n";
    }
}

void cmd_report(const Global& g, ReportOpts& o) {
    if (o.out.empty()) o.out = g.in_out("report.txt");
    std::ostringstream desc;
    desc << "cmd=report out_dir=" << g.out_dir;
    std::vector<std::string> stamp = stamp_lines(desc.str(), 0);

    std::ostringstream body;
    body << "weather generator run report\n";
    body << "============================\n\n";

    std::string summary_path = g.in_out("summary.tsv");
    if (fs::exists(summary_path)) {
        body << "[data]\n";
        for (const auto& [k, v] : read_kv(summary_path)) body << "  " << k << " = " << v << "\n";
        body << "\n";
    } else {
        body << "[data] no " << summary_path << "; run the ingest step first\n\n";
    }

    std::string trend_path = g.in_out("trend.tsv");
    if (fs::exists(trend_path)) {
        std::map<std::string, std::string> kv = read_kv(trend_path);
        body << "[trend]\n";
        body << "  chosen model = " << kv["chosen_model"] << " (" << kv["selection_mode"] << ")\n";
        body << "  linear slope = " << kv["linear_slope_c_per_year"] << " C/year\n";
        if (kv["chosen_model"] == "piecewise") {
            body << "  break year = " << kv["piecewise_break_year"] << ", slope change = "
                 << kv["piecewise_slope_change_c_per_year"] << " C/year\n";
        }
        body << "  LRT statistic = " << kv["lrt_statistic"] << ", p = " << kv["lrt_p_value"]
             << " (alpha " << kv["alpha"] << ")\n";
        body << "  residual normality p = " << kv["residual_normality_p"] << "\n\n";
    } else {
        body << "[trend] no " << trend_path << "; run the trend step first\n\n";
    }

    std::string model_path = g.in_out("model.json");
    if (fs::exists(model_path)) {
        body << "[model]\n";
        try {
            LoadedModel loaded = load_model(model_path);
            const FittedModel& m = loaded.model;
            body << "  states = " << m.spec.n_states << ", components = " << m.spec.n_components
                 << " (" << m.spec.n_dirac << " dry), seasonal degree = " << m.spec.degree
                 << ", trend = " << m.spec.trend.name() << "\n";
            body << "  log likelihood = " << num(m.loglik) << ", parameters = " << m.n_params
                 << ", bic = " << num(m.bic) << "\n";
            body << "  observations = " << m.n_obs << ", "
                 << (m.converged ? "converged" : "stopped at the iteration cap") << " after "
                 << m.iterations << " iterations\n";
            body << "  data fingerprint = " << loaded.data_fingerprint << ", seed = " << loaded.seed
                 << "\n";
        } catch (const Error& e) {
            body << "  unreadable model file: " << e.what() << "\n";
        }
        std::string sel_path = g.in_out("selection.tsv");
        if (fs::exists(sel_path)) {
            body << "  candidates:\n";
            append_table(body, sel_path);
        }
        body << "\n";
    } else {
        body << "[model] no " << model_path << "; run the fit step first\n\n";
    }

    std::string val_path = g.in_out("validation_summary.tsv");
    if (fs::exists(val_path)) {
        body << "[validation]\n";
        append_table(body, val_path);
        body << "\n";
    } else {
        body << "[validation] no " << val_path << "; run the validate step first\n\n";
    }

    std::ofstream out = open_out(o.out);
    write_stamp(out, stamp);
    out << body.str();
    std::cout << body.str();
    std::cout << "wrote " << o.out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    Global g;
    // The config path must be known before option defaults are set up, so
    // scan for it ahead of the real parse.
    for (int i = 1; i < argc; ++i) {
        std::string a = argv[i];
        if ((a == "--config" || a == "-c") && i + 1 < argc) g.config_path = argv[i + 1];
        if (a.rfind("--config=", 0) == 0) g.config_path = a.substr(9);
    }
    try {
        if (!g.config_path.empty()) {
            std::ifstream in(g.config_path);
            if (!in) throw ConfigError("cannot open config file " + g.config_path);
            try {
                in >> g.config;
            } catch (const json::exception& e) {
                throw ConfigError(g.config_path + ": not valid JSON: " + e.what());
            }
            if (!g.config.is_object()) throw ConfigError(g.config_path + ": config must be a JSON object");
        }

        CLI::App app{"stochastic daily weather generator"};
        app.set_version_flag("--version", kToolVersion);
        app.require_subcommand(1);
        app.add_option("-c,--config", g.config_path, "JSON config file; command line flags override it");
        cfg_top(g.config, "out_dir", g.out_dir);
        cfg_top(g.config, "threads", g.threads);
        app.add_option("--out-dir", g.out_dir, "directory for outputs and default inputs");
        app.add_option("--threads", g.threads, "OpenMP thread cap (0 = library default)");

        IngestOpts ingest;
        cfg(g.config, "ingest", "precip_file", ingest.precip_file);
        cfg(g.config, "ingest", "temp_file", ingest.temp_file);
        cfg(g.config, "ingest", "station", ingest.station);
        cfg_top(g.config, "station", ingest.station);
        cfg(g.config, "ingest", "first_year", ingest.first_year);
        cfg(g.config, "ingest", "last_year", ingest.last_year);
        cfg(g.config, "ingest", "dryness_threshold", ingest.threshold);
        cfg(g.config, "ingest", "keep_suspect", ingest.keep_suspect);
        cfg(g.config, "ingest", "series_out", ingest.series_out);
        CLI::App* c_ingest = app.add_subcommand("ingest", "parse station files into a clean daily series");
        c_ingest->add_option("--precip", ingest.precip_file, "precipitation file (RR)");
        c_ingest->add_option("--temp", ingest.temp_file, "temperature file (TG)");
        c_ingest->add_option("--station", ingest.station, "station name for outputs");
        c_ingest->add_option("--first-year", ingest.first_year, "first year (0 = first with data)");
        c_ingest->add_option("--last-year", ingest.last_year, "last year (0 = last with data)");
        c_ingest->add_option("--threshold", ingest.threshold, "dryness threshold in mm");
        c_ingest->add_flag("--keep-suspect", ingest.keep_suspect, "keep quality-1 values instead of dropping them");
        c_ingest->add_option("--series-out", ingest.series_out, "series output path");

        TrendOpts trend;
        cfg(g.config, "trend", "series", trend.series);
        cfg(g.config, "trend", "alpha", trend.alpha);
        cfg(g.config, "trend", "min_days", trend.min_days);
        cfg(g.config, "trend", "window", trend.window);
        cfg(g.config, "trend", "force", trend.force);
        CLI::App* c_trend = app.add_subcommand("trend", "test the long-term temperature trend shape");
        c_trend->add_option("--series", trend.series, "input series file");
        c_trend->add_option("--alpha", trend.alpha, "significance level of the shape test");
        c_trend->add_option("--min-days", trend.min_days, "days required for a year to count");
        c_trend->add_option("--window", trend.window, "years in the seasonal smoothing window");
        c_trend->add_option("--force", trend.force, "override the choice: linear or piecewise");

        FitOpts fit;
        cfg(g.config, "fit", "series", fit.series);
        cfg(g.config, "fit", "states", fit.states);
        cfg(g.config, "fit", "components", fit.components);
        cfg(g.config, "fit", "dirac", fit.dirac);
        cfg(g.config, "fit", "degrees", fit.degrees);
        cfg(g.config, "fit", "trend", fit.trend);
        cfg(g.config, "fit", "break_year", fit.break_year);
        cfg(g.config, "fit", "restarts", fit.restarts);
        cfg(g.config, "fit", "max_iters", fit.max_iters);
        cfg(g.config, "fit", "mstep_evals", fit.mstep_evals);
        cfg(g.config, "fit", "rel_tol", fit.rel_tol);
        cfg(g.config, "fit", "alpha", fit.alpha);
        cfg(g.config, "fit", "min_days", fit.min_days);
        cfg(g.config, "fit", "seed", fit.seed);
        CLI::App* c_fit = app.add_subcommand("fit", "fit the weather model, selecting over a spec grid");
        c_fit->add_option("--series", fit.series, "input series file");
        c_fit->add_option("--states", fit.states, "hidden state counts to try");
        c_fit->add_option("--components", fit.components, "mixture component counts to try");
        c_fit->add_option("--dirac", fit.dirac, "dry component counts to try");
        c_fit->add_option("--degrees", fit.degrees, "seasonal degrees to try");
        c_fit->add_option("--trend", fit.trend, "trend form: auto, constant, linear, piecewise");
        c_fit->add_option("--break-year", fit.break_year, "break year for --trend piecewise (0 = search)");
        c_fit->add_option("--restarts", fit.restarts, "random restarts per candidate");
        c_fit->add_option("--max-iters", fit.max_iters, "iteration cap per restart");
        c_fit->add_option("--rel-tol", fit.rel_tol, "relative log likelihood tolerance");
        c_fit->add_option("--mstep-evals", fit.mstep_evals, "objective evaluations per update block");
        c_fit->add_option("--seed", fit.seed, "seed of the restart streams");
        c_fit->add_option("--model-out", fit.model_out, "model output path");

        SimulateOpts sim;
        cfg(g.config, "simulate", "model", sim.model);
        cfg(g.config, "simulate", "out", sim.out);
        cfg(g.config, "simulate", "n_days", sim.n_days);
        cfg(g.config, "simulate", "n_trajectories", sim.n_trajectories);
        cfg(g.config, "simulate", "seed", sim.seed);
        cfg(g.config, "simulate", "emit_states", sim.emit_states);
        cfg(g.config, "simulate", "format", sim.format);
        cfg(g.config, "simulate", "first_year", sim.first_year);
        cfg(g.config, "simulate", "block", sim.block);
        cfg(g.config, "simulate", "start", sim.start);
        cfg(g.config, "simulate", "fixed_state", sim.fixed_state);
        CLI::App* c_sim = app.add_subcommand("simulate", "draw synthetic trajectories from a fitted model");
        c_sim->add_option("--model", sim.model, "model file");
        c_sim->add_option("--out", sim.out, "output path");
        c_sim->add_option("--n-days", sim.n_days, "days per trajectory (0 = training length)");
        c_sim->add_option("--n-trajectories", sim.n_trajectories, "number of trajectories");
        c_sim->add_option("--seed", sim.seed, "seed; trajectory i uses stream (seed, i)");
        c_sim->add_flag("--emit-states", sim.emit_states, "store hidden state and component labels");
        c_sim->add_option("--format", sim.format, "binary or text");
        c_sim->add_option("--first-year", sim.first_year, "calendar year of day 1 (0 = model's)");
        c_sim->add_option("--block", sim.block, "trajectories simulated per block");
        c_sim->add_option("--start", sim.start, "day-1 state: stationary or fixed");
        c_sim->add_option("--fixed-state", sim.fixed_state, "state index for --start fixed");

        ValidateOpts val;
        cfg(g.config, "validate", "series", val.series);
        cfg(g.config, "validate", "batch", val.batch);
        cfg(g.config, "validate", "model", val.model);
        cfg(g.config, "validate", "n_trajectories", val.n_trajectories);
        cfg(g.config, "validate", "seed", val.seed);
        cfg(g.config, "validate", "spell_max", val.spell_max);
        cfg(g.config, "validate", "cluster_max", val.cluster_max);
        cfg(g.config, "validate", "hot_alphas", val.hot_alphas);
        cfg(g.config, "validate", "cold_alphas", val.cold_alphas);
        cfg(g.config, "validate", "kernel_h", val.kernel_h);
        cfg(g.config, "validate", "h1", val.h1);
        cfg(g.config, "validate", "h2", val.h2);
        cfg(g.config, "validate", "seasonal_days", val.seasonal_days);
        cfg(g.config, "validate", "ygrid_step", val.ygrid_step);
        cfg(g.config, "validate", "band_lo", val.band_lo);
        cfg(g.config, "validate", "band_hi", val.band_hi);
        cfg(g.config, "validate", "statistics", val.stats);
        CLI::App* c_val = app.add_subcommand("validate", "compare observed statistics with simulation bands");
        c_val->add_option("--series", val.series, "observed series file");
        c_val->add_option("--batch", val.batch, "trajectory batch to validate against");
        c_val->add_option("--model", val.model, "model file for fresh draws (when no batch is given)");
        c_val->add_option("--n-trajectories", val.n_trajectories, "trajectories to use (0 = whole batch)");
        c_val->add_option("--seed", val.seed, "seed for fresh draws");
        c_val->add_option("--spell-max", val.spell_max, "longest spell length bin");
        c_val->add_option("--cluster-max", val.cluster_max, "longest cluster length bin");
        c_val->add_option("--hot-alpha", val.hot_alphas, "upper temperature quantiles for clusters");
        c_val->add_option("--cold-alpha", val.cold_alphas, "lower temperature quantiles for clusters");
        c_val->add_option("--kernel-h", val.kernel_h, "temperature kernel bandwidth (C)");
        c_val->add_option("--h1", val.h1, "day-of-year kernel bandwidth (days)");
        c_val->add_option("--h2", val.h2, "temperature kernel bandwidth for seasonal curves (C)");
        c_val->add_option("--seasonal-day", val.seasonal_days, "days of year for seasonal curves");
        c_val->add_option("--ygrid-step", val.ygrid_step, "temperature grid step (C)");
        c_val->add_option("--band-lo", val.band_lo, "lower band probability");
        c_val->add_option("--band-hi", val.band_hi, "upper band probability");
        c_val->add_option("--stat", val.stats, "restrict to these statistic names");
        c_val->add_option("--stats-dir", val.stats_dir, "directory for per-statistic tables");

        ReportOpts rep;
        CLI::App* c_rep = app.add_subcommand("report", "summarize the outputs of the other steps");
        c_rep->add_option("--out", rep.out, "report path");

        // Global flags may appear after the subcommand name.
        for (CLI::App* sub : {c_ingest, c_trend, c_fit, c_sim, c_val, c_rep}) sub->fallthrough();

        auto apply_threads = [&] {
#if defined(_OPENMP)
            if (g.threads > 0) omp_set_num_threads(g.threads);
#endif
        };
        c_ingest->callback([&] { apply_threads(); cmd_ingest(g, ingest); });
        c_trend->callback([&] { apply_threads(); cmd_trend(g, trend); });
        c_fit->callback([&] { apply_threads(); cmd_fit(g, fit); });
        c_sim->callback([&] { apply_threads(); cmd_simulate(g, sim); });
        c_val->callback([&] { apply_threads(); cmd_validate(g, val); });
        c_rep->callback([&] { apply_threads(); cmd_report(g, rep); });

        try {
            app.parse(argc, argv);
        } catch (const CLI::ParseError& e) {
            if (e.get_exit_code() == 0) return app.exit(e);
            std::cerr << "error: " << e.what() << "\n";
            return 2;
        }
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const InvalidParameterError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DataFormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const InvalidObservationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const DegenerateLikelihoodError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const FitFailureError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
