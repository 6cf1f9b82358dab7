#include "swg/model_io.hpp"

#include <cstdio>
#include <cstring>
#include <sstream>

#include "json.hpp"

namespace swg {

using nlohmann::json;

namespace {

constexpr int kModelVersion = 1;
constexpr const char* kBatchMagic = "swg-batch v1";

json trend_to_json(const TrendForm& trend) {
    json j;
    j["form"] = trend.name();
    if (trend.kind == TrendKind::PiecewiseLinear) j["break_year"] = trend.break_year;
    return j;
}

TrendForm trend_from_json(const json& j) {
    TrendForm trend;
    std::string form = j.at("form").get<std::string>();
    if (form == "constant") {
        trend.kind = TrendKind::Constant;
    } else if (form == "linear") {
        trend.kind = TrendKind::Linear;
    } else if (form == "piecewise") {
        trend.kind = TrendKind::PiecewiseLinear;
        trend.break_year = j.at("break_year").get<int>();
    } else {
        throw DataFormatError("unknown trend form: " + form);
    }
    return trend;
}

json spec_to_json(const ModelSpec& spec) {
    json j;
    j["n_states"] = spec.n_states;
    j["n_components"] = spec.n_components;
    j["n_dirac"] = spec.n_dirac;
    j["degree"] = spec.degree;
    j["period"] = spec.period;
    j["trend"] = trend_to_json(spec.trend);
    return j;
}

ModelSpec spec_from_json(const json& j) {
    ModelSpec spec;
    spec.n_states = j.at("n_states").get<int>();
    spec.n_components = j.at("n_components").get<int>();
    spec.n_dirac = j.at("n_dirac").get<int>();
    spec.degree = j.at("degree").get<int>();
    spec.period = j.at("period").get<int>();
    spec.trend = trend_from_json(j.at("trend"));
    return spec;
}

json state_to_json(const StateEmissionParams& st) {
    json j;
    j["weights"] = st.weights;
    j["rate_base"] = st.rate_base;
    j["precip_season"] = st.precip_season;
    j["temp_mean"] = st.temp_mean;
    j["temp_var"] = st.temp_var;
    j["temp_season"] = st.temp_season;
    j["trend_coeffs"] = st.trend_coeffs;
    return j;
}

StateEmissionParams state_from_json(const json& j) {
    StateEmissionParams st;
    st.weights = j.at("weights").get<std::vector<double>>();
    st.rate_base = j.at("rate_base").get<std::vector<double>>();
    st.precip_season = j.at("precip_season").get<std::vector<double>>();
    st.temp_mean = j.at("temp_mean").get<std::vector<double>>();
    st.temp_var = j.at("temp_var").get<std::vector<double>>();
    st.temp_season = j.at("temp_season").get<std::vector<double>>();
    st.trend_coeffs = j.at("trend_coeffs").get<std::vector<double>>();
    return st;
}

}  // namespace

void save_model(const FittedModel& model, const std::string& path,
                const std::string& data_fingerprint, std::uint64_t seed) {
    json j;
    j["format"] = "swg-model";
    j["version"] = kModelVersion;
    j["station"] = model.station;
    j["calendar"] = {{"first_year", model.calendar.first_year},
                     {"n_years", model.calendar.n_years},
                     {"period", model.calendar.period}};
    j["dryness_threshold"] = model.dryness_threshold;
    j["spec"] = spec_to_json(model.spec);
    json fit;
    fit["loglik"] = model.loglik;
    fit["bic"] = model.bic;
    fit["n_params"] = model.n_params;
    fit["n_obs"] = model.n_obs;
    fit["iterations"] = model.iterations;
    fit["converged"] = model.converged;
    fit["restart_logliks"] = model.restart_logliks;
    fit["seed"] = seed;
    fit["data_fingerprint"] = data_fingerprint;
    j["fit"] = fit;
    json params;
    params["initial"] = model.params.initial;
    params["transition"] = model.params.transition.coeffs;
    json states = json::array();
    for (const StateEmissionParams& st : model.params.emission) states.push_back(state_to_json(st));
    params["states"] = states;
    j["parameters"] = params;
    std::ofstream out(path);
    if (!out) throw DataFormatError("cannot write " + path);
    out << j.dump(2) << "\n";
    if (!out) throw DataFormatError("write failed for " + path);
}

LoadedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataFormatError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataFormatError(path + ": not valid JSON: " + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "swg-model") {
            throw DataFormatError(path + ": not a model file");
        }
        int version = j.at("version").get<int>();
        if (version != kModelVersion) {
            throw DataFormatError(path + ": unsupported model version " + std::to_string(version));
        }
        LoadedModel loaded;
        FittedModel& m = loaded.model;
        m.station = j.at("station").get<std::string>();
        const json& cal = j.at("calendar");
        m.calendar.first_year = cal.at("first_year").get<int>();
        m.calendar.n_years = cal.at("n_years").get<int>();
        m.calendar.period = cal.at("period").get<int>();
        m.dryness_threshold = j.at("dryness_threshold").get<double>();
        m.spec = spec_from_json(j.at("spec"));
        const json& fit = j.at("fit");
        m.loglik = fit.at("loglik").get<double>();
        m.bic = fit.at("bic").get<double>();
        m.n_params = fit.at("n_params").get<int>();
        m.n_obs = fit.at("n_obs").get<long>();
        m.iterations = fit.at("iterations").get<int>();
        m.converged = fit.at("converged").get<bool>();
        m.restart_logliks = fit.at("restart_logliks").get<std::vector<double>>();
        loaded.seed = fit.at("seed").get<std::uint64_t>();
        loaded.data_fingerprint = fit.at("data_fingerprint").get<std::string>();
        const json& params = j.at("parameters");
        m.params.initial = params.at("initial").get<std::vector<double>>();
        m.params.transition = TransitionParams(m.spec.n_states, m.spec.degree);
        m.params.transition.coeffs = params.at("transition").get<std::vector<double>>();
        for (const json& st : params.at("states")) {
            m.params.emission.push_back(state_from_json(st));
        }
        validate_spec(m.spec);
        validate_parameters(m.params, m.spec);
        return loaded;
    } catch (const json::exception& e) {
        throw DataFormatError(path + ": malformed model file: " + e.what());
    }
}

std::string series_fingerprint(const DailySeries& series) {
    // Hash the textual form so the fingerprint is stable across platforms.
    std::ostringstream buf;
    buf << series.station << '|' << series.calendar.first_year << '|' << series.calendar.n_years
        << '|' << series.calendar.period << '|';
    char num[64];
    long n = series.n_days();
    for (long t = 0; t < n; ++t) {
        std::snprintf(num, sizeof num, "%.17g,%.17g,", series.precip[t], series.temp[t]);
        buf << num << series.flags[t].precip << series.flags[t].temp << ';';
    }
    std::uint64_t h = fnv1a64(buf.str());
    std::snprintf(num, sizeof num, "%016llx", static_cast<unsigned long long>(h));
    return num;
}

BatchWriter::BatchWriter(const std::string& path, const BatchHeader& header)
    : out_(path, std::ios::binary), header_(header), path_(path) {
    if (!out_) throw DataFormatError("cannot write " + path);
    json j;
    j["n_trajectories"] = header.n_trajectories;
    j["n_days"] = header.n_days;
    j["seed"] = header.seed;
    j["emit_states"] = header.emit_states;
    j["first_year"] = header.first_year;
    j["period"] = header.period;
    j["dryness_threshold"] = header.dryness_threshold;
    j["station"] = header.station;
    j["model_fingerprint"] = header.model_fingerprint;
    out_ << kBatchMagic << "\n" << j.dump() << "\n";
}

void BatchWriter::write(const Trajectory& traj) {
    long n = header_.n_days;
    if (static_cast<long>(traj.precip.size()) != n || static_cast<long>(traj.temp.size()) != n) {
        throw InvalidParameterError("trajectory length does not match the batch header");
    }
    out_.write(reinterpret_cast<const char*>(traj.precip.data()), n * 8);
    out_.write(reinterpret_cast<const char*>(traj.temp.data()), n * 8);
    if (header_.emit_states) {
        if (static_cast<long>(traj.state.size()) != n || static_cast<long>(traj.component.size()) != n) {
            throw InvalidParameterError("trajectory is missing state labels required by the batch header");
        }
        out_.write(reinterpret_cast<const char*>(traj.state.data()), n);
        out_.write(reinterpret_cast<const char*>(traj.component.data()), n);
    }
    if (!out_) throw DataFormatError("write failed for " + path_);
    ++n_written_;
}

void BatchWriter::close() {
    out_.close();
    if (n_written_ != header_.n_trajectories) {
        throw DataFormatError("batch " + path_ + " holds " + std::to_string(n_written_) +
                              " trajectories, header says " + std::to_string(header_.n_trajectories));
    }
}

BatchReader::BatchReader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw DataFormatError("cannot open " + path);
    std::string magic, header_line;
    if (!std::getline(in_, magic) || magic != kBatchMagic) {
        throw DataFormatError(path + ": not a trajectory batch");
    }
    if (!std::getline(in_, header_line)) throw DataFormatError(path + ": truncated batch header");
    json j;
    try {
        j = json::parse(header_line);
        header_.n_trajectories = j.at("n_trajectories").get<int>();
        header_.n_days = j.at("n_days").get<long>();
        header_.seed = j.at("seed").get<std::uint64_t>();
        header_.emit_states = j.at("emit_states").get<bool>();
        header_.first_year = j.at("first_year").get<int>();
        header_.period = j.at("period").get<int>();
        header_.dryness_threshold = j.at("dryness_threshold").get<double>();
        header_.station = j.at("station").get<std::string>();
        header_.model_fingerprint = j.at("model_fingerprint").get<std::string>();
    } catch (const json::exception& e) {
        throw DataFormatError(path + ": malformed batch header: " + e.what());
    }
    data_start_ = in_.tellg();
    record_size_ = header_.n_days * 16 + (header_.emit_states ? header_.n_days * 2 : 0);
    in_.seekg(0, std::ios::end);
    std::streamoff size = in_.tellg();
    if (size - data_start_ != record_size_ * header_.n_trajectories) {
        throw DataFormatError(path + ": batch payload size does not match the header");
    }
}

Trajectory BatchReader::read(int index) {
    if (index < 0 || index >= header_.n_trajectories) {
        throw InvalidParameterError("trajectory index out of range: " + std::to_string(index));
    }
    long n = header_.n_days;
    Trajectory traj;
    traj.precip.resize(n);
    traj.temp.resize(n);
    in_.clear();
    in_.seekg(data_start_ + record_size_ * index);
    in_.read(reinterpret_cast<char*>(traj.precip.data()), n * 8);
    in_.read(reinterpret_cast<char*>(traj.temp.data()), n * 8);
    if (header_.emit_states) {
        traj.state.resize(n);
        traj.component.resize(n);
        in_.read(reinterpret_cast<char*>(traj.state.data()), n);
        in_.read(reinterpret_cast<char*>(traj.component.data()), n);
    }
    if (!in_) throw DataFormatError(path_ + ": truncated trajectory record");
    return traj;
}

DailySeries BatchReader::read_series(int index) {
    Trajectory traj = read(index);
    Calendar cal;
    cal.first_year = header_.first_year;
    cal.period = header_.period;
    cal.n_years = static_cast<int>((header_.n_days + header_.period - 1) / header_.period);
    return trajectory_to_series(traj, cal, header_.station, header_.dryness_threshold);
}

}  // namespace swg
