#include "swg/data_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "swg/stats_util.hpp"

namespace swg {

void validate_station_meta(const StationMeta& meta) {
    if (!is_missing(meta.latitude) && (meta.latitude < -90.0 || meta.latitude > 90.0)) {
        throw InvalidParameterError("station latitude out of range: " + std::to_string(meta.latitude));
    }
    if (!is_missing(meta.longitude) && (meta.longitude < -180.0 || meta.longitude > 180.0)) {
        throw InvalidParameterError("station longitude out of range: " + std::to_string(meta.longitude));
    }
}

namespace {

void strip_spaces(std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) {
        s.clear();
        return;
    }
    size_t b = s.find_last_not_of(" \t\r\n");
    s = s.substr(a, b - a + 1);
}

bool parse_long(const std::string& s, long& out) {
    if (s.empty()) return false;
    size_t pos = 0;
    try {
        out = std::stol(s, &pos);
    } catch (const std::exception&) {
        return false;
    }
    return pos == s.size();
}

bool split_csv(const std::string& line, std::vector<std::string>& fields) {
    fields.clear();
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            strip_spaces(cur);
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    strip_spaces(cur);
    fields.push_back(cur);
    return fields.size() >= 2;
}

bool valid_date_fields(int year, int month, int day) {
    if (year < 1500 || year > 3000) return false;
    if (month < 1 || month > 12) return false;
    if (day < 1) return false;
    int len = kMonthLengths[month - 1];
    if (month == 2 && day == 29) return true;  // leap day, dropped later
    return day <= len;
}

}  // namespace

EcadParseResult parse_ecad(std::istream& in, EcadVariable variable, bool suspect_is_missing) {
    EcadParseResult result;
    std::string line;
    std::vector<std::string> fields;
    long line_no = 0;
    long n_rows = 0;
    bool in_data = false;
    while (std::getline(in, line)) {
        ++line_no;
        std::string trimmed = line;
        strip_spaces(trimmed);
        if (trimmed.empty()) continue;
        if (!in_data) {
            // The header ends at the column-name row (STAID, SOUID, DATE, ...).
            if (trimmed.compare(0, 5, "STAID") == 0) {
                in_data = true;
            }
            continue;
        }
        if (!split_csv(trimmed, fields) || fields.size() < 5) {
            result.diagnostics.push_back("line " + std::to_string(line_no) + ": expected 5 comma-separated fields: " + trimmed);
            continue;
        }
        long staid = 0, date = 0, raw = 0, quality = 0;
        if (!parse_long(fields[0], staid) || !parse_long(fields[2], date) ||
            !parse_long(fields[3], raw) || !parse_long(fields[4], quality)) {
            result.diagnostics.push_back("line " + std::to_string(line_no) + ": non-numeric field: " + trimmed);
            continue;
        }
        int year = static_cast<int>(date / 10000);
        int month = static_cast<int>((date / 100) % 100);
        int day = static_cast<int>(date % 100);
        if (!valid_date_fields(year, month, day)) {
            result.diagnostics.push_back("line " + std::to_string(line_no) + ": invalid date " + fields[2]);
            continue;
        }
        if (quality != 0 && quality != 1 && quality != 9) {
            result.diagnostics.push_back("line " + std::to_string(line_no) + ": unknown quality code " + fields[4]);
            continue;
        }
        if (result.station_id.empty()) result.station_id = fields[0];
        EcadRecord rec;
        rec.date = static_cast<int>(date);
        ++n_rows;
        if (quality == 9) {
            rec.value = kMissing;
            rec.flag = 'm';
            ++result.n_missing;
        } else if (quality == 1) {
            ++result.n_suspect;
            if (suspect_is_missing) {
                rec.value = kMissing;
                rec.flag = 's';
            } else {
                rec.value = 0.1 * static_cast<double>(raw);
                rec.flag = '.';
            }
        } else {
            if (variable == EcadVariable::Precip && raw < 0) {
                result.diagnostics.push_back("line " + std::to_string(line_no) +
                                             ": negative precipitation with quality 0: " + fields[3]);
                rec.value = kMissing;
                rec.flag = 'x';
            } else {
                rec.value = 0.1 * static_cast<double>(raw);
                rec.flag = '.';
            }
        }
        result.records.push_back(rec);
    }
    if (!in_data) throw DataFormatError("no STAID column-header row found; not an ECA&D daily file");
    if (n_rows == 0) throw DataFormatError("no data rows after the column header");
    return result;
}

EcadParseResult parse_ecad_file(const std::string& path, EcadVariable variable, bool suspect_is_missing) {
    std::ifstream in(path);
    if (!in) throw DataFormatError("cannot open " + path);
    return parse_ecad(in, variable, suspect_is_missing);
}

namespace {

// Index into a [first_year, last_year] 365-day series, or -1 when the date
// falls outside the range or on February 29.
long series_index(int date, int first_year, int last_year) {
    int year = date / 10000;
    int month = (date / 100) % 100;
    int day = date % 100;
    if (year < first_year || year > last_year) return -1;
    int doy = day_of_year_from_month_day(month, day);
    if (doy == 0) return -1;
    return static_cast<long>(year - first_year) * 365 + doy - 1;
}

}  // namespace

DailySeries merge_and_normalize(const EcadParseResult& precip, const EcadParseResult& temp,
                                int first_year, int last_year, double dryness_threshold,
                                const std::string& station, MergeSummary* summary) {
    if (last_year < first_year) throw InvalidParameterError("empty year range");
    if (!(dryness_threshold >= 0.0)) throw InvalidParameterError("dryness threshold must be >= 0");
    DailySeries series;
    series.station = station;
    series.calendar.first_year = first_year;
    series.calendar.n_years = last_year - first_year + 1;
    series.dryness_threshold = dryness_threshold;
    long n = series.calendar.n_days();
    series.precip.assign(n, kMissing);
    series.temp.assign(n, kMissing);
    series.flags.resize(n);
    for (long t = 0; t < n; ++t) {
        series.flags[t].precip = 'm';
        series.flags[t].temp = 'm';
    }
    for (const EcadRecord& rec : precip.records) {
        long idx = series_index(rec.date, first_year, last_year);
        if (idx < 0) continue;
        series.precip[idx] = rec.value;
        series.flags[idx].precip = is_missing(rec.value) ? rec.flag : '.';
    }
    for (const EcadRecord& rec : temp.records) {
        long idx = series_index(rec.date, first_year, last_year);
        if (idx < 0) continue;
        series.temp[idx] = rec.value;
        series.flags[idx].temp = is_missing(rec.value) ? rec.flag : '.';
    }
    MergeSummary local;
    local.n_days = n;
    bool any = false;
    for (long t = 0; t < n; ++t) {
        if (is_missing(series.precip[t])) {
            ++local.precip_missing;
        } else {
            any = true;
            if (series.precip[t] < dryness_threshold && series.precip[t] != 0.0) {
                series.precip[t] = 0.0;
                ++local.thresholded;
            }
        }
        if (is_missing(series.temp[t])) {
            ++local.temp_missing;
        } else {
            any = true;
        }
    }
    if (!any) {
        throw DataFormatError("no observations in " + std::to_string(first_year) + "-" + std::to_string(last_year));
    }
    if (summary != nullptr) *summary = local;
    return series;
}

SummaryStats summary_stats(const DailySeries& series) {
    SummaryStats out;
    long n = series.n_days();
    out.n_days = n;
    const Calendar& cal = series.calendar;
    // Yearly totals over years with at least 90% precipitation coverage.
    std::vector<double> yearly;
    for (int y = 0; y < cal.n_years; ++y) {
        long lo = static_cast<long>(y) * cal.period;
        long hi = std::min(n, lo + cal.period);
        if (hi - lo < cal.period) break;
        double total = 0.0;
        long seen = 0;
        for (long t = lo; t < hi; ++t) {
            if (is_missing(series.precip[t])) continue;
            total += series.precip[t];
            ++seen;
        }
        if (seen >= static_cast<long>(0.9 * cal.period)) yearly.push_back(total);
    }
    if (!yearly.empty()) {
        double s = 0.0;
        for (double v : yearly) s += v;
        out.mean_yearly_precip = s / static_cast<double>(yearly.size());
    }
    double maxp = kMissing;
    long wet = 0, dry = 0;
    double wet_sum = 0.0;
    std::vector<double> season_temp[4];
    for (long t = 0; t < n; ++t) {
        double p = series.precip[t];
        if (is_missing(p)) {
            ++out.precip_missing;
        } else {
            if (is_missing(maxp) || p > maxp) maxp = p;
            if (p > 0.0) {
                ++wet;
                wet_sum += p;
            } else {
                ++dry;
            }
        }
        double x = series.temp[t];
        if (is_missing(x)) {
            ++out.temp_missing;
        } else {
            int month = month_of_day_of_year(cal.day_of_year(t + 1));
            int season = month == 12 ? 0 : month / 3;  // 12,1,2 -> 0; 3,4,5 -> 1; ...
            season_temp[season].push_back(x);
        }
    }
    out.max_daily_precip = maxp;
    if (wet + dry > 0) out.precip_frequency = static_cast<double>(wet) / static_cast<double>(wet + dry);
    if (wet > 0) out.mean_positive_precip = wet_sum / static_cast<double>(wet);
    for (int s = 0; s < 4; ++s) {
        if (season_temp[s].size() < 2) continue;
        Moments m = moments(season_temp[s]);
        out.temp_mean[s] = m.mean;
        out.temp_sd[s] = m.sd;
    }
    return out;
}

int date_of_day(const Calendar& cal, long t) {  // t is 1-based
    int doy = cal.day_of_year(t);
    int month = month_of_day_of_year(doy);
    int day = doy;
    for (int m = 1; m < month; ++m) day -= kMonthLengths[m - 1];
    return cal.year_of(t) * 10000 + month * 100 + day;
}

namespace {

std::string format_value(double v) {
    if (is_missing(v)) return "NA";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace

void write_series_file(const DailySeries& series, const std::string& path,
                       const std::vector<std::string>& extra_header) {
    std::ofstream out(path);
    if (!out) throw DataFormatError("cannot write " + path);
    out << "# swg-series v1\n";
    for (const std::string& line : extra_header) out << "# " << line << "\n";
    out << "# station=" << series.station << "\n";
    out << "# first_year=" << series.calendar.first_year << "\n";
    out << "# n_years=" << series.calendar.n_years << "\n";
    out << "# period=" << series.calendar.period << "\n";
    char thr[40];
    std::snprintf(thr, sizeof thr, "%.10g", series.dryness_threshold);
    out << "# dryness_threshold=" << thr << "\n";
    out << "# columns=date\tprecip_mm\ttemp_c\tflags\n";
    long n = series.n_days();
    for (long t = 0; t < n; ++t) {
        out << date_of_day(series.calendar, t + 1) << '\t' << format_value(series.precip[t]) << '\t'
            << format_value(series.temp[t]) << '\t' << series.flags[t].precip << series.flags[t].temp << '\n';
    }
    if (!out) throw DataFormatError("write failed for " + path);
}

namespace {

bool header_field(const std::string& line, const char* key, std::string& value) {
    std::string prefix = std::string("# ") + key + "=";
    if (line.compare(0, prefix.size(), prefix) != 0) return false;
    value = line.substr(prefix.size());
    strip_spaces(value);
    return true;
}

double parse_value(const std::string& s, const std::string& path, long line_no) {
    if (s == "NA") return kMissing;
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataFormatError(path + ": line " + std::to_string(line_no) + ": bad value " + s);
    }
}

}  // namespace

DailySeries read_series_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataFormatError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line.compare(0, 14, "# swg-series v") != 0) {
        throw DataFormatError(path + ": missing swg-series header");
    }
    if (line != "# swg-series v1") throw DataFormatError(path + ": unsupported series version: " + line);
    DailySeries series;
    long line_no = 1;
    std::string value;
    std::vector<double> precip, temp;
    std::vector<DayFlags> flags;
    int expected_doy = 1;
    int expected_year = 0;
    bool have_first = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (header_field(line, "station", value)) series.station = value;
            else if (header_field(line, "first_year", value)) series.calendar.first_year = std::stoi(value);
            else if (header_field(line, "n_years", value)) series.calendar.n_years = std::stoi(value);
            else if (header_field(line, "period", value)) series.calendar.period = std::stoi(value);
            else if (header_field(line, "dryness_threshold", value)) series.dryness_threshold = std::stod(value);
            continue;
        }
        std::istringstream row(line);
        std::string date_s, precip_s, temp_s, flag_s;
        if (!std::getline(row, date_s, '\t') || !std::getline(row, precip_s, '\t') ||
            !std::getline(row, temp_s, '\t') || !std::getline(row, flag_s)) {
            throw DataFormatError(path + ": line " + std::to_string(line_no) + ": expected 4 tab-separated columns");
        }
        long date = 0;
        if (!parse_long(date_s, date)) {
            throw DataFormatError(path + ": line " + std::to_string(line_no) + ": bad date " + date_s);
        }
        int year = static_cast<int>(date / 10000);
        int doy = day_of_year_from_month_day(static_cast<int>((date / 100) % 100), static_cast<int>(date % 100));
        if (doy == 0) throw DataFormatError(path + ": line " + std::to_string(line_no) + ": bad date " + date_s);
        if (!have_first) {
            if (doy != 1) throw DataFormatError(path + ": series must start on January 1");
            expected_year = year;
            have_first = true;
        }
        if (year != expected_year || doy != expected_doy) {
            throw DataFormatError(path + ": line " + std::to_string(line_no) + ": dates out of order or gapped at " + date_s);
        }
        ++expected_doy;
        if (expected_doy > 365) {
            expected_doy = 1;
            ++expected_year;
        }
        strip_spaces(flag_s);
        if (flag_s.size() != 2) {
            throw DataFormatError(path + ": line " + std::to_string(line_no) + ": flags must be 2 characters");
        }
        precip.push_back(parse_value(precip_s, path, line_no));
        temp.push_back(parse_value(temp_s, path, line_no));
        DayFlags f;
        f.precip = flag_s[0];
        f.temp = flag_s[1];
        flags.push_back(f);
    }
    if (precip.empty()) throw DataFormatError(path + ": no data rows");
    series.precip = std::move(precip);
    series.temp = std::move(temp);
    series.flags = std::move(flags);
    if (series.calendar.n_years <= 0) {
        series.calendar.n_years = static_cast<int>((series.n_days() + 364) / 365);
    }
    return series;
}

}  // namespace swg
