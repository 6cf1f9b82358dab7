#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "swg/common.hpp"
#include "swg/series.hpp"

namespace swg {

struct StationMeta {
    std::string id;
    std::string name;
    double latitude = kMissing;
    double longitude = kMissing;
};

// Throws InvalidParameterError when coordinates are present but out of range.
void validate_station_meta(const StationMeta& meta);

enum class EcadVariable { Precip, Temp };  // RR and TG files

// One parsed data row. value is in mm or degrees C (the file's 0.1 units
// already scaled); missing values are NaN.
struct EcadRecord {
    int date = 0;  // YYYYMMDD
    double value = kMissing;
    char flag = '.';  // '.', 'm' (missing), 's' (suspect), 'x' (rejected)
};

struct EcadParseResult {
    std::string station_id;
    std::vector<EcadRecord> records;
    // Malformed or rejected rows, one message each; never silently dropped.
    std::vector<std::string> diagnostics;
    long n_missing = 0;
    long n_suspect = 0;
};

// Parses an ECA&D blended daily file: free-text header, then comma-separated
// rows STAID, SOUID, DATE, value, Q with Q in {0 valid, 1 suspect, 9
// missing}. Suspect rows count as missing unless suspect_is_missing is
// false. Negative precipitation with Q=0 is rejected to the diagnostics.
// Throws DataFormatError when no data rows are found.
EcadParseResult parse_ecad(std::istream& in, EcadVariable variable,
                           bool suspect_is_missing = true);
EcadParseResult parse_ecad_file(const std::string& path, EcadVariable variable,
                                bool suspect_is_missing = true);

struct MergeSummary {
    long n_days = 0;
    long precip_missing = 0;
    long temp_missing = 0;
    long thresholded = 0;  // wet values pushed to zero by the dryness threshold
};

// Outer join of the two record sets onto the gap-free 365-day calendar of
// [first_year, last_year]: every day of the range is present, missing where
// a variable has no valid record, and February 29 is dropped. Precipitation
// below the dryness threshold becomes exactly zero. Throws DataFormatError
// when the range ends up with no data at all.
DailySeries merge_and_normalize(const EcadParseResult& precip, const EcadParseResult& temp,
                                int first_year, int last_year, double dryness_threshold,
                                const std::string& station, MergeSummary* summary = nullptr);

// Basic climate summary of a series.
struct SummaryStats {
    double mean_yearly_precip = kMissing;  // over years with >= 90% coverage
    double max_daily_precip = kMissing;
    double precip_frequency = kMissing;    // wet fraction of non-missing days
    double mean_positive_precip = kMissing;
    // Season order: winter (Dec-Feb), spring, summer, autumn.
    double temp_mean[4] = {kMissing, kMissing, kMissing, kMissing};
    double temp_sd[4] = {kMissing, kMissing, kMissing, kMissing};
    long n_days = 0;
    long precip_missing = 0;
    long temp_missing = 0;
};
SummaryStats summary_stats(const DailySeries& series);

// The internal series format: a commented header (station, calendar,
// threshold) followed by tab-separated rows date, precip, temp, flags with
// NA for missing values. extra_header lines ("key=value") are carried in the
// header; readers ignore keys they do not know.
void write_series_file(const DailySeries& series, const std::string& path,
                       const std::vector<std::string>& extra_header = {});
DailySeries read_series_file(const std::string& path);

// YYYYMMDD composition on the 365-day calendar.
int date_of_day(const Calendar& cal, long t);

}  // namespace swg
