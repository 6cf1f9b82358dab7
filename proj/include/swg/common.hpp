#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace swg {

// Missing observations are carried as quiet NaN throughout.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double x) { return std::isnan(x); }

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad hyper-parameters or parameter vectors (wrong shape, invalid value).
struct InvalidParameterError : Error {
    using Error::Error;
};

// An observation violating its domain (negative precipitation).
struct InvalidObservationError : Error {
    using Error::Error;
};

// Unreadable or malformed input data.
struct DataFormatError : Error {
    using Error::Error;
};

// Some day is impossible under every hidden state.
struct DegenerateLikelihoodError : Error {
    DegenerateLikelihoodError(const std::string& msg, long day_index)
        : Error(msg), day(day_index) {}
    long day;
};

// Every EM restart failed.
struct FitFailureError : Error {
    using Error::Error;
};

// User-facing configuration problem (CLI exit code 2).
struct ConfigError : Error {
    using Error::Error;
};

// Dense row-major matrix of doubles. Small helper, not a linear algebra
// library; K stays in single digits everywhere in this project.
class Matrix {
  public:
    Matrix() = default;
    Matrix(long rows, long cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {}

    double& operator()(long i, long j) { return data_[static_cast<size_t>(i) * cols_ + j]; }
    double operator()(long i, long j) const { return data_[static_cast<size_t>(i) * cols_ + j]; }

    long rows() const { return rows_; }
    long cols() const { return cols_; }
    double* row_ptr(long i) { return data_.data() + static_cast<size_t>(i) * cols_; }
    const double* row_ptr(long i) const { return data_.data() + static_cast<size_t>(i) * cols_; }
    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

  private:
    long rows_ = 0;
    long cols_ = 0;
    std::vector<double> data_;
};

// Execution policy for the data-parallel kernels. `parallel = false` selects
// the serial reference path; results are identical either way.
struct ExecPolicy {
    bool parallel = true;
};

// FNV-1a, used to stamp outputs with a short content fingerprint.
inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace swg
