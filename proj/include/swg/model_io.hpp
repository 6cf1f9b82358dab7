#pragma once

#include <cstdint>
#include <fstream>
#include <string>

#include "swg/inference.hpp"
#include "swg/simulate.hpp"

namespace swg {

// Versioned JSON model file: spec, parameters, fit diagnostics, and the
// fingerprint of the training series. Doubles survive a round trip exactly.
void save_model(const FittedModel& model, const std::string& path,
                const std::string& data_fingerprint, std::uint64_t seed);

struct LoadedModel {
    FittedModel model;
    std::string data_fingerprint;
    std::uint64_t seed = 0;
};
LoadedModel load_model(const std::string& path);

// Hash of a series' content (values and flags), used to tie model files and
// trajectory batches back to their inputs.
std::string series_fingerprint(const DailySeries& series);

// Trajectory batch: a two-line text header (magic, then one JSON line) and
// fixed-size little-endian records, so single trajectories can be read
// without loading the batch.
struct BatchHeader {
    int n_trajectories = 0;
    long n_days = 0;
    std::uint64_t seed = 0;
    bool emit_states = false;
    int first_year = 0;
    int period = 365;
    double dryness_threshold = 0.0;
    std::string station;
    std::string model_fingerprint;
};

class BatchWriter {
  public:
    BatchWriter(const std::string& path, const BatchHeader& header);
    void write(const Trajectory& traj);
    // Throws if the number written differs from the header.
    void close();

  private:
    std::ofstream out_;
    BatchHeader header_;
    std::string path_;
    int n_written_ = 0;
};

class BatchReader {
  public:
    explicit BatchReader(const std::string& path);
    const BatchHeader& header() const { return header_; }
    Trajectory read(int index);
    // Trajectory as a series on the batch calendar, dryness threshold applied.
    DailySeries read_series(int index);

  private:
    std::ifstream in_;
    BatchHeader header_;
    std::string path_;
    std::streamoff data_start_ = 0;
    std::streamoff record_size_ = 0;
};

}  // namespace swg
