#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace slicewise {

// One observed (data volume, RAM, runtime) point for a processed slice.
struct ResourceSample {
    double data_mb = 0.0;
    double mem_mb = 0.0;
    double time_s = 0.0;
};

// Linear predictors of memory and runtime as functions of per-slice data volume.
// safety_factor is multiplicative headroom applied at estimation time.
struct ResourceModel {
    double mem_slope = 0.0;      // MB per MB
    double mem_intercept = 0.0;  // MB
    double time_slope = 0.0;     // s per MB
    double time_intercept = 0.0; // s
    double safety_factor = 1.2;
    bool calibrated = false;
};

struct ResourceEstimate {
    std::int64_t mem_mb = 1;
    std::int64_t time_s = 1;
};

// Ordinary least squares per response variable. Requires at least two samples
// with two distinct data_mb values; rejects non-finite inputs.
ResourceModel calibrate(const std::vector<ResourceSample>& samples, double safety_factor = 1.2);

// ceil(safety_factor * max(1, slope * data_mb + intercept)) for each response.
ResourceEstimate estimate(const ResourceModel& model, double data_mb);

// serial_s / parallel_s. Both inputs must be positive.
double speedup(double serial_s, double parallel_s);

// CSV with header "data_mb,mem_mb,time_s", one sample per row.
std::vector<ResourceSample> load_samples_csv(const std::filesystem::path& path);

ResourceModel load_model(const std::filesystem::path& path);
void save_model(const ResourceModel& model, const std::filesystem::path& path);

}  // namespace slicewise
