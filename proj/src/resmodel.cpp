#include "slicewise/resmodel.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "slicewise/errors.hpp"

namespace slicewise {

namespace {

// Slope/intercept of the least-squares line through (x, y).
std::pair<double, double> ols(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mean_x += x[i];
        mean_y += y[i];
    }
    mean_x /= n;
    mean_y /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mean_x) * (x[i] - mean_x);
        sxy += (x[i] - mean_x) * (y[i] - mean_y);
    }
    const double slope = sxy / sxx;
    return {slope, mean_y - slope * mean_x};
}

std::int64_t padded_ceiling(double prediction, double safety) {
    return static_cast<std::int64_t>(std::ceil(safety * std::max(1.0, prediction)));
}

}  // namespace

ResourceModel calibrate(const std::vector<ResourceSample>& samples, double safety_factor) {
    if (safety_factor < 1.0) throw ValidationError("safety_factor must be >= 1");
    std::vector<double> x, mem, time;
    std::set<double> distinct;
    for (const auto& s : samples) {
        if (!std::isfinite(s.data_mb) || !std::isfinite(s.mem_mb) || !std::isfinite(s.time_s))
            throw ValidationError("non-finite calibration sample");
        x.push_back(s.data_mb);
        mem.push_back(s.mem_mb);
        time.push_back(s.time_s);
        distinct.insert(s.data_mb);
    }
    if (samples.size() < 2 || distinct.size() < 2)
        throw ValidationError("calibration needs at least 2 samples with 2 distinct data_mb values");

    ResourceModel model;
    std::tie(model.mem_slope, model.mem_intercept) = ols(x, mem);
    std::tie(model.time_slope, model.time_intercept) = ols(x, time);
    model.safety_factor = safety_factor;
    model.calibrated = true;
    return model;
}

ResourceEstimate estimate(const ResourceModel& model, double data_mb) {
    if (!model.calibrated) throw ValidationError("resource model is not calibrated");
    ResourceEstimate e;
    e.mem_mb = padded_ceiling(model.mem_slope * data_mb + model.mem_intercept, model.safety_factor);
    e.time_s = padded_ceiling(model.time_slope * data_mb + model.time_intercept, model.safety_factor);
    return e;
}

double speedup(double serial_s, double parallel_s) {
    if (serial_s <= 0.0 || parallel_s <= 0.0)
        throw ValidationError("speedup requires positive durations");
    return serial_s / parallel_s;
}

std::vector<ResourceSample> load_samples_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open samples file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("empty samples file: " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "data_mb,mem_mb,time_s")
        throw ValidationError("samples CSV must start with header 'data_mb,mem_mb,time_s', got '" +
                              line + "'");
    std::vector<ResourceSample> samples;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream fields(line);
        ResourceSample s;
        char c1 = 0, c2 = 0;
        if (!(fields >> s.data_mb >> c1 >> s.mem_mb >> c2 >> s.time_s) || c1 != ',' || c2 != ',' ||
            !(fields >> std::ws).eof())
            throw ValidationError("malformed sample on line " + std::to_string(row) + ": '" +
                                  line + "'");
        samples.push_back(s);
    }
    return samples;
}

ResourceModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open model file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("malformed model file " + path.string() + ": " + e.what());
    }
    ResourceModel m;
    try {
        m.mem_slope = j.at("mem_slope").get<double>();
        m.mem_intercept = j.at("mem_intercept").get<double>();
        m.time_slope = j.at("time_slope").get<double>();
        m.time_intercept = j.at("time_intercept").get<double>();
        m.safety_factor = j.at("safety_factor").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("model file " + path.string() + ": " + e.what());
    }
    if (m.safety_factor < 1.0)
        throw ValidationError("model file " + path.string() + ": safety_factor must be >= 1");
    m.calibrated = true;
    return m;
}

void save_model(const ResourceModel& model, const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["mem_slope"] = model.mem_slope;
    j["mem_intercept"] = model.mem_intercept;
    j["time_slope"] = model.time_slope;
    j["time_intercept"] = model.time_intercept;
    j["safety_factor"] = model.safety_factor;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write model file: " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace slicewise
