#include "slicewise/gpuplan.hpp"

#include <fstream>

#include "json.hpp"
#include "slicewise/errors.hpp"

namespace slicewise {

int logical_devices(const GpuInventory& inv) {
    int total = 0;
    for (const auto& entry : inv.entries) {
        if (entry.board_count < 0) throw ValidationError("board_count must be >= 0");
        if (entry.device.logical_split < 1) throw ValidationError("logical_split must be >= 1");
        total += entry.board_count * entry.device.logical_split;
    }
    return total;
}

std::vector<SliceRange> split_slices(int slice_count, int groups) {
    if (slice_count < 1) throw ValidationError("slice_count must be >= 1");
    if (groups < 1) throw ValidationError("groups must be >= 1");
    if (groups > slice_count)
        throw ValidationError("groups (" + std::to_string(groups) + ") exceeds slice count (" +
                              std::to_string(slice_count) + ")");
    const int base = slice_count / groups;
    const int remainder = slice_count % groups;
    std::vector<SliceRange> ranges;
    ranges.reserve(groups);
    int cursor = 0;
    for (int g = 0; g < groups; ++g) {
        const int size = base + (g < remainder ? 1 : 0);
        ranges.push_back({cursor, cursor + size});
        cursor += size;
    }
    return ranges;
}

double gpu_subject_time(const GpuDeviceClass& device, int slice_count, int groups,
                        double fixed_overhead_s) {
    if (device.subject_time_s <= 0.0) throw ValidationError("subject_time_s must be > 0");
    if (slice_count < 1) throw ValidationError("slice_count must be >= 1");
    if (groups < 1 || groups > slice_count)
        throw ValidationError("groups must be in [1, slice_count]");
    if (fixed_overhead_s < 0.0) throw ValidationError("fixed_overhead_s must be >= 0");
    if (groups == 1) return device.subject_time_s + fixed_overhead_s;
    const int max_group = (slice_count + groups - 1) / groups;
    return max_group * (device.subject_time_s / slice_count) + fixed_overhead_s;
}

GpuInventory load_gpu_inventory(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open GPU inventory file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("malformed GPU inventory " + path.string() + ": " + e.what());
    }
    GpuInventory inv;
    try {
        for (const auto& e : j.at("entries")) {
            GpuInventoryEntry entry;
            entry.device.model = e.at("model").get<std::string>();
            entry.device.subject_time_s = e.at("subject_time_s").get<double>();
            entry.device.logical_split = e.at("logical_split").get<int>();
            entry.board_count = e.at("board_count").get<int>();
            if (entry.device.subject_time_s <= 0.0)
                throw ValidationError("subject_time_s must be > 0 for " + entry.device.model);
            if (entry.device.logical_split < 1)
                throw ValidationError("logical_split must be >= 1 for " + entry.device.model);
            if (entry.board_count < 0)
                throw ValidationError("board_count must be >= 0 for " + entry.device.model);
            inv.entries.push_back(std::move(entry));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("GPU inventory " + path.string() + ": " + e.what());
    }
    return inv;
}

}  // namespace slicewise
