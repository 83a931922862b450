#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace slicewise {

// A GPU model as the planner sees it: how long one logical device takes for a
// whole subject and how many logical devices one physical board provides
// (a K80 board counts as two logical devices).
struct GpuDeviceClass {
    std::string model;
    double subject_time_s = 0.0;
    int logical_split = 1;
};

struct GpuInventoryEntry {
    GpuDeviceClass device;
    int board_count = 0;
};

struct GpuInventory {
    std::vector<GpuInventoryEntry> entries;
};

// Half-open slice index range [begin, end).
struct SliceRange {
    int begin = 0;
    int end = 0;
};

// Total logical devices: sum of board_count * logical_split.
int logical_devices(const GpuInventory& inv);

// Partition [0, slice_count) into `groups` contiguous ranges whose sizes
// differ by at most one, larger ranges first. Throws if groups > slice_count.
std::vector<SliceRange> split_slices(int slice_count, int groups);

// Chunk-granularity runtime model: the subject finishes when the largest group
// does, each group running its slices serially on one device.
// groups == 1 returns subject_time_s + fixed_overhead_s exactly.
double gpu_subject_time(const GpuDeviceClass& device, int slice_count, int groups,
                        double fixed_overhead_s = 0.0);

// JSON: {"entries": [{"model", "subject_time_s", "logical_split", "board_count"}]}
GpuInventory load_gpu_inventory(const std::filesystem::path& path);

}  // namespace slicewise
