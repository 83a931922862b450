#include "slicewise/timefmt.hpp"

#include <cmath>
#include <cstdio>

#include "slicewise/errors.hpp"

namespace slicewise {

std::string format_slurm_time(std::int64_t seconds) {
    if (seconds < 0) throw ValidationError("negative duration");
    const std::int64_t days = seconds / 86400;
    const std::int64_t rem = seconds % 86400;
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%lld-%02lld:%02lld:%02lld",
                  static_cast<long long>(days), static_cast<long long>(rem / 3600),
                  static_cast<long long>(rem % 3600 / 60), static_cast<long long>(rem % 60));
    return buf;
}

std::string format_sge_time(std::int64_t seconds) {
    if (seconds < 0) throw ValidationError("negative duration");
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%02lld:%02lld:%02lld",
                  static_cast<long long>(seconds / 3600),
                  static_cast<long long>(seconds % 3600 / 60),
                  static_cast<long long>(seconds % 60));
    return buf;
}

std::string format_speedup(double ratio) {
    return std::to_string(static_cast<long long>(std::floor(ratio))) + "x";
}

}  // namespace slicewise
