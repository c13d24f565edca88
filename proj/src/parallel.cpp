#include "parallel.hpp"

#include <charconv>
#include <cstdlib>
#include <cstring>

namespace msd::detail {

unsigned thread_count() {
    if (const char* env = std::getenv("MSD_THREADS")) {
        unsigned value = 0;
        const char* end = env + std::strlen(env);
        auto [ptr, ec] = std::from_chars(env, end, value);
        if (ec == std::errc{} && ptr == end && value > 0) return value;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace msd::detail
