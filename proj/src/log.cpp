#include "emix/log.hpp"

#include <cstdlib>
#include <cstring>

namespace emix {

int log_level() {
    static int level = [] {
        const char* v = std::getenv("EMIX_LOG");
        if (!v || !*v) return 0;
        if (!std::strcmp(v, "debug") || !std::strcmp(v, "2")) return 2;
        if (!std::strcmp(v, "info") || !std::strcmp(v, "1")) return 1;
        return 0;
    }();
    return level;
}

}  // namespace emix
