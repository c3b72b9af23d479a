// Minimal stderr logging gated by the EMIX_LOG environment variable
// (unset/0 = quiet, "info"/1, "debug"/2).
#pragma once

#include <cstdio>

namespace emix {

int log_level();  // cached after first call

#define EMIX_LOG_AT(lvl, ...)                      \
    do {                                           \
        if (::emix::log_level() >= (lvl)) {        \
            std::fprintf(stderr, "emix: ");        \
            std::fprintf(stderr, __VA_ARGS__);     \
            std::fprintf(stderr, "\n");            \
        }                                          \
    } while (0)

#define EMIX_INFO(...) EMIX_LOG_AT(1, __VA_ARGS__)
#define EMIX_DEBUG(...) EMIX_LOG_AT(2, __VA_ARGS__)

}  // namespace emix
