#include "medaudit/parallel.hpp"

#include <cstdlib>
#include <string>

namespace medaudit {

unsigned default_thread_count() {
    if (const char* env = std::getenv("MEDAUDIT_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v >= 1) return static_cast<unsigned>(v);
        } catch (...) {
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

}  // namespace medaudit
