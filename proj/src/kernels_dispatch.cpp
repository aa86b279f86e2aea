#include "clarity/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace clarity::kern {

namespace {

const Table& select() {
    const char* want = std::getenv("CLARITY_KERNELS");
    if (want && *want) {
        const std::string w(want);
        if (w == "scalar") return scalar_table();
        if (w == "avx2") {
            const Table* t = avx2_table();
            if (!t) throw std::runtime_error("CLARITY_KERNELS=avx2 but this CPU has no AVX2");
            return *t;
        }
        if (w != "auto") throw std::runtime_error("CLARITY_KERNELS: unknown value '" + w + "'");
    }
    if (const Table* t = avx2_table()) return *t;
    return scalar_table();
}

}  // namespace

const Table& active() {
    static const Table& t = select();
    return t;
}

std::string active_name() { return active().name; }

}  // namespace clarity::kern
