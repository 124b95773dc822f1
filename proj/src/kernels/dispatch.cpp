#include "slope/kernels.hpp"

#include <stdexcept>

namespace slope::kernels {
namespace {

Backend detect() { return cpu_has_avx2() ? Backend::avx2 : Backend::scalar; }

Backend& current() {
    static Backend b = detect();
    return b;
}

}  // namespace

bool cpu_has_avx2() {
#if (defined(__x86_64__) || defined(__i386__)) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend active_backend() { return current(); }

std::string_view backend_name() { return current() == Backend::avx2 ? "avx2" : "scalar"; }

void force_backend(Backend b) {
    if (b == Backend::avx2 && !cpu_has_avx2()) {
        throw std::runtime_error("avx2 backend not supported on this cpu");
    }
    current() = b;
}

const Ops& active() { return current() == Backend::avx2 ? avx2_ops() : scalar_ops(); }

}  // namespace slope::kernels
