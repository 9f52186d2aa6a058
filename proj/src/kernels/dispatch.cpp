#include <cstdlib>
#include <cstring>

#include "actmon/kernels.hpp"

namespace actmon::kern {

bool avx2_supported() {
#if defined(__x86_64__) || defined(__i386__)
    return avx2_ops() != nullptr && __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

namespace {

const Ops& select() {
    const char* want = std::getenv("ACTMON_KERNELS");
    if (want != nullptr && std::strcmp(want, "scalar") == 0) return scalar_ops();
    if (want != nullptr && std::strcmp(want, "avx2") == 0) {
        return avx2_supported() ? *avx2_ops() : scalar_ops();
    }
    // auto / unset
    return avx2_supported() ? *avx2_ops() : scalar_ops();
}

}  // namespace

const Ops& active() {
    static const Ops& ops = select();
    return ops;
}

std::vector<const Ops*> all_backends() {
    std::vector<const Ops*> out{&scalar_ops()};
    if (avx2_supported()) out.push_back(avx2_ops());
    return out;
}

}  // namespace actmon::kern
