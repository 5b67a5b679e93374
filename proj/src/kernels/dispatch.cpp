#include "fieldslab/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace fieldslab::kernels {

namespace {

const KernelTable* pick_default() {
    const char* env = std::getenv("FIELDSLAB_SIMD");
    if (env && std::strcmp(env, "scalar") == 0) return &scalar_table();
    if (const KernelTable* t = avx2_table()) return t;
    return &scalar_table();
}

std::atomic<const KernelTable*>& slot() {
    static std::atomic<const KernelTable*> s{pick_default()};
    return s;
}

}  // namespace

const KernelTable& active() { return *slot().load(std::memory_order_relaxed); }

void select(Isa isa) {
    const KernelTable* t = &scalar_table();
    if (isa == Isa::avx2)
        if (const KernelTable* a = avx2_table()) t = a;
    slot().store(t, std::memory_order_relaxed);
}

void select_default() { slot().store(pick_default(), std::memory_order_relaxed); }

}  // namespace fieldslab::kernels
