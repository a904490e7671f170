#include "melroi/kernels/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace melroi::kernels {

#if defined(__x86_64__) || defined(__i386__)
const KernelTable* avx2_table_impl();
#endif

const KernelTable* avx2_kernels() {
#if defined(__x86_64__) || defined(__i386__)
    if (__builtin_cpu_supports("avx2")) return avx2_table_impl();
#endif
    return nullptr;
}

namespace {

const KernelTable* pick_default() {
    if (const char* env = std::getenv("MELROI_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) return &scalar_kernels();
        if (std::strcmp(env, "avx2") == 0) {
            if (const KernelTable* t = avx2_kernels()) return t;
            return &scalar_kernels();
        }
    }
    if (const KernelTable* t = avx2_kernels()) return t;
    return &scalar_kernels();
}

std::atomic<const KernelTable*> g_override{nullptr};

} // namespace

const KernelTable& active_kernels() {
    if (const KernelTable* t = g_override.load(std::memory_order_acquire)) return *t;
    static const KernelTable* selected = pick_default();
    return *selected;
}

void set_active_kernels(const KernelTable* table) {
    g_override.store(table, std::memory_order_release);
}

} // namespace melroi::kernels
