#include "ks1d/kernels.hpp"

#include <atomic>
#include <cstdlib>

namespace ks::kern {
namespace {

std::atomic<bool>& force_scalar_flag() {
    static std::atomic<bool> flag = [] {
        const char* env = std::getenv("KS1D_FORCE_SCALAR");
        return env != nullptr && env[0] == '1';
    }();
    return flag;
}

}  // namespace

void set_force_scalar(bool force) { force_scalar_flag().store(force); }

const KernelSet& active() {
    if (!force_scalar_flag().load() && avx2_available()) return avx2();
    return scalar();
}

}  // namespace ks::kern
