#include <atomic>
#include <cstdlib>
#include <string>

#include "hcc/errors.hpp"
#include "hcc/kernels.hpp"

namespace hcc::kernels {

#ifndef HCC_HAVE_AVX2
const KernelSet* avx2_set() noexcept { return nullptr; }
#endif

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
  }
  return "unknown";
}

bool cpu_supports(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2:
#if defined(HCC_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

std::vector<Isa> available() {
  std::vector<Isa> out{Isa::scalar};
  if (avx2_set() != nullptr && cpu_supports(Isa::avx2)) out.push_back(Isa::avx2);
  return out;
}

namespace {

const KernelSet* initial_choice() noexcept {
  if (const char* env = std::getenv("HCC_KERNELS"); env != nullptr && std::string(env) == "scalar") {
    return &scalar_set();
  }
  if (avx2_set() != nullptr && cpu_supports(Isa::avx2)) return avx2_set();
  return &scalar_set();
}

std::atomic<const KernelSet*>& current() noexcept {
  static std::atomic<const KernelSet*> table{initial_choice()};
  return table;
}

}  // namespace

const KernelSet& active() noexcept { return *current().load(std::memory_order_relaxed); }

void select(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      current().store(&scalar_set());
      return;
    case Isa::avx2:
      if (avx2_set() == nullptr || !cpu_supports(Isa::avx2)) {
        throw ArgumentError("avx2 kernels are not available on this machine");
      }
      current().store(avx2_set());
      return;
  }
}

}  // namespace hcc::kernels
