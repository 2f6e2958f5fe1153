#include "agcn/runtime.hpp"

#include <cstdlib>  // defines __GLIBC__

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace agcn {

void keep_freed_memory() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 32 << 20);  // the largest glibc accepts
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  // Grow the heap in big steps so the tape's churn does not fault pages in one by one.
  mallopt(M_TOP_PAD, 1 << 28);
#endif
}

}  // namespace agcn
