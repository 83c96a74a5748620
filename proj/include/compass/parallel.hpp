#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace compass {

// Non-positive requests mean "all available threads".
inline int resolve_workers(int requested) {
    if (requested > 0) return requested;
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace compass
