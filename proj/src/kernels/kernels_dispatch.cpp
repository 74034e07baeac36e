#include "liveeval/kernels.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace liveeval::kernels {

const Ops& select_ops(const char* forced) {
    if (forced != nullptr && *forced != '\0') {
        if (std::strcmp(forced, "scalar") == 0) return scalar_ops();
        if (std::strcmp(forced, "avx2") == 0) {
            if (const Ops* o = avx2_ops_or_null()) return *o;
            std::fprintf(stderr,
                         "liveeval: LIVEEVAL_KERNELS=avx2 not available here, "
                         "using scalar kernels\n");
            return scalar_ops();
        }
        if (std::strcmp(forced, "neon") == 0) {
            if (const Ops* o = neon_ops_or_null()) return *o;
            std::fprintf(stderr,
                         "liveeval: LIVEEVAL_KERNELS=neon not available here, "
                         "using scalar kernels\n");
            return scalar_ops();
        }
        std::fprintf(stderr,
                     "liveeval: unknown LIVEEVAL_KERNELS value '%s', using the "
                     "runtime default\n",
                     forced);
    }
    if (const Ops* o = avx2_ops_or_null()) return *o;
    if (const Ops* o = neon_ops_or_null()) return *o;
    return scalar_ops();
}

const Ops& active_ops() {
    static const Ops& chosen = select_ops(std::getenv("LIVEEVAL_KERNELS"));
    return chosen;
}

}  // namespace liveeval::kernels
