// Compiled on its own: the reconstruction header must not pull in the pool.
#include "picdna/reconstruct.hpp"

#ifdef PICDNA_POOL_HPP
#error "reconstruct.hpp must not depend on pool.hpp"
#endif

namespace picdna::honesty {
int reconstruct_only_translation_unit() { return 0; }
}  // namespace picdna::honesty
