#include "efr/parallel.hpp"

#include <algorithm>

namespace efr {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace efr
