#include "unicam/parallel.hpp"

#include <omp.h>

#include "unicam/errors.hpp"

namespace unicam {

void set_num_threads(int threads) {
  if (threads < 1) throw ContractError("thread count must be >= 1");
  omp_set_num_threads(threads);
}

int num_threads() { return omp_get_max_threads(); }

}  // namespace unicam
