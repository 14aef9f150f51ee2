#pragma once

namespace unicam {

// Thread count for the OpenMP kernels. Results do not depend on it.
void set_num_threads(int threads);
int num_threads();

}  // namespace unicam
