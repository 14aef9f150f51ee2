#pragma once

// Definitional reference implementations. Deliberately slow and written
// without any code from the library so that agreement means something.

#include <cstddef>
#include <functional>
#include <vector>

#include "unicam/tensor.hpp"

namespace oracle {

using Mat = std::vector<std::vector<double>>;
using Samples = std::vector<std::vector<double>>;

Samples samples_of(const unicam::Tensor& t);
Mat mat_of(std::span<const double> values, std::size_t n);

Mat brute_pairwise(const Samples& x, double eps = 0.0);
Mat brute_double_center(const Mat& a);
Mat brute_ucenter(const Mat& a);

double brute_dcov2(const Samples& x, const Samples& y);
double brute_dvar2(const Samples& x);
double brute_dcor(const Samples& x, const Samples& y);

double brute_hilbert(const Mat& p, const Mat& q);
Mat brute_project_out(const Mat& p, const Mat& q);
double brute_pdcor2(const Samples& x, const Samples& y, const Samples& z);

// Unique energy sum_ij X_ij^2 with X = P_m - c P_r, eps-smoothed distances.
double brute_unique_energy(const Samples& mapped, const Samples& reference, double eps);

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h at each coordinate.
std::vector<double> finite_diff(const std::function<double(const std::vector<double>&)>& f,
                                const std::vector<double>& point,
                                const std::vector<std::size_t>& coords, double step);

}  // namespace oracle
