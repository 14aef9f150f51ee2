#pragma once

#include <atomic>
#include <cmath>
#include <vector>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "unicam/rng.hpp"
#include "unicam/tensor.hpp"

namespace testsupport {

namespace fs = std::filesystem;

// Removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("unicam_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline unicam::Tensor uniform_tensor(unicam::SplitMix64& rng, unicam::Shape shape, double lo = -1.0,
                                     double hi = 1.0) {
  std::vector<double> v(unicam::shape_size(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return unicam::Tensor(std::move(shape), std::move(v));
}

inline unicam::Tensor normal_tensor(unicam::SplitMix64& rng, unicam::Shape shape) {
  std::vector<double> v(unicam::shape_size(shape));
  for (auto& x : v) x = rng.normal();
  return unicam::Tensor(std::move(shape), std::move(v));
}

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
}

// Random orthogonal d x d matrix (Gram-Schmidt on Gaussian columns), row-major.
inline std::vector<double> random_orthogonal(unicam::SplitMix64& rng, std::size_t d) {
  std::vector<double> q(d * d);
  for (auto& v : q) v = rng.normal();
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t p = 0; p < c; ++p) {
      double dot = 0.0;
      for (std::size_t r = 0; r < d; ++r) dot += q[r * d + c] * q[r * d + p];
      for (std::size_t r = 0; r < d; ++r) q[r * d + c] -= dot * q[r * d + p];
    }
    double norm = 0.0;
    for (std::size_t r = 0; r < d; ++r) norm += q[r * d + c] * q[r * d + c];
    norm = std::sqrt(norm);
    for (std::size_t r = 0; r < d; ++r) q[r * d + c] /= norm;
  }
  return q;
}

// rows of x [n,d] mapped to a * Q x_i + b
inline unicam::Tensor affine_rows(const unicam::Tensor& x, const std::vector<double>& q, double a,
                                  const std::vector<double>& b) {
  const std::size_t n = x.dim(0), d = x.dim(1);
  std::vector<double> out(n * d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t r = 0; r < d; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += q[r * d + c] * x[i * d + c];
      out[i * d + r] = a * s + b[r];
    }
  return unicam::Tensor({n, d}, std::move(out));
}

}  // namespace testsupport
