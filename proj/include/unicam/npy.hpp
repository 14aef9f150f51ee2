#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "unicam/tensor.hpp"

namespace unicam {

// NPY format version 1.0, little-endian IEEE floats, C order only.
struct NpyHeader {
  std::string descr;  // "<f8" or "<f4"
  bool fortran_order = false;
  Shape shape;
  std::size_t data_offset = 0;  // bytes before the payload
};

/// Parses and validates the header portion of an NPY byte string.
/// `origin` names the source in error messages.
NpyHeader parse_npy_header(std::string_view bytes, std::string_view origin);

NpyHeader read_npy_header(const std::filesystem::path& path);

/// Decodes a full NPY byte string. Widens <f4 to double and rejects NaN/Inf.
Tensor decode_npy(std::string_view bytes, std::string_view origin);

/// Always emits <f8 with the header padded to a 64-byte boundary.
std::string encode_npy(const Tensor& t);

Tensor load_tensor(const std::filesystem::path& path);
void write_tensor(const Tensor& t, const std::filesystem::path& path);

}  // namespace unicam
