#include "unicam/npy.hpp"

#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>

#include "unicam/errors.hpp"

namespace unicam {
namespace {

constexpr std::string_view kMagic = "\x93NUMPY";
constexpr std::size_t kPreamble = 10;  // magic + version + u16 length
constexpr std::size_t kAlign = 64;

[[noreturn]] void fail(std::string_view origin, const std::string& what) {
  throw ContractError(std::string(origin) + ": " + what);
}

// Minimal reader for the Python dict literal numpy writes as the header.
class HeaderDictParser {
 public:
  HeaderDictParser(std::string_view text, std::string_view origin)
      : text_(text), origin_(origin) {}

  NpyHeader parse() {
    NpyHeader h;
    bool seen_descr = false, seen_order = false, seen_shape = false;
    expect('{');
    while (true) {
      skip_ws();
      if (peek() == '}') {
        ++pos_;
        break;
      }
      const auto key = quoted();
      expect(':');
      if (key == "descr") {
        h.descr = quoted();
        seen_descr = true;
      } else if (key == "fortran_order") {
        h.fortran_order = boolean();
        seen_order = true;
      } else if (key == "shape") {
        h.shape = tuple();
        seen_shape = true;
      } else {
        fail(origin_, "malformed header: unexpected key '" + key + "'");
      }
      skip_ws();
      if (peek() == ',') ++pos_;
    }
    if (!seen_descr || !seen_order || !seen_shape)
      fail(origin_, "malformed header: missing descr, fortran_order or shape");
    return h;
  }

 private:
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(origin_, std::string("malformed header: expected '") + c + "'");
    ++pos_;
  }

  std::string quoted() {
    skip_ws();
    const char q = peek();
    if (q != '\'' && q != '"') fail(origin_, "malformed header: expected string");
    const auto end = text_.find(q, pos_ + 1);
    if (end == std::string_view::npos) fail(origin_, "malformed header: unterminated string");
    std::string s(text_.substr(pos_ + 1, end - pos_ - 1));
    pos_ = end + 1;
    return s;
  }

  bool boolean() {
    skip_ws();
    if (text_.substr(pos_, 4) == "True") {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_, 5) == "False") {
      pos_ += 5;
      return false;
    }
    fail(origin_, "malformed header: fortran_order must be True or False");
  }

  Shape tuple() {
    expect('(');
    Shape shape;
    while (true) {
      skip_ws();
      if (peek() == ')') {
        ++pos_;
        break;
      }
      if (!std::isdigit(static_cast<unsigned char>(peek())))
        fail(origin_, "malformed header: bad shape entry");
      std::size_t v = 0;
      while (std::isdigit(static_cast<unsigned char>(peek()))) v = v * 10 + (text_[pos_++] - '0');
      shape.push_back(v);
      skip_ws();
      if (peek() == ',') ++pos_;
    }
    return shape;
  }

  std::string_view text_;
  std::string_view origin_;
  std::size_t pos_ = 0;
};

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContractError(path.string() + ": cannot open tensor file");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

template <typename T, typename U>
T load_le(const char* p) {
  U bits;
  std::memcpy(&bits, p, sizeof(U));
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  return std::bit_cast<T>(bits);
}

}  // namespace

NpyHeader parse_npy_header(std::string_view bytes, std::string_view origin) {
  if (bytes.size() < kPreamble || bytes.substr(0, 6) != kMagic)
    fail(origin, "malformed magic: not an NPY file");
  const auto major = static_cast<unsigned char>(bytes[6]);
  const auto minor = static_cast<unsigned char>(bytes[7]);
  if (major != 1 || minor != 0)
    fail(origin, "unsupported NPY version " + std::to_string(major) + "." + std::to_string(minor));
  const auto len = static_cast<std::size_t>(static_cast<unsigned char>(bytes[8])) |
                   (static_cast<std::size_t>(static_cast<unsigned char>(bytes[9])) << 8);
  if (bytes.size() < kPreamble + len) fail(origin, "malformed header: truncated");

  auto header = HeaderDictParser(bytes.substr(kPreamble, len), origin).parse();
  header.data_offset = kPreamble + len;
  if (header.fortran_order) fail(origin, "unsupported layout: fortran_order is True");
  if (header.descr != "<f8" && header.descr != "<f4")
    fail(origin, "unsupported dtype '" + header.descr + "' (expected <f8 or <f4)");
  if (header.shape.empty()) fail(origin, "zero-dimensional arrays are not supported");
  for (auto s : header.shape)
    if (s == 0) fail(origin, "empty axis in shape " + shape_str(header.shape));
  return header;
}

NpyHeader read_npy_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContractError(path.string() + ": cannot open tensor file");
  std::string pre(kPreamble, '\0');
  in.read(pre.data(), kPreamble);
  if (in.gcount() != static_cast<std::streamsize>(kPreamble))
    fail(path.string(), "malformed magic: file too short");
  const auto len = static_cast<std::size_t>(static_cast<unsigned char>(pre[8])) |
                   (static_cast<std::size_t>(static_cast<unsigned char>(pre[9])) << 8);
  std::string rest(len, '\0');
  in.read(rest.data(), static_cast<std::streamsize>(len));
  return parse_npy_header(pre + rest, path.string());
}

Tensor decode_npy(std::string_view bytes, std::string_view origin) {
  const auto h = parse_npy_header(bytes, origin);
  const auto count = shape_size(h.shape);
  const std::size_t width = h.descr == "<f8" ? 8 : 4;
  if (bytes.size() - h.data_offset != count * width)
    fail(origin, "payload has " + std::to_string(bytes.size() - h.data_offset) +
                     " bytes, expected " + std::to_string(count * width));
  std::vector<double> data(count);
  const char* p = bytes.data() + h.data_offset;
  if (width == 8) {
    for (std::size_t i = 0; i < count; ++i) data[i] = load_le<double, std::uint64_t>(p + 8 * i);
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      std::uint32_t bits;
      std::memcpy(&bits, p + 4 * i, 4);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
      data[i] = static_cast<double>(std::bit_cast<float>(bits));
    }
  }
  Tensor t(h.shape, std::move(data));
  if (!t.all_finite()) fail(origin, "non-finite values (NaN or Inf) in tensor");
  return t;
}

std::string encode_npy(const Tensor& t) {
  std::ostringstream dict;
  dict << "{'descr': '<f8', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < t.rank(); ++i) {
    if (i) dict << ", ";
    dict << t.shape()[i];
  }
  if (t.rank() == 1) dict << ',';
  dict << "), }";
  std::string header = dict.str();
  const auto unpadded = kPreamble + header.size() + 1;
  header.append((kAlign - unpadded % kAlign) % kAlign, ' ');
  header.push_back('\n');

  std::string out(kMagic);
  out.push_back('\x01');
  out.push_back('\x00');
  out.push_back(static_cast<char>(header.size() & 0xff));
  out.push_back(static_cast<char>((header.size() >> 8) & 0xff));
  out += header;

  const auto payload = out.size();
  out.resize(payload + 8 * t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(t[i]);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    std::memcpy(out.data() + payload + 8 * i, &bits, 8);
  }
  return out;
}

Tensor load_tensor(const std::filesystem::path& path) {
  return decode_npy(slurp(path), path.string());
}

void write_tensor(const Tensor& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  const auto bytes = encode_npy(t);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

}  // namespace unicam
