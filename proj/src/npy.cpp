// Copyright 2026 The residalign Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "residalign/npy.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <regex>
#include <sstream>

#include "residalign/error.hpp"
#include "residalign/io.hpp"

static_assert(std::endian::native == std::endian::little,
              "NPY IO assumes a little-endian host");

namespace residalign::npy {

namespace {

constexpr char kMagic[] = "\x93NUMPY";

std::string header_dict(const std::vector<Index>& shape) {
  std::ostringstream os;
  os << "{'descr': '<f8', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    os << shape[i];
    if (shape.size() == 1 || i + 1 < shape.size()) os << ",";
    if (i + 1 < shape.size()) os << " ";
  }
  os << "), }";
  return os.str();
}

std::string encode_raw(const std::vector<Index>& shape, const double* data,
                       std::size_t count) {
  std::string dict = header_dict(shape);
  // Preamble (10 bytes) + dict + padding + '\n' is a multiple of 64.
  std::size_t total = 10 + dict.size() + 1;
  std::size_t pad = (64 - total % 64) % 64;
  dict.append(pad, ' ');
  dict.push_back('\n');
  std::string out;
  out.reserve(10 + dict.size() + count * sizeof(double));
  out.append(kMagic, 6);
  out.push_back('\x01');
  out.push_back('\x00');
  auto len = static_cast<std::uint16_t>(dict.size());
  out.push_back(static_cast<char>(len & 0xff));
  out.push_back(static_cast<char>(len >> 8));
  out += dict;
  out.append(reinterpret_cast<const char*>(data), count * sizeof(double));
  return out;
}

}  // namespace

std::string encode(const MatrixXd& m) {
  // Eigen default storage is column-major; NPY body is C-order.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  return encode_raw({m.rows(), m.cols()}, rm.data(), static_cast<std::size_t>(rm.size()));
}

std::string encode_vector(const std::vector<double>& v) {
  return encode_raw({static_cast<Index>(v.size())}, v.data(), v.size());
}

MatrixXd decode(const std::string& bytes, const std::string& origin) {
  auto fail = [&](const std::string& why) -> FormatError {
    return FormatError(origin + ": malformed NPY header: " + why);
  };
  if (bytes.size() < 10 || std::memcmp(bytes.data(), kMagic, 6) != 0) {
    throw fail("bad magic");
  }
  const auto major = static_cast<unsigned char>(bytes[6]);
  std::size_t header_len = 0;
  std::size_t body_start = 0;
  if (major == 1) {
    header_len = static_cast<unsigned char>(bytes[8]) |
                 (static_cast<std::size_t>(static_cast<unsigned char>(bytes[9])) << 8);
    body_start = 10 + header_len;
  } else if (major == 2 || major == 3) {
    if (bytes.size() < 12) throw fail("truncated preamble");
    header_len = 0;
    for (int i = 0; i < 4; ++i) {
      header_len |= static_cast<std::size_t>(static_cast<unsigned char>(bytes[8 + i]))
                    << (8 * i);
    }
    body_start = 12 + header_len;
  } else {
    throw fail("unsupported version " + std::to_string(major));
  }
  if (bytes.size() < body_start) throw fail("truncated header");
  const std::string dict = bytes.substr(body_start - header_len, header_len);

  std::smatch m;
  static const std::regex descr_re(R"('descr'\s*:\s*'([^']*)')");
  static const std::regex order_re(R"('fortran_order'\s*:\s*(True|False))");
  static const std::regex shape_re(R"('shape'\s*:\s*\(([^)]*)\))");
  if (!std::regex_search(dict, m, descr_re)) throw fail("missing descr");
  const std::string descr = m[1];
  if (!std::regex_search(dict, m, order_re)) throw fail("missing fortran_order");
  const bool fortran = m[1] == "True";
  if (!std::regex_search(dict, m, shape_re)) throw fail("missing shape");
  std::vector<Index> shape;
  {
    std::string dims = m[1];
    std::stringstream ss(dims);
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto first = item.find_first_not_of(" \t");
      if (first == std::string::npos) continue;
      try {
        std::size_t used = 0;
        long long v = std::stoll(item.substr(first), &used);
        if (v < 0) throw fail("negative dimension");
        shape.push_back(static_cast<Index>(v));
      } catch (const std::invalid_argument&) {
        throw fail("bad shape entry '" + item + "'");
      }
    }
  }
  if (shape.empty() || shape.size() > 2) {
    throw fail("expected a 1-D or 2-D array, got " + std::to_string(shape.size()) + "-D");
  }
  const Index rows = shape[0];
  const Index cols = shape.size() == 2 ? shape[1] : 1;
  const auto count = static_cast<std::size_t>(rows * cols);

  std::size_t width = 0;
  if (descr == "<f8") {
    width = 8;
  } else if (descr == "<f4") {
    width = 4;
  } else {
    throw fail("unsupported dtype '" + descr + "' (need <f8 or <f4)");
  }
  if (bytes.size() - body_start != count * width) {
    throw fail("body has " + std::to_string(bytes.size() - body_start) +
               " bytes, expected " + std::to_string(count * width));
  }
  std::vector<double> flat(count);
  const char* body = bytes.data() + body_start;
  if (width == 8) {
    std::memcpy(flat.data(), body, count * 8);
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      float f;
      std::memcpy(&f, body + 4 * i, 4);
      flat[i] = f;
    }
  }
  MatrixXd out(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      out(r, c) = fortran ? flat[static_cast<std::size_t>(c * rows + r)]
                          : flat[static_cast<std::size_t>(r * cols + c)];
    }
  }
  return out;
}

MatrixXd read(const std::filesystem::path& path) {
  return decode(io::read_file(path), path.string());
}

std::vector<double> read_vector(const std::filesystem::path& path) {
  MatrixXd m = read(path);
  if (m.cols() != 1) {
    throw FormatError(path.string() + ": expected a 1-D array");
  }
  return {m.data(), m.data() + m.rows()};
}

void write(const std::filesystem::path& path, const MatrixXd& m) {
  io::write_file_atomic(path, encode(m));
}

void write_vector(const std::filesystem::path& path, const std::vector<double>& v) {
  io::write_file_atomic(path, encode_vector(v));
}

}  // namespace residalign::npy
