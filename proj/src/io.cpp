#include "mmvae/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mmvae {
namespace {

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t out = 0;
    for (int i = 0; i < 8; ++i) out |= ((v >> (i * 8)) & 0xFF) << ((7 - i) * 8);
    return out;
  }
  return v;
}

void write_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  bits = to_little_endian(bits);
  out.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
}

double read_f64(std::istream& in) {
  std::uint64_t bits = 0;
  in.read(reinterpret_cast<char*>(&bits), sizeof(bits));
  bits = to_little_endian(bits);
  double v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

}  // namespace

const Tensor& TensorFile::tensor(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw std::out_of_range("tensor file: no tensor named " + name);
}

bool TensorFile::has_tensor(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return true;
  }
  return false;
}

void write_tensor_file(const std::string& path, nlohmann::ordered_json meta,
                       const std::vector<std::pair<std::string, Tensor>>& tensors) {
  nlohmann::ordered_json manifest = nlohmann::ordered_json::array();
  for (const auto& [name, t] : tensors) {
    manifest.push_back({{"name", name}, {"rows", t.rows}, {"cols", t.cols}});
  }
  meta["tensors"] = std::move(manifest);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << meta.dump() << '\n';
  for (const auto& [name, t] : tensors) {
    for (double v : t.data) write_f64(out, v);
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

TensorFile read_tensor_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string header_line;
  if (!std::getline(in, header_line)) throw std::runtime_error("missing header line: " + path);

  TensorFile file;
  file.header = nlohmann::ordered_json::parse(header_line);
  for (const auto& entry : file.header.at("tensors")) {
    const std::string name = entry.at("name").get<std::string>();
    const int rows = entry.at("rows").get<int>();
    const int cols = entry.at("cols").get<int>();
    Tensor t(rows, cols);
    for (int i = 0; i < t.numel(); ++i) t.data[i] = read_f64(in);
    if (!in) throw std::runtime_error("truncated tensor payload in " + path);
    file.tensors.emplace_back(name, std::move(t));
  }
  return file;
}

}  // namespace mmvae
