#pragma once

#include <json.hpp>
#include <string>
#include <utility>
#include <vector>

#include "mmvae/tensor.hpp"

namespace mmvae {

// Single-file container used by datasets and checkpoints: one JSON header
// line terminated by '\n', followed by the concatenated row-major
// little-endian f64 payloads of the tensors listed in header["tensors"].
struct TensorFile {
  nlohmann::ordered_json header;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor& tensor(const std::string& name) const;
  bool has_tensor(const std::string& name) const;
};

void write_tensor_file(const std::string& path, nlohmann::ordered_json meta,
                       const std::vector<std::pair<std::string, Tensor>>& tensors);

TensorFile read_tensor_file(const std::string& path);

}  // namespace mmvae
