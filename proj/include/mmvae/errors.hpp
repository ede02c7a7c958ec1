#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mmvae {

// Malformed serialized input; position is a byte offset into the input.
class parse_error : public std::runtime_error {
 public:
  parse_error(const std::string& what, std::size_t position)
      : std::runtime_error(what), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_ = 0;
};

// Well-formed input that violates an expression invariant.
class semantic_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A requested encoder or decoder is absent from a bundle's inventory.
class inventory_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mmvae
