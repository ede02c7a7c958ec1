#pragma once

#include <string>

#include "mmvae/errors.hpp"
#include "mmvae/expression.hpp"

namespace mmvae {

enum class RenderFormat { Text, Json, Latex };

// Deterministic canonical rendering. Json output round-trips through
// parse_expression byte for byte.
std::string render(const LossExpression& expr, RenderFormat format);

// Inverse of render for the Json format. Throws parse_error on malformed
// input (with byte position) and semantic_error on invariant violations.
LossExpression parse_expression(const std::string& json_text);

}  // namespace mmvae
