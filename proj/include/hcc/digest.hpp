#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include "hcc/tensor.hpp"

namespace hcc {

// Lowercase hex SHA-256.
std::string sha256_hex(std::span<const std::byte> bytes);
std::string sha256_hex(std::string_view text);

// Hash over the names and raw value bytes of a parameter group.
std::string parameter_digest(const ParameterRefs& params);

}  // namespace hcc
