#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "ccid/nn/tensor.hpp"

namespace ccid::nn {

class ParamFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// "CCIDPARM", u32 version, u32 count, then per tensor: u16 name length,
/// name bytes, u8 rank, u32 dims, f32 values. Everything little-endian.
[[nodiscard]] std::vector<std::uint8_t> encode_params(const ModelParams& params);
[[nodiscard]] ModelParams decode_params(const std::vector<std::uint8_t>& bytes);

void save_params(const ModelParams& params, const std::filesystem::path& path);
/// Tensors in file order. Use ModelParams::assign_from to map them onto a
/// declared layout.
[[nodiscard]] ModelParams load_params(const std::filesystem::path& path);

}  // namespace ccid::nn
