#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "somn/nn/network.hpp"

namespace somn::nn {

// Model file: "SMNN", u16 version, architecture block (u32 input length,
// u16 blocks, u16 filters, u16 kernel, u16 dense1, u16 dense2, u16 outputs,
// f64 dropout, u64 seed), u64 parameter count, then parameters as
// little-endian f64 in ParamLayout order.
inline constexpr std::uint16_t kModelFormatVersion = 1;

std::vector<std::uint8_t> encode_model(const CnnModel& model);

/// With `expected_input` set, the stored architecture must be the standard
/// one for that input length; FormatError otherwise.
CnnModel decode_model(std::span<const std::uint8_t> bytes,
                      std::optional<std::size_t> expected_input = std::nullopt);

void save_model(const std::string& path, const CnnModel& model);
CnnModel load_model(const std::string& path, std::optional<std::size_t> expected_input = std::nullopt);

}  // namespace somn::nn
