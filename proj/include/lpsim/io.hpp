#pragma once

#include <iosfwd>
#include <string>

#include "lpsim/formats.hpp"
#include "lpsim/tensor.hpp"
#include "lpsim/train.hpp"

namespace lpsim {

// Binary tensor file: magic "LPT1", rank as u32 LE, extents as u64 LE,
// row-major f32 LE payload. Rank is at most 8.
void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is);
void write_tensor_file(const std::string& path, const Tensor& t);
Tensor read_tensor_file(const std::string& path);

// Format spec-string mini-grammar:
//   float:EXP:MAN
//   fixed:WL:FL[:symmetric][:wrap]
//   block:WL[:tensor|:dimD]
// Bare kinds get defaults: float:5:2, fixed:8:4, block:8.
NumberFormat parse_format(const std::string& text);
std::string format_to_string(const NumberFormat& fmt);

RoundingMode parse_rounding(const std::string& text);

// JSON quantization config: optional keys weight/accumulator/gradient/
// activation/error, each {"kind": ..., format fields, "rounding": ...,
// "seed": ...}. Unknown keys are rejected. Entries without a seed derive one
// from default_seed and the category.
QuantConfig parse_quant_config(const std::string& json_text,
                               std::uint64_t default_seed);
QuantConfig load_quant_config(const std::string& path,
                              std::uint64_t default_seed);

} // namespace lpsim
