#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vtc/error.hpp"

namespace vtc {

// "VTC1" binary tensor container: magic, dtype u8 (1 = f32 LE), rank u8,
// rank x u32 LE dims, then row-major f32 payload. No trailing bytes allowed.
struct TensorFile {
    std::vector<uint32_t> dims;
    std::vector<float> values;

    uint64_t element_count() const {
        uint64_t n = 1;
        for (uint32_t d : dims) n *= d;
        return n;
    }
};

std::vector<uint8_t> serialize_tensor(const TensorFile & t);
TensorFile deserialize_tensor(const std::vector<uint8_t> & bytes);

void write_tensor_file(const std::string & path, const TensorFile & t);
TensorFile read_tensor_file(const std::string & path);

} // namespace vtc
