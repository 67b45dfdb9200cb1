#include "vtc/tensor_io.hpp"

#include <cstring>
#include <fstream>

namespace vtc {

static constexpr char MAGIC[4] = {'V', 'T', 'C', '1'};
static constexpr uint8_t DTYPE_F32 = 1;

std::vector<uint8_t> serialize_tensor(const TensorFile & t) {
    if (t.dims.size() > 255) {
        throw ValidationError("tensor file: rank > 255");
    }
    if (t.element_count() != t.values.size()) {
        throw ShapeMismatch("tensor file: payload size does not match dims");
    }
    std::vector<uint8_t> out;
    out.reserve(6 + 4 * t.dims.size() + 4 * t.values.size());
    out.insert(out.end(), MAGIC, MAGIC + 4);
    out.push_back(DTYPE_F32);
    out.push_back(uint8_t(t.dims.size()));
    for (uint32_t d : t.dims) {
        for (int b = 0; b < 4; ++b) {
            out.push_back(uint8_t((d >> (8 * b)) & 0xff));
        }
    }
    for (float v : t.values) {
        uint32_t bits;
        std::memcpy(&bits, &v, 4);
        for (int b = 0; b < 4; ++b) {
            out.push_back(uint8_t((bits >> (8 * b)) & 0xff));
        }
    }
    return out;
}

TensorFile deserialize_tensor(const std::vector<uint8_t> & bytes) {
    if (bytes.size() < 6) {
        throw ParseError("tensor file: truncated header (offset 0)");
    }
    if (std::memcmp(bytes.data(), MAGIC, 4) != 0) {
        throw ParseError("tensor file: bad magic (offset 0)");
    }
    if (bytes[4] != DTYPE_F32) {
        throw ParseError("tensor file: unsupported dtype code " + std::to_string(bytes[4]) + " (offset 4)");
    }
    const size_t rank = bytes[5];
    size_t off = 6;
    if (bytes.size() < off + 4 * rank) {
        throw ParseError("tensor file: truncated dims (offset " + std::to_string(off) + ")");
    }
    TensorFile t;
    t.dims.resize(rank);
    for (size_t i = 0; i < rank; ++i) {
        uint32_t d = 0;
        for (int b = 0; b < 4; ++b) {
            d |= uint32_t(bytes[off++]) << (8 * b);
        }
        t.dims[i] = d;
    }
    const uint64_t count = t.element_count();
    if (bytes.size() - off != count * 4) {
        throw ParseError("tensor file: payload size mismatch (offset " + std::to_string(off) +
                         ", expected " + std::to_string(count * 4) + " bytes, got " +
                         std::to_string(bytes.size() - off) + ")");
    }
    t.values.resize(count);
    for (uint64_t i = 0; i < count; ++i) {
        uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) {
            bits |= uint32_t(bytes[off++]) << (8 * b);
        }
        std::memcpy(&t.values[i], &bits, 4);
    }
    return t;
}

void write_tensor_file(const std::string & path, const TensorFile & t) {
    std::vector<uint8_t> bytes = serialize_tensor(t);
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw ParseError("cannot open for writing: " + path);
    }
    f.write(reinterpret_cast<const char *>(bytes.data()), std::streamsize(bytes.size()));
    if (!f) {
        throw ParseError("write failed: " + path);
    }
}

TensorFile read_tensor_file(const std::string & path) {
    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f) {
        throw ParseError("cannot open: " + path);
    }
    std::vector<uint8_t> bytes(size_t(f.tellg()));
    f.seekg(0);
    f.read(reinterpret_cast<char *>(bytes.data()), std::streamsize(bytes.size()));
    if (!f) {
        throw ParseError("read failed: " + path);
    }
    return deserialize_tensor(bytes);
}

} // namespace vtc
