#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <unordered_set>
#include <vector>

#include "vtc/error.hpp"

namespace vtc {

// Row-major dense float matrix. All heavy math accumulates in double.
struct Matrix {
    int64_t rows = 0;
    int64_t cols = 0;
    std::vector<float> data;

    Matrix() = default;
    Matrix(int64_t r, int64_t c, float fill = 0.0f) : rows(r), cols(c), data(size_t(r) * size_t(c), fill) {}

    float & at(int64_t i, int64_t j) { return data[size_t(i) * size_t(cols) + size_t(j)]; }
    float at(int64_t i, int64_t j) const { return data[size_t(i) * size_t(cols) + size_t(j)]; }
    const float * row(int64_t i) const { return data.data() + size_t(i) * size_t(cols); }
    float * row(int64_t i) { return data.data() + size_t(i) * size_t(cols); }
};

// (frame, position) provenance of one token row.
struct TokenKey {
    int32_t frame = 0;
    int32_t position = 0;

    auto operator<=>(const TokenKey &) const = default;
};

struct TokenKeyHash {
    size_t operator()(const TokenKey & k) const {
        return std::hash<uint64_t>{}((uint64_t(uint32_t(k.frame)) << 32) | uint32_t(k.position));
    }
};

// N token embeddings (rows) of dimension d with per-row (frame, position) keys.
struct TokenTensor {
    Matrix embeddings;               // N x d
    std::vector<TokenKey> keys;      // length N

    int64_t count() const { return embeddings.rows; }
    int64_t dim() const { return embeddings.cols; }
};

// Validates shape, key uniqueness and finiteness.
TokenTensor make_token_tensor(Matrix embeddings, std::vector<TokenKey> keys);

enum class AttentionScope { PerFrame, Global };

// H stacked S x S row-stochastic matrices.
struct AttentionTensor {
    int64_t heads = 0;
    int64_t size = 0;                // S
    AttentionScope scope = AttentionScope::PerFrame;
    std::vector<float> data;         // heads * S * S

    const float * head(int64_t h) const { return data.data() + size_t(h) * size_t(size) * size_t(size); }
    Matrix head_matrix(int64_t h) const {
        Matrix m(size, size);
        const float * src = head(h);
        std::copy(src, src + size_t(size) * size_t(size), m.data.begin());
        return m;
    }
};

// Validates row sums (1 +/- 1e-4) and entry range.
AttentionTensor make_attention_tensor(int64_t heads, int64_t size, AttentionScope scope, std::vector<float> data);

// Builds attention from raw logits via softmax_rows, one softmax per head.
AttentionTensor attention_from_logits(int64_t heads, int64_t size, AttentionScope scope,
                                      const std::vector<float> & logits, float scale);

struct CompressionConfig {
    float tau = 0.7f;
    float retention_ratio = 0.1f;
    float cluster_ratio = 0.3f;
    float lambda = 0.5f;
    float inner_keep_ratio = 0.5f;   // R
    int inner_layer = 18;            // K
    int knn_k = 0;                   // 0 = sqrt(N) heuristic
    uint64_t seed = 0;

    void validate() const;
};

} // namespace vtc
