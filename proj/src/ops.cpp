#include "vtc/ops.hpp"

#include <algorithm>
#include <cmath>

namespace vtc {

static void check_finite(const std::vector<float> & v, const char * what) {
    for (float x : v) {
        if (!std::isfinite(x)) {
            throw NonFiniteInput(std::string(what) + " contains a NaN/Inf entry");
        }
    }
}

TokenTensor make_token_tensor(Matrix embeddings, std::vector<TokenKey> keys) {
    if (int64_t(keys.size()) != embeddings.rows) {
        throw ShapeMismatch("token tensor: key count does not match row count");
    }
    if (embeddings.cols < 1) {
        throw ShapeMismatch("token tensor: embedding dimension must be >= 1");
    }
    check_finite(embeddings.data, "token tensor");
    std::unordered_set<TokenKey, TokenKeyHash> seen;
    seen.reserve(keys.size());
    for (const TokenKey & k : keys) {
        if (k.frame < 0 || k.position < 0) {
            throw ValidationError("token tensor: negative frame/position index");
        }
        if (!seen.insert(k).second) {
            throw ValidationError("token tensor: duplicate (frame, position) key");
        }
    }
    return TokenTensor{std::move(embeddings), std::move(keys)};
}

AttentionTensor make_attention_tensor(int64_t heads, int64_t size, AttentionScope scope, std::vector<float> data) {
    if (heads < 1 || size < 1) {
        throw ShapeMismatch("attention tensor: heads and size must be >= 1");
    }
    if (int64_t(data.size()) != heads * size * size) {
        throw ShapeMismatch("attention tensor: payload size mismatch");
    }
    check_finite(data, "attention tensor");
    for (int64_t h = 0; h < heads; ++h) {
        const float * m = data.data() + size_t(h) * size_t(size) * size_t(size);
        for (int64_t i = 0; i < size; ++i) {
            double sum = 0.0;
            for (int64_t j = 0; j < size; ++j) {
                float v = m[i * size + j];
                if (v < -1e-6f || v > 1.0f + 1e-6f) {
                    throw ValidationError("attention tensor: entry outside [0,1]");
                }
                sum += v;
            }
            if (std::abs(sum - 1.0) > 1e-4) {
                throw ValidationError("attention tensor: row does not sum to 1");
            }
        }
    }
    AttentionTensor t;
    t.heads = heads;
    t.size = size;
    t.scope = scope;
    t.data = std::move(data);
    return t;
}

AttentionTensor attention_from_logits(int64_t heads, int64_t size, AttentionScope scope,
                                      const std::vector<float> & logits, float scale) {
    if (int64_t(logits.size()) != heads * size * size) {
        throw ShapeMismatch("attention logits: payload size mismatch");
    }
    AttentionTensor t;
    t.heads = heads;
    t.size = size;
    t.scope = scope;
    t.data.resize(logits.size());
    for (int64_t h = 0; h < heads; ++h) {
        Matrix m(size, size);
        std::copy(logits.begin() + h * size * size, logits.begin() + (h + 1) * size * size, m.data.begin());
        Matrix s = softmax_rows(m, scale);
        std::copy(s.data.begin(), s.data.end(), t.data.begin() + h * size * size);
    }
    return t;
}

void CompressionConfig::validate() const {
    if (!(tau > 0.0f && tau <= 1.0f)) throw ValidationError("tau must be in (0,1]");
    if (!(retention_ratio > 0.0f && retention_ratio <= 1.0f)) throw ValidationError("retention_ratio must be in (0,1]");
    if (!(cluster_ratio >= 0.0f && cluster_ratio < 1.0f)) throw ValidationError("cluster_ratio must be in [0,1)");
    if (!(lambda >= 0.0f && lambda <= 1.0f)) throw ValidationError("lambda must be in [0,1]");
    if (!(inner_keep_ratio > 0.0f && inner_keep_ratio <= 1.0f)) throw ValidationError("inner_keep_ratio must be in (0,1]");
    if (inner_layer < 1) throw ValidationError("inner_layer must be >= 1");
    if (knn_k < 0) throw ValidationError("knn_k must be >= 0 (0 = auto)");
}

Matrix softmax_rows(const Matrix & logits, float scale) {
    if (!(scale > 0.0f)) {
        throw ValidationError("softmax scale must be > 0");
    }
    check_finite(logits.data, "softmax input");
    Matrix out(logits.rows, logits.cols);
    for (int64_t i = 0; i < logits.rows; ++i) {
        const float * src = logits.row(i);
        float * dst = out.row(i);
        float row_max = -std::numeric_limits<float>::infinity();
        for (int64_t j = 0; j < logits.cols; ++j) {
            row_max = std::max(row_max, src[j] / scale);
        }
        double sum = 0.0;
        for (int64_t j = 0; j < logits.cols; ++j) {
            double e = std::exp(double(src[j] / scale) - double(row_max));
            dst[j] = float(e);
            sum += e;
        }
        for (int64_t j = 0; j < logits.cols; ++j) {
            dst[j] = float(double(dst[j]) / sum);
        }
    }
    return out;
}

static std::vector<double> row_norms(const Matrix & m) {
    std::vector<double> norms(size_t(m.rows));
    for (int64_t i = 0; i < m.rows; ++i) {
        const float * r = m.row(i);
        double s = 0.0;
        for (int64_t j = 0; j < m.cols; ++j) {
            s += double(r[j]) * double(r[j]);
        }
        norms[size_t(i)] = std::sqrt(s);
    }
    return norms;
}

Matrix cosine_matrix(const Matrix & a, const Matrix & b) {
    if (a.cols != b.cols) {
        throw ShapeMismatch("cosine_matrix: embedding dimensions differ");
    }
    check_finite(a.data, "cosine input a");
    check_finite(b.data, "cosine input b");
    std::vector<double> na = row_norms(a);
    std::vector<double> nb = row_norms(b);
    Matrix out(a.rows, b.rows);
    for (int64_t i = 0; i < a.rows; ++i) {
        const float * ra = a.row(i);
        for (int64_t j = 0; j < b.rows; ++j) {
            if (na[size_t(i)] == 0.0 || nb[size_t(j)] == 0.0) {
                out.at(i, j) = 0.0f;  // zero-norm rows never look similar to anything
                continue;
            }
            const float * rb = b.row(j);
            double dot = 0.0;
            for (int64_t k = 0; k < a.cols; ++k) {
                dot += double(ra[k]) * double(rb[k]);
            }
            out.at(i, j) = float(dot / (na[size_t(i)] * nb[size_t(j)]));
        }
    }
    return out;
}

Matrix cosine_matrix(const TokenTensor & a, const TokenTensor & b) {
    return cosine_matrix(a.embeddings, b.embeddings);
}

std::vector<float> minmax_normalize(const std::vector<float> & v) {
    if (v.empty()) {
        throw ValidationError("minmax_normalize: empty vector");
    }
    check_finite(v, "minmax_normalize input");
    float lo = *std::min_element(v.begin(), v.end());
    float hi = *std::max_element(v.begin(), v.end());
    std::vector<float> out(v.size(), 0.0f);
    if (hi > lo) {
        for (size_t i = 0; i < v.size(); ++i) {
            out[i] = (v[i] - lo) / (hi - lo);
        }
    }
    return out;
}

Matrix pairwise_sq_euclidean(const Matrix & x) {
    if (x.rows < 1) {
        throw ValidationError("pairwise_sq_euclidean: need at least one row");
    }
    Matrix out(x.rows, x.rows, 0.0f);
    for (int64_t i = 0; i < x.rows; ++i) {
        const float * ri = x.row(i);
        for (int64_t j = i + 1; j < x.rows; ++j) {
            const float * rj = x.row(j);
            double s = 0.0;
            for (int64_t k = 0; k < x.cols; ++k) {
                double d = double(ri[k]) - double(rj[k]);
                s += d * d;
            }
            out.at(i, j) = float(s);
            out.at(j, i) = float(s);
        }
    }
    return out;
}

} // namespace vtc
