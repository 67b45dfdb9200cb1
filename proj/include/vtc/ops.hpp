#pragma once

#include "vtc/types.hpp"

namespace vtc {

// Row-wise softmax of logits / scale, max-subtracted. Each output row sums to 1 within 1e-6.
Matrix softmax_rows(const Matrix & logits, float scale);

// Cosine similarity between every row of a and every row of b (N_a x N_b).
// Zero-norm rows get cosine 0 against everything.
Matrix cosine_matrix(const TokenTensor & a, const TokenTensor & b);
Matrix cosine_matrix(const Matrix & a, const Matrix & b);

// Affine map of v onto [0,1]; a constant vector maps to all zeros.
std::vector<float> minmax_normalize(const std::vector<float> & v);

// Symmetric matrix of squared Euclidean distances between rows, zero diagonal.
Matrix pairwise_sq_euclidean(const Matrix & x);

} // namespace vtc
