#pragma once

#include "vtc/types.hpp"

namespace vtc {

struct DecisionScores {
    std::vector<float> attn_norm;  // in [0,1]
    std::vector<float> sim_norm;   // in [0,1]
    std::vector<float> combined;   // (1-lambda)*attn + lambda*sim
    float lambda = 0.5f;
};

struct MergePlan {
    std::vector<int64_t> retaining;            // ascending, size ceil(R * N)
    std::vector<int64_t> pruning;              // ascending
    std::vector<int64_t> target;               // per visual index; retained index or -1
    TokenTensor merged_embeddings;             // one row per retained token
};

// Text-to-visual block of the head-averaged global attention (n_text x n_visual).
Matrix extract_text_to_visual(const AttentionTensor & attn, int64_t n_visual, int64_t n_text);

// Per-visual-token max over text rows, min-max normalized.
std::vector<float> attention_criterion(const Matrix & a_qv);

// Per-visual-token max cosine to any text token, min-max normalized.
std::vector<float> similarity_criterion(const TokenTensor & visual, const TokenTensor & text);

DecisionScores combine_scores(std::vector<float> attn_norm, std::vector<float> sim_norm, float lambda);

// Keep the top ceil(R * N) tokens by combined score; merge each pruned token into
// its most cosine-similar retained token by group averaging.
MergePlan plan_merge(const TokenTensor & visual, const DecisionScores & scores, float keep_ratio);

struct TextMergeResult {
    DecisionScores scores;
    MergePlan plan;
};

// Full second stage. With no text tokens the decision score degenerates, so
// ranking falls back to the mean attention each visual token receives.
TextMergeResult text_merge(const TokenTensor & visual, const TokenTensor & text,
                           const AttentionTensor & global_attn, float lambda, float keep_ratio);

} // namespace vtc
