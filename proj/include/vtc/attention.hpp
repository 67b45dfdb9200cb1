#pragma once

#include "vtc/types.hpp"

namespace vtc {

enum class ScoreMode { Cls, MeanReceived };

// One non-negative contribution score per visual token.
struct ContributionScores {
    std::vector<float> scores;
    ScoreMode mode = ScoreMode::MeanReceived;
};

// Arithmetic mean over the head dimension; rows stay stochastic.
Matrix head_average(const AttentionTensor & attn);

// The CLS row of avg_attn with the CLS column removed, original token order kept.
ContributionScores cls_scores(const Matrix & avg_attn, int64_t cls_index);

// Mean attention each token receives from all other tokens (self row excluded):
// score_j = 1/(S-1) * sum_{i != j} avg_attn[i][j].
ContributionScores mean_received_scores(const Matrix & avg_attn);

// Descending global order over all (frame, position) keys; frame index is the
// list position, position index runs within each frame. Ties break by ascending key.
std::vector<TokenKey> global_rank(const std::vector<ContributionScores> & per_frame_scores);

} // namespace vtc
