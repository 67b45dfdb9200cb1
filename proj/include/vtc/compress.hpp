#pragma once

#include "vtc/attention.hpp"
#include "vtc/types.hpp"

namespace vtc {

struct GreedySelection {
    std::vector<TokenKey> retained;  // admission order
    std::vector<TokenKey> recycled;  // rank order
};

// Walks candidates in rank order; admits a candidate while the pool has room
// and its maximum cosine to the current pool is below tau, otherwise recycles it.
GreedySelection greedy_select(const TokenTensor & tokens, const std::vector<TokenKey> & order,
                              float tau, int64_t direct_budget);

struct ClusterAssignment {
    std::vector<float> rho;        // local densities
    std::vector<float> delta;      // separation distances
    std::vector<float> gamma;      // rho * delta
    std::vector<int64_t> centers;  // ascending index
    std::vector<int64_t> member_of; // point index -> center index (into the pool)
};

// Density-peaks clustering over kNN densities: rho_i = exp(-mean squared distance
// to the k nearest neighbours), delta_i = distance to the nearest denser point
// (farthest distance for the density maximum), centers = top gamma = rho * delta.
ClusterAssignment dpc_knn(const TokenTensor & recycle, int64_t k, int64_t num_centers);

// One row per center: arithmetic mean of all member embeddings, keyed by the center.
TokenTensor merge_clusters(const TokenTensor & recycle, const ClusterAssignment & assign);

struct SequenceEntry {
    enum class Kind { Direct, Merged };
    Kind kind = Kind::Direct;
    TokenKey key;                 // original key, or the cluster center's key
    int64_t cluster_id = -1;      // index into merged_tokens when kind == Merged
};

struct RetentionResult {
    std::vector<TokenKey> retained_direct;   // admission order
    std::vector<TokenKey> recycled;          // rank order
    TokenTensor merged_tokens;               // one row per cluster center
    std::vector<std::vector<TokenKey>> cluster_members; // aligned with merged_tokens rows
    std::vector<SequenceEntry> final_sequence; // ascending (frame, position)
    int64_t budget = 0;                      // M
};

// Full first-stage pipeline: global rank -> greedy select -> DPC-KNN refill ->
// spatiotemporal reorder. |final_sequence| = min(budget, N).
RetentionResult compress(const TokenTensor & tokens, const std::vector<ContributionScores> & scores,
                         const CompressionConfig & cfg);

// Embeddings of the final sequence, in sequence order, keyed by each entry's key.
TokenTensor materialize(const TokenTensor & tokens, const RetentionResult & result);

} // namespace vtc
