#pragma once

#include "vtc/types.hpp"

namespace vtc {

struct SynthParams {
    int64_t frames = 32;           // B
    int64_t tokens_per_frame = 196; // N_v
    int64_t dim = 128;
    int64_t heads = 4;
    float temporal_corr = 0.0f;    // in [0,1)
    float spatial_dup = 0.0f;      // in [0,1]
    uint64_t seed = 0;
};

struct SynthVideo {
    TokenTensor tokens;                       // (B * N_v) x d, keys (frame, position)
    std::vector<AttentionTensor> attention;   // per frame, N_v x N_v
    std::vector<std::vector<bool>> salient;   // per frame, planted high-attention tokens
};

// Synthetic stand-in for encoder outputs: frame t is an AR(1) blend of frame
// t-1 and fresh Gaussian noise, rows unit-normalized; a spatial_dup fraction of
// tokens per frame are near-copies of earlier tokens; attention is a softmax of
// random logits biased toward a planted salient subset. Reproducible from seed.
SynthVideo synth_video(const SynthParams & params);

// Random unit-normalized text embeddings with keys in a reserved frame.
TokenTensor synth_text(int64_t n_text, int64_t dim, uint64_t seed);

} // namespace vtc
