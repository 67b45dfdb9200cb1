#pragma once

#include "vtc/compress.hpp"
#include "vtc/text_merge.hpp"

namespace vtc::reference {

// Straight-line O(N^2) re-implementations used only as cross-check oracles.
// They share no code with the optimized path beyond the public data types.

RetentionResult naive_compress(const TokenTensor & tokens,
                               const std::vector<ContributionScores> & scores,
                               const CompressionConfig & cfg);

TokenTensor naive_materialize(const TokenTensor & tokens, const RetentionResult & result);

MergePlan naive_plan_merge(const TokenTensor & visual, const std::vector<float> & combined,
                           float keep_ratio);

} // namespace vtc::reference
