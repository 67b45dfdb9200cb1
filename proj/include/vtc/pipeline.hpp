#pragma once

#include <optional>
#include <string>

#include "vtc/compress.hpp"
#include "vtc/flops.hpp"
#include "vtc/synth.hpp"
#include "vtc/text_merge.hpp"

namespace vtc {

struct MergeGroup {
    TokenKey center;
    std::vector<TokenKey> members;
};

struct RunStats {
    std::vector<TokenKey> retained_keys;     // final sequence keys, spatiotemporal order
    std::vector<MergeGroup> merged_groups;
    int64_t budget = 0;
    int64_t achieved_count = 0;
    double flops_before = 0.0;
    double flops_after = 0.0;
    double flops_ratio = 1.0;
    double ms_scores = 0.0;
    double ms_compress = 0.0;
    double ms_text_merge = 0.0;
    double ms_total = 0.0;
    bool text_stage = false;
    CompressionConfig config;
    LlmArchSpec arch;
};

struct PipelineInput {
    TokenTensor tokens;
    std::vector<AttentionTensor> frame_attention;  // one per frame
    TokenTensor text;                              // may be empty
    std::optional<AttentionTensor> global_attention; // derived from embeddings when absent
};

struct PipelineResult {
    RetentionResult retention;
    std::optional<TextMergeResult> text;
    TokenTensor output;       // final embeddings, sequence order
    RunStats stats;
};

// Per-frame contribution scores; attention of size N_f is read as mean-received,
// size N_f + 1 as a CLS encoder with the CLS token at index 0.
std::vector<ContributionScores> score_frames(const TokenTensor & tokens,
                                             const std::vector<AttentionTensor> & frame_attention);

// stc-compress -> optional text-merge -> cost model.
PipelineResult run_pipeline(const PipelineInput & input, const CompressionConfig & cfg,
                            const LlmArchSpec & arch);

// Scaled dot-product attention over stacked [visual; text] embeddings, used
// when no captured global attention is supplied.
AttentionTensor derive_global_attention(const TokenTensor & visual, const TokenTensor & text);

enum class AblationAxis { Tau, ClusterRatio, Lambda, KeepR, LayerK };
AblationAxis ablation_axis_from_string(const std::string & name);

struct AblationRow {
    double value = 0.0;
    double retained_attention_mass = 0.0;  // kept score mass / total score mass
    double mean_pairwise_cosine = 0.0;     // redundancy of the direct retained set
    double reconstruction_error = 0.0;     // dropped tokens vs nearest kept/merged token
    double flops_ratio = 1.0;
};

struct AblationOptions {
    SynthParams synth;
    int64_t n_text = 8;
    CompressionConfig base;
    LlmArchSpec arch;
};

std::vector<AblationRow> ablate(AblationAxis axis, const std::vector<double> & grid,
                                const AblationOptions & opts);

struct OracleReport {
    int passes = 0;
    int failures = 0;
    std::string first_mismatch;
};

// Optimized pipeline vs the straight-line reference on random small instances.
OracleReport oracle_check(int num_seeds, uint64_t base_seed = 0);

} // namespace vtc
