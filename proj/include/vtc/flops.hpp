#pragma once

#include <cstdint>
#include <vector>

#include "vtc/error.hpp"

namespace vtc {

struct LlmArchSpec {
    int64_t layers = 28;         // T
    int64_t hidden = 3584;       // d
    int64_t ffn = 18944;         // m
    int64_t decode_tokens = 100; // R
};

struct PruneSchedule {
    std::vector<int64_t> tokens_per_layer; // n_i, length T
};

struct FlopsReport {
    double total = 0.0;
    double prefill = 0.0;
    double decode = 0.0;
    double ratio_vs_baseline = 1.0;
};

// Closed-form prefill + decode FLOPs for a per-layer token schedule.
FlopsReport flops(const LlmArchSpec & spec, const PruneSchedule & sched);

// Same, with ratio_vs_baseline filled in from an uncompressed schedule of
// n_input tokens at every layer.
FlopsReport flops_vs_baseline(const LlmArchSpec & spec, const PruneSchedule & sched, int64_t n_input);

// n_i = round(retention_ratio * n_input) before the inner merge layer,
// round(retention_ratio * inner_keep * n_input) from it onward.
PruneSchedule schedule_from_pipeline(int64_t n_input, double retention_ratio,
                                     int64_t inner_layer, double inner_keep, int64_t layers);

PruneSchedule identity_schedule(int64_t n_input, int64_t layers);

} // namespace vtc
