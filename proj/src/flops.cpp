#include "vtc/flops.hpp"

#include <cmath>

namespace vtc {

FlopsReport flops(const LlmArchSpec & spec, const PruneSchedule & sched) {
    if (spec.layers >= 1 && int64_t(sched.tokens_per_layer.size()) != spec.layers) {
        throw ShapeMismatch("flops: schedule length != layer count");
    }
    const double d = double(spec.hidden);
    const double m = double(spec.ffn);
    const double r = double(spec.decode_tokens);

    FlopsReport rep;
    for (int64_t n_i : sched.tokens_per_layer) {
        if (n_i < 0) {
            throw ValidationError("flops: negative token count");
        }
        const double n = double(n_i);
        rep.prefill += 4.0 * n * d * d + 2.0 * n * n * d + 2.0 * n * d * m;
        rep.decode += r * ((4.0 * d * d + 2.0 * d * m) + 2.0 * (d * n + (d / 2.0) * (r + 1.0)));
    }
    rep.total = rep.prefill + rep.decode;
    rep.ratio_vs_baseline = 1.0;
    return rep;
}

FlopsReport flops_vs_baseline(const LlmArchSpec & spec, const PruneSchedule & sched, int64_t n_input) {
    FlopsReport rep = flops(spec, sched);
    FlopsReport base = flops(spec, identity_schedule(n_input, int64_t(sched.tokens_per_layer.size())));
    rep.ratio_vs_baseline = base.total > 0.0 ? rep.total / base.total : 1.0;
    return rep;
}

PruneSchedule schedule_from_pipeline(int64_t n_input, double retention_ratio,
                                     int64_t inner_layer, double inner_keep, int64_t layers) {
    if (inner_layer < 1 || inner_layer > layers) {
        throw ValidationError("schedule_from_pipeline: inner_layer outside [1, T]");
    }
    const int64_t outer = std::lround(retention_ratio * double(n_input));
    const int64_t inner = std::lround(retention_ratio * inner_keep * double(n_input));
    PruneSchedule sched;
    sched.tokens_per_layer.reserve(size_t(layers));
    for (int64_t i = 1; i <= layers; ++i) {
        sched.tokens_per_layer.push_back(i < inner_layer ? outer : inner);
    }
    return sched;
}

PruneSchedule identity_schedule(int64_t n_input, int64_t layers) {
    PruneSchedule sched;
    sched.tokens_per_layer.assign(size_t(layers), n_input);
    return sched;
}

} // namespace vtc
