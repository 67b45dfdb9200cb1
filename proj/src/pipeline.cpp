#include "vtc/pipeline.hpp"

#include "vtc/ops.hpp"
#include "vtc/parallel.hpp"
#include "vtc/reference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

namespace vtc {

int worker_count() {
    if (const char * env = std::getenv("VTC_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? int(hw) : 1;
}

void parallel_for(int64_t n, const std::function<void(int64_t)> & fn) {
    const int workers = std::min<int64_t>(worker_count(), n);
    if (workers <= 1) {
        for (int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> threads;
    threads.reserve(size_t(workers));
    std::vector<std::exception_ptr> errors(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
            try {
                for (int64_t i = w; i < n; i += workers) fn(i);
            } catch (...) {
                errors[size_t(w)] = std::current_exception();
            }
        });
    }
    for (auto & t : threads) t.join();
    for (auto & e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

std::vector<ContributionScores> score_frames(const TokenTensor & tokens,
                                             const std::vector<AttentionTensor> & frame_attention) {
    std::vector<int64_t> frame_count;
    for (const TokenKey & k : tokens.keys) {
        if (size_t(k.frame) >= frame_count.size()) frame_count.resize(size_t(k.frame) + 1, 0);
        ++frame_count[size_t(k.frame)];
    }
    if (frame_attention.size() != frame_count.size()) {
        throw ShapeMismatch("score_frames: attention tensor count != frame count");
    }

    std::vector<ContributionScores> scores(frame_count.size());
    parallel_for(int64_t(frame_count.size()), [&](int64_t f) {
        const AttentionTensor & attn = frame_attention[size_t(f)];
        const int64_t n_f = frame_count[size_t(f)];
        Matrix avg = head_average(attn);
        if (attn.size == n_f) {
            scores[size_t(f)] = n_f >= 2 ? mean_received_scores(avg)
                                         : ContributionScores{{0.0f}, ScoreMode::MeanReceived};
        } else if (attn.size == n_f + 1) {
            scores[size_t(f)] = cls_scores(avg, 0);
        } else {
            throw ShapeMismatch("score_frames: attention size matches neither N_f nor N_f+1");
        }
    });
    return scores;
}

AttentionTensor derive_global_attention(const TokenTensor & visual, const TokenTensor & text) {
    if (text.count() > 0 && visual.dim() != text.dim()) {
        throw ShapeMismatch("derive_global_attention: dimension mismatch");
    }
    const int64_t s = visual.count() + text.count();
    const int64_t d = visual.dim();
    Matrix stacked(s, d);
    for (int64_t i = 0; i < visual.count(); ++i) {
        std::copy(visual.embeddings.row(i), visual.embeddings.row(i) + d, stacked.row(i));
    }
    for (int64_t i = 0; i < text.count(); ++i) {
        std::copy(text.embeddings.row(i), text.embeddings.row(i) + d, stacked.row(visual.count() + i));
    }
    std::vector<float> logits(size_t(s) * size_t(s));
    for (int64_t i = 0; i < s; ++i) {
        for (int64_t j = 0; j < s; ++j) {
            double dot = 0.0;
            for (int64_t c = 0; c < d; ++c) {
                dot += double(stacked.at(i, c)) * double(stacked.at(j, c));
            }
            logits[size_t(i) * size_t(s) + size_t(j)] = float(dot);
        }
    }
    return attention_from_logits(1, s, AttentionScope::Global, logits, float(std::sqrt(double(d))));
}

PipelineResult run_pipeline(const PipelineInput & input, const CompressionConfig & cfg,
                            const LlmArchSpec & arch) {
    using clock = std::chrono::steady_clock;
    auto ms_since = [](clock::time_point t0) {
        return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    };
    const auto t_start = clock::now();

    PipelineResult res;
    res.stats.config = cfg;
    res.stats.arch = arch;

    auto t0 = clock::now();
    std::vector<ContributionScores> scores = score_frames(input.tokens, input.frame_attention);
    res.stats.ms_scores = ms_since(t0);

    t0 = clock::now();
    res.retention = compress(input.tokens, scores, cfg);
    TokenTensor visual = materialize(input.tokens, res.retention);
    res.stats.ms_compress = ms_since(t0);

    const bool text_stage = input.text.count() > 0;
    if (text_stage) {
        t0 = clock::now();
        AttentionTensor attn = input.global_attention
            ? *input.global_attention
            : derive_global_attention(visual, input.text);
        res.text = text_merge(visual, input.text, attn, cfg.lambda, cfg.inner_keep_ratio);
        res.output = res.text->plan.merged_embeddings;
        res.stats.ms_text_merge = ms_since(t0);
    } else {
        res.output = visual;
    }

    res.stats.text_stage = text_stage;
    res.stats.budget = res.retention.budget;
    res.stats.achieved_count = int64_t(res.retention.final_sequence.size());
    for (const SequenceEntry & e : res.retention.final_sequence) {
        res.stats.retained_keys.push_back(e.key);
    }
    for (size_t c = 0; c < res.retention.cluster_members.size(); ++c) {
        res.stats.merged_groups.push_back({res.retention.merged_tokens.keys[c], res.retention.cluster_members[c]});
    }

    const int64_t n = input.tokens.count();
    FlopsReport before = flops(arch, identity_schedule(n, arch.layers));
    FlopsReport after = flops(arch, schedule_from_pipeline(n, double(cfg.retention_ratio), cfg.inner_layer,
                                                           text_stage ? double(cfg.inner_keep_ratio) : 1.0,
                                                           arch.layers));
    res.stats.flops_before = before.total;
    res.stats.flops_after = after.total;
    res.stats.flops_ratio = before.total > 0.0 ? after.total / before.total : 1.0;
    res.stats.ms_total = ms_since(t_start);
    return res;
}

AblationAxis ablation_axis_from_string(const std::string & name) {
    if (name == "tau") return AblationAxis::Tau;
    if (name == "cluster_ratio") return AblationAxis::ClusterRatio;
    if (name == "lambda") return AblationAxis::Lambda;
    if (name == "keep_R") return AblationAxis::KeepR;
    if (name == "layer_K") return AblationAxis::LayerK;
    throw ValidationError("unknown ablation axis: " + name);
}

std::vector<AblationRow> ablate(AblationAxis axis, const std::vector<double> & grid,
                                const AblationOptions & opts) {
    if (grid.empty()) {
        throw ValidationError("ablate: empty grid");
    }
    SynthVideo video = synth_video(opts.synth);
    TokenTensor text = synth_text(opts.n_text, opts.synth.dim, opts.synth.seed);
    std::vector<ContributionScores> scores = score_frames(video.tokens, video.attention);

    double total_mass = 0.0;
    for (const auto & s : scores) {
        for (float v : s.scores) total_mass += double(v);
    }

    std::vector<AblationRow> rows(grid.size());
    parallel_for(int64_t(grid.size()), [&](int64_t g) {
        CompressionConfig cfg = opts.base;
        const double value = grid[size_t(g)];
        switch (axis) {
            case AblationAxis::Tau: cfg.tau = float(value); break;
            case AblationAxis::ClusterRatio: cfg.cluster_ratio = float(value); break;
            case AblationAxis::Lambda: cfg.lambda = float(value); break;
            case AblationAxis::KeepR: cfg.inner_keep_ratio = float(value); break;
            case AblationAxis::LayerK: cfg.inner_layer = int(std::lround(value)); break;
        }
        PipelineInput input{video.tokens, video.attention, text, std::nullopt};
        PipelineResult res = run_pipeline(input, cfg, opts.arch);

        AblationRow row;
        row.value = value;
        row.flops_ratio = res.stats.flops_ratio;

        std::unordered_map<TokenKey, int64_t, TokenKeyHash> key_row;
        for (int64_t i = 0; i < video.tokens.count(); ++i) {
            key_row.emplace(video.tokens.keys[size_t(i)], i);
        }

        double kept_mass = 0.0;
        for (const TokenKey & k : res.retention.retained_direct) {
            kept_mass += double(scores[size_t(k.frame)].scores[size_t(k.position)]);
        }
        row.retained_attention_mass = total_mass > 0.0 ? kept_mass / total_mass : 0.0;

        const auto & direct = res.retention.retained_direct;
        if (direct.size() >= 2) {
            Matrix sub(int64_t(direct.size()), video.tokens.dim());
            for (size_t i = 0; i < direct.size(); ++i) {
                const float * src = video.tokens.embeddings.row(key_row.at(direct[i]));
                std::copy(src, src + video.tokens.dim(), sub.row(int64_t(i)));
            }
            Matrix cos = cosine_matrix(sub, sub);
            double acc = 0.0;
            int64_t pairs = 0;
            for (int64_t i = 0; i < cos.rows; ++i) {
                for (int64_t j = i + 1; j < cos.cols; ++j) {
                    acc += double(cos.at(i, j));
                    ++pairs;
                }
            }
            row.mean_pairwise_cosine = acc / double(pairs);
        }

        std::unordered_set<TokenKey, TokenKeyHash> kept_keys;
        for (const TokenKey & k : res.output.keys) kept_keys.insert(k);
        double recon = 0.0;
        int64_t dropped = 0;
        for (int64_t i = 0; i < video.tokens.count(); ++i) {
            if (kept_keys.count(video.tokens.keys[size_t(i)])) continue;
            double best = std::numeric_limits<double>::infinity();
            const float * x = video.tokens.embeddings.row(i);
            for (int64_t r = 0; r < res.output.count(); ++r) {
                const float * y = res.output.embeddings.row(r);
                double s = 0.0;
                for (int64_t c = 0; c < video.tokens.dim(); ++c) {
                    double dd = double(x[c]) - double(y[c]);
                    s += dd * dd;
                }
                best = std::min(best, s);
            }
            recon += std::sqrt(best);
            ++dropped;
        }
        row.reconstruction_error = dropped > 0 ? recon / double(dropped) : 0.0;
        rows[size_t(g)] = row;
    });
    return rows;
}

namespace {

std::string key_str(TokenKey k) {
    return "(" + std::to_string(k.frame) + "," + std::to_string(k.position) + ")";
}

bool keys_equal(const std::vector<TokenKey> & a, const std::vector<TokenKey> & b) {
    return a == b;
}

// naive decision scoring for the text stage, straight-line loops only
std::vector<float> naive_combined_scores(const TokenTensor & visual, const TokenTensor & text,
                                         const AttentionTensor & attn, float lambda) {
    const int64_t nv = visual.count();
    const int64_t nq = text.count();
    const int64_t s = attn.size;

    std::vector<float> attn_raw(size_t(nv), -std::numeric_limits<float>::infinity());
    for (int64_t j = 0; j < nv; ++j) {
        for (int64_t i = 0; i < nq; ++i) {
            double acc = 0.0;
            for (int64_t h = 0; h < attn.heads; ++h) {
                acc += double(attn.head(h)[(nv + i) * s + j]);
            }
            float v = float(acc / double(attn.heads));
            if (v > attn_raw[size_t(j)]) attn_raw[size_t(j)] = v;
        }
    }
    float lo = attn_raw[0], hi = attn_raw[0];
    for (float v : attn_raw) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::vector<float> attn_norm(size_t(nv), 0.0f);
    if (hi > lo) {
        for (int64_t j = 0; j < nv; ++j) attn_norm[size_t(j)] = (attn_raw[size_t(j)] - lo) / (hi - lo);
    }

    std::vector<float> sim_raw(size_t(nv), -std::numeric_limits<float>::infinity());
    for (int64_t i = 0; i < nv; ++i) {
        for (int64_t t = 0; t < nq; ++t) {
            double dot = 0.0, na = 0.0, nb = 0.0;
            for (int64_t c = 0; c < visual.dim(); ++c) {
                dot += double(visual.embeddings.at(i, c)) * double(text.embeddings.at(t, c));
                na += double(visual.embeddings.at(i, c)) * double(visual.embeddings.at(i, c));
                nb += double(text.embeddings.at(t, c)) * double(text.embeddings.at(t, c));
            }
            float v = (na == 0.0 || nb == 0.0) ? 0.0f : float(dot / (std::sqrt(na) * std::sqrt(nb)));
            if (v > sim_raw[size_t(i)]) sim_raw[size_t(i)] = v;
        }
    }
    lo = sim_raw[0];
    hi = sim_raw[0];
    for (float v : sim_raw) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::vector<float> sim_norm(size_t(nv), 0.0f);
    if (hi > lo) {
        for (int64_t i = 0; i < nv; ++i) sim_norm[size_t(i)] = (sim_raw[size_t(i)] - lo) / (hi - lo);
    }

    std::vector<float> combined(static_cast<size_t>(nv));
    for (int64_t i = 0; i < nv; ++i) {
        combined[size_t(i)] = (1.0f - lambda) * attn_norm[size_t(i)] + lambda * sim_norm[size_t(i)];
    }
    return combined;
}

} // namespace

OracleReport oracle_check(int num_seeds, uint64_t base_seed) {
    static const float taus[] = {0.5f, 0.7f, 0.9f};
    static const float clusters[] = {0.0f, 0.3f};
    static const float lambdas[] = {0.0f, 0.5f, 1.0f};
    static const float ratios[] = {0.1f, 0.3f, 0.5f};

    OracleReport report;
    for (int s = 0; s < num_seeds; ++s) {
        std::mt19937_64 rng(base_seed + uint64_t(s) * 0x9e3779b97f4a7c15ull + 1);
        auto uni = [&] { return float((double(rng()) + 0.5) / 18446744073709551616.0); };

        const int64_t n = 2 + int64_t(rng() % 63);
        const int64_t d = 2 + int64_t(rng() % 15);
        const int64_t frames = 1 + int64_t(rng() % 4);
        const int64_t n_text = int64_t(rng() % 5);

        CompressionConfig cfg;
        cfg.tau = taus[s % 3];
        cfg.cluster_ratio = clusters[(s / 3) % 2];
        cfg.lambda = lambdas[(s / 6) % 3];
        cfg.retention_ratio = ratios[s % 3];
        cfg.inner_keep_ratio = 0.5f;
        cfg.seed = base_seed + uint64_t(s);

        // tokens: uniform embeddings, occasionally exact duplicates to stress the gate
        Matrix emb(n, d);
        std::vector<TokenKey> keys;
        std::vector<int64_t> per_frame(size_t(frames), 0);
        for (int64_t i = 0; i < n; ++i) {
            const int64_t f = std::min<int64_t>(i * frames / n, frames - 1);
            keys.push_back(TokenKey{int32_t(f), int32_t(per_frame[size_t(f)]++)});
            if (i > 0 && uni() < 0.15f) {
                std::copy(emb.row(i - 1), emb.row(i - 1) + d, emb.row(i));
            } else {
                for (int64_t j = 0; j < d; ++j) emb.at(i, j) = uni() * 2.0f - 1.0f;
            }
        }
        TokenTensor tokens = make_token_tensor(std::move(emb), std::move(keys));

        std::vector<ContributionScores> scores(static_cast<size_t>(frames));
        for (int64_t f = 0; f < frames; ++f) {
            scores[size_t(f)].scores.resize(size_t(per_frame[size_t(f)]));
            for (auto & v : scores[size_t(f)].scores) v = uni();
        }

        std::string mismatch;
        try {
            RetentionResult fast = compress(tokens, scores, cfg);
            RetentionResult slow = reference::naive_compress(tokens, scores, cfg);

            if (!keys_equal(fast.retained_direct, slow.retained_direct)) {
                mismatch = "retained_direct";
            } else if (!keys_equal(fast.recycled, slow.recycled)) {
                mismatch = "recycled";
            } else if (fast.cluster_members != slow.cluster_members) {
                mismatch = "cluster_members";
            } else if (fast.budget != slow.budget) {
                mismatch = "budget";
            } else {
                TokenTensor fast_out = materialize(tokens, fast);
                TokenTensor slow_out = reference::naive_materialize(tokens, slow);
                if (!keys_equal(fast_out.keys, slow_out.keys)) {
                    mismatch = "final_sequence keys";
                } else {
                    for (size_t i = 0; i < fast_out.embeddings.data.size() && mismatch.empty(); ++i) {
                        if (std::abs(fast_out.embeddings.data[i] - slow_out.embeddings.data[i]) > 1e-5f) {
                            mismatch = "compressed embeddings";
                        }
                    }
                }

                if (mismatch.empty() && n_text > 0) {
                    TokenTensor text = synth_text(n_text, d, cfg.seed);
                    AttentionTensor attn = derive_global_attention(fast_out, text);
                    TextMergeResult fast_tm = text_merge(fast_out, text, attn, cfg.lambda, cfg.inner_keep_ratio);
                    std::vector<float> combined = naive_combined_scores(fast_out, text, attn, cfg.lambda);
                    MergePlan slow_tm = reference::naive_plan_merge(slow_out, combined, cfg.inner_keep_ratio);

                    if (fast_tm.plan.retaining != slow_tm.retaining) {
                        mismatch = "text retaining";
                    } else if (fast_tm.plan.pruning != slow_tm.pruning) {
                        mismatch = "text pruning";
                    } else if (fast_tm.plan.target != slow_tm.target) {
                        mismatch = "text merge targets";
                    } else {
                        const auto & a = fast_tm.plan.merged_embeddings.embeddings.data;
                        const auto & b = slow_tm.merged_embeddings.embeddings.data;
                        for (size_t i = 0; i < a.size() && mismatch.empty(); ++i) {
                            if (std::abs(a[i] - b[i]) > 1e-5f) mismatch = "text merged embeddings";
                        }
                    }
                }
            }
        } catch (const std::exception & e) {
            mismatch = std::string("exception: ") + e.what();
        }

        if (mismatch.empty()) {
            ++report.passes;
        } else {
            ++report.failures;
            if (report.first_mismatch.empty()) {
                std::ostringstream os;
                os << "seed " << s << ": " << mismatch;
                report.first_mismatch = os.str();
            }
        }
    }
    return report;
}

} // namespace vtc
