#include "vtc/text_merge.hpp"

#include "vtc/attention.hpp"
#include "vtc/ops.hpp"

#include <algorithm>
#include <cmath>

namespace vtc {

Matrix extract_text_to_visual(const AttentionTensor & attn, int64_t n_visual, int64_t n_text) {
    if (attn.size != n_visual + n_text) {
        throw ShapeMismatch("extract_text_to_visual: S != n_visual + n_text");
    }
    Matrix avg = head_average(attn);
    Matrix out(n_text, n_visual);
    for (int64_t i = 0; i < n_text; ++i) {
        for (int64_t j = 0; j < n_visual; ++j) {
            out.at(i, j) = avg.at(n_visual + i, j);
        }
    }
    return out;
}

std::vector<float> attention_criterion(const Matrix & a_qv) {
    if (a_qv.rows < 1) {
        throw ValidationError("attention_criterion: need at least one text row");
    }
    std::vector<float> col_max(size_t(a_qv.cols), -std::numeric_limits<float>::infinity());
    for (int64_t i = 0; i < a_qv.rows; ++i) {
        for (int64_t j = 0; j < a_qv.cols; ++j) {
            col_max[size_t(j)] = std::max(col_max[size_t(j)], a_qv.at(i, j));
        }
    }
    return minmax_normalize(col_max);
}

std::vector<float> similarity_criterion(const TokenTensor & visual, const TokenTensor & text) {
    Matrix cos = cosine_matrix(visual, text);
    std::vector<float> row_max(size_t(cos.rows), -std::numeric_limits<float>::infinity());
    for (int64_t i = 0; i < cos.rows; ++i) {
        for (int64_t j = 0; j < cos.cols; ++j) {
            row_max[size_t(i)] = std::max(row_max[size_t(i)], cos.at(i, j));
        }
    }
    return minmax_normalize(row_max);
}

DecisionScores combine_scores(std::vector<float> attn_norm, std::vector<float> sim_norm, float lambda) {
    if (attn_norm.size() != sim_norm.size()) {
        throw ShapeMismatch("combine_scores: criterion lengths differ");
    }
    DecisionScores out;
    out.lambda = lambda;
    out.combined.resize(attn_norm.size());
    for (size_t i = 0; i < attn_norm.size(); ++i) {
        out.combined[i] = (1.0f - lambda) * attn_norm[i] + lambda * sim_norm[i];
    }
    out.attn_norm = std::move(attn_norm);
    out.sim_norm = std::move(sim_norm);
    return out;
}

MergePlan plan_merge(const TokenTensor & visual, const DecisionScores & scores, float keep_ratio) {
    const int64_t n = visual.count();
    if (n < 1) {
        throw EmptyInput("plan_merge: no visual tokens");
    }
    if (!(keep_ratio > 0.0f && keep_ratio <= 1.0f)) {
        throw ValidationError("plan_merge: keep_ratio outside (0,1]");
    }
    if (int64_t(scores.combined.size()) != n) {
        throw ShapeMismatch("plan_merge: score length mismatch");
    }
    const int64_t keep = int64_t(std::ceil(double(keep_ratio) * double(n)));

    std::vector<int64_t> order(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) order[size_t(i)] = i;
    std::sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
        if (scores.combined[size_t(a)] != scores.combined[size_t(b)]) {
            return scores.combined[size_t(a)] > scores.combined[size_t(b)];
        }
        return a < b;
    });

    MergePlan plan;
    plan.retaining.assign(order.begin(), order.begin() + keep);
    std::sort(plan.retaining.begin(), plan.retaining.end());
    plan.pruning.assign(order.begin() + keep, order.end());
    std::sort(plan.pruning.begin(), plan.pruning.end());
    plan.target.assign(size_t(n), -1);

    // slot of each retained index in the output tensor
    std::vector<int64_t> slot(size_t(n), -1);
    for (size_t s = 0; s < plan.retaining.size(); ++s) {
        slot[size_t(plan.retaining[s])] = int64_t(s);
        plan.target[size_t(plan.retaining[s])] = plan.retaining[s];
    }

    Matrix retained_rows(keep, visual.dim());
    std::vector<TokenKey> keys(static_cast<size_t>(keep));
    for (size_t s = 0; s < plan.retaining.size(); ++s) {
        const float * src = visual.embeddings.row(plan.retaining[s]);
        std::copy(src, src + visual.dim(), retained_rows.row(int64_t(s)));
        keys[s] = visual.keys[size_t(plan.retaining[s])];
    }

    std::vector<std::vector<double>> acc(size_t(keep), std::vector<double>(size_t(visual.dim()), 0.0));
    std::vector<int64_t> counts(size_t(keep), 1);
    for (size_t s = 0; s < plan.retaining.size(); ++s) {
        const float * src = retained_rows.row(int64_t(s));
        for (int64_t j = 0; j < visual.dim(); ++j) {
            acc[s][size_t(j)] = double(src[j]);
        }
    }

    if (!plan.pruning.empty()) {
        Matrix pruned_rows(int64_t(plan.pruning.size()), visual.dim());
        for (size_t p = 0; p < plan.pruning.size(); ++p) {
            const float * src = visual.embeddings.row(plan.pruning[p]);
            std::copy(src, src + visual.dim(), pruned_rows.row(int64_t(p)));
        }
        Matrix cos = cosine_matrix(pruned_rows, retained_rows);
        for (size_t p = 0; p < plan.pruning.size(); ++p) {
            int64_t best = 0;
            float best_cos = cos.at(int64_t(p), 0);
            for (int64_t s = 1; s < keep; ++s) {
                if (cos.at(int64_t(p), s) > best_cos) {
                    best_cos = cos.at(int64_t(p), s);
                    best = s;
                }
            }
            plan.target[size_t(plan.pruning[p])] = plan.retaining[size_t(best)];
            const float * src = pruned_rows.row(int64_t(p));
            for (int64_t j = 0; j < visual.dim(); ++j) {
                acc[size_t(best)][size_t(j)] += double(src[j]);
            }
            ++counts[size_t(best)];
        }
    }

    Matrix merged(keep, visual.dim());
    for (int64_t s = 0; s < keep; ++s) {
        for (int64_t j = 0; j < visual.dim(); ++j) {
            merged.at(s, j) = float(acc[size_t(s)][size_t(j)] / double(counts[size_t(s)]));
        }
    }
    plan.merged_embeddings = TokenTensor{std::move(merged), std::move(keys)};
    return plan;
}

TextMergeResult text_merge(const TokenTensor & visual, const TokenTensor & text,
                           const AttentionTensor & global_attn, float lambda, float keep_ratio) {
    const int64_t n_visual = visual.count();
    const int64_t n_text = text.count();

    TextMergeResult res;
    if (n_text == 0) {
        // no query: rank by attention received within the visual block
        Matrix avg = head_average(global_attn);
        if (avg.rows != n_visual) {
            throw ShapeMismatch("text_merge: attention size != n_visual with no text");
        }
        std::vector<float> received;
        if (n_visual >= 2) {
            received = mean_received_scores(avg).scores;
        } else {
            received.assign(size_t(n_visual), 0.0f);
        }
        std::vector<float> norm = minmax_normalize(received);
        res.scores = combine_scores(norm, std::vector<float>(norm.size(), 0.0f), 0.0f);
    } else {
        Matrix a_qv = extract_text_to_visual(global_attn, n_visual, n_text);
        res.scores = combine_scores(attention_criterion(a_qv),
                                    similarity_criterion(visual, text), lambda);
    }
    res.plan = plan_merge(visual, res.scores, keep_ratio);
    return res;
}

} // namespace vtc
