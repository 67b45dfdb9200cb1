#include "vtc/attention.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vtc {

Matrix head_average(const AttentionTensor & attn) {
    const int64_t s = attn.size;
    Matrix out(s, s);
    for (int64_t i = 0; i < s; ++i) {
        for (int64_t j = 0; j < s; ++j) {
            double acc = 0.0;
            for (int64_t h = 0; h < attn.heads; ++h) {
                acc += double(attn.head(h)[i * s + j]);
            }
            out.at(i, j) = float(acc / double(attn.heads));
        }
    }
    return out;
}

ContributionScores cls_scores(const Matrix & avg_attn, int64_t cls_index) {
    const int64_t s = avg_attn.rows;
    if (cls_index < 0 || cls_index >= s) {
        throw IndexOutOfRange("cls_scores: cls_index outside [0, S)");
    }
    ContributionScores out;
    out.mode = ScoreMode::Cls;
    out.scores.reserve(size_t(s - 1));
    const float * row = avg_attn.row(cls_index);
    for (int64_t j = 0; j < s; ++j) {
        if (j != cls_index) {
            out.scores.push_back(row[j]);
        }
    }
    return out;
}

ContributionScores mean_received_scores(const Matrix & avg_attn) {
    const int64_t s = avg_attn.rows;
    if (s < 2) {
        throw DegenerateSequence("mean_received_scores: need S >= 2");
    }
    ContributionScores out;
    out.mode = ScoreMode::MeanReceived;
    out.scores.resize(size_t(s));
    for (int64_t j = 0; j < s; ++j) {
        double acc = 0.0;
        for (int64_t i = 0; i < s; ++i) {
            if (i != j) {
                acc += double(avg_attn.at(i, j));
            }
        }
        out.scores[size_t(j)] = float(acc / double(s - 1));
    }
    return out;
}

std::vector<TokenKey> global_rank(const std::vector<ContributionScores> & per_frame_scores) {
    struct Entry {
        float score;
        TokenKey key;
    };
    std::vector<Entry> entries;
    for (size_t f = 0; f < per_frame_scores.size(); ++f) {
        const auto & s = per_frame_scores[f].scores;
        for (size_t p = 0; p < s.size(); ++p) {
            if (!std::isfinite(s[p])) {
                throw NonFiniteInput("global_rank: non-finite score");
            }
            entries.push_back({s[p], TokenKey{int32_t(f), int32_t(p)}});
        }
    }
    std::sort(entries.begin(), entries.end(), [](const Entry & a, const Entry & b) {
        if (a.score != b.score) return a.score > b.score;
        return a.key < b.key;
    });
    std::vector<TokenKey> order;
    order.reserve(entries.size());
    for (const Entry & e : entries) {
        order.push_back(e.key);
    }
    return order;
}

} // namespace vtc
