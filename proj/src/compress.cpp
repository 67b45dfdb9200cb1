#include "vtc/compress.hpp"

#include "vtc/ops.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace vtc {

namespace {

std::unordered_map<TokenKey, int64_t, TokenKeyHash> key_to_row(const TokenTensor & tokens) {
    std::unordered_map<TokenKey, int64_t, TokenKeyHash> map;
    map.reserve(size_t(tokens.count()));
    for (int64_t i = 0; i < tokens.count(); ++i) {
        map.emplace(tokens.keys[size_t(i)], i);
    }
    return map;
}

double row_norm(const Matrix & m, int64_t i) {
    const float * r = m.row(i);
    double s = 0.0;
    for (int64_t j = 0; j < m.cols; ++j) {
        s += double(r[j]) * double(r[j]);
    }
    return std::sqrt(s);
}

double cosine_rows(const Matrix & m, int64_t a, int64_t b, const std::vector<double> & norms) {
    if (norms[size_t(a)] == 0.0 || norms[size_t(b)] == 0.0) {
        return 0.0;
    }
    const float * ra = m.row(a);
    const float * rb = m.row(b);
    double dot = 0.0;
    for (int64_t j = 0; j < m.cols; ++j) {
        dot += double(ra[j]) * double(rb[j]);
    }
    return dot / (norms[size_t(a)] * norms[size_t(b)]);
}

} // namespace

GreedySelection greedy_select(const TokenTensor & tokens, const std::vector<TokenKey> & order,
                              float tau, int64_t direct_budget) {
    if (tokens.count() == 0) {
        throw EmptyInput("greedy_select: no tokens");
    }
    auto rows = key_to_row(tokens);
    std::vector<double> norms(size_t(tokens.count()));
    for (int64_t i = 0; i < tokens.count(); ++i) {
        norms[size_t(i)] = row_norm(tokens.embeddings, i);
    }

    GreedySelection sel;
    std::vector<int64_t> pool_rows;
    for (const TokenKey & key : order) {
        auto it = rows.find(key);
        if (it == rows.end()) {
            throw ValidationError("greedy_select: rank key missing from token tensor");
        }
        const int64_t row = it->second;
        if (int64_t(sel.retained.size()) >= direct_budget) {
            sel.recycled.push_back(key);
            continue;
        }
        double max_sim = -2.0;
        for (int64_t p : pool_rows) {
            max_sim = std::max(max_sim, cosine_rows(tokens.embeddings, row, p, norms));
        }
        if (pool_rows.empty() || max_sim < double(tau)) {
            sel.retained.push_back(key);
            pool_rows.push_back(row);
        } else {
            sel.recycled.push_back(key);
        }
    }
    return sel;
}

ClusterAssignment dpc_knn(const TokenTensor & recycle, int64_t k, int64_t num_centers) {
    const int64_t n = recycle.count();
    if (n == 0) {
        throw EmptyPool("dpc_knn: empty recycle pool");
    }
    if (num_centers < 1 || num_centers > n) {
        throw ValidationError("dpc_knn: num_centers outside [1, N]");
    }

    ClusterAssignment out;
    out.rho.resize(size_t(n));
    out.delta.resize(size_t(n));
    out.gamma.resize(size_t(n));
    out.member_of.assign(size_t(n), -1);

    if (n == 1) {
        out.rho[0] = 1.0f;  // empty kNN sum
        out.delta[0] = 0.0f;
        out.gamma[0] = 0.0f;
        out.centers = {0};
        out.member_of[0] = 0;
        return out;
    }

    const int64_t k_eff = std::clamp<int64_t>(k, 1, n - 1);
    Matrix d2 = pairwise_sq_euclidean(recycle.embeddings);

    std::vector<int64_t> neigh(size_t(n - 1));
    for (int64_t i = 0; i < n; ++i) {
        neigh.clear();
        for (int64_t j = 0; j < n; ++j) {
            if (j != i) neigh.push_back(j);
        }
        std::sort(neigh.begin(), neigh.end(), [&](int64_t a, int64_t b) {
            float da = d2.at(i, a), db = d2.at(i, b);
            if (da != db) return da < db;
            return a < b;
        });
        double acc = 0.0;
        for (int64_t t = 0; t < k_eff; ++t) {
            acc += double(d2.at(i, neigh[size_t(t)]));
        }
        out.rho[size_t(i)] = float(std::exp(-acc / double(k_eff)));
    }

    // density order: rho descending, index ascending
    std::vector<int64_t> order(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) order[size_t(i)] = i;
    std::sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
        if (out.rho[size_t(a)] != out.rho[size_t(b)]) return out.rho[size_t(a)] > out.rho[size_t(b)];
        return a < b;
    });

    for (int64_t r = 0; r < n; ++r) {
        const int64_t i = order[size_t(r)];
        if (r == 0) {
            double best = 0.0;
            for (int64_t j = 0; j < n; ++j) {
                if (j != i) best = std::max(best, std::sqrt(double(d2.at(i, j))));
            }
            out.delta[size_t(i)] = float(best);
        } else {
            double best = std::numeric_limits<double>::infinity();
            for (int64_t q = 0; q < r; ++q) {
                best = std::min(best, std::sqrt(double(d2.at(i, order[size_t(q)]))));
            }
            out.delta[size_t(i)] = float(best);
        }
        out.gamma[size_t(i)] = out.rho[size_t(i)] * out.delta[size_t(i)];
    }

    std::vector<int64_t> by_gamma(order.begin(), order.end());
    std::sort(by_gamma.begin(), by_gamma.end(), [&](int64_t a, int64_t b) {
        if (out.gamma[size_t(a)] != out.gamma[size_t(b)]) return out.gamma[size_t(a)] > out.gamma[size_t(b)];
        return a < b;
    });
    out.centers.assign(by_gamma.begin(), by_gamma.begin() + num_centers);
    std::sort(out.centers.begin(), out.centers.end());

    for (int64_t i = 0; i < n; ++i) {
        int64_t best_c = out.centers[0];
        double best_d = std::numeric_limits<double>::infinity();
        for (int64_t c : out.centers) {
            if (c == i) {
                best_c = c;
                break;
            }
            double d = double(d2.at(i, c));
            if (d < best_d) {
                best_d = d;
                best_c = c;
            }
        }
        out.member_of[size_t(i)] = best_c;
    }
    return out;
}

TokenTensor merge_clusters(const TokenTensor & recycle, const ClusterAssignment & assign) {
    const int64_t n = recycle.count();
    const int64_t d = recycle.dim();
    const int64_t c = int64_t(assign.centers.size());
    Matrix merged(c, d);
    std::vector<TokenKey> keys(static_cast<size_t>(c));

    std::unordered_map<int64_t, int64_t> center_slot;
    for (int64_t s = 0; s < c; ++s) {
        center_slot.emplace(assign.centers[size_t(s)], s);
        keys[size_t(s)] = recycle.keys[size_t(assign.centers[size_t(s)])];
    }

    std::vector<std::vector<double>> acc(size_t(c), std::vector<double>(size_t(d), 0.0));
    std::vector<int64_t> counts(size_t(c), 0);
    for (int64_t i = 0; i < n; ++i) {
        const int64_t slot = center_slot.at(assign.member_of[size_t(i)]);
        const float * row = recycle.embeddings.row(i);
        for (int64_t j = 0; j < d; ++j) {
            acc[size_t(slot)][size_t(j)] += double(row[j]);
        }
        ++counts[size_t(slot)];
    }
    for (int64_t s = 0; s < c; ++s) {
        for (int64_t j = 0; j < d; ++j) {
            merged.at(s, j) = float(acc[size_t(s)][size_t(j)] / double(counts[size_t(s)]));
        }
    }
    return TokenTensor{std::move(merged), std::move(keys)};
}

RetentionResult compress(const TokenTensor & tokens, const std::vector<ContributionScores> & scores,
                         const CompressionConfig & cfg) {
    const int64_t n = tokens.count();
    if (n == 0) {
        throw EmptyInput("compress: no tokens");
    }
    cfg.validate();

    int64_t total = 0;
    for (const auto & s : scores) total += int64_t(s.scores.size());
    if (total != n) {
        throw ShapeMismatch("compress: score count does not match token count");
    }

    const int64_t budget = std::min<int64_t>(n, std::max<int64_t>(1, std::lround(double(cfg.retention_ratio) * double(n))));
    const int64_t cluster_quota = std::lround(double(cfg.cluster_ratio) * double(budget));
    const int64_t direct_budget = budget - cluster_quota;

    std::vector<TokenKey> order = global_rank(scores);
    GreedySelection sel = greedy_select(tokens, order, cfg.tau, direct_budget);

    const int64_t shortfall = direct_budget - int64_t(sel.retained.size());
    int64_t num_centers = std::min<int64_t>(cluster_quota + shortfall, int64_t(sel.recycled.size()));

    RetentionResult res;
    res.retained_direct = sel.retained;
    res.recycled = sel.recycled;
    res.budget = budget;

    if (num_centers > 0) {
        // cluster pool rows in ascending key order for stable tie-breaks
        std::vector<TokenKey> pool_keys = sel.recycled;
        std::sort(pool_keys.begin(), pool_keys.end());
        auto rows = key_to_row(tokens);
        Matrix pool(int64_t(pool_keys.size()), tokens.dim());
        for (size_t i = 0; i < pool_keys.size(); ++i) {
            const float * src = tokens.embeddings.row(rows.at(pool_keys[i]));
            std::copy(src, src + tokens.dim(), pool.row(int64_t(i)));
        }
        TokenTensor recycle{std::move(pool), pool_keys};

        const int64_t k = cfg.knn_k > 0
            ? int64_t(cfg.knn_k)
            : std::max<int64_t>(1, std::lround(std::sqrt(double(recycle.count()))));
        ClusterAssignment assign = dpc_knn(recycle, k, num_centers);
        res.merged_tokens = merge_clusters(recycle, assign);
        res.cluster_members.resize(size_t(res.merged_tokens.count()));
        std::unordered_map<int64_t, int64_t> center_slot;
        for (size_t s = 0; s < assign.centers.size(); ++s) {
            center_slot.emplace(assign.centers[s], int64_t(s));
        }
        for (int64_t i = 0; i < recycle.count(); ++i) {
            res.cluster_members[size_t(center_slot.at(assign.member_of[size_t(i)]))].push_back(recycle.keys[size_t(i)]);
        }
    } else {
        res.merged_tokens.embeddings = Matrix(0, tokens.dim());
    }

    for (const TokenKey & key : res.retained_direct) {
        res.final_sequence.push_back({SequenceEntry::Kind::Direct, key, -1});
    }
    for (int64_t c = 0; c < res.merged_tokens.count(); ++c) {
        res.final_sequence.push_back({SequenceEntry::Kind::Merged, res.merged_tokens.keys[size_t(c)], c});
    }
    std::sort(res.final_sequence.begin(), res.final_sequence.end(),
              [](const SequenceEntry & a, const SequenceEntry & b) { return a.key < b.key; });
    return res;
}

TokenTensor materialize(const TokenTensor & tokens, const RetentionResult & result) {
    auto rows = key_to_row(tokens);
    Matrix out(int64_t(result.final_sequence.size()), tokens.dim());
    std::vector<TokenKey> keys;
    keys.reserve(result.final_sequence.size());
    for (size_t i = 0; i < result.final_sequence.size(); ++i) {
        const SequenceEntry & e = result.final_sequence[i];
        const float * src = e.kind == SequenceEntry::Kind::Direct
            ? tokens.embeddings.row(rows.at(e.key))
            : result.merged_tokens.embeddings.row(e.cluster_id);
        std::copy(src, src + tokens.dim(), out.row(int64_t(i)));
        keys.push_back(e.key);
    }
    return TokenTensor{std::move(out), std::move(keys)};
}

} // namespace vtc
