#include "vtc/reference.hpp"

#include <cmath>

namespace vtc::reference {

namespace {

struct Flat {
    float score;
    TokenKey key;
    int64_t row;
};

int64_t find_row(const TokenTensor & t, TokenKey key) {
    for (int64_t i = 0; i < t.count(); ++i) {
        if (t.keys[size_t(i)] == key) return i;
    }
    throw ValidationError("reference: key not found");
}

double naive_cosine(const float * a, const float * b, int64_t d) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (int64_t j = 0; j < d; ++j) {
        dot += double(a[j]) * double(b[j]);
        na += double(a[j]) * double(a[j]);
        nb += double(b[j]) * double(b[j]);
    }
    na = std::sqrt(na);
    nb = std::sqrt(nb);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (na * nb);
}

} // namespace

RetentionResult naive_compress(const TokenTensor & tokens,
                               const std::vector<ContributionScores> & scores,
                               const CompressionConfig & cfg) {
    const int64_t n = tokens.count();
    const int64_t d = tokens.dim();
    if (n == 0) {
        throw EmptyInput("naive_compress: no tokens");
    }

    std::vector<Flat> entries;
    for (size_t f = 0; f < scores.size(); ++f) {
        for (size_t p = 0; p < scores[f].scores.size(); ++p) {
            TokenKey key{int32_t(f), int32_t(p)};
            entries.push_back({scores[f].scores[p], key, find_row(tokens, key)});
        }
    }
    if (int64_t(entries.size()) != n) {
        throw ShapeMismatch("naive_compress: score count mismatch");
    }

    // rank by repeated max scan: score desc, key asc
    std::vector<Flat> rank;
    std::vector<bool> used(entries.size(), false);
    for (size_t step = 0; step < entries.size(); ++step) {
        int64_t best = -1;
        for (size_t i = 0; i < entries.size(); ++i) {
            if (used[i]) continue;
            if (best < 0) {
                best = int64_t(i);
                continue;
            }
            const Flat & a = entries[i];
            const Flat & b = entries[size_t(best)];
            if (a.score > b.score || (a.score == b.score && a.key < b.key)) {
                best = int64_t(i);
            }
        }
        used[size_t(best)] = true;
        rank.push_back(entries[size_t(best)]);
    }

    const int64_t budget = std::min<int64_t>(n, std::max<int64_t>(1, std::lround(double(cfg.retention_ratio) * double(n))));
    const int64_t cluster_quota = std::lround(double(cfg.cluster_ratio) * double(budget));
    const int64_t direct_budget = budget - cluster_quota;

    RetentionResult res;
    res.budget = budget;
    std::vector<int64_t> pool_rows;
    std::vector<Flat> recycled;
    for (const Flat & cand : rank) {
        bool admit = false;
        if (int64_t(pool_rows.size()) < direct_budget) {
            double max_sim = -2.0;
            for (int64_t p : pool_rows) {
                double c = naive_cosine(tokens.embeddings.row(cand.row), tokens.embeddings.row(p), d);
                if (c > max_sim) max_sim = c;
            }
            admit = pool_rows.empty() || max_sim < double(cfg.tau);
        }
        if (admit) {
            pool_rows.push_back(cand.row);
            res.retained_direct.push_back(cand.key);
        } else {
            recycled.push_back(cand);
            res.recycled.push_back(cand.key);
        }
    }

    const int64_t shortfall = direct_budget - int64_t(res.retained_direct.size());
    const int64_t num_centers = std::min<int64_t>(cluster_quota + shortfall, int64_t(recycled.size()));

    if (num_centers > 0) {
        // pool in ascending key order, naive insertion sort
        std::vector<Flat> pool(recycled);
        for (size_t i = 1; i < pool.size(); ++i) {
            Flat x = pool[i];
            size_t j = i;
            while (j > 0 && x.key < pool[j - 1].key) {
                pool[j] = pool[j - 1];
                --j;
            }
            pool[j] = x;
        }
        const int64_t np = int64_t(pool.size());

        std::vector<std::vector<float>> d2(size_t(np), std::vector<float>(size_t(np), 0.0f));
        for (int64_t i = 0; i < np; ++i) {
            for (int64_t j = 0; j < np; ++j) {
                double s = 0.0;
                const float * ri = tokens.embeddings.row(pool[size_t(i)].row);
                const float * rj = tokens.embeddings.row(pool[size_t(j)].row);
                for (int64_t c = 0; c < d; ++c) {
                    double dd = double(ri[c]) - double(rj[c]);
                    s += dd * dd;
                }
                d2[size_t(i)][size_t(j)] = float(s);
            }
        }

        std::vector<float> rho(static_cast<size_t>(np)), delta(static_cast<size_t>(np)), gamma(static_cast<size_t>(np));
        if (np == 1) {
            rho[0] = 1.0f;
            delta[0] = 0.0f;
            gamma[0] = 0.0f;
        } else {
            const int64_t k_raw = cfg.knn_k > 0 ? cfg.knn_k : std::max<int64_t>(1, std::lround(std::sqrt(double(np))));
            const int64_t k = std::clamp<int64_t>(k_raw, 1, np - 1);
            for (int64_t i = 0; i < np; ++i) {
                // select the k smallest neighbour distances by repeated scan
                std::vector<bool> taken(size_t(np), false);
                taken[size_t(i)] = true;
                double acc = 0.0;
                for (int64_t t = 0; t < k; ++t) {
                    int64_t best = -1;
                    for (int64_t j = 0; j < np; ++j) {
                        if (taken[size_t(j)]) continue;
                        if (best < 0 || d2[size_t(i)][size_t(j)] < d2[size_t(i)][size_t(best)]) {
                            best = j;
                        }
                    }
                    taken[size_t(best)] = true;
                    acc += double(d2[size_t(i)][size_t(best)]);
                }
                rho[size_t(i)] = float(std::exp(-acc / double(k)));
            }

            // density order: rho desc, index asc (selection scan)
            std::vector<int64_t> order;
            std::vector<bool> placed(size_t(np), false);
            for (int64_t step = 0; step < np; ++step) {
                int64_t best = -1;
                for (int64_t i = 0; i < np; ++i) {
                    if (placed[size_t(i)]) continue;
                    if (best < 0 || rho[size_t(i)] > rho[size_t(best)]) best = i;
                }
                placed[size_t(best)] = true;
                order.push_back(best);
            }

            for (int64_t r = 0; r < np; ++r) {
                const int64_t i = order[size_t(r)];
                double best = r == 0 ? 0.0 : std::numeric_limits<double>::infinity();
                if (r == 0) {
                    for (int64_t j = 0; j < np; ++j) {
                        if (j == i) continue;
                        double dist = std::sqrt(double(d2[size_t(i)][size_t(j)]));
                        if (dist > best) best = dist;
                    }
                } else {
                    for (int64_t q = 0; q < r; ++q) {
                        double dist = std::sqrt(double(d2[size_t(i)][size_t(order[size_t(q)])]));
                        if (dist < best) best = dist;
                    }
                }
                delta[size_t(i)] = float(best);
                gamma[size_t(i)] = rho[size_t(i)] * delta[size_t(i)];
            }
        }

        // centers: top num_centers by gamma desc, index asc
        std::vector<int64_t> centers;
        std::vector<bool> is_center(size_t(np), false);
        for (int64_t step = 0; step < num_centers; ++step) {
            int64_t best = -1;
            for (int64_t i = 0; i < np; ++i) {
                if (is_center[size_t(i)]) continue;
                if (best < 0 || gamma[size_t(i)] > gamma[size_t(best)]) best = i;
            }
            is_center[size_t(best)] = true;
        }
        for (int64_t i = 0; i < np; ++i) {
            if (is_center[size_t(i)]) centers.push_back(i);
        }

        res.merged_tokens.embeddings = Matrix(int64_t(centers.size()), d);
        res.merged_tokens.keys.resize(centers.size());
        res.cluster_members.resize(centers.size());
        std::vector<std::vector<double>> acc(centers.size(), std::vector<double>(size_t(d), 0.0));
        std::vector<int64_t> counts(centers.size(), 0);
        for (int64_t i = 0; i < np; ++i) {
            int64_t slot = -1;
            double best = std::numeric_limits<double>::infinity();
            for (size_t s = 0; s < centers.size(); ++s) {
                if (centers[s] == i) {
                    slot = int64_t(s);
                    break;
                }
                if (double(d2[size_t(i)][size_t(centers[s])]) < best) {
                    best = double(d2[size_t(i)][size_t(centers[s])]);
                    slot = int64_t(s);
                }
            }
            const float * row = tokens.embeddings.row(pool[size_t(i)].row);
            for (int64_t c = 0; c < d; ++c) {
                acc[size_t(slot)][size_t(c)] += double(row[c]);
            }
            ++counts[size_t(slot)];
            res.cluster_members[size_t(slot)].push_back(pool[size_t(i)].key);
        }
        for (size_t s = 0; s < centers.size(); ++s) {
            res.merged_tokens.keys[s] = pool[size_t(centers[s])].key;
            for (int64_t c = 0; c < d; ++c) {
                res.merged_tokens.embeddings.at(int64_t(s), c) = float(acc[s][size_t(c)] / double(counts[s]));
            }
        }
    } else {
        res.merged_tokens.embeddings = Matrix(0, d);
    }

    for (const TokenKey & key : res.retained_direct) {
        res.final_sequence.push_back({SequenceEntry::Kind::Direct, key, -1});
    }
    for (int64_t c = 0; c < res.merged_tokens.count(); ++c) {
        res.final_sequence.push_back({SequenceEntry::Kind::Merged, res.merged_tokens.keys[size_t(c)], c});
    }
    // insertion sort by key
    for (size_t i = 1; i < res.final_sequence.size(); ++i) {
        SequenceEntry x = res.final_sequence[i];
        size_t j = i;
        while (j > 0 && x.key < res.final_sequence[j - 1].key) {
            res.final_sequence[j] = res.final_sequence[j - 1];
            --j;
        }
        res.final_sequence[j] = x;
    }
    return res;
}

TokenTensor naive_materialize(const TokenTensor & tokens, const RetentionResult & result) {
    Matrix out(int64_t(result.final_sequence.size()), tokens.dim());
    std::vector<TokenKey> keys;
    for (size_t i = 0; i < result.final_sequence.size(); ++i) {
        const SequenceEntry & e = result.final_sequence[i];
        const float * src = e.kind == SequenceEntry::Kind::Direct
            ? tokens.embeddings.row(find_row(tokens, e.key))
            : result.merged_tokens.embeddings.row(e.cluster_id);
        for (int64_t j = 0; j < tokens.dim(); ++j) {
            out.at(int64_t(i), j) = src[j];
        }
        keys.push_back(e.key);
    }
    return TokenTensor{std::move(out), std::move(keys)};
}

MergePlan naive_plan_merge(const TokenTensor & visual, const std::vector<float> & combined,
                           float keep_ratio) {
    const int64_t n = visual.count();
    const int64_t keep = int64_t(std::ceil(double(keep_ratio) * double(n)));

    MergePlan plan;
    std::vector<bool> kept(size_t(n), false);
    for (int64_t step = 0; step < keep; ++step) {
        int64_t best = -1;
        for (int64_t i = 0; i < n; ++i) {
            if (kept[size_t(i)]) continue;
            if (best < 0 || combined[size_t(i)] > combined[size_t(best)]) best = i;
        }
        kept[size_t(best)] = true;
    }
    for (int64_t i = 0; i < n; ++i) {
        (kept[size_t(i)] ? plan.retaining : plan.pruning).push_back(i);
    }
    plan.target.assign(size_t(n), -1);

    std::vector<std::vector<double>> acc(plan.retaining.size(), std::vector<double>(size_t(visual.dim()), 0.0));
    std::vector<int64_t> counts(plan.retaining.size(), 1);
    for (size_t s = 0; s < plan.retaining.size(); ++s) {
        plan.target[size_t(plan.retaining[s])] = plan.retaining[s];
        const float * r = visual.embeddings.row(plan.retaining[s]);
        for (int64_t j = 0; j < visual.dim(); ++j) acc[s][size_t(j)] = double(r[j]);
    }
    for (int64_t j : plan.pruning) {
        int64_t best = -1;
        double best_cos = -2.0;
        for (size_t s = 0; s < plan.retaining.size(); ++s) {
            double c = naive_cosine(visual.embeddings.row(j), visual.embeddings.row(plan.retaining[s]), visual.dim());
            if (c > best_cos) {
                best_cos = c;
                best = int64_t(s);
            }
        }
        plan.target[size_t(j)] = plan.retaining[size_t(best)];
        const float * r = visual.embeddings.row(j);
        for (int64_t c = 0; c < visual.dim(); ++c) acc[size_t(best)][size_t(c)] += double(r[c]);
        ++counts[size_t(best)];
    }

    plan.merged_embeddings.embeddings = Matrix(keep, visual.dim());
    plan.merged_embeddings.keys.resize(size_t(keep));
    for (size_t s = 0; s < plan.retaining.size(); ++s) {
        plan.merged_embeddings.keys[s] = visual.keys[size_t(plan.retaining[s])];
        for (int64_t j = 0; j < visual.dim(); ++j) {
            plan.merged_embeddings.embeddings.at(int64_t(s), j) = float(acc[s][size_t(j)] / double(counts[s]));
        }
    }
    return plan;
}

} // namespace vtc::reference
