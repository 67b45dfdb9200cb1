#include "vtc/synth.hpp"

#include "vtc/ops.hpp"

#include <cmath>
#include <random>

namespace vtc {

namespace {

// Box-Muller on raw mt19937_64 output; std::normal_distribution's algorithm is
// implementation-defined, this keeps streams stable across toolchains.
class Gaussian {
public:
    explicit Gaussian(uint64_t seed) : rng_(seed) {}

    double uniform() {
        return (double(rng_()) + 0.5) * (1.0 / 18446744073709551616.0);
    }

    double operator()() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u = uniform();
        double v = uniform();
        double r = std::sqrt(-2.0 * std::log(u));
        spare_ = r * std::sin(2.0 * M_PI * v);
        has_spare_ = true;
        return r * std::cos(2.0 * M_PI * v);
    }

    uint64_t raw() { return rng_(); }

private:
    std::mt19937_64 rng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

void unit_normalize_row(float * row, int64_t d) {
    double s = 0.0;
    for (int64_t j = 0; j < d; ++j) s += double(row[j]) * double(row[j]);
    s = std::sqrt(s);
    if (s > 0.0) {
        for (int64_t j = 0; j < d; ++j) row[j] = float(double(row[j]) / s);
    }
}

} // namespace

SynthVideo synth_video(const SynthParams & p) {
    if (p.frames < 1 || p.tokens_per_frame < 1 || p.dim < 1 || p.heads < 1) {
        throw ValidationError("synth_video: all dims must be >= 1");
    }
    if (!(p.temporal_corr >= 0.0f && p.temporal_corr < 1.0f)) {
        throw ValidationError("synth_video: temporal_corr outside [0,1)");
    }
    if (!(p.spatial_dup >= 0.0f && p.spatial_dup <= 1.0f)) {
        throw ValidationError("synth_video: spatial_dup outside [0,1]");
    }

    Gaussian g(p.seed);
    const int64_t b = p.frames, nv = p.tokens_per_frame, d = p.dim;
    const double corr = double(p.temporal_corr);
    const double fresh = std::sqrt(1.0 - corr * corr);
    const int64_t n_dup = int64_t(std::floor(double(p.spatial_dup) * double(nv)));
    const int64_t n_base = nv - n_dup;
    const int64_t n_salient = std::max<int64_t>(1, nv / 8);

    // AR(1) latent chain, then duplication and normalization per frame
    std::vector<double> latent(size_t(b) * size_t(nv) * size_t(d));
    for (int64_t t = 0; t < b; ++t) {
        for (int64_t i = 0; i < nv; ++i) {
            double * cur = latent.data() + (size_t(t) * size_t(nv) + size_t(i)) * size_t(d);
            if (t == 0) {
                for (int64_t j = 0; j < d; ++j) cur[j] = g();
            } else {
                const double * prev = latent.data() + (size_t(t - 1) * size_t(nv) + size_t(i)) * size_t(d);
                for (int64_t j = 0; j < d; ++j) cur[j] = corr * prev[j] + fresh * g();
            }
        }
    }

    SynthVideo out;
    out.tokens.embeddings = Matrix(b * nv, d);
    out.tokens.keys.resize(size_t(b) * size_t(nv));
    out.salient.assign(size_t(b), std::vector<bool>(size_t(nv), false));

    for (int64_t t = 0; t < b; ++t) {
        std::vector<int64_t> dup_source(size_t(nv), -1);
        for (int64_t i = 0; i < nv; ++i) {
            const int64_t row = t * nv + i;
            float * dst = out.tokens.embeddings.row(row);
            if (i >= n_base && n_base > 0) {
                const int64_t src = int64_t(g.raw() % uint64_t(n_base));
                dup_source[size_t(i)] = src;
                const float * s = out.tokens.embeddings.row(t * nv + src);
                for (int64_t j = 0; j < d; ++j) dst[j] = s[j] + float(0.01 * g());
            } else {
                const double * l = latent.data() + (size_t(t) * size_t(nv) + size_t(i)) * size_t(d);
                for (int64_t j = 0; j < d; ++j) dst[j] = float(l[j]);
            }
            unit_normalize_row(dst, d);
            out.tokens.keys[size_t(row)] = TokenKey{int32_t(t), int32_t(i)};
        }

        // plant a salient subset; a near-copy of a salient token is salient too
        for (int64_t s = 0; s < n_salient; ++s) {
            out.salient[size_t(t)][size_t(g.raw() % uint64_t(std::max<int64_t>(1, n_base)))] = true;
        }
        for (int64_t i = n_base; i < nv; ++i) {
            if (dup_source[size_t(i)] >= 0 && out.salient[size_t(t)][size_t(dup_source[size_t(i)])]) {
                out.salient[size_t(t)][size_t(i)] = true;
            }
        }

        std::vector<float> logits(size_t(p.heads) * size_t(nv) * size_t(nv));
        for (int64_t h = 0; h < p.heads; ++h) {
            for (int64_t i = 0; i < nv; ++i) {
                for (int64_t j = 0; j < nv; ++j) {
                    float v = float(g());
                    if (out.salient[size_t(t)][size_t(j)]) v += 3.0f;
                    logits[(size_t(h) * size_t(nv) + size_t(i)) * size_t(nv) + size_t(j)] = v;
                }
            }
        }
        out.attention.push_back(attention_from_logits(p.heads, nv, AttentionScope::PerFrame, logits, 1.0f));
    }
    return out;
}

TokenTensor synth_text(int64_t n_text, int64_t dim, uint64_t seed) {
    if (n_text < 0 || dim < 1) {
        throw ValidationError("synth_text: bad dims");
    }
    Gaussian g(seed ^ 0x9e3779b97f4a7c15ull);
    Matrix m(n_text, dim);
    std::vector<TokenKey> keys(static_cast<size_t>(n_text));
    for (int64_t i = 0; i < n_text; ++i) {
        float * row = m.row(i);
        for (int64_t j = 0; j < dim; ++j) row[j] = float(g());
        unit_normalize_row(row, dim);
        keys[size_t(i)] = TokenKey{1 << 20, int32_t(i)};  // reserved frame for text
    }
    return TokenTensor{std::move(m), std::move(keys)};
}

} // namespace vtc
