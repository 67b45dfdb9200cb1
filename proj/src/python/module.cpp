#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vtc/ops.hpp"
#include "vtc/pipeline.hpp"

namespace py = pybind11;
using vtc::Matrix;
using vtc::TokenTensor;

namespace {

Matrix matrix_from_array(const py::array_t<float, py::array::c_style | py::array::forcecast> & arr) {
    if (arr.ndim() != 2) {
        throw vtc::ShapeMismatch("expected a 2-D array");
    }
    Matrix m(arr.shape(0), arr.shape(1));
    std::copy(arr.data(), arr.data() + arr.size(), m.data.begin());
    return m;
}

py::array_t<float> array_from_matrix(const Matrix & m) {
    py::array_t<float> out({m.rows, m.cols});
    std::copy(m.data.begin(), m.data.end(), out.mutable_data());
    return out;
}

TokenTensor tokens_from_array(const py::array_t<float, py::array::c_style | py::array::forcecast> & arr,
                              int32_t frame_tag = 0) {
    if (arr.ndim() == 2) {
        Matrix m = matrix_from_array(arr);
        std::vector<vtc::TokenKey> keys(size_t(m.rows));
        for (size_t i = 0; i < keys.size(); ++i) {
            keys[i] = vtc::TokenKey{frame_tag, int32_t(i)};
        }
        return vtc::make_token_tensor(std::move(m), std::move(keys));
    }
    if (arr.ndim() == 3) {
        const int64_t b = arr.shape(0), nv = arr.shape(1), d = arr.shape(2);
        Matrix m(b * nv, d);
        std::copy(arr.data(), arr.data() + arr.size(), m.data.begin());
        std::vector<vtc::TokenKey> keys(size_t(b) * size_t(nv));
        for (int64_t f = 0; f < b; ++f) {
            for (int64_t p = 0; p < nv; ++p) {
                keys[size_t(f * nv + p)] = vtc::TokenKey{int32_t(f), int32_t(p)};
            }
        }
        return vtc::make_token_tensor(std::move(m), std::move(keys));
    }
    throw vtc::ShapeMismatch("expected a 2-D or 3-D array of embeddings");
}

vtc::CompressionConfig config_from_kwargs(float tau, float retention_ratio, float cluster_ratio,
                                          float lambda, float inner_keep_ratio, int inner_layer,
                                          int knn_k, uint64_t seed) {
    vtc::CompressionConfig cfg;
    cfg.tau = tau;
    cfg.retention_ratio = retention_ratio;
    cfg.cluster_ratio = cluster_ratio;
    cfg.lambda = lambda;
    cfg.inner_keep_ratio = inner_keep_ratio;
    cfg.inner_layer = inner_layer;
    cfg.knn_k = knn_k;
    cfg.seed = seed;
    cfg.validate();
    return cfg;
}

py::list keys_to_list(const std::vector<vtc::TokenKey> & keys) {
    py::list out;
    for (auto k : keys) {
        out.append(py::make_tuple(k.frame, k.position));
    }
    return out;
}

} // namespace

PYBIND11_MODULE(_vtc, m) {
    m.doc() = "training-free video token compression";

    py::register_exception<vtc::Error>(m, "VtcError");

    m.def("softmax_rows", [](py::array_t<float, py::array::c_style | py::array::forcecast> logits, float scale) {
        return array_from_matrix(vtc::softmax_rows(matrix_from_array(logits), scale));
    }, py::arg("logits"), py::arg("scale") = 1.0f);

    m.def("cosine_matrix", [](py::array_t<float, py::array::c_style | py::array::forcecast> a,
                              py::array_t<float, py::array::c_style | py::array::forcecast> b) {
        return array_from_matrix(vtc::cosine_matrix(matrix_from_array(a), matrix_from_array(b)));
    });

    m.def("minmax_normalize", [](const std::vector<float> & v) { return vtc::minmax_normalize(v); });

    m.def("pairwise_sq_euclidean", [](py::array_t<float, py::array::c_style | py::array::forcecast> x) {
        return array_from_matrix(vtc::pairwise_sq_euclidean(matrix_from_array(x)));
    });

    m.def("compress",
          [](py::array_t<float, py::array::c_style | py::array::forcecast> video,
             py::array_t<float, py::array::c_style | py::array::forcecast> attention,
             float tau, float retention_ratio, float cluster_ratio, float lambda,
             float inner_keep_ratio, int inner_layer, int knn_k, uint64_t seed) {
              if (attention.ndim() != 4) {
                  throw vtc::ShapeMismatch("attention must be [frames, heads, S, S]");
              }
              vtc::PipelineInput input;
              input.tokens = tokens_from_array(video);
              const int64_t b = attention.shape(0), h = attention.shape(1), s = attention.shape(2);
              const size_t per = size_t(h) * size_t(s) * size_t(s);
              for (int64_t f = 0; f < b; ++f) {
                  std::vector<float> data(attention.data() + per * size_t(f),
                                          attention.data() + per * size_t(f + 1));
                  input.frame_attention.push_back(
                      vtc::make_attention_tensor(h, s, vtc::AttentionScope::PerFrame, std::move(data)));
              }
              input.text.embeddings = Matrix(0, input.tokens.dim());
              auto cfg = config_from_kwargs(tau, retention_ratio, cluster_ratio, lambda,
                                            inner_keep_ratio, inner_layer, knn_k, seed);
              vtc::PipelineResult res = vtc::run_pipeline(input, cfg, vtc::LlmArchSpec{});
              py::dict out;
              out["embeddings"] = array_from_matrix(res.output.embeddings);
              out["keys"] = keys_to_list(res.output.keys);
              out["retained_direct"] = keys_to_list(res.retention.retained_direct);
              out["budget"] = res.retention.budget;
              out["flops_ratio"] = res.stats.flops_ratio;
              return out;
          },
          py::arg("video"), py::arg("attention"), py::arg("tau") = 0.7f,
          py::arg("retention_ratio") = 0.1f, py::arg("cluster_ratio") = 0.3f,
          py::arg("lambda_") = 0.5f, py::arg("inner_keep_ratio") = 0.5f,
          py::arg("inner_layer") = 18, py::arg("knn_k") = 0, py::arg("seed") = 0);

    m.def("text_merge",
          [](py::array_t<float, py::array::c_style | py::array::forcecast> visual,
             py::array_t<float, py::array::c_style | py::array::forcecast> text,
             float lambda, float keep_ratio) {
              TokenTensor v = tokens_from_array(visual);
              TokenTensor t = text.size() > 0 ? tokens_from_array(text, 1 << 20)
                                              : TokenTensor{Matrix(0, v.dim()), {}};
              vtc::AttentionTensor attn = vtc::derive_global_attention(v, t);
              vtc::TextMergeResult res = vtc::text_merge(v, t, attn, lambda, keep_ratio);
              py::dict out;
              out["embeddings"] = array_from_matrix(res.plan.merged_embeddings.embeddings);
              out["retaining"] = res.plan.retaining;
              out["pruning"] = res.plan.pruning;
              out["target"] = res.plan.target;
              out["combined"] = res.scores.combined;
              return out;
          },
          py::arg("visual"), py::arg("text"), py::arg("lambda_") = 0.5f, py::arg("keep_ratio") = 0.5f);

    m.def("flops",
          [](int64_t layers, int64_t hidden, int64_t ffn, int64_t decode_tokens,
             const std::vector<int64_t> & schedule, int64_t baseline_n) {
              vtc::LlmArchSpec spec{layers, hidden, ffn, decode_tokens};
              vtc::FlopsReport rep = baseline_n > 0
                  ? vtc::flops_vs_baseline(spec, vtc::PruneSchedule{schedule}, baseline_n)
                  : vtc::flops(spec, vtc::PruneSchedule{schedule});
              py::dict out;
              out["total"] = rep.total;
              out["prefill"] = rep.prefill;
              out["decode"] = rep.decode;
              out["ratio_vs_baseline"] = rep.ratio_vs_baseline;
              return out;
          },
          py::arg("layers"), py::arg("hidden"), py::arg("ffn"), py::arg("decode_tokens"),
          py::arg("schedule"), py::arg("baseline_n") = 0);

    m.def("schedule_from_pipeline",
          [](int64_t n_input, double retention_ratio, int64_t inner_layer, double inner_keep, int64_t layers) {
              return vtc::schedule_from_pipeline(n_input, retention_ratio, inner_layer, inner_keep, layers)
                  .tokens_per_layer;
          },
          py::arg("n_input"), py::arg("retention_ratio"), py::arg("inner_layer") = 18,
          py::arg("inner_keep") = 1.0, py::arg("layers") = 28);

    m.def("synth_video",
          [](int64_t frames, int64_t tokens_per_frame, int64_t dim, int64_t heads,
             float temporal_corr, float spatial_dup, uint64_t seed) {
              vtc::SynthParams p{frames, tokens_per_frame, dim, heads, temporal_corr, spatial_dup, seed};
              vtc::SynthVideo v = vtc::synth_video(p);
              py::array_t<float> video({frames, tokens_per_frame, dim});
              std::copy(v.tokens.embeddings.data.begin(), v.tokens.embeddings.data.end(),
                        video.mutable_data());
              py::array_t<float> attn({frames, heads, tokens_per_frame, tokens_per_frame});
              float * dst = attn.mutable_data();
              for (const auto & a : v.attention) {
                  dst = std::copy(a.data.begin(), a.data.end(), dst);
              }
              return py::make_tuple(video, attn);
          },
          py::arg("frames") = 32, py::arg("tokens_per_frame") = 196, py::arg("dim") = 128,
          py::arg("heads") = 4, py::arg("temporal_corr") = 0.0f, py::arg("spatial_dup") = 0.0f,
          py::arg("seed") = 0);

    m.def("oracle_check", [](int num_seeds, uint64_t base_seed) {
        vtc::OracleReport rep = vtc::oracle_check(num_seeds, base_seed);
        py::dict out;
        out["passes"] = rep.passes;
        out["failures"] = rep.failures;
        out["first_mismatch"] = rep.first_mismatch;
        return out;
    }, py::arg("num_seeds") = 20, py::arg("base_seed") = 0);
}
