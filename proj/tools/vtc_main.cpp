#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

#include "vtc/pipeline.hpp"
#include "vtc/tensor_io.hpp"

using nlohmann::json;

namespace {

constexpr int EXIT_VALIDATION = 2;
constexpr int EXIT_ORACLE = 3;

struct Config {
    vtc::CompressionConfig cfg;
    vtc::LlmArchSpec arch;
};

Config load_config(const std::string & path) {
    Config c;
    if (path.empty()) return c;
    std::ifstream f(path);
    if (!f) {
        throw vtc::ParseError("cannot open config: " + path);
    }
    json j;
    try {
        f >> j;
    } catch (const json::exception & e) {
        throw vtc::ParseError("config parse error: " + std::string(e.what()));
    }
    auto & cfg = c.cfg;
    if (j.contains("tau")) cfg.tau = j["tau"].get<float>();
    if (j.contains("retention_ratio")) cfg.retention_ratio = j["retention_ratio"].get<float>();
    if (j.contains("cluster_ratio")) cfg.cluster_ratio = j["cluster_ratio"].get<float>();
    if (j.contains("lambda")) cfg.lambda = j["lambda"].get<float>();
    if (j.contains("inner_keep_ratio")) cfg.inner_keep_ratio = j["inner_keep_ratio"].get<float>();
    if (j.contains("inner_layer")) cfg.inner_layer = j["inner_layer"].get<int>();
    if (j.contains("knn_k")) cfg.knn_k = j["knn_k"].get<int>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();
    if (j.contains("arch")) {
        const json & a = j["arch"];
        if (a.contains("layers")) c.arch.layers = a["layers"].get<int64_t>();
        if (a.contains("hidden")) c.arch.hidden = a["hidden"].get<int64_t>();
        if (a.contains("ffn")) c.arch.ffn = a["ffn"].get<int64_t>();
        if (a.contains("decode_tokens")) c.arch.decode_tokens = a["decode_tokens"].get<int64_t>();
    }
    cfg.validate();
    return c;
}

json key_json(vtc::TokenKey k) {
    return json{{"frame", k.frame}, {"position", k.position}};
}

json stats_json(const vtc::RunStats & s) {
    json j;
    j["budget"] = s.budget;
    j["achieved_count"] = s.achieved_count;
    j["flops_before"] = s.flops_before;
    j["flops_after"] = s.flops_after;
    j["flops_ratio"] = s.flops_ratio;
    j["text_stage"] = s.text_stage;
    j["timings_ms"] = {
        {"scores", s.ms_scores},
        {"compress", s.ms_compress},
        {"text_merge", s.ms_text_merge},
        {"total", s.ms_total},
    };
    json keys = json::array();
    for (auto k : s.retained_keys) keys.push_back(key_json(k));
    j["retained_keys"] = std::move(keys);
    json groups = json::array();
    for (const auto & g : s.merged_groups) {
        json members = json::array();
        for (auto k : g.members) members.push_back(key_json(k));
        groups.push_back({{"center", key_json(g.center)}, {"members", std::move(members)}});
    }
    j["merged_groups"] = std::move(groups);
    j["config"] = {
        {"tau", s.config.tau},
        {"retention_ratio", s.config.retention_ratio},
        {"cluster_ratio", s.config.cluster_ratio},
        {"lambda", s.config.lambda},
        {"inner_keep_ratio", s.config.inner_keep_ratio},
        {"inner_layer", s.config.inner_layer},
        {"knn_k", s.config.knn_k},
        {"seed", s.config.seed},
        {"arch", {
            {"layers", s.arch.layers},
            {"hidden", s.arch.hidden},
            {"ffn", s.arch.ffn},
            {"decode_tokens", s.arch.decode_tokens},
        }},
    };
    return j;
}

void emit(const json & j, const std::string & out_path) {
    if (out_path.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        std::ofstream f(out_path);
        if (!f) throw vtc::ParseError("cannot open for writing: " + out_path);
        f << j.dump(2) << "\n";
    }
}

vtc::TokenTensor video_from_file(const vtc::TensorFile & t) {
    if (t.dims.size() != 3) {
        throw vtc::ParseError("video tensor: expected rank 3 [frames, tokens, dim]");
    }
    const int64_t b = t.dims[0], nv = t.dims[1], d = t.dims[2];
    vtc::Matrix m(b * nv, d);
    m.data = t.values;
    std::vector<vtc::TokenKey> keys(size_t(b) * size_t(nv));
    for (int64_t f = 0; f < b; ++f) {
        for (int64_t p = 0; p < nv; ++p) {
            keys[size_t(f * nv + p)] = vtc::TokenKey{int32_t(f), int32_t(p)};
        }
    }
    return vtc::make_token_tensor(std::move(m), std::move(keys));
}

vtc::TokenTensor rows_from_file(const vtc::TensorFile & t, int32_t frame_tag) {
    if (t.dims.size() != 2) {
        throw vtc::ParseError("token tensor: expected rank 2 [tokens, dim]");
    }
    vtc::Matrix m(t.dims[0], t.dims[1]);
    m.data = t.values;
    std::vector<vtc::TokenKey> keys(size_t(t.dims[0]));
    for (size_t i = 0; i < keys.size(); ++i) {
        keys[i] = vtc::TokenKey{frame_tag, int32_t(i)};
    }
    return vtc::make_token_tensor(std::move(m), std::move(keys));
}

std::vector<vtc::AttentionTensor> frame_attention_from_file(const vtc::TensorFile & t) {
    if (t.dims.size() != 4) {
        throw vtc::ParseError("attention tensor: expected rank 4 [frames, heads, S, S]");
    }
    const int64_t b = t.dims[0], h = t.dims[1], s = t.dims[2];
    if (int64_t(t.dims[3]) != s) {
        throw vtc::ParseError("attention tensor: last two dims must match");
    }
    std::vector<vtc::AttentionTensor> out;
    const size_t per = size_t(h) * size_t(s) * size_t(s);
    for (int64_t f = 0; f < b; ++f) {
        std::vector<float> data(t.values.begin() + int64_t(per) * f, t.values.begin() + int64_t(per) * (f + 1));
        out.push_back(vtc::make_attention_tensor(h, s, vtc::AttentionScope::PerFrame, std::move(data)));
    }
    return out;
}

vtc::AttentionTensor global_attention_from_file(const vtc::TensorFile & t) {
    if (t.dims.size() != 3 || t.dims[1] != t.dims[2]) {
        throw vtc::ParseError("global attention: expected rank 3 [heads, S, S]");
    }
    return vtc::make_attention_tensor(t.dims[0], t.dims[1], vtc::AttentionScope::Global, t.values);
}

void write_tokens(const std::string & path, const vtc::TokenTensor & t) {
    vtc::TensorFile out;
    out.dims = {uint32_t(t.count()), uint32_t(t.dim())};
    out.values = t.embeddings.data;
    vtc::write_tensor_file(path, out);
}

} // namespace

int main(int argc, char ** argv) {
    CLI::App app{"video token compression engine"};
    app.require_subcommand(1);

    std::string config_path, out_path, tokens_out;

    // compress
    auto * cmd_compress = app.add_subcommand("compress", "run the full pipeline on tensor files");
    std::string video_path, attn_path, text_path, gattn_path;
    cmd_compress->add_option("--video", video_path, "video tokens [B, Nv, d]")->required();
    cmd_compress->add_option("--attn", attn_path, "per-frame attention [B, H, S, S]")->required();
    cmd_compress->add_option("--text", text_path, "text tokens [Nq, d] (enables the inner merge stage)");
    cmd_compress->add_option("--global-attn", gattn_path, "captured global attention [H, S, S]");
    cmd_compress->add_option("--config", config_path, "config JSON");
    cmd_compress->add_option("--out", out_path, "RunStats JSON path (default stdout)");
    cmd_compress->add_option("--tokens-out", tokens_out, "compressed embeddings output file");

    // text-merge
    auto * cmd_text = app.add_subcommand("text-merge", "run only the inner merge stage");
    std::string visual_path;
    cmd_text->add_option("--visual", visual_path, "visual tokens [N, d]")->required();
    cmd_text->add_option("--text", text_path, "text tokens [Nq, d]");
    cmd_text->add_option("--global-attn", gattn_path, "captured global attention [H, S, S]");
    cmd_text->add_option("--config", config_path, "config JSON");
    cmd_text->add_option("--out", out_path, "result JSON path (default stdout)");
    cmd_text->add_option("--tokens-out", tokens_out, "merged embeddings output file");

    // flops
    auto * cmd_flops = app.add_subcommand("flops", "closed-form FLOPs for a prune schedule");
    int64_t n_input = 6272;
    double retention = -1.0;
    bool inner_stage = false;
    bool identity = false;
    cmd_flops->add_option("--n-input", n_input, "input visual token count");
    cmd_flops->add_option("--retention", retention, "retention ratio override");
    cmd_flops->add_flag("--inner", inner_stage, "apply the inner merge schedule from layer K");
    cmd_flops->add_flag("--identity", identity, "no pruning (baseline)");
    cmd_flops->add_option("--config", config_path, "config JSON");
    cmd_flops->add_option("--out", out_path, "report JSON path (default stdout)");

    // synth
    auto * cmd_synth = app.add_subcommand("synth", "generate a synthetic video workload");
    vtc::SynthParams sp;
    std::string video_out, attn_out;
    cmd_synth->add_option("--frames", sp.frames, "frame count B");
    cmd_synth->add_option("--tokens", sp.tokens_per_frame, "tokens per frame Nv");
    cmd_synth->add_option("--dim", sp.dim, "embedding dimension");
    cmd_synth->add_option("--heads", sp.heads, "attention heads");
    cmd_synth->add_option("--temporal-corr", sp.temporal_corr, "inter-frame correlation in [0,1)");
    cmd_synth->add_option("--spatial-dup", sp.spatial_dup, "duplicated token fraction in [0,1]");
    cmd_synth->add_option("--seed", sp.seed, "rng seed");
    cmd_synth->add_option("--video-out", video_out, "output video tensor path")->required();
    cmd_synth->add_option("--attn-out", attn_out, "output attention tensor path")->required();

    // ablate
    auto * cmd_ablate = app.add_subcommand("ablate", "sweep one parameter and report proxy metrics");
    std::string axis_name = "tau";
    std::vector<double> grid;
    vtc::SynthParams asp;
    asp.frames = 8;
    asp.tokens_per_frame = 98;
    asp.dim = 64;
    int64_t ablate_text = 8;
    cmd_ablate->add_option("--axis", axis_name, "tau | cluster_ratio | lambda | keep_R | layer_K")->required();
    cmd_ablate->add_option("--grid", grid, "grid values")->required()->delimiter(',');
    cmd_ablate->add_option("--frames", asp.frames, "synthetic frame count");
    cmd_ablate->add_option("--tokens", asp.tokens_per_frame, "synthetic tokens per frame");
    cmd_ablate->add_option("--dim", asp.dim, "synthetic embedding dimension");
    cmd_ablate->add_option("--temporal-corr", asp.temporal_corr, "synthetic temporal correlation");
    cmd_ablate->add_option("--spatial-dup", asp.spatial_dup, "synthetic duplicate fraction");
    cmd_ablate->add_option("--n-text", ablate_text, "synthetic text token count");
    cmd_ablate->add_option("--seed", asp.seed, "rng seed");
    cmd_ablate->add_option("--config", config_path, "config JSON");
    cmd_ablate->add_option("--out", out_path, "table JSON path (default stdout)");

    // oracle
    auto * cmd_oracle = app.add_subcommand("oracle", "cross-check against the naive reference");
    int seeds = 100;
    uint64_t base_seed = 0;
    cmd_oracle->add_option("--seeds", seeds, "number of random instances");
    cmd_oracle->add_option("--base-seed", base_seed, "rng base seed");

    CLI11_PARSE(app, argc, argv);

    try {
        Config conf = load_config(config_path);

        if (cmd_compress->parsed()) {
            vtc::PipelineInput input;
            input.tokens = video_from_file(vtc::read_tensor_file(video_path));
            input.frame_attention = frame_attention_from_file(vtc::read_tensor_file(attn_path));
            if (!text_path.empty()) {
                input.text = rows_from_file(vtc::read_tensor_file(text_path), 1 << 20);
            } else {
                input.text.embeddings = vtc::Matrix(0, input.tokens.dim());
            }
            if (!gattn_path.empty()) {
                input.global_attention = global_attention_from_file(vtc::read_tensor_file(gattn_path));
            }
            vtc::PipelineResult res = vtc::run_pipeline(input, conf.cfg, conf.arch);
            if (!tokens_out.empty()) {
                write_tokens(tokens_out, res.output);
            }
            emit(stats_json(res.stats), out_path);
        } else if (cmd_text->parsed()) {
            vtc::TokenTensor visual = rows_from_file(vtc::read_tensor_file(visual_path), 0);
            vtc::TokenTensor text{vtc::Matrix(0, visual.dim()), {}};
            if (!text_path.empty()) {
                text = rows_from_file(vtc::read_tensor_file(text_path), 1 << 20);
            }
            vtc::AttentionTensor attn = gattn_path.empty()
                ? vtc::derive_global_attention(visual, text)
                : global_attention_from_file(vtc::read_tensor_file(gattn_path));
            vtc::TextMergeResult res = vtc::text_merge(visual, text, attn, conf.cfg.lambda, conf.cfg.inner_keep_ratio);
            if (!tokens_out.empty()) {
                write_tokens(tokens_out, res.plan.merged_embeddings);
            }
            json j;
            j["retaining"] = res.plan.retaining;
            j["pruning"] = res.plan.pruning;
            j["target"] = res.plan.target;
            j["combined"] = res.scores.combined;
            emit(j, out_path);
        } else if (cmd_flops->parsed()) {
            const double ratio = identity ? 1.0 : (retention > 0.0 ? retention : conf.cfg.retention_ratio);
            const double keep = (inner_stage && !identity) ? conf.cfg.inner_keep_ratio : 1.0;
            vtc::PruneSchedule sched = vtc::schedule_from_pipeline(n_input, ratio, conf.cfg.inner_layer, keep, conf.arch.layers);
            vtc::FlopsReport rep = vtc::flops_vs_baseline(conf.arch, sched, n_input);
            json j;
            j["total"] = rep.total;
            j["prefill"] = rep.prefill;
            j["decode"] = rep.decode;
            j["total_tflops"] = rep.total / 1e12;
            j["ratio_vs_baseline"] = rep.ratio_vs_baseline;
            j["schedule"] = sched.tokens_per_layer;
            emit(j, out_path);
        } else if (cmd_synth->parsed()) {
            vtc::SynthVideo v = vtc::synth_video(sp);
            vtc::TensorFile video;
            video.dims = {uint32_t(sp.frames), uint32_t(sp.tokens_per_frame), uint32_t(sp.dim)};
            video.values = v.tokens.embeddings.data;
            vtc::write_tensor_file(video_out, video);
            vtc::TensorFile attn;
            attn.dims = {uint32_t(sp.frames), uint32_t(sp.heads),
                         uint32_t(sp.tokens_per_frame), uint32_t(sp.tokens_per_frame)};
            for (const auto & a : v.attention) {
                attn.values.insert(attn.values.end(), a.data.begin(), a.data.end());
            }
            vtc::write_tensor_file(attn_out, attn);
        } else if (cmd_ablate->parsed()) {
            vtc::AblationOptions opts;
            opts.synth = asp;
            opts.n_text = ablate_text;
            opts.base = conf.cfg;
            opts.arch = conf.arch;
            auto rows = vtc::ablate(vtc::ablation_axis_from_string(axis_name), grid, opts);
            json table = json::array();
            for (const auto & r : rows) {
                table.push_back({
                    {"value", r.value},
                    {"retained_attention_mass", r.retained_attention_mass},
                    {"mean_pairwise_cosine", r.mean_pairwise_cosine},
                    {"reconstruction_error", r.reconstruction_error},
                    {"flops_ratio", r.flops_ratio},
                });
            }
            emit(json{{"axis", axis_name}, {"rows", table}}, out_path);
        } else if (cmd_oracle->parsed()) {
            vtc::OracleReport rep = vtc::oracle_check(seeds, base_seed);
            std::cout << rep.passes << "/" << (rep.passes + rep.failures) << " instances match\n";
            if (rep.failures > 0) {
                std::cerr << "oracle mismatch: " << rep.first_mismatch << "\n";
                return EXIT_ORACLE;
            }
        }
    } catch (const vtc::OracleMismatch & e) {
        std::cerr << "error: " << e.what() << "\n";
        return EXIT_ORACLE;
    } catch (const vtc::Error & e) {
        std::cerr << "error: " << e.what() << "\n";
        return EXIT_VALIDATION;
    } catch (const std::exception & e) {
        std::cerr << "error: " << e.what() << "\n";
        return EXIT_VALIDATION;
    }
    return 0;
}
