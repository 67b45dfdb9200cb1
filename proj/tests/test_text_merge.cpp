#include <doctest.h>

#include "vtc/ops.hpp"
#include "vtc/text_merge.hpp"

using namespace vtc;

namespace {

Matrix mat(std::initializer_list<std::initializer_list<float>> rows) {
    Matrix m(int64_t(rows.size()), int64_t(rows.begin()->size()));
    int64_t i = 0;
    for (const auto & r : rows) {
        int64_t j = 0;
        for (float v : r) m.at(i, j++) = v;
        ++i;
    }
    return m;
}

TokenTensor tok(Matrix m, int32_t frame = 0) {
    std::vector<TokenKey> keys;
    for (int64_t i = 0; i < m.rows; ++i) keys.push_back({frame, int32_t(i)});
    return make_token_tensor(std::move(m), std::move(keys));
}

} // namespace

TEST_CASE("extract_text_to_visual: submatrix read-off") {
    std::vector<float> data = {0.7f, 0.2f, 0.1f,
                               0.1f, 0.8f, 0.1f,
                               0.3f, 0.5f, 0.2f};
    auto attn = make_attention_tensor(1, 3, AttentionScope::Global, data);
    Matrix a_qv = extract_text_to_visual(attn, 2, 1);
    REQUIRE(a_qv.rows == 1);
    REQUIRE(a_qv.cols == 2);
    CHECK(a_qv.at(0, 0) == doctest::Approx(0.3));
    CHECK(a_qv.at(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("extract_text_to_visual: no text rows gives an empty block") {
    std::vector<float> data = {1, 0, 0, 1};
    auto attn = make_attention_tensor(1, 2, AttentionScope::Global, data);
    Matrix a_qv = extract_text_to_visual(attn, 2, 0);
    CHECK(a_qv.rows == 0);
    CHECK(a_qv.cols == 2);
}

TEST_CASE("extract_text_to_visual: identity attention is zero off-block") {
    std::vector<float> data(16, 0.0f);
    for (int i = 0; i < 4; ++i) data[size_t(i * 4 + i)] = 1.0f;
    auto attn = make_attention_tensor(1, 4, AttentionScope::Global, data);
    Matrix a_qv = extract_text_to_visual(attn, 2, 2);
    for (float v : a_qv.data) CHECK(v == 0.0f);
}

TEST_CASE("extract_text_to_visual: shape mismatch") {
    std::vector<float> data = {1, 0, 0, 1};
    auto attn = make_attention_tensor(1, 2, AttentionScope::Global, data);
    CHECK_THROWS_AS(extract_text_to_visual(attn, 2, 2), ShapeMismatch);
}

TEST_CASE("attention_criterion: column max then min-max") {
    Matrix a_qv = mat({{0.1f, 0.5f, 0.2f}, {0.3f, 0.2f, 0.4f}});
    auto out = attention_criterion(a_qv);
    REQUIRE(out.size() == 3);
    CHECK(out[0] == doctest::Approx(0.0));
    CHECK(out[1] == doctest::Approx(1.0));
    CHECK(out[2] == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("attention_criterion: single text row and constant block") {
    auto single = attention_criterion(mat({{0.2f, 0.6f}}));
    CHECK(single[0] == doctest::Approx(0.0));
    CHECK(single[1] == doctest::Approx(1.0));

    auto constant = attention_criterion(mat({{0.4f, 0.4f, 0.4f}}));
    CHECK(constant == std::vector<float>{0, 0, 0});
}

TEST_CASE("similarity_criterion: direct cosines") {
    auto out = similarity_criterion(tok(mat({{1, 0}, {0, 1}})), tok(mat({{1, 0}}), 5));
    REQUIRE(out.size() == 2);
    CHECK(out[0] == doctest::Approx(1.0));
    CHECK(out[1] == doctest::Approx(0.0));
}

TEST_CASE("similarity_criterion: single visual token normalizes to 0") {
    auto out = similarity_criterion(tok(mat({{1, 0}})), tok(mat({{1, 0}}), 5));
    CHECK(out == std::vector<float>{0});
}

TEST_CASE("similarity_criterion: duplicated text rows change nothing") {
    auto a = similarity_criterion(tok(mat({{1, 0}, {0, 1}, {1, 1}})), tok(mat({{1, 0}}), 5));
    auto b = similarity_criterion(tok(mat({{1, 0}, {0, 1}, {1, 1}})), tok(mat({{1, 0}, {1, 0}}), 5));
    CHECK(a == b);
}

TEST_CASE("plan_merge: hand trace with a score tie") {
    // attn_norm = [0,1,0.5], sim_norm = [0,0.5,1], lambda = 0.5 -> combined [0, 0.75, 0.75]
    auto scores = combine_scores({0.0f, 1.0f, 0.5f}, {0.0f, 0.5f, 1.0f}, 0.5f);
    CHECK(scores.combined[1] == doctest::Approx(0.75));
    CHECK(scores.combined[2] == doctest::Approx(0.75));

    auto visual = tok(mat({{1, 0}, {0.9f, 0.1f}, {0, 1}}));
    auto plan = plan_merge(visual, scores, 0.5f);
    CHECK(plan.retaining == std::vector<int64_t>{1, 2});
    CHECK(plan.pruning == std::vector<int64_t>{0});
    CHECK(plan.target[0] == 1);  // token 0 is closest to token 1 by cosine
    // retained token 1 absorbs token 0 by group mean
    CHECK(plan.merged_embeddings.embeddings.at(0, 0) == doctest::Approx(0.95));
    CHECK(plan.merged_embeddings.embeddings.at(0, 1) == doctest::Approx(0.05));
    // untouched retained token passes through
    CHECK(plan.merged_embeddings.embeddings.at(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("plan_merge: keep everything is a no-op") {
    auto visual = tok(mat({{1, 0}, {0, 1}}));
    auto scores = combine_scores({1.0f, 0.0f}, {0.0f, 1.0f}, 0.5f);
    auto plan = plan_merge(visual, scores, 1.0f);
    CHECK(plan.retaining == std::vector<int64_t>{0, 1});
    CHECK(plan.pruning.empty());
    CHECK(plan.merged_embeddings.embeddings.data == visual.embeddings.data);
}

TEST_CASE("plan_merge: identical tokens merge to the same vector") {
    auto visual = tok(mat({{0.5f, 0.5f}, {0.5f, 0.5f}, {0.5f, 0.5f}}));
    auto scores = combine_scores({0, 0, 0}, {0, 0, 0}, 0.5f);
    auto plan = plan_merge(visual, scores, 0.3f);
    REQUIRE(plan.retaining.size() == 1);
    CHECK(plan.merged_embeddings.embeddings.at(0, 0) == doctest::Approx(0.5));
    CHECK(plan.merged_embeddings.embeddings.at(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("text_merge: no text tokens falls back to attention-received ranking") {
    auto visual = tok(mat({{1, 0}, {0, 1}, {0.7f, 0.7f}}));
    TokenTensor text{Matrix(0, 2), {}};
    auto attn = make_attention_tensor(1, 3, AttentionScope::Global,
                                      {0.2f, 0.4f, 0.4f,
                                       0.3f, 0.3f, 0.4f,
                                       0.5f, 0.4f, 0.1f});
    auto res = text_merge(visual, text, attn, 0.5f, 0.5f);
    CHECK(res.plan.retaining.size() == 2);
    // received means: token0 (0.3+0.5)/2=0.4, token1 (0.4+0.4)/2=0.4, token2 (0.4+0.4)/2=0.4
    // all tied -> lowest indices kept
    CHECK(res.plan.retaining == std::vector<int64_t>{0, 1});
}
