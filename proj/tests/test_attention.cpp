#include <doctest.h>

#include "vtc/attention.hpp"

using namespace vtc;

namespace {

AttentionTensor attn(int64_t heads, int64_t s, std::vector<float> data) {
    return make_attention_tensor(heads, s, AttentionScope::PerFrame, std::move(data));
}

} // namespace

TEST_CASE("head_average: single head is the identity of the mean") {
    auto a = attn(1, 2, {0.25f, 0.75f, 0.6f, 0.4f});
    Matrix avg = head_average(a);
    CHECK(avg.at(0, 0) == doctest::Approx(0.25));
    CHECK(avg.at(1, 1) == doctest::Approx(0.4));
}

TEST_CASE("head_average: two opposed permutation heads blend to uniform") {
    auto a = attn(2, 2, {1, 0, 0, 1, 0, 1, 1, 0});
    Matrix avg = head_average(a);
    for (float v : avg.data) CHECK(v == doctest::Approx(0.5));
}

TEST_CASE("head_average: identical heads pass through") {
    auto a = attn(3, 2, {0.3f, 0.7f, 0.1f, 0.9f,
                         0.3f, 0.7f, 0.1f, 0.9f,
                         0.3f, 0.7f, 0.1f, 0.9f});
    Matrix avg = head_average(a);
    CHECK(avg.at(0, 1) == doctest::Approx(0.7));
    CHECK(avg.at(1, 0) == doctest::Approx(0.1));
}

TEST_CASE("cls_scores: row extraction with the CLS column dropped") {
    Matrix avg(3, 3);
    float vals[9] = {0.2f, 0.5f, 0.3f, 0.1f, 0.8f, 0.1f, 0.3f, 0.3f, 0.4f};
    std::copy(vals, vals + 9, avg.data.begin());
    auto s = cls_scores(avg, 0);
    REQUIRE(s.scores.size() == 2);
    CHECK(s.scores[0] == doctest::Approx(0.5));
    CHECK(s.scores[1] == doctest::Approx(0.3));
    CHECK(s.mode == ScoreMode::Cls);
}

TEST_CASE("cls_scores: uniform attention, no renormalization") {
    Matrix avg(4, 4, 0.25f);
    auto s = cls_scores(avg, 0);
    REQUIRE(s.scores.size() == 3);
    for (float v : s.scores) CHECK(v == doctest::Approx(0.25));
}

TEST_CASE("cls_scores: last position and range errors") {
    Matrix avg(3, 3);
    float vals[9] = {0.2f, 0.5f, 0.3f, 0.1f, 0.8f, 0.1f, 0.6f, 0.2f, 0.2f};
    std::copy(vals, vals + 9, avg.data.begin());
    auto s = cls_scores(avg, 2);
    CHECK(s.scores[0] == doctest::Approx(0.6));
    CHECK(s.scores[1] == doctest::Approx(0.2));
    CHECK_THROWS_AS(cls_scores(avg, 3), IndexOutOfRange);
    CHECK_THROWS_AS(cls_scores(avg, -1), IndexOutOfRange);
}

TEST_CASE("mean_received_scores: uniform rows give 1/S") {
    const int64_t s = 4;
    Matrix avg(s, s, 1.0f / float(s));
    auto sc = mean_received_scores(avg);
    for (float v : sc.scores) CHECK(v == doctest::Approx(0.25));
}

TEST_CASE("mean_received_scores: identity attention scores 0 (self excluded)") {
    Matrix avg(3, 3, 0.0f);
    for (int64_t i = 0; i < 3; ++i) avg.at(i, i) = 1.0f;
    auto sc = mean_received_scores(avg);
    for (float v : sc.scores) CHECK(v == 0.0f);
}

TEST_CASE("mean_received_scores: degenerate size throws") {
    Matrix avg(1, 1, 1.0f);
    CHECK_THROWS_AS(mean_received_scores(avg), DegenerateSequence);
}

TEST_CASE("global_rank: sort trace") {
    std::vector<ContributionScores> scores(2);
    scores[0].scores = {0.4f, 0.1f};
    scores[1].scores = {0.3f};
    auto order = global_rank(scores);
    REQUIRE(order.size() == 3);
    CHECK(order[0] == TokenKey{0, 0});
    CHECK(order[1] == TokenKey{1, 0});
    CHECK(order[2] == TokenKey{0, 1});
}

TEST_CASE("global_rank: equal scores fall back to lexicographic keys") {
    std::vector<ContributionScores> scores(2);
    scores[0].scores = {0.5f, 0.5f};
    scores[1].scores = {0.5f};
    auto order = global_rank(scores);
    CHECK(order[0] == TokenKey{0, 0});
    CHECK(order[1] == TokenKey{0, 1});
    CHECK(order[2] == TokenKey{1, 0});
}

TEST_CASE("global_rank: single token") {
    std::vector<ContributionScores> scores(1);
    scores[0].scores = {0.9f};
    auto order = global_rank(scores);
    REQUIRE(order.size() == 1);
    CHECK(order[0] == TokenKey{0, 0});
}
