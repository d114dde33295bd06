#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "reqa/error.hpp"
#include "reqa/evaluation.hpp"

using namespace reqa;

namespace {

QuestionRanking ranking_of(std::string qid, std::vector<CandidateId> ids) {
    QuestionRanking r;
    r.qid = std::move(qid);
    double score = static_cast<double>(ids.size());
    for (CandidateId id : ids) r.ranking.push_back({id, score--});
    return r;
}

// Run + questions with the given per-question gold sets and rankings.
struct Fixture {
    RetrievalRun run;
    QuestionSet questions;
};

Fixture fixture_from_ranks(const std::vector<std::uint64_t>& ranks, std::size_t pool_size) {
    Fixture f;
    f.run.system_name = "test";
    std::vector<Question> questions;
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        std::vector<CandidateId> ids(pool_size);
        for (std::size_t j = 0; j < pool_size; ++j) ids[j] = static_cast<CandidateId>(j);
        const std::string qid = "q" + std::to_string(i);
        f.run.rankings.push_back(ranking_of(qid, ids));
        questions.push_back(
            Question{qid, "?", {static_cast<CandidateId>(ranks[i] - 1)}});
    }
    f.questions = QuestionSet::unvalidated(std::move(questions));
    return f;
}

// Naive reference recomputation, independent of the evaluation module.
struct NaiveMetrics {
    double p_at_1 = 0.0;
    double mrr = 0.0;
};

NaiveMetrics naive_metrics(const RetrievalRun& run, const QuestionSet& questions) {
    NaiveMetrics m;
    double reciprocal = 0.0;
    std::size_t top_hits = 0;
    for (const Question& q : questions) {
        const QuestionRanking* r = run.find(q.qid);
        std::size_t rank = 0;
        for (std::size_t i = 0; i < r->ranking.size(); ++i) {
            bool hit = false;
            for (CandidateId g : q.gold) hit |= (g == r->ranking[i].id);
            if (hit) {
                rank = i + 1;
                break;
            }
        }
        if (rank == 1) ++top_hits;
        reciprocal += 1.0 / static_cast<double>(rank);
    }
    const double n = static_cast<double>(questions.size());
    m.p_at_1 = 100.0 * static_cast<double>(top_hits) / n;
    m.mrr = 100.0 * reciprocal / n;
    return m;
}

}  // namespace

TEST_CASE("rank_of_first_correct returns 1-based positions") {
    const std::vector<CandidateId> ranking = {5, 2, 9};
    const std::vector<CandidateId> gold_c2 = {2};
    CHECK(rank_of_first_correct(ranking, gold_c2) == 2);
    const std::vector<CandidateId> gold_multi = {5, 9};
    CHECK(rank_of_first_correct(ranking, gold_multi) == 1);
    const std::vector<CandidateId> gold_missing = {7};
    CHECK_THROWS_AS(rank_of_first_correct(ranking, gold_missing), GoldMissingFromRanking);
}

TEST_CASE("P@1 and MRR on the rank fixture [1,2,4]") {
    const Fixture f = fixture_from_ranks({1, 2, 4}, 5);
    const EvalReport report = evaluate(f.run, f.questions);
    CHECK(report.p_at_1 == doctest::Approx(100.0 / 3.0).epsilon(1e-12));
    CHECK(report.mrr == doctest::Approx(100.0 * (1.0 + 0.5 + 0.25) / 3.0).epsilon(1e-12));
    CHECK(report.mrr == doctest::Approx(58.33).epsilon(1e-4));
    CHECK(report.ranks == std::vector<std::uint64_t>{1, 2, 4});

    CHECK(precision_at_1(f.run, f.questions) == report.p_at_1);
    CHECK(mean_reciprocal_rank(f.run, f.questions) == report.mrr);
    CHECK(precision_at_k(f.run, f.questions, 2) == doctest::Approx(200.0 / 3.0));
}

TEST_CASE("all rank-1 gives 100 percent on both metrics") {
    const Fixture f = fixture_from_ranks({1, 1, 1, 1}, 3);
    const EvalReport report = evaluate(f.run, f.questions);
    CHECK(report.p_at_1 == 100.0);
    CHECK(report.mrr == 100.0);
}

TEST_CASE("random runs match the naive recomputation exactly and satisfy MRR >= P@1") {
    std::mt19937_64 rng(99);
    for (int round = 0; round < 300; ++round) {
        const std::size_t pool_size = 2 + rng() % 50;
        const std::size_t n_questions = 1 + rng() % 20;
        RetrievalRun run;
        run.system_name = "rand";
        std::vector<Question> questions;
        for (std::size_t i = 0; i < n_questions; ++i) {
            std::vector<CandidateId> ids(pool_size);
            for (std::size_t j = 0; j < pool_size; ++j) ids[j] = static_cast<CandidateId>(j);
            std::shuffle(ids.begin(), ids.end(), rng);
            const std::string qid = "q" + std::to_string(i);
            run.rankings.push_back(ranking_of(qid, ids));
            // Multi-answer gold sets.
            std::vector<CandidateId> gold;
            const std::size_t n_gold = 1 + rng() % std::min<std::size_t>(4, pool_size);
            for (std::size_t g = 0; g < n_gold; ++g)
                gold.push_back(static_cast<CandidateId>(rng() % pool_size));
            questions.push_back(Question{qid, "?", gold});
        }
        const QuestionSet qs = QuestionSet::unvalidated(std::move(questions));
        const EvalReport report = evaluate(run, qs);
        const NaiveMetrics naive = naive_metrics(run, qs);
        CHECK(report.p_at_1 == naive.p_at_1);
        CHECK(report.mrr == naive.mrr);
        CHECK(report.mrr >= report.p_at_1);
        CHECK(report.mrr <= 100.0 + 1e-12);
        for (std::uint64_t r : report.ranks) {
            CHECK(r >= 1);
            CHECK(r <= pool_size);
        }
    }
}

TEST_CASE("metrics are invariant under strictly monotone score transforms") {
    std::mt19937_64 rng(7);
    for (int round = 0; round < 50; ++round) {
        const Fixture f = fixture_from_ranks({1 + rng() % 5, 1 + rng() % 5, 1 + rng() % 5}, 6);
        RetrievalRun transformed = f.run;
        for (auto& r : transformed.rankings)
            for (auto& sc : r.ranking) sc.score = std::exp(0.5 * sc.score) + 3.0;
        transformed.validate();  // still sorted: the transform is increasing
        const EvalReport a = evaluate(f.run, f.questions);
        const EvalReport b = evaluate(transformed, f.questions);
        CHECK(a.p_at_1 == b.p_at_1);
        CHECK(a.mrr == b.mrr);
    }
}

TEST_CASE("permuting question order changes neither metric") {
    const Fixture f = fixture_from_ranks({3, 1, 2, 5, 1}, 6);
    std::vector<Question> shuffled(f.questions.begin(), f.questions.end());
    std::reverse(shuffled.begin(), shuffled.end());
    const QuestionSet reversed = QuestionSet::unvalidated(std::move(shuffled));
    const EvalReport a = evaluate(f.run, f.questions);
    const EvalReport b = evaluate(f.run, reversed);
    CHECK(a.p_at_1 == b.p_at_1);
    // The reciprocal sum runs in question order; reordering moves the result
    // by at most a few ulp, far below the two-decimal reporting precision.
    CHECK(a.mrr == doctest::Approx(b.mrr).epsilon(1e-12));
}

TEST_CASE("appending a never-gold candidate at the bottom changes nothing") {
    const Fixture f = fixture_from_ranks({2, 1, 3}, 4);
    RetrievalRun extended = f.run;
    for (auto& r : extended.rankings) r.ranking.push_back({99, -1.0});
    const EvalReport a = evaluate(f.run, f.questions);
    const EvalReport b = evaluate(extended, f.questions);
    CHECK(a.p_at_1 == b.p_at_1);
    CHECK(a.mrr == b.mrr);
}

TEST_CASE("truncated runs fall back to the stored gold rank or fail loudly") {
    std::vector<Question> questions = {Question{"q0", "?", {7}}};
    const QuestionSet qs = QuestionSet::unvalidated(std::move(questions));

    RetrievalRun truncated;
    truncated.system_name = "trunc";
    truncated.rankings.push_back(ranking_of("q0", {1, 2, 3}));
    CHECK_THROWS_AS(evaluate(truncated, qs), GoldMissingFromRanking);

    truncated.rankings[0].gold_rank = 9;
    const EvalReport report = evaluate(truncated, qs);
    CHECK(report.ranks == std::vector<std::uint64_t>{9});

    RetrievalRun missing;
    missing.system_name = "miss";
    CHECK_THROWS_AS(evaluate(missing, qs), MissingQuestion);
}

TEST_CASE("ablation deltas are no-context minus with-context") {
    const Fixture f = fixture_from_ranks({1, 1, 2}, 4);
    const EvalReport with_context = evaluate(f.run, f.questions);
    SUBCASE("identical reports give zero deltas") {
        const AblationDelta delta = ablation_compare(with_context, with_context);
        CHECK(delta.p_at_1_delta == 0.0);
        CHECK(delta.mrr_delta == 0.0);
    }
    SUBCASE("60 vs 56 gives -4") {
        EvalReport with = with_context, without = with_context;
        with.p_at_1 = 60.0;
        without.p_at_1 = 56.0;
        const AblationDelta delta = ablation_compare(with, without);
        CHECK(delta.p_at_1_delta == doctest::Approx(-4.0).epsilon(1e-12));
    }
    SUBCASE("mismatched question counts are rejected") {
        EvalReport other = with_context;
        other.n_questions = 7;
        CHECK_THROWS_AS(ablation_compare(with_context, other), MismatchedQuestionSets);
    }
}

TEST_CASE("disagreement analysis") {
    std::vector<Question> questions = {Question{"q0", "?", {0}}, Question{"q1", "?", {1}},
                                       Question{"q2", "?", {2}}, Question{"q3", "?", {3}}};
    const QuestionSet qs = QuestionSet::unvalidated(std::move(questions));

    RetrievalRun a;
    a.system_name = "A";
    a.rankings = {ranking_of("q0", {0, 1}), ranking_of("q1", {1, 0}), ranking_of("q2", {0, 2}),
                  ranking_of("q3", {0, 3})};
    SUBCASE("a run never disagrees with itself") {
        const DisagreementReport r = disagreement(a, a, qs);
        CHECK(r.disagreement_percent == 0.0);
        CHECK(r.both_correct + r.a_only_correct + r.b_only_correct + r.both_wrong ==
              r.n_questions);
    }
    SUBCASE("complementary top-1s disagree on every question") {
        RetrievalRun b;
        b.system_name = "B";
        b.rankings = {ranking_of("q0", {1, 0}), ranking_of("q1", {0, 1}),
                      ranking_of("q2", {2, 0}), ranking_of("q3", {3, 0})};
        const DisagreementReport r = disagreement(a, b, qs);
        CHECK(r.disagreement_percent == 100.0);
        // A's top-1: correct, correct, wrong, wrong. B's: wrong, wrong, correct, correct.
        CHECK(r.both_correct == 0);
        CHECK(r.a_only_correct == 2);
        CHECK(r.b_only_correct == 2);
        CHECK(r.both_wrong == 0);
    }
    SUBCASE("random pairs match a naive per-question comparison") {
        std::mt19937_64 rng(13);
        for (int round = 0; round < 50; ++round) {
            auto random_run = [&](const std::string& name) {
                RetrievalRun run;
                run.system_name = name;
                for (int i = 0; i < 4; ++i) {
                    std::vector<CandidateId> ids = {0, 1, 2, 3};
                    std::shuffle(ids.begin(), ids.end(), rng);
                    run.rankings.push_back(ranking_of("q" + std::to_string(i), ids));
                }
                return run;
            };
            const RetrievalRun ra = random_run("ra");
            const RetrievalRun rb = random_run("rb");
            const DisagreementReport r = disagreement(ra, rb, qs);
            std::size_t differ = 0;
            for (int i = 0; i < 4; ++i) {
                const std::string qid = "q" + std::to_string(i);
                if (ra.find(qid)->ranking[0].id != rb.find(qid)->ranking[0].id) ++differ;
            }
            CHECK(r.disagreement_percent ==
                  doctest::Approx(100.0 * static_cast<double>(differ) / 4.0).epsilon(1e-12));
            CHECK(r.both_correct + r.a_only_correct + r.b_only_correct + r.both_wrong == 4);
        }
    }
}

TEST_CASE("report JSON is stable and rounded to two decimals") {
    const Fixture f = fixture_from_ranks({1, 2, 4}, 5);
    EvalReport report = evaluate(f.run, f.questions);
    report.metadata.system = "bm25_wpm";
    const std::string json = report_to_json(report);
    CHECK(json.find("\"p_at_1\":33.33") != std::string::npos);
    CHECK(json.find("\"mrr\":58.33") != std::string::npos);
    CHECK(report_to_json(report) == json);  // byte-stable

    const std::string table = report_table(report);
    CHECK(table.find("33.33") != std::string::npos);
    CHECK(table.find("58.33") != std::string::npos);
}

TEST_CASE("empty question sets are rejected") {
    RetrievalRun run;
    run.system_name = "x";
    CHECK_THROWS_AS(evaluate(run, QuestionSet{}), EmptyDataset);
}
