#include "reqa/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_map>

#include <json.hpp>

#include "reqa/error.hpp"

namespace reqa {

namespace {

using ordered_json = nlohmann::ordered_json;

bool in_gold(std::span<const CandidateId> gold, CandidateId id) {
    return std::binary_search(gold.begin(), gold.end(), id);
}

double round2(double percent) { return std::round(percent * 100.0) / 100.0; }

std::string fmt2(double percent) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", percent);
    return buf;
}

// qid -> ranking lookup built once per evaluation pass.
class RankingLookup {
public:
    explicit RankingLookup(const RetrievalRun& run) : run_(run) {
        index_.reserve(run.rankings.size());
        for (const auto& r : run.rankings) index_.emplace(r.qid, &r);
    }

    const QuestionRanking& for_question(const Question& q) const {
        auto it = index_.find(q.qid);
        if (it == index_.end())
            throw MissingQuestion("run " + run_.system_name +
                                  " has no ranking for question " + q.qid);
        return *it->second;
    }

private:
    const RetrievalRun& run_;
    std::unordered_map<std::string, const QuestionRanking*> index_;
};

}  // namespace

std::uint64_t rank_of_first_correct(std::span<const CandidateId> ranked_ids,
                                    std::span<const CandidateId> gold) {
    for (std::size_t i = 0; i < ranked_ids.size(); ++i) {
        if (in_gold(gold, ranked_ids[i])) return i + 1;
    }
    throw GoldMissingFromRanking(
        "no gold candidate appears in the ranking; full rankings (or --ranks-only output) are "
        "required");
}

std::uint64_t question_rank(const QuestionRanking& ranking, const Question& question) {
    for (std::size_t i = 0; i < ranking.ranking.size(); ++i) {
        if (in_gold(question.gold, ranking.ranking[i].id)) return i + 1;
    }
    if (ranking.gold_rank) return *ranking.gold_rank;
    throw GoldMissingFromRanking("question " + question.qid +
                                 " has no gold candidate in its stored ranking and no stored "
                                 "gold rank");
}

EvalReport evaluate(const RetrievalRun& run, const QuestionSet& questions,
                    EvalMetadata metadata) {
    if (questions.empty()) throw EmptyDataset("no questions to evaluate");
    EvalReport report;
    report.metadata = std::move(metadata);
    if (report.metadata.system.empty()) report.metadata.system = run.system_name;
    report.n_questions = questions.size();
    report.ranks.reserve(questions.size());

    // Accumulate in question-set order so the result is independent of any
    // parallelism upstream.
    const RankingLookup lookup(run);
    std::size_t hits = 0;
    double reciprocal_sum = 0.0;
    for (const Question& q : questions) {
        const std::uint64_t rank = question_rank(lookup.for_question(q), q);
        report.ranks.push_back(rank);
        if (rank == 1) ++hits;
        reciprocal_sum += 1.0 / static_cast<double>(rank);
    }
    const double n = static_cast<double>(questions.size());
    report.p_at_1 = 100.0 * static_cast<double>(hits) / n;
    report.mrr = 100.0 * reciprocal_sum / n;
    return report;
}

double precision_at_1(const RetrievalRun& run, const QuestionSet& questions) {
    return precision_at_k(run, questions, 1);
}

double precision_at_k(const RetrievalRun& run, const QuestionSet& questions, std::size_t k) {
    if (questions.empty()) throw EmptyDataset("no questions to evaluate");
    if (k == 0) throw FormatError("precision_at_k: k must be >= 1");
    const RankingLookup lookup(run);
    std::size_t hits = 0;
    for (const Question& q : questions) {
        if (question_rank(lookup.for_question(q), q) <= k) ++hits;
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(questions.size());
}

double mean_reciprocal_rank(const RetrievalRun& run, const QuestionSet& questions) {
    if (questions.empty()) throw EmptyDataset("no questions to evaluate");
    const RankingLookup lookup(run);
    double reciprocal_sum = 0.0;
    for (const Question& q : questions)
        reciprocal_sum += 1.0 / static_cast<double>(question_rank(lookup.for_question(q), q));
    return 100.0 * reciprocal_sum / static_cast<double>(questions.size());
}

AblationDelta ablation_compare(const EvalReport& with_context, const EvalReport& no_context) {
    if (with_context.n_questions != no_context.n_questions)
        throw MismatchedQuestionSets("ablation reports cover different question counts: " +
                                     std::to_string(with_context.n_questions) + " vs " +
                                     std::to_string(no_context.n_questions));
    if (!with_context.metadata.system.empty() && !no_context.metadata.system.empty() &&
        with_context.metadata.system != no_context.metadata.system)
        throw MismatchedQuestionSets("ablation reports come from different systems: " +
                                     with_context.metadata.system + " vs " +
                                     no_context.metadata.system);
    AblationDelta delta;
    delta.n_questions = with_context.n_questions;
    delta.p_at_1_delta = no_context.p_at_1 - with_context.p_at_1;
    delta.mrr_delta = no_context.mrr - with_context.mrr;
    return delta;
}

DisagreementReport disagreement(const RetrievalRun& run_a, const RetrievalRun& run_b,
                                const QuestionSet& questions) {
    if (questions.empty()) throw EmptyDataset("no questions to compare");
    DisagreementReport report;
    report.n_questions = questions.size();
    report.system_a = run_a.system_name;
    report.system_b = run_b.system_name;
    const RankingLookup lookup_a(run_a);
    const RankingLookup lookup_b(run_b);
    std::size_t differ = 0;
    for (const Question& q : questions) {
        const QuestionRanking& a = lookup_a.for_question(q);
        const QuestionRanking& b = lookup_b.for_question(q);
        if (a.ranking.empty() || b.ranking.empty())
            throw FormatError("question " + q.qid + " has an empty ranking");
        const CandidateId top_a = a.ranking.front().id;
        const CandidateId top_b = b.ranking.front().id;
        if (top_a != top_b) ++differ;
        const bool correct_a = in_gold(q.gold, top_a);
        const bool correct_b = in_gold(q.gold, top_b);
        if (correct_a && correct_b)
            ++report.both_correct;
        else if (correct_a)
            ++report.a_only_correct;
        else if (correct_b)
            ++report.b_only_correct;
        else
            ++report.both_wrong;
    }
    report.disagreement_percent =
        100.0 * static_cast<double>(differ) / static_cast<double>(questions.size());
    return report;
}

std::string report_to_json(const EvalReport& report, bool include_ranks) {
    ordered_json j;
    j["system"] = report.metadata.system;
    if (!report.metadata.dataset.empty()) j["dataset"] = report.metadata.dataset;
    if (!report.metadata.tokenizer.empty()) j["tokenizer"] = report.metadata.tokenizer;
    if (!report.metadata.context_mode.empty()) j["context_mode"] = report.metadata.context_mode;
    j["n_questions"] = report.n_questions;
    j["p_at_1"] = round2(report.p_at_1);
    j["mrr"] = round2(report.mrr);
    if (include_ranks) j["ranks"] = report.ranks;
    return j.dump();
}

std::string report_table(const EvalReport& report) {
    std::string out;
    out += "system          P@1      MRR      questions\n";
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-15s %-8s %-8s %zu\n",
                  report.metadata.system.empty() ? "-" : report.metadata.system.c_str(),
                  fmt2(report.p_at_1).c_str(), fmt2(report.mrr).c_str(), report.n_questions);
    out += buf;
    return out;
}

std::string ablation_to_json(const EvalReport& with_context, const EvalReport& no_context,
                             const AblationDelta& delta) {
    ordered_json j;
    j["system"] = with_context.metadata.system;
    j["n_questions"] = delta.n_questions;
    j["with_context"] = {{"p_at_1", round2(with_context.p_at_1)},
                         {"mrr", round2(with_context.mrr)}};
    j["no_context"] = {{"p_at_1", round2(no_context.p_at_1)}, {"mrr", round2(no_context.mrr)}};
    j["delta"] = {{"p_at_1", round2(delta.p_at_1_delta)}, {"mrr", round2(delta.mrr_delta)}};
    return j.dump();
}

std::string ablation_table(const EvalReport& with_context, const EvalReport& no_context,
                           const AblationDelta& delta) {
    std::string out;
    out += "mode          P@1      MRR\n";
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-13s %-8s %-8s\n", "context",
                  fmt2(with_context.p_at_1).c_str(), fmt2(with_context.mrr).c_str());
    out += buf;
    std::snprintf(buf, sizeof(buf), "%-13s %-8s %-8s\n", "no-context",
                  fmt2(no_context.p_at_1).c_str(), fmt2(no_context.mrr).c_str());
    out += buf;
    std::snprintf(buf, sizeof(buf), "%-13s %-8s %-8s\n", "delta",
                  fmt2(delta.p_at_1_delta).c_str(), fmt2(delta.mrr_delta).c_str());
    out += buf;
    return out;
}

std::string disagreement_to_json(const DisagreementReport& report) {
    ordered_json j;
    j["system_a"] = report.system_a;
    j["system_b"] = report.system_b;
    j["n_questions"] = report.n_questions;
    j["disagreement_percent"] = round2(report.disagreement_percent);
    j["both_correct"] = report.both_correct;
    j["a_only_correct"] = report.a_only_correct;
    j["b_only_correct"] = report.b_only_correct;
    j["both_wrong"] = report.both_wrong;
    return j.dump();
}

std::string disagreement_table(const DisagreementReport& report) {
    std::string out;
    char buf[200];
    std::snprintf(buf, sizeof(buf), "top-1 disagreement: %s%% of %zu questions (%s vs %s)\n",
                  fmt2(report.disagreement_percent).c_str(), report.n_questions,
                  report.system_a.empty() ? "A" : report.system_a.c_str(),
                  report.system_b.empty() ? "B" : report.system_b.c_str());
    out += buf;
    std::snprintf(buf, sizeof(buf),
                  "both correct: %zu  A only: %zu  B only: %zu  both wrong: %zu\n",
                  report.both_correct, report.a_only_correct, report.b_only_correct,
                  report.both_wrong);
    out += buf;
    return out;
}

}  // namespace reqa
