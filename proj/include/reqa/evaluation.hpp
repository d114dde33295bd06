#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "reqa/corpus.hpp"

namespace reqa {

struct EvalMetadata {
    std::string system;
    std::string dataset;
    std::string tokenizer;
    std::string context_mode;  // "context" / "no-context"
};

struct EvalReport {
    double p_at_1 = 0.0;  // percent
    double mrr = 0.0;     // percent; always >= p_at_1
    std::size_t n_questions = 0;
    std::vector<std::uint64_t> ranks;  // rank of first correct, one per question
    EvalMetadata metadata;
};

// 1-based position of the first gold id in the ranking. `gold` must be sorted
// ascending. Throws GoldMissingFromRanking when no gold id appears (a
// truncated run without a stored gold rank).
std::uint64_t rank_of_first_correct(std::span<const CandidateId> ranked_ids,
                                    std::span<const CandidateId> gold);

// Rank of the first correct answer for one question's stored ranking: scans
// the (possibly truncated, prefix-of-full) list, falling back to the stored
// gold_rank.
std::uint64_t question_rank(const QuestionRanking& ranking, const Question& question);

EvalReport evaluate(const RetrievalRun& run, const QuestionSet& questions,
                    EvalMetadata metadata = {});

double precision_at_1(const RetrievalRun& run, const QuestionSet& questions);
double precision_at_k(const RetrievalRun& run, const QuestionSet& questions, std::size_t k);
double mean_reciprocal_rank(const RetrievalRun& run, const QuestionSet& questions);

struct AblationDelta {
    double p_at_1_delta = 0.0;  // no-context minus with-context
    double mrr_delta = 0.0;
    std::size_t n_questions = 0;
};

// Signed metric deltas between a with-context and a no-context report over
// the same questions and system.
AblationDelta ablation_compare(const EvalReport& with_context, const EvalReport& no_context);

struct DisagreementReport {
    std::size_t n_questions = 0;
    double disagreement_percent = 0.0;  // top-1 ids differ
    std::size_t both_correct = 0;
    std::size_t a_only_correct = 0;
    std::size_t b_only_correct = 0;
    std::size_t both_wrong = 0;
    std::string system_a;
    std::string system_b;
};

DisagreementReport disagreement(const RetrievalRun& run_a, const RetrievalRun& run_b,
                                const QuestionSet& questions);

// Rendering: percentages at two decimal places. JSON key order is fixed so
// identical inputs serialize byte-identically.
std::string report_to_json(const EvalReport& report, bool include_ranks = false);
std::string report_table(const EvalReport& report);
std::string ablation_to_json(const EvalReport& with_context, const EvalReport& no_context,
                             const AblationDelta& delta);
std::string ablation_table(const EvalReport& with_context, const EvalReport& no_context,
                           const AblationDelta& delta);
std::string disagreement_to_json(const DisagreementReport& report);
std::string disagreement_table(const DisagreementReport& report);

}  // namespace reqa
