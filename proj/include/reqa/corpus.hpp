#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "reqa/error.hpp"

namespace reqa {

using CandidateId = std::int64_t;

// One retrieval candidate: a sentence plus the context it came from.
// Candidates with the same sentence text under different (doc_id,
// sentence_index) stay distinct; retrieval ranks sentences in context,
// not unique strings.
struct Candidate {
    CandidateId id = -1;
    std::string doc_id;
    int sentence_index = 0;
    std::string sentence;
    std::string context;
    std::string title;  // empty when the source has no title feature

    bool operator==(const Candidate&) const = default;
};

// Raw candidate record before ID assignment.
struct CandidateRecord {
    std::string doc_id;
    int sentence_index = 0;
    std::string sentence;
    std::string context;
    std::string title;
};

struct Question {
    std::string qid;
    std::string text;
    std::vector<CandidateId> gold;  // sorted ascending, deduplicated, non-empty

    bool operator==(const Question&) const = default;
};

// Immutable corpus of candidates with dense ids 0..N-1.
class CandidatePool {
public:
    CandidatePool() = default;

    // Assigns ids 0..N-1 in input order. Throws DuplicateCandidate when two
    // records share (doc_id, sentence_index).
    static CandidatePool assign_ids(std::vector<CandidateRecord> records);

    // Loads a pool that already carries ids; validates density and uniqueness.
    static CandidatePool from_candidates(std::vector<Candidate> candidates);

    const Candidate& at(CandidateId id) const;
    bool contains(CandidateId id) const {
        return id >= 0 && static_cast<std::size_t>(id) < candidates_.size();
    }

    std::size_t size() const { return candidates_.size(); }
    bool empty() const { return candidates_.empty(); }

    const std::vector<Candidate>& candidates() const { return candidates_; }
    auto begin() const { return candidates_.begin(); }
    auto end() const { return candidates_.end(); }

    bool operator==(const CandidatePool&) const = default;

private:
    std::vector<Candidate> candidates_;
};

// Questions validated against a pool: every gold id exists, no empty gold set.
class QuestionSet {
public:
    QuestionSet() = default;
    QuestionSet(std::vector<Question> questions, const CandidatePool& pool);

    // Sorts and deduplicates gold sets and rejects empty ones, but skips the
    // pool-membership check. For loading question files standalone.
    static QuestionSet unvalidated(std::vector<Question> questions);

    const std::vector<Question>& questions() const { return questions_; }
    std::size_t size() const { return questions_.size(); }
    bool empty() const { return questions_.empty(); }
    auto begin() const { return questions_.begin(); }
    auto end() const { return questions_.end(); }

    bool operator==(const QuestionSet&) const = default;

private:
    std::vector<Question> questions_;
};

std::vector<Candidate> gold_lookup(const CandidatePool& pool, const Question& question);

struct ScoredCandidate {
    CandidateId id = -1;
    double score = 0.0;

    bool operator==(const ScoredCandidate&) const = default;
};

// Ranking for one question. `gold_rank`, when present, is the 1-based rank of
// the first gold candidate in the full ranking; it allows compact run files
// (--ranks-only) for pools too large to store full lists.
struct QuestionRanking {
    std::string qid;
    std::vector<ScoredCandidate> ranking;  // score descending, ties by ascending id
    std::optional<std::uint64_t> gold_rank;

    bool operator==(const QuestionRanking&) const = default;
};

struct RetrievalRun {
    std::string system_name;
    std::vector<QuestionRanking> rankings;

    const QuestionRanking* find(const std::string& qid) const;

    // Ids distinct within a question; scores non-increasing with equal scores
    // ordered by ascending id. Throws FormatError on violation.
    void validate() const;

    bool operator==(const RetrievalRun&) const = default;
};

// ---- JSON Lines serialization (UTF-8) ----

void save_pool_jsonl(const CandidatePool& pool, std::ostream& out);
void save_pool_jsonl(const CandidatePool& pool, const std::string& path);
CandidatePool load_pool_jsonl(std::istream& in);
CandidatePool load_pool_jsonl(const std::string& path);

void save_questions_jsonl(const QuestionSet& questions, std::ostream& out);
void save_questions_jsonl(const QuestionSet& questions, const std::string& path);
// Gold-set validation happens against `pool` when given.
QuestionSet load_questions_jsonl(std::istream& in, const CandidatePool* pool = nullptr);
QuestionSet load_questions_jsonl(const std::string& path, const CandidatePool* pool = nullptr);

void save_run_jsonl(const RetrievalRun& run, std::ostream& out);
void save_run_jsonl(const RetrievalRun& run, const std::string& path);
RetrievalRun load_run_jsonl(std::istream& in);
RetrievalRun load_run_jsonl(const std::string& path);

}  // namespace reqa
