#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "reqa/corpus.hpp"
#include "reqa/segmenter.hpp"

namespace reqa {

// An answer span in original-context byte offsets, [begin, end).
struct AnswerSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::string text;  // the original slice

    bool operator==(const AnswerSpan&) const = default;
};

struct RawQa {
    std::string qid;
    std::string question;
    std::vector<AnswerSpan> spans;
};

struct RawRecord {
    std::string context;
    std::vector<RawQa> qas;
};

enum class DatasetKind {
    SearchQA,
    TriviaQA,
    HotpotQA,
    SQuAD,
    NQ,
    BioASQ,
    RelationExtraction,
    TextbookQA,
    Generic,
};

DatasetKind dataset_kind_from_string(std::string_view name);
std::string to_string(DatasetKind kind);

// A maximal run of original bytes copied verbatim into the cleaned text.
struct OffsetSegment {
    std::size_t orig_begin = 0;
    std::size_t orig_end = 0;     // exclusive
    std::size_t cleaned_begin = 0;
};

// One cleaned context produced by tag stripping, with the offset map that
// translates original answer offsets into cleaned-context offsets.
struct CleanedContext {
    std::string text;
    std::string title;
    std::vector<OffsetSegment> segments;
    std::vector<std::pair<std::size_t, std::size_t>> title_ranges;  // original byte ranges

    enum class MapResult { Body, Title, Unmapped };

    // Body requires the span to survive cleaning verbatim (it must lie inside
    // a single copied segment); spans inside the title feature map to Title.
    MapResult map_span(std::size_t orig_begin, std::size_t orig_end, std::size_t& cleaned_begin,
                       std::size_t& cleaned_end) const;
};

// Dataset-specific [DOC]/[TLE]/[PAR]/[SEP] handling:
//   SearchQA  - content between consecutive [DOC] markers becomes an
//               individual context; text between [TLE] and [PAR] is the title
//               feature, text after [PAR] the body.
//   HotpotQA  - [PAR] separates supporting documents, [SEP] separates the
//               title from the document content.
//   TriviaQA  - all tags are removed and a single context is retained.
//   all other kinds pass through unchanged.
// Unknown tags are literal text. Contexts whose body is empty after cleaning
// yield no candidates but keep their title ranges for answer classification.
std::vector<CleanedContext> strip_tags(DatasetKind kind, const std::string& context);

// MRQA-style JSON Lines: an optional first header line is skipped; each record
// line carries `context` and `qas` with `detected_answers[].char_spans`
// (inclusive codepoint ranges, converted to byte offsets here). Malformed
// lines raise ParseError with their line number.
std::vector<RawRecord> parse_stream(std::istream& in);
// Accepts plain or gzip-compressed files (detected by magic bytes).
std::vector<RawRecord> parse_file(const std::string& path);

struct ExclusionReport {
    std::size_t questions_in = 0;
    std::size_t questions_kept = 0;
    std::size_t questions_dropped_title_only = 0;  // every answer fell in a title feature
    std::size_t questions_dropped_no_answer = 0;

    std::size_t answers_in = 0;
    std::size_t answers_kept = 0;
    std::size_t answers_title = 0;
    std::size_t answers_multi_sentence = 0;
    std::size_t answers_unmapped = 0;

    std::size_t questions_dropped() const {
        return questions_dropped_title_only + questions_dropped_no_answer;
    }

    bool operator==(const ExclusionReport&) const = default;
};

struct Conversion {
    CandidatePool pool;
    QuestionSet questions;
    ExclusionReport report;
};

// Every sentence of every cleaned context becomes a candidate; answer spans
// map to their containing sentence, spans crossing sentence boundaries are
// excluded, and title-feature answers are dropped (title filtering applies
// first). Questions that lose all answers are dropped. Gold sets are
// deduplicated per question.
Conversion convert(const std::vector<RawRecord>& records, DatasetKind kind,
                   const SentenceSplitter& splitter);

struct CorpusStats {
    std::size_t n_questions = 0;
    std::size_t n_candidates = 0;
    std::size_t n_pairs = 0;  // one per (question, gold answer)
    double avg_answers_per_question = 0.0;
    double avg_question_tokens = 0.0;  // unnormalized word tokens
    double avg_answer_tokens = 0.0;    // averaged over (question, gold) pairs
    double avg_context_tokens = 0.0;
    double question_answer_overlap_percent = 0.0;
    double question_context_overlap_percent = 0.0;
};

// Lengths use the unnormalized word tokenizer. Overlap for one (question,
// gold answer) pair is |unique question tokens ∩ unique answer tokens| /
// |unique question tokens| x 100, averaged over all pairs; context overlap is
// analogous with the answer's context.
CorpusStats compute_stats(const CandidatePool& pool, const QuestionSet& questions);

// The metric definitions ride along in the JSON header so numbers stay
// comparable across versions.
std::string stats_to_json(const CorpusStats& stats);
std::string stats_table(const CorpusStats& stats);
std::string exclusion_report_to_json(const ExclusionReport& report);

struct TextTrainingPair {
    std::string question;
    std::string answer;
    std::string context;
};

// One pair per (question, gold answer), mirroring test conversion.
std::vector<TextTrainingPair> make_training_pairs(const CandidatePool& pool,
                                                  const QuestionSet& questions);

}  // namespace reqa
