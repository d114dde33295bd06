#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "reqa/corpus.hpp"
#include "reqa/tokenizers.hpp"

namespace reqa {

struct Bm25Params {
    double k1 = 1.5;
    double b = 0.75;
    // Non-positive raw IDF values are replaced by epsilon times the mean of
    // the positive IDFs.
    double idf_floor_epsilon = 0.25;

    void validate() const;  // k1 > 0, b in [0,1], epsilon >= 0
};

struct Posting {
    CandidateId doc = 0;
    std::uint32_t tf = 0;

    bool operator==(const Posting&) const = default;
};

// Per-term IDF values, parallel to the index's term ids.
struct IdfTable {
    std::vector<double> values;

    bool operator==(const IdfTable&) const = default;
};

// Inverted statistics over the candidate pool: one document per candidate,
// same id space as the pool. Immutable after build; queries are pure reads.
class Bm25Index {
public:
    std::size_t n_docs() const { return doc_lengths_.size(); }
    double avgdl() const { return avgdl_; }
    std::uint32_t doc_length(CandidateId doc) const;
    std::size_t n_terms() const { return terms_.size(); }

    // -1 when the term does not occur in the corpus.
    std::int64_t term_id(std::string_view term) const;
    const std::string& term(std::size_t term_id) const { return terms_[term_id]; }
    const std::vector<Posting>& postings(std::size_t term_id) const {
        return postings_[term_id];
    }
    std::size_t doc_frequency(std::size_t term_id) const { return postings_[term_id].size(); }

    const std::string& tokenizer_fingerprint() const { return tokenizer_fingerprint_; }
    bool use_context() const { return use_context_; }
    const Bm25Params& build_params() const { return build_params_; }

    // Set by the CLI to the content hash of the source pool; round-trips
    // through save/load.
    std::string source_fingerprint;

private:
    friend struct Bm25Builder;
    std::vector<std::string> terms_;
    std::unordered_map<std::string, std::size_t> term_ids_;
    std::vector<std::vector<Posting>> postings_;
    std::vector<std::uint32_t> doc_lengths_;
    double avgdl_ = 0.0;
    std::string tokenizer_fingerprint_;
    bool use_context_ = true;
    Bm25Params build_params_;
};

struct Bm25Build {
    Bm25Index index;
    IdfTable idf;
};

// Document construction: with context, tokens of (sentence + " " + context),
// so the answer sentence occurs twice overall and scores stay unique per
// sentence in context; without context, tokens of the sentence alone.
std::vector<std::string> build_document(const Candidate& candidate, const Tokenizer& tokenizer,
                                        bool use_context);

// Raw IDF(t) = ln((N - n(t) + 0.5) / (n(t) + 0.5)); IDF is computed per
// constructed dataset. Tokenization may run on `threads` workers; counts are
// exact integers so the result is thread-count independent.
Bm25Build build_index(const CandidatePool& pool, const Tokenizer& tokenizer,
                      const Bm25Params& params, bool use_context, unsigned threads = 1);

// Okapi BM25 score of one document for the query; repeated query tokens
// contribute once per occurrence, out-of-corpus terms contribute zero.
double score(const Bm25Index& index, const IdfTable& idf, const Bm25Params& params,
             std::span<const std::string> query_tokens, CandidateId doc);

// Top-k by score with ties broken by ascending candidate id; identical to
// brute-force scoring of every document.
std::vector<ScoredCandidate> retrieve_topk(const Bm25Index& index, const IdfTable& idf,
                                           const Bm25Params& params,
                                           std::span<const std::string> query_tokens,
                                           std::size_t k);

void save_index(const Bm25Index& index, const IdfTable& idf, std::ostream& out);
void save_index(const Bm25Index& index, const IdfTable& idf, const std::string& path);
Bm25Build load_index(std::istream& in);
Bm25Build load_index(const std::string& path);

}  // namespace reqa
