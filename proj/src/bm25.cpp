#include "reqa/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "reqa/error.hpp"

namespace reqa {

namespace {

using nlohmann::json;

double tf_saturation(double tf, double k1, double b, double doc_len, double avgdl) {
    return tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * doc_len / avgdl));
}

}  // namespace

void Bm25Params::validate() const {
    if (!(k1 > 0.0)) throw FormatError("bm25: k1 must be > 0");
    if (!(b >= 0.0 && b <= 1.0)) throw FormatError("bm25: b must lie in [0,1]");
    if (!(idf_floor_epsilon >= 0.0)) throw FormatError("bm25: epsilon must be >= 0");
}

std::uint32_t Bm25Index::doc_length(CandidateId doc) const {
    if (doc < 0 || static_cast<std::size_t>(doc) >= doc_lengths_.size())
        throw UnknownDocument("document " + std::to_string(doc) + " not in index of size " +
                              std::to_string(doc_lengths_.size()));
    return doc_lengths_[static_cast<std::size_t>(doc)];
}

std::int64_t Bm25Index::term_id(std::string_view term) const {
    auto it = term_ids_.find(std::string(term));
    if (it == term_ids_.end()) return -1;
    return static_cast<std::int64_t>(it->second);
}

std::vector<std::string> build_document(const Candidate& candidate, const Tokenizer& tokenizer,
                                        bool use_context) {
    if (!use_context) return tokenizer.tokenize(candidate.sentence);
    std::string doc = candidate.sentence;
    doc.push_back(' ');
    doc.append(candidate.context);
    return tokenizer.tokenize(doc);
}

struct Bm25Builder {
    static Bm25Build load(std::istream& in) {
        json j;
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            throw ParseError(std::string("bad index file: ") + e.what());
        }
        if (j.value("format", std::string{}) != "reqa-bm25-index")
            throw FormatError("not a reqa BM25 index file");

        Bm25Build build;
        Bm25Index& index = build.index;
        index.build_params_.k1 = j.at("params").at("k1").get<double>();
        index.build_params_.b = j.at("params").at("b").get<double>();
        index.build_params_.idf_floor_epsilon =
            j.at("params").at("idf_floor_epsilon").get<double>();
        index.tokenizer_fingerprint_ = j.at("tokenizer").get<std::string>();
        index.use_context_ = j.at("use_context").get<bool>();
        index.source_fingerprint = j.value("source_fingerprint", std::string{});
        index.avgdl_ = j.at("avgdl").get<double>();
        index.doc_lengths_ = j.at("doc_lengths").get<std::vector<std::uint32_t>>();
        for (const auto& entry : j.at("terms")) {
            const std::size_t t = index.terms_.size();
            index.terms_.push_back(entry.at("t").get<std::string>());
            index.term_ids_.emplace(index.terms_.back(), t);
            std::vector<Posting> plist;
            for (const auto& p : entry.at("p"))
                plist.push_back({p.at(0).get<CandidateId>(), p.at(1).get<std::uint32_t>()});
            std::sort(plist.begin(), plist.end(),
                      [](const Posting& a, const Posting& b) { return a.doc < b.doc; });
            index.postings_.push_back(std::move(plist));
            build.idf.values.push_back(entry.at("idf").get<double>());
        }
        return build;
    }

    static Bm25Build run(const CandidatePool& pool, const Tokenizer& tokenizer,
                         const Bm25Params& params, bool use_context, unsigned threads) {
        params.validate();
        if (pool.empty()) throw EmptyPool("cannot build a BM25 index over an empty pool");

        const std::size_t n = pool.size();
        std::vector<std::vector<std::string>> docs(n);
        auto tokenize_range = [&](std::size_t lo, std::size_t hi) {
            for (std::size_t i = lo; i < hi; ++i)
                docs[i] = build_document(pool.candidates()[i], tokenizer, use_context);
        };
        if (threads <= 1 || n < 2 * threads) {
            tokenize_range(0, n);
        } else {
            std::vector<std::thread> workers;
            const std::size_t chunk = (n + threads - 1) / threads;
            for (unsigned t = 0; t < threads; ++t) {
                const std::size_t lo = t * chunk;
                if (lo >= n) break;
                workers.emplace_back(tokenize_range, lo, std::min(lo + chunk, n));
            }
            for (auto& w : workers) w.join();
        }

        Bm25Index index;
        index.use_context_ = use_context;
        index.build_params_ = params;
        index.tokenizer_fingerprint_ = tokenizer.fingerprint();
        index.doc_lengths_.resize(n);

        // Sequential aggregation in document order keeps the index independent
        // of the tokenization thread count.
        std::uint64_t total_len = 0;
        std::unordered_map<std::string, std::uint32_t> tf;
        for (std::size_t d = 0; d < n; ++d) {
            const auto& tokens = docs[d];
            index.doc_lengths_[d] = static_cast<std::uint32_t>(tokens.size());
            total_len += tokens.size();
            tf.clear();
            for (const auto& tok : tokens) ++tf[tok];
            for (const auto& [term, count] : tf) {
                auto [it, inserted] = index.term_ids_.emplace(term, index.terms_.size());
                if (inserted) {
                    index.terms_.push_back(term);
                    index.postings_.emplace_back();
                }
                index.postings_[it->second].push_back(
                    {static_cast<CandidateId>(d), count});
            }
        }
        index.avgdl_ = static_cast<double>(total_len) / static_cast<double>(n);
        // Postings are in ascending doc order: the aggregation loop visits
        // documents in id order and each term occurs once per document.

        IdfTable idf;
        idf.values.resize(index.terms_.size());
        const double N = static_cast<double>(n);
        double positive_sum = 0.0;
        std::size_t positive_count = 0;
        for (std::size_t t = 0; t < index.terms_.size(); ++t) {
            const double df = static_cast<double>(index.postings_[t].size());
            const double raw = std::log((N - df + 0.5) / (df + 0.5));
            idf.values[t] = raw;
            if (raw > 0.0) {
                positive_sum += raw;
                ++positive_count;
            }
        }
        const double mean_positive = positive_count ? positive_sum / positive_count : 0.0;
        const double floor = params.idf_floor_epsilon * mean_positive;
        for (double& v : idf.values)
            if (v <= 0.0) v = floor;

        return {std::move(index), std::move(idf)};
    }
};

Bm25Build build_index(const CandidatePool& pool, const Tokenizer& tokenizer,
                      const Bm25Params& params, bool use_context, unsigned threads) {
    return Bm25Builder::run(pool, tokenizer, params, use_context, threads);
}

double score(const Bm25Index& index, const IdfTable& idf, const Bm25Params& params,
             std::span<const std::string> query_tokens, CandidateId doc) {
    const double doc_len = index.doc_length(doc);  // throws UnknownDocument
    double total = 0.0;
    for (const auto& q : query_tokens) {
        const std::int64_t t = index.term_id(q);
        if (t < 0) continue;
        const auto& plist = index.postings(static_cast<std::size_t>(t));
        auto it = std::lower_bound(plist.begin(), plist.end(), doc,
                                   [](const Posting& p, CandidateId d) { return p.doc < d; });
        if (it == plist.end() || it->doc != doc) continue;
        total += idf.values[static_cast<std::size_t>(t)] *
                 tf_saturation(it->tf, params.k1, params.b, doc_len, index.avgdl());
    }
    return total;
}

std::vector<ScoredCandidate> retrieve_topk(const Bm25Index& index, const IdfTable& idf,
                                           const Bm25Params& params,
                                           std::span<const std::string> query_tokens,
                                           std::size_t k) {
    params.validate();
    const std::size_t n = index.n_docs();
    if (n == 0) throw EmptyPool("BM25 index is empty");
    if (k == 0) return {};
    k = std::min(k, n);

    // Accumulate per query-token occurrence over postings. Each document
    // receives its contributions in query order, matching a direct per-
    // document evaluation of the scoring formula bit for bit.
    std::vector<double> acc(n, 0.0);
    std::vector<char> touched(n, 0);
    std::vector<CandidateId> touched_ids;
    for (const auto& q : query_tokens) {
        const std::int64_t t = index.term_id(q);
        if (t < 0) continue;
        const double term_idf = idf.values[static_cast<std::size_t>(t)];
        for (const Posting& p : index.postings(static_cast<std::size_t>(t))) {
            const std::size_t d = static_cast<std::size_t>(p.doc);
            if (!touched[d]) {
                touched[d] = 1;
                touched_ids.push_back(p.doc);
            }
            acc[d] += term_idf *
                      tf_saturation(p.tf, params.k1, params.b, index.doc_length(p.doc),
                                    index.avgdl());
        }
    }

    std::vector<ScoredCandidate> positives;
    positives.reserve(touched_ids.size());
    for (CandidateId d : touched_ids) {
        const double s = acc[static_cast<std::size_t>(d)];
        if (s > 0.0) positives.push_back({d, s});
    }
    auto better = [](const ScoredCandidate& a, const ScoredCandidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    };
    if (positives.size() > k) {
        std::partial_sort(positives.begin(), positives.begin() + static_cast<std::ptrdiff_t>(k),
                          positives.end(), better);
        positives.resize(k);
    } else {
        std::sort(positives.begin(), positives.end(), better);
    }

    if (positives.size() < k) {
        // Documents sharing no query term (and any zero-scored matches) tie at
        // zero and fill the tail in ascending id order.
        std::vector<char> taken(n, 0);
        for (const auto& sc : positives) taken[static_cast<std::size_t>(sc.id)] = 1;
        for (std::size_t d = 0; d < n && positives.size() < k; ++d) {
            if (!taken[d]) positives.push_back({static_cast<CandidateId>(d), 0.0});
        }
    }
    return positives;
}

void save_index(const Bm25Index& index, const IdfTable& idf, std::ostream& out) {
    json j;
    j["format"] = "reqa-bm25-index";
    j["version"] = 1;
    j["params"] = {{"k1", index.build_params().k1},
                   {"b", index.build_params().b},
                   {"idf_floor_epsilon", index.build_params().idf_floor_epsilon}};
    j["tokenizer"] = index.tokenizer_fingerprint();
    j["use_context"] = index.use_context();
    j["source_fingerprint"] = index.source_fingerprint;
    j["avgdl"] = index.avgdl();
    json doc_lengths = json::array();
    for (std::size_t d = 0; d < index.n_docs(); ++d)
        doc_lengths.push_back(index.doc_length(static_cast<CandidateId>(d)));
    j["doc_lengths"] = std::move(doc_lengths);
    json terms = json::array();
    for (std::size_t t = 0; t < index.n_terms(); ++t) {
        json entry;
        entry["t"] = index.term(t);
        entry["idf"] = idf.values[t];
        json postings = json::array();
        for (const Posting& p : index.postings(t)) postings.push_back({p.doc, p.tf});
        entry["p"] = std::move(postings);
        terms.push_back(std::move(entry));
    }
    j["terms"] = std::move(terms);
    out << j.dump() << '\n';
}

void save_index(const Bm25Index& index, const IdfTable& idf, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    save_index(index, idf, out);
}

Bm25Build load_index(std::istream& in) { return Bm25Builder::load(in); }

Bm25Build load_index(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    return load_index(in);
}

}  // namespace reqa
