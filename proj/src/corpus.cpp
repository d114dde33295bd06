#include "reqa/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace reqa {

namespace {

using nlohmann::json;

std::string trim_copy(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    return out;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    return in;
}

}  // namespace

CandidatePool CandidatePool::assign_ids(std::vector<CandidateRecord> records) {
    std::vector<Candidate> candidates;
    candidates.reserve(records.size());
    std::unordered_map<std::string, std::unordered_set<int>> seen;
    CandidateId next_id = 0;
    for (auto& rec : records) {
        if (trim_copy(rec.sentence).empty())
            throw FormatError("candidate sentence is empty after trimming (doc_id=" + rec.doc_id +
                              ")");
        if (!seen[rec.doc_id].insert(rec.sentence_index).second)
            throw DuplicateCandidate("duplicate candidate (doc_id=" + rec.doc_id +
                                     ", sentence_index=" + std::to_string(rec.sentence_index) +
                                     ")");
        Candidate c;
        c.id = next_id++;
        c.doc_id = std::move(rec.doc_id);
        c.sentence_index = rec.sentence_index;
        c.sentence = std::move(rec.sentence);
        c.context = std::move(rec.context);
        c.title = std::move(rec.title);
        if (c.context.find(c.sentence) == std::string::npos)
            throw FormatError("sentence is not a substring of its context (doc_id=" + c.doc_id +
                              ")");
        candidates.push_back(std::move(c));
    }
    CandidatePool pool;
    pool.candidates_ = std::move(candidates);
    return pool;
}

CandidatePool CandidatePool::from_candidates(std::vector<Candidate> candidates) {
    std::unordered_map<std::string, std::unordered_set<int>> seen;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const Candidate& c = candidates[i];
        if (c.id != static_cast<CandidateId>(i))
            throw FormatError("candidate ids must be dense 0..N-1 in order, got " +
                              std::to_string(c.id) + " at position " + std::to_string(i));
        if (trim_copy(c.sentence).empty())
            throw FormatError("candidate " + std::to_string(c.id) + " has an empty sentence");
        if (c.context.find(c.sentence) == std::string::npos)
            throw FormatError("sentence of candidate " + std::to_string(c.id) +
                              " is not a substring of its context");
        if (!seen[c.doc_id].insert(c.sentence_index).second)
            throw DuplicateCandidate("duplicate candidate (doc_id=" + c.doc_id +
                                     ", sentence_index=" + std::to_string(c.sentence_index) + ")");
    }
    CandidatePool pool;
    pool.candidates_ = std::move(candidates);
    return pool;
}

const Candidate& CandidatePool::at(CandidateId id) const {
    if (!contains(id))
        throw UnknownCandidateId("candidate id " + std::to_string(id) + " not in pool of size " +
                                 std::to_string(candidates_.size()));
    return candidates_[static_cast<std::size_t>(id)];
}

namespace {

void canonicalize_gold(std::vector<Question>& questions) {
    for (auto& q : questions) {
        if (q.gold.empty())
            throw FormatError("question " + q.qid + " has an empty gold set");
        std::sort(q.gold.begin(), q.gold.end());
        q.gold.erase(std::unique(q.gold.begin(), q.gold.end()), q.gold.end());
    }
}

}  // namespace

QuestionSet::QuestionSet(std::vector<Question> questions, const CandidatePool& pool) {
    canonicalize_gold(questions);
    for (const auto& q : questions) {
        for (CandidateId id : q.gold) {
            if (!pool.contains(id))
                throw UnknownCandidateId("question " + q.qid + " references unknown candidate " +
                                         std::to_string(id));
        }
    }
    questions_ = std::move(questions);
}

QuestionSet QuestionSet::unvalidated(std::vector<Question> questions) {
    canonicalize_gold(questions);
    QuestionSet set;
    set.questions_ = std::move(questions);
    return set;
}

std::vector<Candidate> gold_lookup(const CandidatePool& pool, const Question& question) {
    std::vector<Candidate> out;
    out.reserve(question.gold.size());
    for (CandidateId id : question.gold) out.push_back(pool.at(id));
    return out;
}

const QuestionRanking* RetrievalRun::find(const std::string& qid) const {
    for (const auto& r : rankings) {
        if (r.qid == qid) return &r;
    }
    return nullptr;
}

void RetrievalRun::validate() const {
    for (const auto& r : rankings) {
        std::unordered_set<CandidateId> ids;
        for (std::size_t i = 0; i < r.ranking.size(); ++i) {
            if (!ids.insert(r.ranking[i].id).second)
                throw FormatError("run " + system_name + " qid " + r.qid +
                                  " repeats candidate " + std::to_string(r.ranking[i].id));
            if (i > 0) {
                const auto& prev = r.ranking[i - 1];
                const auto& cur = r.ranking[i];
                if (cur.score > prev.score ||
                    (cur.score == prev.score && cur.id < prev.id))
                    throw FormatError("run " + system_name + " qid " + r.qid +
                                      " violates (score desc, id asc) order at position " +
                                      std::to_string(i));
            }
        }
    }
}

// ---- JSON Lines ----

void save_pool_jsonl(const CandidatePool& pool, std::ostream& out) {
    for (const auto& c : pool) {
        json j;
        j["id"] = c.id;
        j["doc_id"] = c.doc_id;
        j["sentence_index"] = c.sentence_index;
        j["sentence"] = c.sentence;
        j["context"] = c.context;
        if (!c.title.empty()) j["title"] = c.title;
        out << j.dump() << '\n';
    }
}

void save_pool_jsonl(const CandidatePool& pool, const std::string& path) {
    auto out = open_output(path);
    save_pool_jsonl(pool, out);
}

CandidatePool load_pool_jsonl(std::istream& in) {
    std::vector<Candidate> candidates;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim_copy(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError("pool line " + std::to_string(line_no) + ": " + e.what());
        }
        try {
            Candidate c;
            c.id = j.at("id").get<CandidateId>();
            c.doc_id = j.at("doc_id").get<std::string>();
            c.sentence_index = j.at("sentence_index").get<int>();
            c.sentence = j.at("sentence").get<std::string>();
            c.context = j.at("context").get<std::string>();
            c.title = j.value("title", std::string{});
            candidates.push_back(std::move(c));
        } catch (const json::exception& e) {
            throw ParseError("pool line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return CandidatePool::from_candidates(std::move(candidates));
}

CandidatePool load_pool_jsonl(const std::string& path) {
    auto in = open_input(path);
    return load_pool_jsonl(in);
}

void save_questions_jsonl(const QuestionSet& questions, std::ostream& out) {
    for (const auto& q : questions) {
        json j;
        j["qid"] = q.qid;
        j["question"] = q.text;
        j["gold"] = q.gold;
        out << j.dump() << '\n';
    }
}

void save_questions_jsonl(const QuestionSet& questions, const std::string& path) {
    auto out = open_output(path);
    save_questions_jsonl(questions, out);
}

QuestionSet load_questions_jsonl(std::istream& in, const CandidatePool* pool) {
    std::vector<Question> questions;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim_copy(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError("question line " + std::to_string(line_no) + ": " + e.what());
        }
        try {
            Question q;
            q.qid = j.at("qid").get<std::string>();
            q.text = j.at("question").get<std::string>();
            q.gold = j.at("gold").get<std::vector<CandidateId>>();
            questions.push_back(std::move(q));
        } catch (const json::exception& e) {
            throw ParseError("question line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (pool) return QuestionSet(std::move(questions), *pool);
    return QuestionSet::unvalidated(std::move(questions));
}

QuestionSet load_questions_jsonl(const std::string& path, const CandidatePool* pool) {
    auto in = open_input(path);
    return load_questions_jsonl(in, pool);
}

void save_run_jsonl(const RetrievalRun& run, std::ostream& out) {
    json header;
    header["reqa_run"] = 1;
    header["system"] = run.system_name;
    out << header.dump() << '\n';
    for (const auto& r : run.rankings) {
        json j;
        j["qid"] = r.qid;
        json ranked = json::array();
        for (const auto& sc : r.ranking) ranked.push_back({sc.id, sc.score});
        j["ranking"] = std::move(ranked);
        if (r.gold_rank) j["gold_rank"] = *r.gold_rank;
        out << j.dump() << '\n';
    }
}

void save_run_jsonl(const RetrievalRun& run, const std::string& path) {
    auto out = open_output(path);
    save_run_jsonl(run, out);
}

RetrievalRun load_run_jsonl(std::istream& in) {
    RetrievalRun run;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim_copy(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError("run line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!header_seen && j.contains("reqa_run")) {
            run.system_name = j.value("system", std::string{});
            header_seen = true;
            continue;
        }
        header_seen = true;
        try {
            QuestionRanking r;
            r.qid = j.at("qid").get<std::string>();
            for (const auto& entry : j.at("ranking")) {
                ScoredCandidate sc;
                sc.id = entry.at(0).get<CandidateId>();
                sc.score = entry.at(1).get<double>();
                r.ranking.push_back(sc);
            }
            if (j.contains("gold_rank")) r.gold_rank = j.at("gold_rank").get<std::uint64_t>();
            run.rankings.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw ParseError("run line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    run.validate();
    return run;
}

RetrievalRun load_run_jsonl(const std::string& path) {
    auto in = open_input(path);
    return load_run_jsonl(in);
}

}  // namespace reqa
