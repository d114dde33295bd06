#include "reqa/converter.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <zlib.h>

#include <json.hpp>

#include "reqa/tokenizers.hpp"
#include "reqa/unicode.hpp"

namespace reqa {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr std::string_view kDocTag = "[DOC]";
constexpr std::string_view kTleTag = "[TLE]";
constexpr std::string_view kParTag = "[PAR]";
constexpr std::string_view kSepTag = "[SEP]";

bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v';
}

// Shrinks [begin, end) to non-whitespace endpoints.
void trim_range(const std::string& text, std::size_t& begin, std::size_t& end) {
    while (begin < end && is_ascii_space(text[begin])) ++begin;
    while (end > begin && is_ascii_space(text[end - 1])) --end;
}

// A cleaned context whose body is one contiguous slice of the original.
CleanedContext single_slice_context(const std::string& original, std::size_t begin,
                                    std::size_t end, std::string title,
                                    std::vector<std::pair<std::size_t, std::size_t>> title_ranges) {
    CleanedContext ctx;
    ctx.title = std::move(title);
    ctx.title_ranges = std::move(title_ranges);
    if (begin < end) {
        ctx.text = original.substr(begin, end - begin);
        ctx.segments.push_back({begin, end, 0});
    }
    return ctx;
}

std::vector<std::size_t> find_all(const std::string& text, std::string_view tag) {
    std::vector<std::size_t> out;
    std::size_t pos = 0;
    while ((pos = text.find(tag, pos)) != std::string::npos) {
        out.push_back(pos);
        pos += tag.size();
    }
    return out;
}

// SearchQA and HotpotQA share the same shape: a separator tag delimits
// documents, and within each document an optional title feature precedes the
// body. SearchQA: [DOC] ... [TLE]title[PAR]body; HotpotQA: [PAR] title[SEP]body.
std::vector<CleanedContext> split_documents(const std::string& context,
                                            std::string_view doc_tag,
                                            std::string_view title_open,
                                            std::string_view title_close) {
    std::vector<std::pair<std::size_t, std::size_t>> docs;
    const auto doc_positions = find_all(context, doc_tag);
    if (doc_positions.empty()) {
        docs.emplace_back(0, context.size());
    } else {
        if (doc_positions.front() > 0) docs.emplace_back(0, doc_positions.front());
        for (std::size_t i = 0; i < doc_positions.size(); ++i) {
            const std::size_t begin = doc_positions[i] + doc_tag.size();
            const std::size_t end =
                i + 1 < doc_positions.size() ? doc_positions[i + 1] : context.size();
            docs.emplace_back(begin, end);
        }
    }

    std::vector<CleanedContext> out;
    for (auto [doc_begin, doc_end] : docs) {
        std::size_t title_begin = std::string::npos;
        std::size_t title_end = std::string::npos;
        std::size_t body_begin = doc_begin;

        std::size_t open_pos = std::string::npos;
        if (!title_open.empty()) {
            open_pos = context.find(title_open, doc_begin);
            if (open_pos >= doc_end) open_pos = std::string::npos;
        }
        const std::size_t close_search_from =
            open_pos != std::string::npos ? open_pos + title_open.size() : doc_begin;
        std::size_t close_pos = context.find(title_close, close_search_from);
        if (close_pos >= doc_end) close_pos = std::string::npos;

        if (close_pos != std::string::npos) {
            title_begin = open_pos != std::string::npos ? open_pos + title_open.size() : doc_begin;
            title_end = close_pos;
            body_begin = close_pos + title_close.size();
        } else if (open_pos != std::string::npos) {
            // Title feature with no body divider: the whole tail is title.
            title_begin = open_pos + title_open.size();
            title_end = doc_end;
            body_begin = doc_end;
        }

        std::size_t body_end = doc_end;
        trim_range(context, body_begin, body_end);

        std::string title;
        std::vector<std::pair<std::size_t, std::size_t>> title_ranges;
        if (title_begin != std::string::npos) {
            trim_range(context, title_begin, title_end);
            if (title_begin < title_end) {
                title = context.substr(title_begin, title_end - title_begin);
                title_ranges.emplace_back(title_begin, title_end);
            }
        }

        CleanedContext ctx =
            single_slice_context(context, body_begin, body_end, std::move(title),
                                 std::move(title_ranges));
        if (!ctx.text.empty() || !ctx.title_ranges.empty()) out.push_back(std::move(ctx));
    }
    return out;
}

// TriviaQA: delete every tag, keep one context.
CleanedContext remove_all_tags(const std::string& context) {
    static constexpr std::string_view kTags[] = {kDocTag, kTleTag, kParTag, kSepTag};
    std::vector<std::pair<std::size_t, std::size_t>> keep;
    std::size_t pos = 0;
    while (pos < context.size()) {
        std::size_t next_tag = std::string::npos;
        std::size_t tag_len = 0;
        for (const auto tag : kTags) {
            const std::size_t p = context.find(tag, pos);
            if (p < next_tag) {
                next_tag = p;
                tag_len = tag.size();
            }
        }
        if (next_tag == std::string::npos) {
            keep.emplace_back(pos, context.size());
            break;
        }
        if (next_tag > pos) keep.emplace_back(pos, next_tag);
        pos = next_tag + tag_len;
    }

    // Trim whitespace off the cleaned edges only; whitespace between copied
    // runs is genuine text.
    while (!keep.empty()) {
        auto& [b, e] = keep.front();
        while (b < e && is_ascii_space(context[b])) ++b;
        if (b < e) break;
        keep.erase(keep.begin());
    }
    while (!keep.empty()) {
        auto& [b, e] = keep.back();
        while (e > b && is_ascii_space(context[e - 1])) --e;
        if (b < e) break;
        keep.pop_back();
    }

    CleanedContext ctx;
    for (const auto& [b, e] : keep) {
        if (b >= e) continue;
        ctx.segments.push_back({b, e, ctx.text.size()});
        ctx.text.append(context, b, e - b);
    }
    return ctx;
}

}  // namespace

DatasetKind dataset_kind_from_string(std::string_view name) {
    std::string lower(name);
    for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower == "searchqa") return DatasetKind::SearchQA;
    if (lower == "triviaqa") return DatasetKind::TriviaQA;
    if (lower == "hotpotqa") return DatasetKind::HotpotQA;
    if (lower == "squad") return DatasetKind::SQuAD;
    if (lower == "nq" || lower == "naturalquestions") return DatasetKind::NQ;
    if (lower == "bioasq") return DatasetKind::BioASQ;
    if (lower == "relationextraction" || lower == "re")
        return DatasetKind::RelationExtraction;
    if (lower == "textbookqa") return DatasetKind::TextbookQA;
    if (lower == "generic") return DatasetKind::Generic;
    throw FormatError("unknown dataset kind: " + std::string(name));
}

std::string to_string(DatasetKind kind) {
    switch (kind) {
        case DatasetKind::SearchQA: return "searchqa";
        case DatasetKind::TriviaQA: return "triviaqa";
        case DatasetKind::HotpotQA: return "hotpotqa";
        case DatasetKind::SQuAD: return "squad";
        case DatasetKind::NQ: return "nq";
        case DatasetKind::BioASQ: return "bioasq";
        case DatasetKind::RelationExtraction: return "relationextraction";
        case DatasetKind::TextbookQA: return "textbookqa";
        case DatasetKind::Generic: return "generic";
    }
    return "generic";
}

CleanedContext::MapResult CleanedContext::map_span(std::size_t orig_begin, std::size_t orig_end,
                                                   std::size_t& cleaned_begin,
                                                   std::size_t& cleaned_end) const {
    for (const auto& [tb, te] : title_ranges) {
        if (orig_begin >= tb && orig_end <= te) return MapResult::Title;
    }
    for (const auto& seg : segments) {
        if (orig_begin >= seg.orig_begin && orig_end <= seg.orig_end) {
            cleaned_begin = seg.cleaned_begin + (orig_begin - seg.orig_begin);
            cleaned_end = seg.cleaned_begin + (orig_end - seg.orig_begin);
            return MapResult::Body;
        }
    }
    return MapResult::Unmapped;
}

std::vector<CleanedContext> strip_tags(DatasetKind kind, const std::string& context) {
    switch (kind) {
        case DatasetKind::SearchQA:
            return split_documents(context, kDocTag, kTleTag, kParTag);
        case DatasetKind::HotpotQA:
            return split_documents(context, kParTag, /*title_open=*/{}, kSepTag);
        case DatasetKind::TriviaQA: {
            std::vector<CleanedContext> out;
            CleanedContext ctx = remove_all_tags(context);
            if (!ctx.text.empty()) out.push_back(std::move(ctx));
            return out;
        }
        default: {
            std::vector<CleanedContext> out;
            if (!context.empty())
                out.push_back(single_slice_context(context, 0, context.size(), {}, {}));
            return out;
        }
    }
}

std::vector<RawRecord> parse_stream(std::istream& in) {
    std::vector<RawRecord> records;
    std::string line;
    std::size_t line_no = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t content = line.find_first_not_of(" \t\r");
        if (content == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (first) {
            first = false;
            if (j.is_object() && j.contains("header") && !j.contains("context")) continue;
        }
        try {
            RawRecord rec;
            rec.context = j.at("context").get<std::string>();

            // Codepoint index -> byte offset, for translating MRQA char spans.
            std::vector<std::size_t> cp_offsets;
            for (const auto& cp : unicode::decode_all(rec.context))
                cp_offsets.push_back(cp.offset);
            const std::size_t n_cps = cp_offsets.size();

            for (const auto& qa : j.value("qas", json::array())) {
                RawQa raw;
                raw.qid = qa.at("qid").is_string() ? qa.at("qid").get<std::string>()
                                                   : qa.at("qid").dump();
                raw.question = qa.at("question").get<std::string>();
                for (const auto& det : qa.value("detected_answers", json::array())) {
                    for (const auto& span : det.value("char_spans", json::array())) {
                        const std::int64_t s = span.at(0).get<std::int64_t>();
                        const std::int64_t e = span.at(1).get<std::int64_t>();
                        if (s < 0 || e < s || static_cast<std::size_t>(e) >= n_cps)
                            throw OutOfBounds("line " + std::to_string(line_no) + ": char span [" +
                                              std::to_string(s) + "," + std::to_string(e) +
                                              "] outside context of " + std::to_string(n_cps) +
                                              " characters");
                        AnswerSpan as;
                        as.begin = cp_offsets[static_cast<std::size_t>(s)];
                        as.end = static_cast<std::size_t>(e) + 1 < n_cps
                                     ? cp_offsets[static_cast<std::size_t>(e) + 1]
                                     : rec.context.size();
                        as.text = rec.context.substr(as.begin, as.end - as.begin);
                        raw.spans.push_back(std::move(as));
                    }
                }
                rec.qas.push_back(std::move(raw));
            }
            records.push_back(std::move(rec));
        } catch (const json::exception& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

namespace {

bool looks_gzipped(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open for reading: " + path);
    unsigned char magic[2] = {0, 0};
    probe.read(reinterpret_cast<char*>(magic), 2);
    return probe.gcount() == 2 && magic[0] == 0x1F && magic[1] == 0x8B;
}

std::string gunzip_file(const std::string& path) {
    gzFile gz = gzopen(path.c_str(), "rb");
    if (!gz) throw IoError("cannot open gzip file: " + path);
    std::string out;
    char buf[1 << 16];
    int n;
    while ((n = gzread(gz, buf, sizeof(buf))) > 0) out.append(buf, static_cast<std::size_t>(n));
    const bool failed = n < 0;
    gzclose(gz);
    if (failed) throw IoError("gzip read failed: " + path);
    return out;
}

}  // namespace

std::vector<RawRecord> parse_file(const std::string& path) {
    if (looks_gzipped(path)) {
        std::istringstream in(gunzip_file(path));
        return parse_stream(in);
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    return parse_stream(in);
}

Conversion convert(const std::vector<RawRecord>& records, DatasetKind kind,
                   const SentenceSplitter& splitter) {
    std::vector<CandidateRecord> candidate_records;
    std::vector<Question> questions;
    ExclusionReport report;

    struct ContextEntry {
        CleanedContext cleaned;
        std::vector<SentenceSpan> sentences;
        std::size_t first_candidate = 0;  // global index of its first sentence
    };

    for (std::size_t ri = 0; ri < records.size(); ++ri) {
        const RawRecord& rec = records[ri];
        std::vector<ContextEntry> entries;
        for (auto& cleaned : strip_tags(kind, rec.context)) {
            ContextEntry entry;
            entry.cleaned = std::move(cleaned);
            entry.sentences = splitter.split(entry.cleaned.text);
            entry.first_candidate = candidate_records.size();
            for (std::size_t si = 0; si < entry.sentences.size(); ++si) {
                const auto& span = entry.sentences[si];
                CandidateRecord c;
                c.doc_id = "r" + std::to_string(ri) + "c" + std::to_string(entries.size());
                c.sentence_index = static_cast<int>(si);
                c.sentence = entry.cleaned.text.substr(span.begin, span.end - span.begin);
                c.context = entry.cleaned.text;
                c.title = entry.cleaned.title;
                candidate_records.push_back(std::move(c));
            }
            entries.push_back(std::move(entry));
        }

        for (const RawQa& qa : rec.qas) {
            ++report.questions_in;
            std::set<CandidateId> gold;
            std::size_t title_hits = 0;
            for (const AnswerSpan& span : qa.spans) {
                ++report.answers_in;
                bool resolved = false;
                for (const ContextEntry& entry : entries) {
                    std::size_t cb = 0, ce = 0;
                    const auto result = entry.cleaned.map_span(span.begin, span.end, cb, ce);
                    if (result == CleanedContext::MapResult::Unmapped) continue;
                    resolved = true;
                    if (result == CleanedContext::MapResult::Title) {
                        ++report.answers_title;
                        ++title_hits;
                        break;
                    }
                    const auto sentence =
                        locate_span(entry.sentences, cb, ce, entry.cleaned.text.size());
                    if (!sentence) {
                        ++report.answers_multi_sentence;
                    } else {
                        ++report.answers_kept;
                        gold.insert(
                            static_cast<CandidateId>(entry.first_candidate + *sentence));
                    }
                    break;
                }
                if (!resolved) ++report.answers_unmapped;
            }
            if (!gold.empty()) {
                ++report.questions_kept;
                Question q;
                q.qid = qa.qid;
                q.text = qa.question;
                q.gold.assign(gold.begin(), gold.end());
                questions.push_back(std::move(q));
            } else if (!qa.spans.empty() && title_hits == qa.spans.size()) {
                ++report.questions_dropped_title_only;
            } else {
                ++report.questions_dropped_no_answer;
            }
        }
    }

    Conversion out;
    out.pool = CandidatePool::assign_ids(std::move(candidate_records));
    out.questions = QuestionSet(std::move(questions), out.pool);
    out.report = report;
    return out;
}

CorpusStats compute_stats(const CandidatePool& pool, const QuestionSet& questions) {
    if (pool.empty() || questions.empty())
        throw EmptyDataset("stats need a non-empty pool and question set");

    CorpusStats stats;
    stats.n_questions = questions.size();
    stats.n_candidates = pool.size();

    auto unique_tokens = [](const std::string& text) {
        auto tokens = word_tokenize(text);
        return std::set<std::string>(tokens.begin(), tokens.end());
    };

    double question_token_sum = 0.0;
    double answer_token_sum = 0.0;
    double context_token_sum = 0.0;
    double qa_overlap_sum = 0.0;
    double qc_overlap_sum = 0.0;
    std::size_t n_pairs = 0;
    std::size_t gold_total = 0;

    for (const Question& q : questions) {
        const auto q_tokens = word_tokenize(q.text);
        question_token_sum += static_cast<double>(q_tokens.size());
        const std::set<std::string> q_unique(q_tokens.begin(), q_tokens.end());
        gold_total += q.gold.size();
        for (CandidateId id : q.gold) {
            const Candidate& c = pool.at(id);
            ++n_pairs;
            answer_token_sum += static_cast<double>(word_tokenize(c.sentence).size());
            context_token_sum += static_cast<double>(word_tokenize(c.context).size());
            if (!q_unique.empty()) {
                const auto a_unique = unique_tokens(c.sentence);
                const auto c_unique = unique_tokens(c.context);
                std::size_t qa_common = 0, qc_common = 0;
                for (const auto& t : q_unique) {
                    if (a_unique.count(t)) ++qa_common;
                    if (c_unique.count(t)) ++qc_common;
                }
                qa_overlap_sum += 100.0 * static_cast<double>(qa_common) /
                                  static_cast<double>(q_unique.size());
                qc_overlap_sum += 100.0 * static_cast<double>(qc_common) /
                                  static_cast<double>(q_unique.size());
            }
        }
    }

    stats.n_pairs = n_pairs;
    stats.avg_answers_per_question =
        static_cast<double>(gold_total) / static_cast<double>(questions.size());
    stats.avg_question_tokens = question_token_sum / static_cast<double>(questions.size());
    stats.avg_answer_tokens = answer_token_sum / static_cast<double>(n_pairs);
    stats.avg_context_tokens = context_token_sum / static_cast<double>(n_pairs);
    stats.question_answer_overlap_percent = qa_overlap_sum / static_cast<double>(n_pairs);
    stats.question_context_overlap_percent = qc_overlap_sum / static_cast<double>(n_pairs);
    return stats;
}

namespace {

double round2(double v) { return std::round(v * 100.0) / 100.0; }

}  // namespace

std::string stats_to_json(const CorpusStats& stats) {
    ordered_json j;
    j["definitions"] = {
        {"lengths", "mean word-token counts; answer/context averaged over (question, gold) pairs"},
        {"overlap",
         "per (question, gold) pair: |unique question tokens & unique answer tokens| / "
         "|unique question tokens| * 100, averaged over pairs; context overlap analogous"},
    };
    j["n_questions"] = stats.n_questions;
    j["n_candidates"] = stats.n_candidates;
    j["n_pairs"] = stats.n_pairs;
    j["avg_answers_per_question"] = round2(stats.avg_answers_per_question);
    j["avg_question_tokens"] = round2(stats.avg_question_tokens);
    j["avg_answer_tokens"] = round2(stats.avg_answer_tokens);
    j["avg_context_tokens"] = round2(stats.avg_context_tokens);
    j["question_answer_overlap_percent"] = round2(stats.question_answer_overlap_percent);
    j["question_context_overlap_percent"] = round2(stats.question_context_overlap_percent);
    return j.dump();
}

std::string stats_table(const CorpusStats& stats) {
    char buf[512];
    std::string out;
    std::snprintf(buf, sizeof(buf), "questions   %zu\ncandidates  %zu\npairs       %zu\n",
                  stats.n_questions, stats.n_candidates, stats.n_pairs);
    out += buf;
    std::snprintf(buf, sizeof(buf), "avg answers per question  %.2f\n",
                  stats.avg_answers_per_question);
    out += buf;
    std::snprintf(buf, sizeof(buf),
                  "avg tokens  question %.2f  answer %.2f  context %.2f\n",
                  stats.avg_question_tokens, stats.avg_answer_tokens, stats.avg_context_tokens);
    out += buf;
    std::snprintf(buf, sizeof(buf), "overlap %%   answer %.2f  context %.2f\n",
                  stats.question_answer_overlap_percent,
                  stats.question_context_overlap_percent);
    out += buf;
    return out;
}

std::string exclusion_report_to_json(const ExclusionReport& report) {
    ordered_json j;
    j["questions_in"] = report.questions_in;
    j["questions_kept"] = report.questions_kept;
    j["questions_dropped_title_only"] = report.questions_dropped_title_only;
    j["questions_dropped_no_answer"] = report.questions_dropped_no_answer;
    j["answers_in"] = report.answers_in;
    j["answers_kept"] = report.answers_kept;
    j["answers_title"] = report.answers_title;
    j["answers_multi_sentence"] = report.answers_multi_sentence;
    j["answers_unmapped"] = report.answers_unmapped;
    return j.dump();
}

std::vector<TextTrainingPair> make_training_pairs(const CandidatePool& pool,
                                                  const QuestionSet& questions) {
    std::vector<TextTrainingPair> pairs;
    for (const Question& q : questions) {
        for (CandidateId id : q.gold) {
            const Candidate& c = pool.at(id);
            pairs.push_back({q.text, c.sentence, c.context});
        }
    }
    return pairs;
}

}  // namespace reqa
