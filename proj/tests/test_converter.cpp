#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include <zlib.h>

#include "reqa/converter.hpp"
#include "reqa/error.hpp"
#include "reqa/tokenizers.hpp"

using namespace reqa;

namespace {

const std::string kDataDir = REQA_TEST_DATA_DIR;

std::vector<RawRecord> parse_fixture(const std::string& name) {
    return parse_file(kDataDir + "/" + name);
}

const Question* find_question(const QuestionSet& questions, const std::string& qid) {
    for (const auto& q : questions)
        if (q.qid == qid) return &q;
    return nullptr;
}

}  // namespace

TEST_CASE("parse_stream skips the header line and reports malformed lines") {
    std::stringstream ok;
    ok << R"({"header": {"dataset": "x"}})" << '\n';
    ok << R"({"context": "a b.", "qas": []})" << '\n';
    ok << R"({"context": "c d.", "qas": []})" << '\n';
    CHECK(parse_stream(ok).size() == 2);

    std::stringstream empty;
    CHECK(parse_stream(empty).empty());

    std::stringstream bad;
    bad << R"({"context": "a.", "qas": []})" << '\n';
    bad << R"({"context": "b.", "qas": []})" << '\n';
    bad << "{{{\n";
    try {
        parse_stream(bad);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("char spans outside the context raise OutOfBounds") {
    std::stringstream in;
    in << R"({"context": "short.", "qas": [{"qid": "q", "question": "?",)"
       << R"( "detected_answers": [{"text": "x", "char_spans": [[90, 95]]}]}]})" << '\n';
    CHECK_THROWS_AS(parse_stream(in), OutOfBounds);
}

TEST_CASE("char spans count codepoints, not bytes") {
    // "café" holds 4 codepoints but 5 bytes; the span covers the final word.
    std::stringstream in;
    in << R"({"context": "café au lait", "qas": [{"qid": "q", "question": "?",)"
       << R"( "detected_answers": [{"text": "lait", "char_spans": [[8, 11]]}]}]})" << '\n';
    const auto records = parse_stream(in);
    REQUIRE(records.size() == 1);
    REQUIRE(records[0].qas.size() == 1);
    REQUIRE(records[0].qas[0].spans.size() == 1);
    CHECK(records[0].qas[0].spans[0].text == "lait");
}

TEST_CASE("strip_tags passes generic contexts through unchanged") {
    const auto cleaned = strip_tags(DatasetKind::Generic, "plain text");
    REQUIRE(cleaned.size() == 1);
    CHECK(cleaned[0].text == "plain text");
    CHECK(cleaned[0].title.empty());
    std::size_t b = 0, e = 0;
    CHECK(cleaned[0].map_span(2, 7, b, e) == CleanedContext::MapResult::Body);
    CHECK(b == 2);
    CHECK(e == 7);
}

TEST_CASE("strip_tags splits SearchQA snippets into contexts with title features") {
    const auto cleaned = strip_tags(
        DatasetKind::SearchQA, "[DOC] [TLE]T1 [PAR]body one [DOC] [TLE]T2 [PAR]body two");
    REQUIRE(cleaned.size() == 2);
    CHECK(cleaned[0].text == "body one");
    CHECK(cleaned[0].title == "T1");
    CHECK(cleaned[1].text == "body two");
    CHECK(cleaned[1].title == "T2");
}

TEST_CASE("strip_tags removes every tag for TriviaQA and keeps one context") {
    const auto cleaned = strip_tags(DatasetKind::TriviaQA, "[DOC] [TLE]X [PAR]abc");
    REQUIRE(cleaned.size() == 1);
    CHECK(cleaned[0].text == "X abc");
    CHECK(cleaned[0].title.empty());
}

TEST_CASE("strip_tags separates HotpotQA documents on [PAR] with [SEP] titles") {
    const auto cleaned =
        strip_tags(DatasetKind::HotpotQA, "[PAR] First Title [SEP] First body. [PAR] "
                                          "Second Title [SEP] Second body.");
    REQUIRE(cleaned.size() == 2);
    CHECK(cleaned[0].title == "First Title");
    CHECK(cleaned[0].text == "First body.");
    CHECK(cleaned[1].title == "Second Title");
    CHECK(cleaned[1].text == "Second body.");
}

TEST_CASE("unknown tags are literal text") {
    const auto cleaned = strip_tags(DatasetKind::SearchQA, "[DOC] [PAR]uses [XYZ] inline");
    REQUIRE(cleaned.size() == 1);
    CHECK(cleaned[0].text == "uses [XYZ] inline");
}

TEST_CASE("a span that crosses removed text is unmapped") {
    const auto cleaned = strip_tags(DatasetKind::TriviaQA, "abc [DOC] def");
    REQUIRE(cleaned.size() == 1);
    CHECK(cleaned[0].text == "abc  def");
    std::size_t b = 0, e = 0;
    // "abc [DOC" includes deleted bytes.
    CHECK(cleaned[0].map_span(0, 8, b, e) == CleanedContext::MapResult::Unmapped);
    CHECK(cleaned[0].map_span(0, 3, b, e) == CleanedContext::MapResult::Body);
}

TEST_CASE("convert keeps one candidate per sentence and resolves gold ids") {
    std::stringstream in;
    in << R"({"context": "First fact here. Second fact there. Third fact everywhere.",)"
       << R"( "qas": [{"qid": "q1", "question": "where is the second fact?",)"
       << R"( "detected_answers": [{"text": "Second fact", "char_spans": [[17, 27]]}]}]})"
       << '\n';
    const auto records = parse_stream(in);
    const auto result = convert(records, DatasetKind::Generic, SentenceSplitter());
    CHECK(result.pool.size() == 3);
    REQUIRE(result.questions.size() == 1);
    CHECK(result.questions.questions()[0].gold == std::vector<CandidateId>{1});
    CHECK(result.report.questions_kept == 1);
    CHECK(result.report.answers_kept == 1);
}

TEST_CASE("multi-sentence spans are excluded and counted") {
    std::stringstream in;
    in << R"({"context": "One here. Two there.", "qas": [{"qid": "q1", "question": "?",)"
       << R"( "detected_answers": [{"text": "here. Two", "char_spans": [[4, 12]]}]}]})" << '\n';
    const auto result = convert(parse_stream(in), DatasetKind::Generic, SentenceSplitter());
    CHECK(result.pool.size() == 2);
    CHECK(result.questions.empty());
    CHECK(result.report.answers_multi_sentence == 1);
    CHECK(result.report.questions_dropped_no_answer == 1);
    CHECK(result.report.questions_dropped_title_only == 0);
}

TEST_CASE("searchqa fixture converts to the hand-derived golden pool and counts") {
    const auto result =
        convert(parse_fixture("fixture_searchqa.jsonl"), DatasetKind::SearchQA,
                SentenceSplitter());

    // Pool: two sentences from snippet one, one from snippet two.
    REQUIRE(result.pool.size() == 3);
    CHECK(result.pool.at(0).sentence == "It worked.");
    CHECK(result.pool.at(1).sentence ==
          "In 1523 Cortes sent the first shipment to Spain.");
    CHECK(result.pool.at(2).sentence ==
          "Soon cochineal began to arrive in European ports.");
    CHECK(result.pool.at(0).title == "Cochineal Trade");
    CHECK(result.pool.at(2).title == "Dye History");
    CHECK(result.pool.at(0).context ==
          "It worked. In 1523 Cortes sent the first shipment to Spain.");
    CHECK(result.pool.at(0).doc_id == result.pool.at(1).doc_id);
    CHECK(result.pool.at(0).doc_id != result.pool.at(2).doc_id);

    // Questions: sq1 keeps the sentence-two answer; sq2 is title-only and is
    // dropped; sq3 crosses a sentence boundary and is dropped; sq4 keeps its
    // non-title answer.
    REQUIRE(result.questions.size() == 2);
    const Question* sq1 = find_question(result.questions, "sq1");
    REQUIRE(sq1 != nullptr);
    CHECK(sq1->gold == std::vector<CandidateId>{1});
    const Question* sq4 = find_question(result.questions, "sq4");
    REQUIRE(sq4 != nullptr);
    CHECK(sq4->gold == std::vector<CandidateId>{2});

    const ExclusionReport& report = result.report;
    CHECK(report.questions_in == 4);
    CHECK(report.questions_kept == 2);
    CHECK(report.questions_dropped_title_only == 1);
    CHECK(report.questions_dropped_no_answer == 1);
    CHECK(report.answers_in == 5);
    CHECK(report.answers_kept == 2);
    CHECK(report.answers_title == 2);
    CHECK(report.answers_multi_sentence == 1);
    CHECK(report.answers_unmapped == 0);
    CHECK(report.questions_dropped() + report.questions_kept == report.questions_in);
}

TEST_CASE("hotpotqa fixture separates titles from document content") {
    const auto result = convert(parse_fixture("fixture_hotpotqa.jsonl"),
                                DatasetKind::HotpotQA, SentenceSplitter());
    REQUIRE(result.pool.size() == 3);
    CHECK(result.pool.at(0).sentence == "Chicken Run is a 2000 film.");
    CHECK(result.pool.at(0).title == "Chicken Run");
    CHECK(result.pool.at(2).sentence == "Lenny Young collaborated on the film.");
    CHECK(result.pool.at(2).title == "Lenny Young");

    REQUIRE(result.questions.size() == 2);
    CHECK(find_question(result.questions, "hq1")->gold == std::vector<CandidateId>{0});
    CHECK(find_question(result.questions, "hq2")->gold == std::vector<CandidateId>{2});
    CHECK(result.report.questions_dropped_title_only == 1);  // hq3
    CHECK(result.report.answers_title == 1);
}

TEST_CASE("triviaqa fixture strips tags and keeps a single context") {
    // "Remove all the tags": the former title text stays in the article, so
    // the first sentence reads "Chromium Rubies owe ...".
    const auto result = convert(parse_fixture("fixture_triviaqa.jsonl"),
                                DatasetKind::TriviaQA, SentenceSplitter());
    REQUIRE(result.pool.size() == 2);
    CHECK(result.pool.at(0).sentence == "Chromium Rubies owe their color to chromium.");
    CHECK(result.pool.at(0).context ==
          "Chromium Rubies owe their color to chromium. The symbol is Cr.");
    CHECK(result.pool.at(0).title.empty());
    REQUIRE(result.questions.size() == 2);
    CHECK(find_question(result.questions, "tq1")->gold == std::vector<CandidateId>{0});
    CHECK(find_question(result.questions, "tq2")->gold == std::vector<CandidateId>{1});
    CHECK(result.report.answers_unmapped == 0);
}

TEST_CASE("surviving answers keep their text inside the gold sentence") {
    for (const auto& [fixture, kind] :
         std::vector<std::pair<std::string, DatasetKind>>{
             {"fixture_searchqa.jsonl", DatasetKind::SearchQA},
             {"fixture_hotpotqa.jsonl", DatasetKind::HotpotQA},
             {"fixture_triviaqa.jsonl", DatasetKind::TriviaQA},
             {"fixture_mrqa.jsonl", DatasetKind::Generic}}) {
        const auto records = parse_fixture(fixture);
        const auto result = convert(records, kind, SentenceSplitter());
        // Collect every original answer string and check that each kept
        // question has at least one gold sentence containing one of its
        // answer texts.
        std::size_t checked = 0;
        for (const auto& rec : records) {
            for (const auto& raw_qa : rec.qas) {
                const Question* q = find_question(result.questions, raw_qa.qid);
                if (!q) continue;
                for (CandidateId id : q->gold) {
                    const Candidate& c = result.pool.at(id);
                    bool contains_any = false;
                    for (const auto& span : raw_qa.spans)
                        contains_any |= c.sentence.find(span.text) != std::string::npos;
                    CHECK(contains_any);
                    ++checked;
                }
            }
        }
        CHECK(checked > 0);
    }
}

TEST_CASE("conversion conserves candidates and accounts for every question") {
    const auto records = parse_fixture("fixture_mrqa.jsonl");
    const auto result = convert(records, DatasetKind::Generic, SentenceSplitter());

    std::size_t sentence_total = 0;
    const SentenceSplitter splitter;
    for (const auto& rec : records)
        for (const auto& cleaned : strip_tags(DatasetKind::Generic, rec.context))
            sentence_total += splitter.split(cleaned.text).size();
    CHECK(result.pool.size() == sentence_total);

    std::size_t questions_in = 0;
    for (const auto& rec : records) questions_in += rec.qas.size();
    CHECK(result.report.questions_in == questions_in);
    CHECK(result.report.questions_kept + result.report.questions_dropped() == questions_in);
    CHECK(result.questions.size() == result.report.questions_kept);
    CHECK(result.questions.size() == 30);  // g31 crosses sentences and drops
    for (const auto& q : result.questions) CHECK(!q.gold.empty());
}

TEST_CASE("stats implement the overlap and length definitions") {
    // question tokens {a,b,c,d}; answer tokens {b,d,x}: overlap 2/4 = 50%.
    std::vector<CandidateRecord> records;
    CandidateRecord c;
    c.doc_id = "d0";
    c.sentence_index = 0;
    c.sentence = "b d x";
    c.context = "b d x";
    records.push_back(c);
    const auto pool = CandidatePool::assign_ids(std::move(records));
    const QuestionSet questions({Question{"q", "a b c d", {0}}}, pool);
    const CorpusStats stats = compute_stats(pool, questions);
    CHECK(stats.question_answer_overlap_percent == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(stats.question_context_overlap_percent == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(stats.avg_answers_per_question == 1.0);
    CHECK(stats.avg_question_tokens == 4.0);
    CHECK(stats.avg_answer_tokens == 3.0);
    CHECK(stats.n_pairs == 1);
}

TEST_CASE("fixture stats match an independent recount") {
    const auto result = convert(parse_fixture("fixture_mrqa.jsonl"), DatasetKind::Generic,
                                SentenceSplitter());
    const CorpusStats stats = compute_stats(result.pool, result.questions);

    // Brute-force recount, written against the stated definitions only.
    double q_tokens = 0.0, a_tokens = 0.0, c_tokens = 0.0, qa = 0.0, qc = 0.0;
    std::size_t pairs = 0, gold_total = 0;
    for (const auto& q : result.questions) {
        const auto qt = word_tokenize(q.text);
        q_tokens += static_cast<double>(qt.size());
        const std::set<std::string> qu(qt.begin(), qt.end());
        gold_total += q.gold.size();
        for (CandidateId id : q.gold) {
            ++pairs;
            const Candidate& cand = result.pool.at(id);
            const auto at = word_tokenize(cand.sentence);
            const auto ct = word_tokenize(cand.context);
            a_tokens += static_cast<double>(at.size());
            c_tokens += static_cast<double>(ct.size());
            const std::set<std::string> au(at.begin(), at.end());
            const std::set<std::string> cu(ct.begin(), ct.end());
            std::size_t qa_common = 0, qc_common = 0;
            for (const auto& t : qu) {
                if (au.count(t)) ++qa_common;
                if (cu.count(t)) ++qc_common;
            }
            qa += 100.0 * static_cast<double>(qa_common) / static_cast<double>(qu.size());
            qc += 100.0 * static_cast<double>(qc_common) / static_cast<double>(qu.size());
        }
    }
    const double nq = static_cast<double>(result.questions.size());
    const double np = static_cast<double>(pairs);
    CHECK(stats.n_pairs == pairs);
    CHECK(stats.avg_answers_per_question ==
          doctest::Approx(static_cast<double>(gold_total) / nq).epsilon(1e-12));
    CHECK(stats.avg_question_tokens == doctest::Approx(q_tokens / nq).epsilon(1e-12));
    CHECK(stats.avg_answer_tokens == doctest::Approx(a_tokens / np).epsilon(1e-12));
    CHECK(stats.avg_context_tokens == doctest::Approx(c_tokens / np).epsilon(1e-12));
    CHECK(stats.question_answer_overlap_percent == doctest::Approx(qa / np).epsilon(1e-12));
    CHECK(stats.question_context_overlap_percent == doctest::Approx(qc / np).epsilon(1e-12));
}

TEST_CASE("stats reject empty inputs") {
    CHECK_THROWS_AS(compute_stats(CandidatePool{}, QuestionSet{}), EmptyDataset);
}

TEST_CASE("training pairs mirror (question, gold answer, context)") {
    const auto result = convert(parse_fixture("fixture_mrqa.jsonl"), DatasetKind::Generic,
                                SentenceSplitter());
    const auto pairs = make_training_pairs(result.pool, result.questions);
    std::size_t gold_total = 0;
    for (const auto& q : result.questions) gold_total += q.gold.size();
    CHECK(pairs.size() == gold_total);
    CHECK(!pairs.empty());
    CHECK(pairs[0].question == result.questions.questions()[0].text);
    const Candidate& first_gold = result.pool.at(result.questions.questions()[0].gold[0]);
    CHECK(pairs[0].answer == first_gold.sentence);
    CHECK(pairs[0].context == first_gold.context);
}

TEST_CASE("gzip-compressed fixtures parse identically") {
    const std::string plain_path = kDataDir + "/fixture_mrqa.jsonl";
    const std::string gz_path = "/tmp/reqa_fixture_mrqa.jsonl.gz";
    {
        std::ifstream in(plain_path, std::ios::binary);
        std::stringstream content;
        content << in.rdbuf();
        gzFile gz = gzopen(gz_path.c_str(), "wb");
        REQUIRE(gz != nullptr);
        const std::string data = content.str();
        gzwrite(gz, data.data(), static_cast<unsigned>(data.size()));
        gzclose(gz);
    }
    const auto plain = parse_file(plain_path);
    const auto zipped = parse_file(gz_path);
    REQUIRE(plain.size() == zipped.size());
    for (std::size_t i = 0; i < plain.size(); ++i) {
        CHECK(plain[i].context == zipped[i].context);
        CHECK(plain[i].qas.size() == zipped[i].qas.size());
    }
}

TEST_CASE("dataset kinds parse from their CLI names") {
    CHECK(dataset_kind_from_string("searchqa") == DatasetKind::SearchQA);
    CHECK(dataset_kind_from_string("SearchQA") == DatasetKind::SearchQA);
    CHECK(dataset_kind_from_string("nq") == DatasetKind::NQ);
    CHECK(dataset_kind_from_string("re") == DatasetKind::RelationExtraction);
    CHECK_THROWS_AS(dataset_kind_from_string("nope"), FormatError);
    CHECK(to_string(DatasetKind::TriviaQA) == "triviaqa");
}
