#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "reqa/bm25.hpp"
#include "reqa/converter.hpp"
#include "reqa/corpus.hpp"
#include "reqa/dense.hpp"
#include "reqa/error.hpp"
#include "reqa/evaluation.hpp"
#include "reqa/manifest.hpp"
#include "reqa/segmenter.hpp"
#include "reqa/tokenizers.hpp"

namespace py = pybind11;
using namespace reqa;

namespace {

Tokenizer make_tokenizer(const std::string& kind, const std::shared_ptr<const Vocab>& vocab,
                         bool normalize_text) {
    if (kind == "word") return Tokenizer::word();
    if (kind == "wpm") {
        if (!vocab) throw EmptyVocab("wpm tokenizer needs a vocab");
        return Tokenizer::wordpiece(vocab, normalize_text);
    }
    throw FormatError("unknown tokenizer kind: " + kind);
}

// BM25 engine over a pool, bundled for python use.
struct PyBm25 {
    Bm25Build build;
    Tokenizer tokenizer;

    PyBm25(const CandidatePool& pool, const std::string& tokenizer_kind,
           std::shared_ptr<const Vocab> vocab, bool use_context, double k1, double b,
           double epsilon, bool normalize_text)
        : build(build_index(pool, make_tokenizer(tokenizer_kind, vocab, normalize_text),
                            Bm25Params{k1, b, epsilon}, use_context)),
          tokenizer(make_tokenizer(tokenizer_kind, vocab, normalize_text)) {}

    std::vector<std::pair<CandidateId, double>> retrieve(const std::string& query,
                                                         std::size_t k) const {
        const auto ranked = retrieve_topk(build.index, build.idf, build.index.build_params(),
                                          tokenizer.tokenize(query), k);
        std::vector<std::pair<CandidateId, double>> out;
        out.reserve(ranked.size());
        for (const auto& sc : ranked) out.emplace_back(sc.id, sc.score);
        return out;
    }

    double score_doc(const std::string& query, CandidateId doc) const {
        return score(build.index, build.idf, build.index.build_params(),
                     tokenizer.tokenize(query), doc);
    }
};

py::dict report_to_dict(const EvalReport& report) {
    py::dict d;
    d["system"] = report.metadata.system;
    d["n_questions"] = report.n_questions;
    d["p_at_1"] = report.p_at_1;
    d["mrr"] = report.mrr;
    d["ranks"] = report.ranks;
    return d;
}

}  // namespace

PYBIND11_MODULE(_reqa, m) {
    m.doc() = "sentence-level answer retrieval toolkit (C++ core)";

    py::register_exception<Error>(m, "ReqaError");

    // ---- tokenizers ----
    py::class_<Vocab, std::shared_ptr<Vocab>>(m, "Vocab")
        .def(py::init<std::vector<std::string>, std::string, std::string>(), py::arg("tokens"),
             py::arg("unknown_token") = "[UNK]", py::arg("continuation_prefix") = "##")
        .def_static("from_file", &Vocab::from_file, py::arg("path"),
                    py::arg("unknown_token") = "[UNK]", py::arg("continuation_prefix") = "##")
        .def("__len__", &Vocab::size)
        .def("id_of",
             [](const Vocab& v, const std::string& token) -> py::object {
                 const auto id = v.id_of(token);
                 if (!id) return py::none();
                 return py::int_(*id);
             })
        .def_property_readonly("fingerprint", &Vocab::fingerprint);

    m.def("word_tokenize",
          [](const std::string& text) { return word_tokenize(text); });
    m.def("normalize", [](const std::string& text) { return normalize(text); });
    m.def(
        "wordpiece_tokenize",
        [](const std::string& text, const Vocab& vocab, bool normalize_first) {
            const TokenSeq seq = wordpiece_tokenize(text, vocab, normalize_first);
            return py::make_tuple(seq.pieces, seq.ids);
        },
        py::arg("text"), py::arg("vocab"), py::arg("normalize_first") = true);

    // ---- segmenter ----
    py::class_<SentenceSplitter>(m, "SentenceSplitter")
        .def(py::init<>())
        .def(py::init<const std::vector<std::string>&>(), py::arg("abbreviations"))
        .def("split",
             [](const SentenceSplitter& s, const std::string& text) {
                 std::vector<std::pair<std::size_t, std::size_t>> spans;
                 for (const auto& span : s.split(text)) spans.emplace_back(span.begin, span.end);
                 return spans;
             })
        .def("split_texts", [](const SentenceSplitter& s, const std::string& text) {
            std::vector<std::string> out;
            for (const auto& span : s.split(text))
                out.push_back(text.substr(span.begin, span.end - span.begin));
            return out;
        });

    // ---- corpus ----
    py::class_<Candidate>(m, "Candidate")
        .def_readonly("id", &Candidate::id)
        .def_readonly("doc_id", &Candidate::doc_id)
        .def_readonly("sentence_index", &Candidate::sentence_index)
        .def_readonly("sentence", &Candidate::sentence)
        .def_readonly("context", &Candidate::context)
        .def_readonly("title", &Candidate::title);

    py::class_<Question>(m, "Question")
        .def_readonly("qid", &Question::qid)
        .def_readonly("text", &Question::text)
        .def_readonly("gold", &Question::gold);

    py::class_<CandidatePool>(m, "CandidatePool")
        .def("__len__", &CandidatePool::size)
        .def("__getitem__",
             [](const CandidatePool& p, CandidateId id) -> const Candidate& { return p.at(id); },
             py::return_value_policy::reference_internal)
        .def_static("load_jsonl",
                    [](const std::string& path) { return load_pool_jsonl(path); })
        .def("save_jsonl", [](const CandidatePool& p, const std::string& path) {
            save_pool_jsonl(p, path);
        });

    py::class_<QuestionSet>(m, "QuestionSet")
        .def("__len__", &QuestionSet::size)
        .def("__getitem__",
             [](const QuestionSet& qs, std::size_t i) -> const Question& {
                 if (i >= qs.size()) throw py::index_error();
                 return qs.questions()[i];
             },
             py::return_value_policy::reference_internal)
        .def_static("load_jsonl",
                    [](const std::string& path) { return load_questions_jsonl(path, nullptr); })
        .def("save_jsonl", [](const QuestionSet& qs, const std::string& path) {
            save_questions_jsonl(qs, path);
        });

    // ---- converter ----
    m.def(
        "convert_dataset",
        [](const std::string& path, const std::string& kind) {
            const auto records = parse_file(path);
            const SentenceSplitter splitter;
            Conversion result = convert(records, dataset_kind_from_string(kind), splitter);
            py::dict report;
            report["questions_in"] = result.report.questions_in;
            report["questions_kept"] = result.report.questions_kept;
            report["questions_dropped_title_only"] = result.report.questions_dropped_title_only;
            report["questions_dropped_no_answer"] = result.report.questions_dropped_no_answer;
            report["answers_title"] = result.report.answers_title;
            report["answers_multi_sentence"] = result.report.answers_multi_sentence;
            report["answers_unmapped"] = result.report.answers_unmapped;
            return py::make_tuple(std::move(result.pool), std::move(result.questions), report);
        },
        py::arg("path"), py::arg("kind") = "generic");

    m.def("compute_stats", [](const CandidatePool& pool, const QuestionSet& questions) {
        const CorpusStats s = compute_stats(pool, questions);
        py::dict d;
        d["n_questions"] = s.n_questions;
        d["n_candidates"] = s.n_candidates;
        d["n_pairs"] = s.n_pairs;
        d["avg_answers_per_question"] = s.avg_answers_per_question;
        d["avg_question_tokens"] = s.avg_question_tokens;
        d["avg_answer_tokens"] = s.avg_answer_tokens;
        d["avg_context_tokens"] = s.avg_context_tokens;
        d["question_answer_overlap_percent"] = s.question_answer_overlap_percent;
        d["question_context_overlap_percent"] = s.question_context_overlap_percent;
        return d;
    });

    // ---- bm25 ----
    py::class_<PyBm25>(m, "Bm25")
        .def(py::init<const CandidatePool&, const std::string&, std::shared_ptr<const Vocab>,
                      bool, double, double, double, bool>(),
             py::arg("pool"), py::arg("tokenizer") = "word", py::arg("vocab") = nullptr,
             py::arg("use_context") = true, py::arg("k1") = 1.5, py::arg("b") = 0.75,
             py::arg("epsilon") = 0.25, py::arg("normalize_text") = true)
        .def("retrieve", &PyBm25::retrieve, py::arg("query"), py::arg("k") = 10)
        .def("score", &PyBm25::score_doc, py::arg("query"), py::arg("doc_id"));

    // ---- dense ----
    py::class_<dense::EncoderModel>(m, "EncoderModel")
        .def_static(
            "random_init",
            [](std::size_t vocab_size, std::size_t d_tok, std::size_t d_hidden,
               std::size_t d_out, std::uint64_t seed) {
                return dense::EncoderModel::random_init({vocab_size, d_tok, d_hidden, d_out},
                                                        seed);
            },
            py::arg("vocab_size"), py::arg("d_tok") = 64, py::arg("d_hidden") = 64,
            py::arg("d_out") = 64, py::arg("seed") = 1)
        .def("encode_question",
             [](const dense::EncoderModel& model, const std::vector<TokenId>& tokens) {
                 return dense::encode_question(model, tokens);
             })
        .def(
            "encode_answer",
            [](const dense::EncoderModel& model, const std::vector<TokenId>& answer,
               const std::vector<TokenId>& context, bool use_context) {
                return dense::encode_answer(model, answer, context, use_context);
            },
            py::arg("answer"), py::arg("context") = std::vector<TokenId>{},
            py::arg("use_context") = true);

    m.def(
        "train_dense",
        [](dense::EncoderModel& model,
           const std::vector<std::tuple<std::vector<TokenId>, std::vector<TokenId>,
                                        std::vector<TokenId>>>& pairs,
           const std::string& preset, std::size_t epochs, std::uint64_t seed) {
            std::vector<dense::TrainingPair> training;
            training.reserve(pairs.size());
            for (const auto& [q, a, c] : pairs) training.push_back({q, a, c});
            dense::TrainConfig config = preset == "bert-style"
                                            ? dense::TrainConfig::bert_style()
                                            : dense::TrainConfig::useqa_style();
            if (epochs) config.epochs = epochs;
            config.seed = seed;
            const auto result = dense::train(model, std::move(training), config);
            py::dict d;
            d["train_loss_per_epoch"] = result.train_loss_per_epoch;
            d["val_loss_per_epoch"] = result.val_loss_per_epoch;
            d["effective_batch_size"] = result.effective_batch_size;
            d["total_steps"] = result.total_steps;
            return d;
        },
        py::arg("model"), py::arg("pairs"), py::arg("preset") = "useqa-style",
        py::arg("epochs") = 0, py::arg("seed") = 1);

    m.def("dense_retrieve",
          [](const dense::EncoderModel& model,
             const std::vector<std::pair<std::vector<TokenId>, std::vector<TokenId>>>& pool,
             const std::vector<TokenId>& question, std::size_t k, bool use_context) {
              const auto embeddings = dense::embed_candidates(model, pool, use_context);
              const auto query = dense::encode_question(model, question);
              const auto ranked = dense::retrieve_topk(embeddings, query, k);
              std::vector<std::pair<CandidateId, double>> out;
              for (const auto& sc : ranked) out.emplace_back(sc.id, sc.score);
              return out;
          },
          py::arg("model"), py::arg("pool"), py::arg("question"), py::arg("k") = 10,
          py::arg("use_context") = true);

    // ---- evaluation ----
    m.def("rank_of_first_correct",
          [](const std::vector<CandidateId>& ranked, std::vector<CandidateId> gold) {
              std::sort(gold.begin(), gold.end());
              return rank_of_first_correct(ranked, gold);
          });

    m.def("evaluate_run", [](const std::string& run_path, const std::string& questions_path) {
        const RetrievalRun run = load_run_jsonl(run_path);
        const QuestionSet questions = load_questions_jsonl(questions_path);
        return report_to_dict(evaluate(run, questions));
    });

    m.def("evaluate_rankings",
          [](const std::vector<std::pair<std::string, std::vector<CandidateId>>>& rankings,
             const QuestionSet& questions) {
              RetrievalRun run;
              run.system_name = "python";
              for (const auto& [qid, ids] : rankings) {
                  QuestionRanking qr;
                  qr.qid = qid;
                  double score = static_cast<double>(ids.size());
                  for (CandidateId id : ids) qr.ranking.push_back({id, score--});
                  run.rankings.push_back(std::move(qr));
              }
              return report_to_dict(evaluate(run, questions));
          });

    m.attr("__version__") = tool_version();
}
