// reqa: convert span-annotated QA datasets into sentence-level retrieval
// tasks, index and retrieve with BM25 or a trained dual encoder, and score
// runs with P@1 / MRR.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <thread>

#include <CLI11.hpp>

#include "reqa/bm25.hpp"
#include "reqa/converter.hpp"
#include "reqa/corpus.hpp"
#include "reqa/dense.hpp"
#include "reqa/error.hpp"
#include "reqa/evaluation.hpp"
#include "reqa/manifest.hpp"
#include "reqa/segmenter.hpp"
#include "reqa/tokenizers.hpp"

namespace fs = std::filesystem;
using namespace reqa;

namespace {

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

void ensure_writable(const std::string& path, bool force) {
    if (!force && fs::exists(path))
        throw IoError("output exists (use --force to overwrite): " + path);
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << content << '\n';
}

std::uint64_t fnv1a_string(const std::string& data) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

struct TokenizerOpts {
    std::string kind = "word";  // word | wpm
    std::string vocab_path;
    bool no_normalize = false;

    void attach(CLI::App* cmd, bool with_kind = true) {
        if (with_kind)
            cmd->add_option("--tokenizer", kind, "tokenization regime: word or wpm")
                ->check(CLI::IsMember({"word", "wpm"}))
                ->capture_default_str();
        cmd->add_option("--vocab", vocab_path, "WordPiece vocab file, one token per line")
            ->envname("REQA_VOCAB");
        cmd->add_flag("--no-normalize", no_normalize,
                      "skip normalization in the wpm regime");
    }

    Tokenizer build(std::shared_ptr<const Vocab>* vocab_out = nullptr) const {
        if (kind == "word") return Tokenizer::word();
        if (vocab_path.empty())
            throw FormatError("--tokenizer wpm requires --vocab (or REQA_VOCAB)");
        auto vocab = std::make_shared<const Vocab>(Vocab::from_file(vocab_path));
        if (vocab_out) *vocab_out = vocab;
        return Tokenizer::wordpiece(vocab, !no_normalize);
    }
};

void parallel_over(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || n < 2 * threads) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        try {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };
    std::vector<std::thread> workers;
    for (unsigned t = 0; t < threads; ++t) workers.emplace_back(worker);
    for (auto& w : workers) w.join();
    if (failure) std::rethrow_exception(failure);
}

// Full-ranking retrieval over a scoring closure; stores the top `keep`
// entries plus the gold rank for every question.
RetrievalRun run_retrieval(
    const std::string& system_name, const QuestionSet& questions, std::size_t pool_size,
    std::size_t keep, unsigned threads,
    const std::function<std::vector<ScoredCandidate>(const Question&)>& full_ranking) {
    RetrievalRun run;
    run.system_name = system_name;
    run.rankings.resize(questions.size());
    const auto& qs = questions.questions();
    parallel_over(qs.size(), threads, [&](std::size_t i) {
        const Question& q = qs[i];
        for (CandidateId id : q.gold) {
            if (id < 0 || static_cast<std::size_t>(id) >= pool_size)
                throw UnknownCandidateId("question " + q.qid + " gold id " + std::to_string(id) +
                                         " is outside the candidate pool");
        }
        auto ranked = full_ranking(q);
        std::vector<CandidateId> ids(ranked.size());
        for (std::size_t r = 0; r < ranked.size(); ++r) ids[r] = ranked[r].id;
        QuestionRanking entry;
        entry.qid = q.qid;
        entry.gold_rank = rank_of_first_correct(ids, q.gold);
        if (ranked.size() > keep) ranked.resize(keep);
        entry.ranking = std::move(ranked);
        run.rankings[i] = std::move(entry);
    });
    return run;
}

int run_app(int argc, char** argv) {
    CLI::App app{"reqa: sentence-level answer retrieval toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "flat key=value config file (flags take precedence)");
    app.set_version_flag("--version", tool_version());
    unsigned threads = 1;
    app.add_option("--threads", threads, "worker threads for index build, embedding, retrieval")
        ->capture_default_str();

    // ---- convert ----
    auto* cmd_convert = app.add_subcommand(
        "convert", "convert an MRQA-style JSON Lines dataset into a retrieval task");
    struct {
        std::string kind, in, out_dir, abbrev;
        bool force = false;
    } conv;
    cmd_convert->add_option("--kind", conv.kind, "dataset kind (searchqa, triviaqa, hotpotqa, "
                                                 "squad, nq, bioasq, relationextraction, "
                                                 "textbookqa, generic)")
        ->required();
    cmd_convert->add_option("--in", conv.in, "input .jsonl or .jsonl.gz")->required();
    cmd_convert->add_option("--out-dir", conv.out_dir, "output directory")->required();
    cmd_convert->add_option("--abbrev", conv.abbrev, "abbreviation list file for the splitter");
    cmd_convert->add_flag("--force", conv.force, "overwrite existing outputs");
    cmd_convert->callback([&] {
        Timer timer;
        const DatasetKind kind = dataset_kind_from_string(conv.kind);
        const SentenceSplitter splitter =
            conv.abbrev.empty() ? SentenceSplitter() : SentenceSplitter::from_file(conv.abbrev);
        fs::create_directories(conv.out_dir);
        const std::string pool_path = conv.out_dir + "/pool.jsonl";
        const std::string questions_path = conv.out_dir + "/questions.jsonl";
        const std::string exclusions_path = conv.out_dir + "/exclusions.json";
        ensure_writable(pool_path, conv.force);
        ensure_writable(questions_path, conv.force);
        ensure_writable(exclusions_path, conv.force);

        const auto records = parse_file(conv.in);
        const Conversion result = convert(records, kind, splitter);
        save_pool_jsonl(result.pool, pool_path);
        save_questions_jsonl(result.questions, questions_path);
        write_text(exclusions_path, exclusion_report_to_json(result.report));

        RunManifest manifest;
        manifest.subcommand = "convert";
        manifest.flags = {{"kind", conv.kind}, {"in", conv.in}, {"out-dir", conv.out_dir}};
        manifest.input_hashes[conv.in] = hash_hex(fnv1a_file(conv.in));
        manifest.wall_clock_seconds = timer.seconds();
        manifest.save_sidecar(pool_path);
        manifest.save_sidecar(questions_path);

        std::cerr << "converted " << records.size() << " records -> " << result.pool.size()
                  << " candidates, " << result.questions.size() << " questions (dropped "
                  << result.report.questions_dropped() << ")\n";
    });

    // ---- stats ----
    auto* cmd_stats = app.add_subcommand("stats", "corpus statistics for a converted dataset");
    struct {
        std::string pool, questions, json_out;
        bool force = false;
    } st;
    cmd_stats->add_option("--pool", st.pool)->required();
    cmd_stats->add_option("--questions", st.questions)->required();
    cmd_stats->add_option("--json", st.json_out, "write the JSON report here");
    cmd_stats->add_flag("--force", st.force, "overwrite existing outputs");
    cmd_stats->callback([&] {
        Timer timer;
        const auto pool = load_pool_jsonl(st.pool);
        const auto questions = load_questions_jsonl(st.questions, &pool);
        const CorpusStats stats = compute_stats(pool, questions);
        std::cerr << stats_table(stats);
        if (!st.json_out.empty()) {
            ensure_writable(st.json_out, st.force);
            write_text(st.json_out, stats_to_json(stats));
            RunManifest manifest;
            manifest.subcommand = "stats";
            manifest.flags = {{"pool", st.pool}, {"questions", st.questions}};
            manifest.input_hashes[st.pool] = hash_hex(fnv1a_file(st.pool));
            manifest.input_hashes[st.questions] = hash_hex(fnv1a_file(st.questions));
            manifest.wall_clock_seconds = timer.seconds();
            manifest.save_sidecar(st.json_out);
        } else {
            std::cout << stats_to_json(stats) << '\n';
        }
    });

    // ---- index ----
    auto* cmd_index = app.add_subcommand("index", "build a BM25 index over a candidate pool");
    struct {
        std::string pool, out;
        TokenizerOpts tok;
        double k1 = 1.5, b = 0.75, epsilon = 0.25;
        bool no_context = false, force = false;
    } ix;
    cmd_index->add_option("--pool", ix.pool)->required();
    cmd_index->add_option("--out", ix.out)->required();
    ix.tok.attach(cmd_index);
    cmd_index->add_option("--k1", ix.k1)->capture_default_str();
    cmd_index->add_option("--b", ix.b)->capture_default_str();
    cmd_index->add_option("--epsilon", ix.epsilon, "IDF floor factor")->capture_default_str();
    cmd_index->add_flag("--no-context", ix.no_context,
                        "index candidate sentences without their context");
    cmd_index->add_flag("--force", ix.force, "overwrite existing outputs");
    cmd_index->callback([&] {
        Timer timer;
        ensure_writable(ix.out, ix.force);
        const auto pool = load_pool_jsonl(ix.pool);
        const Tokenizer tokenizer = ix.tok.build();
        Bm25Params params{ix.k1, ix.b, ix.epsilon};
        Bm25Build build = build_index(pool, tokenizer, params, !ix.no_context, threads);
        build.index.source_fingerprint = hash_hex(fnv1a_file(ix.pool));
        save_index(build.index, build.idf, ix.out);

        RunManifest manifest;
        manifest.subcommand = "index";
        manifest.flags = {{"pool", ix.pool},
                          {"tokenizer", ix.tok.kind},
                          {"k1", std::to_string(ix.k1)},
                          {"b", std::to_string(ix.b)},
                          {"epsilon", std::to_string(ix.epsilon)},
                          {"context", ix.no_context ? "no" : "yes"}};
        manifest.input_hashes[ix.pool] = hash_hex(fnv1a_file(ix.pool));
        if (!ix.tok.vocab_path.empty())
            manifest.input_hashes[ix.tok.vocab_path] = hash_hex(fnv1a_file(ix.tok.vocab_path));
        manifest.wall_clock_seconds = timer.seconds();
        manifest.save_sidecar(ix.out);

        std::cerr << "indexed " << build.index.n_docs() << " documents, "
                  << build.index.n_terms() << " terms, avgdl " << build.index.avgdl() << "\n";
    });

    // ---- train ----
    auto* cmd_train = app.add_subcommand("train", "train the toy dual encoder");
    struct {
        std::string pool, questions, out, preset = "useqa-style";
        TokenizerOpts tok;
        std::size_t batch_size = 0, epochs = 0;  // 0 = preset default
        std::size_t d_tok = 64, d_hidden = 64, d_out = 64;
        std::uint64_t seed = 1;
        double score_scale = 1.0, val_fraction = 0.1;
        double embedding_scale = 1.0, head_scale = 0.02;
        bool no_context = false, force = false;
    } tr;
    cmd_train->add_option("--pool", tr.pool)->required();
    cmd_train->add_option("--questions", tr.questions)->required();
    cmd_train->add_option("--out", tr.out)->required();
    cmd_train->add_option("--preset", tr.preset, "useqa-style or bert-style")
        ->check(CLI::IsMember({"useqa-style", "bert-style"}))
        ->capture_default_str();
    tr.tok.attach(cmd_train, /*with_kind=*/false);
    cmd_train->add_option("--batch-size", tr.batch_size, "override the preset batch size");
    cmd_train->add_option("--epochs", tr.epochs, "override the preset epoch count");
    cmd_train->add_option("--d-tok", tr.d_tok)->capture_default_str();
    cmd_train->add_option("--d-hidden", tr.d_hidden)->capture_default_str();
    cmd_train->add_option("--d-out", tr.d_out)->capture_default_str();
    cmd_train->add_option("--seed", tr.seed)->capture_default_str();
    cmd_train->add_option("--score-scale", tr.score_scale)->capture_default_str();
    cmd_train->add_option("--val-fraction", tr.val_fraction)->capture_default_str();
    cmd_train->add_flag("--no-context", tr.no_context, "train without the context pathway");
    cmd_train->add_flag("--force", tr.force, "overwrite existing outputs");
    cmd_train->callback([&] {
        Timer timer;
        ensure_writable(tr.out, tr.force);
        if (tr.tok.vocab_path.empty())
            throw FormatError("train requires --vocab (or REQA_VOCAB)");
        const auto pool = load_pool_jsonl(tr.pool);
        const auto questions = load_questions_jsonl(tr.questions, &pool);
        std::shared_ptr<const Vocab> vocab;
        const Tokenizer tokenizer = [&] {
            TokenizerOpts opts = tr.tok;
            opts.kind = "wpm";
            return opts.build(&vocab);
        }();

        std::vector<dense::TrainingPair> pairs;
        for (const auto& p : make_training_pairs(pool, questions)) {
            dense::TrainingPair tp;
            tp.question = wordpiece_tokenize(p.question, *vocab, !tr.tok.no_normalize).ids;
            tp.answer = wordpiece_tokenize(p.answer, *vocab, !tr.tok.no_normalize).ids;
            tp.context = wordpiece_tokenize(p.context, *vocab, !tr.tok.no_normalize).ids;
            if (tp.question.empty() || tp.answer.empty()) continue;
            pairs.push_back(std::move(tp));
        }

        dense::TrainConfig config = tr.preset == "bert-style"
                                        ? dense::TrainConfig::bert_style()
                                        : dense::TrainConfig::useqa_style();
        if (tr.batch_size) config.batch_size = tr.batch_size;
        if (tr.epochs) config.epochs = tr.epochs;
        config.seed = tr.seed;
        config.validation_fraction = tr.val_fraction;
        config.use_context = !tr.no_context;

        dense::ModelDims dims{vocab->size(), tr.d_tok, tr.d_hidden, tr.d_out};
        dense::EncoderModel model = dense::EncoderModel::random_init(
            dims, tr.seed, tr.embedding_scale, tr.head_scale);
        model.score_scale = tr.score_scale;
        const dense::TrainResult result = dense::train(model, std::move(pairs), config);

        const std::string config_string =
            tr.preset + ":batch=" + std::to_string(result.effective_batch_size) +
            ":epochs=" + std::to_string(config.epochs) + ":seed=" + std::to_string(tr.seed) +
            ":lr=" + std::to_string(config.lr_initial) + ">" + std::to_string(config.lr_final) +
            ":scale=" + std::to_string(tr.score_scale) +
            ":context=" + (config.use_context ? "yes" : "no");
        dense::save_model(model, vocab->fingerprint(), fnv1a_string(config_string), tr.out);

        RunManifest manifest;
        manifest.subcommand = "train";
        manifest.flags = {{"pool", tr.pool},
                          {"questions", tr.questions},
                          {"preset", tr.preset},
                          {"batch-size", std::to_string(config.batch_size)},
                          {"effective-batch-size", std::to_string(result.effective_batch_size)},
                          {"epochs", std::to_string(config.epochs)},
                          {"d-tok", std::to_string(tr.d_tok)},
                          {"d-hidden", std::to_string(tr.d_hidden)},
                          {"d-out", std::to_string(tr.d_out)},
                          {"score-scale", std::to_string(tr.score_scale)},
                          {"context", config.use_context ? "yes" : "no"}};
        manifest.input_hashes[tr.pool] = hash_hex(fnv1a_file(tr.pool));
        manifest.input_hashes[tr.questions] = hash_hex(fnv1a_file(tr.questions));
        manifest.input_hashes[tr.tok.vocab_path] = hash_hex(fnv1a_file(tr.tok.vocab_path));
        manifest.seed = tr.seed;
        manifest.wall_clock_seconds = timer.seconds();
        manifest.save_sidecar(tr.out);

        std::cerr << "trained " << result.total_steps << " steps (batch "
                  << result.effective_batch_size << ", " << result.n_train_pairs
                  << " train pairs, " << result.n_val_pairs << " val)\n";
        for (std::size_t e = 0; e < result.train_loss_per_epoch.size(); ++e) {
            std::cerr << "epoch " << e + 1 << " train loss " << result.train_loss_per_epoch[e];
            if (e < result.val_loss_per_epoch.size())
                std::cerr << " val loss " << result.val_loss_per_epoch[e];
            std::cerr << "\n";
        }
    });

    // ---- embed ----
    auto* cmd_embed = app.add_subcommand("embed", "encode a candidate pool with a trained model");
    struct {
        std::string model, pool, out;
        TokenizerOpts tok;
        bool no_context = false, force = false;
    } em;
    cmd_embed->add_option("--model", em.model)->required();
    cmd_embed->add_option("--pool", em.pool)->required();
    cmd_embed->add_option("--out", em.out)->required();
    em.tok.attach(cmd_embed, /*with_kind=*/false);
    cmd_embed->add_flag("--no-context", em.no_context, "embed sentences without context");
    cmd_embed->add_flag("--force", em.force, "overwrite existing outputs");
    cmd_embed->callback([&] {
        Timer timer;
        ensure_writable(em.out, em.force);
        if (em.tok.vocab_path.empty())
            throw FormatError("embed requires --vocab (or REQA_VOCAB)");
        const auto loaded = dense::load_model(em.model);
        const Vocab vocab = Vocab::from_file(em.tok.vocab_path);
        if (vocab.fingerprint() != loaded.vocab_fingerprint)
            throw FormatError("vocab file does not match the checkpoint's vocab fingerprint");
        const auto pool = load_pool_jsonl(em.pool);

        std::vector<std::pair<std::vector<TokenId>, std::vector<TokenId>>> token_pairs(
            pool.size());
        parallel_over(pool.size(), threads, [&](std::size_t i) {
            const Candidate& c = pool.candidates()[i];
            token_pairs[i] = {wordpiece_tokenize(c.sentence, vocab, !em.tok.no_normalize).ids,
                              wordpiece_tokenize(c.context, vocab, !em.tok.no_normalize).ids};
        });
        dense::EmbeddingMatrix embeddings =
            dense::embed_candidates(loaded.model, token_pairs, !em.no_context, threads);
        embeddings.source_fingerprint = hash_hex(fnv1a_file(em.pool));
        dense::save_embeddings(embeddings, em.out);

        RunManifest manifest;
        manifest.subcommand = "embed";
        manifest.flags = {{"model", em.model},
                          {"pool", em.pool},
                          {"context", em.no_context ? "no" : "yes"}};
        manifest.input_hashes[em.pool] = hash_hex(fnv1a_file(em.pool));
        manifest.input_hashes[em.model] = hash_hex(fnv1a_file(em.model));
        manifest.wall_clock_seconds = timer.seconds();
        manifest.save_sidecar(em.out);
        std::cerr << "embedded " << embeddings.n << " candidates (d=" << embeddings.d << ")\n";
    });

    // ---- retrieve ----
    auto* cmd_retrieve = app.add_subcommand("retrieve", "rank candidates for each question");
    struct {
        std::string system, index, model, embeddings, questions, out;
        TokenizerOpts tok;
        std::size_t k = 10;
        bool no_context = false, ranks_only = false, force = false;
    } rt;
    cmd_retrieve->add_option("--system", rt.system, "bm25 or dense")
        ->check(CLI::IsMember({"bm25", "dense"}))
        ->required();
    cmd_retrieve->add_option("--questions", rt.questions)->required();
    cmd_retrieve->add_option("--out", rt.out)->required();
    cmd_retrieve->add_option("--index", rt.index, "BM25 index file (bm25 system)");
    cmd_retrieve->add_option("--model", rt.model, "model checkpoint (dense system)");
    cmd_retrieve->add_option("--embeddings", rt.embeddings, "pool embedding cache (dense system)");
    rt.tok.attach(cmd_retrieve);
    cmd_retrieve->add_option("--k", rt.k, "ranked entries to store per question")
        ->capture_default_str();
    cmd_retrieve->add_flag("--no-context", rt.no_context,
                           "require the index/embeddings to be sentence-only");
    cmd_retrieve->add_flag("--ranks-only", rt.ranks_only,
                           "store only the top hit and the gold rank");
    cmd_retrieve->add_flag("--force", rt.force, "overwrite existing outputs");
    cmd_retrieve->callback([&] {
        Timer timer;
        ensure_writable(rt.out, rt.force);
        const auto questions = load_questions_jsonl(rt.questions);
        const std::size_t keep = rt.ranks_only ? 1 : rt.k;

        RetrievalRun run;
        RunManifest manifest;
        manifest.subcommand = "retrieve";
        manifest.input_hashes[rt.questions] = hash_hex(fnv1a_file(rt.questions));

        if (rt.system == "bm25") {
            if (rt.index.empty()) throw FormatError("--system bm25 requires --index");
            const Bm25Build build = load_index(rt.index);
            if (build.index.use_context() == rt.no_context)
                throw FormatError(std::string("index was built ") +
                                  (build.index.use_context() ? "with" : "without") +
                                  " context; rebuild with `reqa index" +
                                  (rt.no_context ? " --no-context" : "") + "`");
            const Tokenizer tokenizer = rt.tok.build();
            if (tokenizer.fingerprint() != build.index.tokenizer_fingerprint())
                throw FormatError("tokenizer flags do not match the index fingerprint (index "
                                  "was built with " +
                                  build.index.tokenizer_fingerprint() + ")");
            const Bm25Params params = build.index.build_params();
            const std::string name =
                tokenizer.is_wordpiece() ? "bm25_wpm" : "bm25_word";
            run = run_retrieval(name, questions, build.index.n_docs(), keep, threads,
                                [&](const Question& q) {
                                    const auto query = tokenizer.tokenize(q.text);
                                    return retrieve_topk(build.index, build.idf, params, query,
                                                         build.index.n_docs());
                                });
            manifest.input_hashes[rt.index] = hash_hex(fnv1a_file(rt.index));
        } else {
            if (rt.model.empty() || rt.embeddings.empty())
                throw FormatError("--system dense requires --model and --embeddings");
            if (rt.tok.vocab_path.empty())
                throw FormatError("--system dense requires --vocab (or REQA_VOCAB)");
            const auto loaded = dense::load_model(rt.model);
            const Vocab vocab = Vocab::from_file(rt.tok.vocab_path);
            if (vocab.fingerprint() != loaded.vocab_fingerprint)
                throw FormatError("vocab file does not match the checkpoint's vocab fingerprint");
            const dense::EmbeddingMatrix embeddings = dense::load_embeddings(rt.embeddings);
            if (embeddings.model_fingerprint != dense::params_fingerprint(loaded.model))
                throw FormatError("embedding cache was built with a different checkpoint");
            if (embeddings.use_context == rt.no_context)
                throw FormatError(std::string("embeddings were encoded ") +
                                  (embeddings.use_context ? "with" : "without") +
                                  " context; re-run `reqa embed" +
                                  (rt.no_context ? " --no-context" : "") + "`");
            run = run_retrieval(
                "dense", questions, embeddings.n, keep, threads, [&](const Question& q) {
                    const auto ids = wordpiece_tokenize(q.text, vocab, !rt.tok.no_normalize).ids;
                    const auto query = dense::encode_question(loaded.model, ids);
                    return dense::retrieve_topk(embeddings, query, embeddings.n);
                });
            manifest.input_hashes[rt.model] = hash_hex(fnv1a_file(rt.model));
            manifest.input_hashes[rt.embeddings] = hash_hex(fnv1a_file(rt.embeddings));
        }

        save_run_jsonl(run, rt.out);
        manifest.flags = {{"system", rt.system},
                          {"k", std::to_string(rt.k)},
                          {"context", rt.no_context ? "no" : "yes"},
                          {"ranks-only", rt.ranks_only ? "yes" : "no"}};
        manifest.wall_clock_seconds = timer.seconds();
        manifest.save_sidecar(rt.out);
        std::cerr << "retrieved for " << run.rankings.size() << " questions\n";
    });

    // ---- eval ----
    auto* cmd_eval = app.add_subcommand("eval", "score a retrieval run with P@1 and MRR");
    struct {
        std::string run, gold, out, dataset;
        bool include_ranks = false, force = false;
    } ev;
    cmd_eval->add_option("--run", ev.run)->required();
    cmd_eval->add_option("--gold", ev.gold, "question file with gold candidate ids")->required();
    cmd_eval->add_option("--out", ev.out, "write the JSON report here");
    cmd_eval->add_option("--dataset", ev.dataset, "dataset label for the report");
    cmd_eval->add_flag("--ranks", ev.include_ranks, "include per-question ranks in the JSON");
    cmd_eval->add_flag("--force", ev.force, "overwrite existing outputs");
    cmd_eval->callback([&] {
        Timer timer;
        const RetrievalRun run = load_run_jsonl(ev.run);
        const QuestionSet questions = load_questions_jsonl(ev.gold);
        EvalMetadata metadata;
        metadata.dataset = ev.dataset;
        const EvalReport report = evaluate(run, questions, metadata);
        std::cerr << report_table(report);
        const std::string json = report_to_json(report, ev.include_ranks);
        if (!ev.out.empty()) {
            ensure_writable(ev.out, ev.force);
            write_text(ev.out, json);
            RunManifest manifest;
            manifest.subcommand = "eval";
            manifest.flags = {{"run", ev.run}, {"gold", ev.gold}};
            manifest.input_hashes[ev.run] = hash_hex(fnv1a_file(ev.run));
            manifest.input_hashes[ev.gold] = hash_hex(fnv1a_file(ev.gold));
            manifest.wall_clock_seconds = timer.seconds();
            manifest.save_sidecar(ev.out);
        } else {
            std::cout << json << '\n';
        }
    });

    // ---- compare ----
    auto* cmd_compare =
        app.add_subcommand("compare", "top-1 disagreement analysis between two runs");
    struct {
        std::string a, b, gold, out;
        bool force = false;
    } cp;
    cmd_compare->add_option("--a", cp.a)->required();
    cmd_compare->add_option("--b", cp.b)->required();
    cmd_compare->add_option("--gold", cp.gold)->required();
    cmd_compare->add_option("--out", cp.out, "write the JSON report here");
    cmd_compare->add_flag("--force", cp.force, "overwrite existing outputs");
    cmd_compare->callback([&] {
        const RetrievalRun run_a = load_run_jsonl(cp.a);
        const RetrievalRun run_b = load_run_jsonl(cp.b);
        const QuestionSet questions = load_questions_jsonl(cp.gold);
        const DisagreementReport report = disagreement(run_a, run_b, questions);
        std::cerr << disagreement_table(report);
        const std::string json = disagreement_to_json(report);
        if (!cp.out.empty()) {
            ensure_writable(cp.out, cp.force);
            write_text(cp.out, json);
        } else {
            std::cout << json << '\n';
        }
    });

    // ---- ablate ----
    auto* cmd_ablate = app.add_subcommand(
        "ablate", "run with-context and no-context retrieval and report the metric deltas");
    struct {
        std::string system = "bm25";
        std::string pool, questions, model, out;
        TokenizerOpts tok;
        double k1 = 1.5, b = 0.75, epsilon = 0.25;
        bool force = false;
    } ab;
    cmd_ablate->add_option("--system", ab.system, "bm25 or dense")
        ->check(CLI::IsMember({"bm25", "dense"}))
        ->capture_default_str();
    cmd_ablate->add_option("--pool", ab.pool)->required();
    cmd_ablate->add_option("--questions", ab.questions)->required();
    cmd_ablate->add_option("--model", ab.model, "model checkpoint (dense system)");
    cmd_ablate->add_option("--out", ab.out, "write the JSON delta report here");
    ab.tok.attach(cmd_ablate);
    cmd_ablate->add_option("--k1", ab.k1)->capture_default_str();
    cmd_ablate->add_option("--b", ab.b)->capture_default_str();
    cmd_ablate->add_option("--epsilon", ab.epsilon)->capture_default_str();
    cmd_ablate->add_flag("--force", ab.force, "overwrite existing outputs");
    cmd_ablate->callback([&] {
        const auto pool = load_pool_jsonl(ab.pool);
        const auto questions = load_questions_jsonl(ab.questions, &pool);

        auto evaluate_mode = [&](bool use_context) {
            RetrievalRun run;
            if (ab.system == "bm25") {
                const Tokenizer tokenizer = ab.tok.build();
                const Bm25Params params{ab.k1, ab.b, ab.epsilon};
                const Bm25Build build =
                    build_index(pool, tokenizer, params, use_context, threads);
                const std::string name =
                    tokenizer.is_wordpiece() ? "bm25_wpm" : "bm25_word";
                run = run_retrieval(name, questions, pool.size(), 1, threads,
                                    [&](const Question& q) {
                                        return retrieve_topk(build.index, build.idf, params,
                                                             tokenizer.tokenize(q.text),
                                                             pool.size());
                                    });
            } else {
                if (ab.model.empty()) throw FormatError("--system dense requires --model");
                if (ab.tok.vocab_path.empty())
                    throw FormatError("--system dense requires --vocab (or REQA_VOCAB)");
                const auto loaded = dense::load_model(ab.model);
                const Vocab vocab = Vocab::from_file(ab.tok.vocab_path);
                if (vocab.fingerprint() != loaded.vocab_fingerprint)
                    throw FormatError(
                        "vocab file does not match the checkpoint's vocab fingerprint");
                std::vector<std::pair<std::vector<TokenId>, std::vector<TokenId>>> token_pairs(
                    pool.size());
                parallel_over(pool.size(), threads, [&](std::size_t i) {
                    const Candidate& c = pool.candidates()[i];
                    token_pairs[i] = {
                        wordpiece_tokenize(c.sentence, vocab, !ab.tok.no_normalize).ids,
                        wordpiece_tokenize(c.context, vocab, !ab.tok.no_normalize).ids};
                });
                const auto embeddings =
                    dense::embed_candidates(loaded.model, token_pairs, use_context, threads);
                run = run_retrieval(
                    "dense", questions, embeddings.n, 1, threads, [&](const Question& q) {
                        const auto ids =
                            wordpiece_tokenize(q.text, vocab, !ab.tok.no_normalize).ids;
                        return dense::retrieve_topk(
                            embeddings, dense::encode_question(loaded.model, ids), embeddings.n);
                    });
            }
            EvalMetadata metadata;
            metadata.context_mode = use_context ? "context" : "no-context";
            return evaluate(run, questions, metadata);
        };

        const EvalReport with_context = evaluate_mode(true);
        const EvalReport no_context = evaluate_mode(false);
        const AblationDelta delta = ablation_compare(with_context, no_context);
        std::cerr << ablation_table(with_context, no_context, delta);
        const std::string json = ablation_to_json(with_context, no_context, delta);
        if (!ab.out.empty()) {
            ensure_writable(ab.out, ab.force);
            write_text(ab.out, json);
        } else {
            std::cout << json << '\n';
        }
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_app(argc, argv);
    } catch (const Error& e) {
        std::cerr << "error [" << e.kind() << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
