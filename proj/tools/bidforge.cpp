// bidforge: datasets, generation, relevancy filtering and diversity reports
// for bio-inspired design concepts.

#include "bidforge/commands.hpp"
#include "bidforge/error.hpp"
#include "bidforge/text.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace bidforge;

namespace {

struct Globals {
    std::string config_path = "bidforge.conf";
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
};

PipelineConfig load(const Globals& g) {
    auto config = load_config(g.config_path);
    apply_environment(config);
    if (g.seed) set_seed(config, *g.seed);
    if (g.out) set_output_dir(config, *g.out);
    return config;
}

std::vector<std::string> keywords(const std::string& text) {
    std::vector<std::string> out;
    for (const auto& part : split(text, ",")) {
        auto word = trim(part);
        if (!word.empty()) out.push_back(std::move(word));
    }
    return out;
}

std::string one_line(std::string text) {
    for (auto& c : text) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    return text;
}

std::vector<InnovationRecord> pick_records(const Corpus& corpus, const std::vector<std::string>& ids) {
    std::vector<InnovationRecord> out;
    for (const auto& id : ids) {
        const auto* record = corpus.find(id);
        if (!record) throw Error(ErrorKind::Precondition, "sample '" + id + "' is not in the corpus");
        out.push_back(*record);
    }
    return out;
}

void print_pass_rates(const PassRateTable& table) {
    std::cout << pass_rate_text(table);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fine-tuning datasets, concept generation, relevancy filtering and WMD diversity reports"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "Configuration file")->capture_default_str();
    app.add_option("--seed", g.seed, "Override the configured seed");
    app.add_option("--out", g.out, "Override the output directory");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Validate a corpus file and write it in canonical JSON");
    std::string ingest_input;
    std::string ingest_output;
    ingest->add_option("--input", ingest_input, "Corpus file (default: corpus.path)");
    ingest->add_option("--output", ingest_output, "Destination (default: <out>/corpus.json)");

    // build-datasets
    auto* build = app.add_subcommand("build-datasets", "Write the seven fine-tuning datasets and their splits");

    // finetune
    auto* finetune = app.add_subcommand("finetune", "Submit fine-tune jobs for built datasets and wait for them");
    std::string datasets_dir;
    finetune->add_option("--datasets", datasets_dir, "Dataset directory (default: <out>/datasets)");

    // generate
    auto* generate = app.add_subcommand("generate", "Generate concepts for one problem spec");
    int gen_type = 0;
    std::string gen_applications;
    std::string gen_benefits;
    std::string gen_challenge;
    std::size_t gen_n = 0;
    std::string gen_store;
    generate->add_option("--type", gen_type, "Generator type")->required()->check(CLI::Range(1, 3));
    generate->add_option("--applications", gen_applications, "Comma-separated applications (types 1 and 2)");
    generate->add_option("--benefits", gen_benefits, "Comma-separated benefits (type 2)");
    generate->add_option("--challenge", gen_challenge, "Challenge statement (type 3)");
    generate->add_option("-n", gen_n, "Concepts to generate (default: generation.n)");
    generate->add_option("--store", gen_store, "Concept store (default: <out>/concepts.jsonl)");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Run the relevancy evaluators over a concept store");
    std::string eval_store;
    evaluate->add_option("--concepts", eval_store, "Concept store")->required();

    // wmd
    auto* wmd_cmd = app.add_subcommand("wmd", "Diversity report: WMD from original innovations to concepts");
    std::string wmd_store;
    std::string wmd_originals;
    std::string wmd_sample_ids;
    std::string wmd_baseline;
    wmd_cmd->add_option("--concepts", wmd_store, "Concept store")->required();
    auto* originals_opt = wmd_cmd->add_option("--originals", wmd_originals, "Corpus file holding the seed samples");
    auto* ids_opt = wmd_cmd->add_option("--sample-ids", wmd_sample_ids, "Comma-separated seed sample ids from the corpus");
    originals_opt->excludes(ids_opt);
    wmd_cmd->add_option("--baseline", wmd_baseline, "Baseline pool corpus (default: diversity.baseline_path or corpus)");

    // ratings
    auto* ratings = app.add_subcommand("ratings", "Summarize feasibility/novelty ratings per generator type");
    std::string ratings_csv;
    std::string ratings_store;
    ratings->add_option("--ratings", ratings_csv, "Ratings CSV")->required();
    ratings->add_option("--concepts", ratings_store, "Concept store the ratings refer to")->required();

    // pipeline
    auto* pipeline = app.add_subcommand("pipeline", "generate -> evaluate -> wmd with a run manifest");
    std::string pipe_ids;
    std::string pipe_applications;
    std::string pipe_benefits;
    std::string pipe_challenge;
    std::string pipe_reference;
    std::size_t pipe_n = 0;
    bool pipe_resume = false;
    pipeline->add_option("--sample-ids", pipe_ids, "Comma-separated corpus ids; each seeds all three types");
    pipeline->add_option("--applications", pipe_applications, "Type-1 spec (and Type-2 with --benefits)");
    pipeline->add_option("--benefits", pipe_benefits, "Type-2 spec benefits");
    pipeline->add_option("--challenge", pipe_challenge, "Type-3 spec challenge");
    pipeline->add_option("--reference-id", pipe_reference, "Corpus record whose innovation anchors the diversity report");
    pipeline->add_option("-n", pipe_n, "Concepts per spec (default: generation.n)");
    pipeline->add_flag("--resume", pipe_resume, "Reuse stages whose outputs are recorded in the manifest");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "UsageError: " << one_line(e.what()) << "\n";
        return 2;
    }

    try {
        if (ratings->parsed()) {
            const fs::path out = g.out ? fs::path(*g.out) : fs::path(".");
            const auto report = cmd_ratings(ratings_csv, ratings_store, out);
            std::cout << ratings_summary_text(report.summary) << "wrote " << report.output.string() << "\n";
            return 0;
        }

        const auto config = load(g);

        if (ingest->parsed()) {
            const fs::path output = ingest_output.empty() ? config.output_dir / "corpus.json" : fs::path(ingest_output);
            const auto report = cmd_ingest(config, ingest_input, output);
            std::cout << report.records << " records (" << report.without_challenge << " without challenge, "
                      << report.without_benefits << " without benefits) -> " << report.output.string() << "\n";
            return 0;
        }

        auto corpus = std::make_shared<const Corpus>(load_config_corpus(config));

        if (wmd_cmd->parsed()) {
            const auto concepts = read_concept_store(wmd_store);
            std::vector<InnovationRecord> originals = wmd_originals.empty()
                                                          ? pick_records(*corpus, keywords(wmd_sample_ids))
                                                          : load_corpus(wmd_originals).records;
            if (originals.empty()) throw Error(ErrorKind::Usage, "give --originals or --sample-ids");
            std::vector<InnovationRecord> pool = corpus->records;
            if (!wmd_baseline.empty()) {
                pool = load_corpus(wmd_baseline).records;
            } else if (!config.baseline_path.empty()) {
                pool = load_corpus(config.baseline_path).records;
            }
            const auto result = cmd_wmd(config, concepts, originals, pool, config.output_dir / "diversity");
            std::cout << result.report.generated_count() << " generated and " << result.report.baseline_count()
                      << " baseline distances\n";
            for (const auto& s : result.report.skipped)
                std::cerr << "skipped " << s.item_id << " (" << s.reason << ")\n";
            for (const auto& p : result.outputs) std::cout << "wrote " << p.string() << "\n";
            return 0;
        }

        auto backend = make_backend(config, corpus);

        if (build->parsed()) {
            const auto report = cmd_build_datasets(config, *corpus, *backend);
            const DatasetOutcome* first_failure = nullptr;
            for (const auto& o : report.outcomes) {
                std::cout << model_kind_name(o.kind) << ": " << o.status;
                if (o.status == "ok") {
                    std::cout << " examples=" << o.examples << " train=" << o.train << " validation=" << o.validation
                              << " batch_size=" << o.batch_size;
                } else {
                    std::cout << " (" << one_line(o.error) << ")";
                }
                std::cout << "\n";
                if (o.status == "failed" && !first_failure) first_failure = &o;
            }
            std::cout << "wrote " << report.manifest.string() << "\n";
            if (first_failure) {
                std::cerr << one_line(first_failure->error) << " [" << model_kind_name(first_failure->kind) << "]\n";
                return 1;
            }
            return 0;
        }

        if (finetune->parsed()) {
            const fs::path dir = datasets_dir.empty() ? config.output_dir / "datasets" : fs::path(datasets_dir);
            const auto report = cmd_finetune(config, *backend, dir);
            for (const auto& [kind, job] : report.jobs) {
                std::cout << model_kind_name(kind) << ": " << job.job_id << " " << job_status_name(job.status);
                if (!job.fine_tuned_model.empty()) std::cout << " -> " << job.fine_tuned_model;
                std::cout << "\n";
            }
            std::cout << "wrote " << report.summary.string() << " and " << report.models_config.string() << "\n";
            return 0;
        }

        if (generate->parsed()) {
            ProblemSpec spec;
            if (gen_type == 1) spec = Type1Spec{keywords(gen_applications)};
            if (gen_type == 2) spec = Type2Spec{keywords(gen_benefits), keywords(gen_applications)};
            if (gen_type == 3) spec = Type3Spec{trim(gen_challenge)};
            const std::size_t n = gen_n ? gen_n : config.generation_n;
            const fs::path store = gen_store.empty() ? config.output_dir / "concepts.jsonl" : fs::path(gen_store);
            try {
                const auto report = cmd_generate(config, *backend, spec, n, store);
                std::cout << "obtained " << report.obtained << "/" << report.requested << " concepts, " << report.rejects
                          << " rejects, " << report.attempts << " attempts -> " << report.store.string() << "\n";
            } catch (const BudgetExhausted& e) {
                std::cout << "obtained " << e.obtained() << "/" << e.requested() << " concepts (partial store kept at "
                          << store.string() << ")\n";
                throw;
            }
            return 0;
        }

        if (evaluate->parsed()) {
            const auto report = cmd_evaluate(config, *backend, eval_store, config.output_dir);
            print_pass_rates(report.table);
            for (const auto& p : report.outputs) std::cout << "wrote " << p.string() << "\n";
            return 0;
        }

        if (pipeline->parsed()) {
            PipelineRequest request;
            request.sample_ids = keywords(pipe_ids);
            request.reference_id = pipe_reference;
            request.n = pipe_n;
            request.resume = pipe_resume;
            if (!pipe_applications.empty()) {
                request.specs.push_back(Type1Spec{keywords(pipe_applications)});
                if (!pipe_benefits.empty())
                    request.specs.push_back(Type2Spec{keywords(pipe_benefits), keywords(pipe_applications)});
            } else if (!pipe_benefits.empty()) {
                throw Error(ErrorKind::Usage, "--benefits needs --applications");
            }
            if (!pipe_challenge.empty()) request.specs.push_back(Type3Spec{trim(pipe_challenge)});
            if (!request.sample_ids.empty() && !request.specs.empty())
                throw Error(ErrorKind::Usage, "--sample-ids cannot be combined with explicit specs");

            const auto report = cmd_pipeline(config, *corpus, *backend, request);
            if (report.pass_rates) print_pass_rates(*report.pass_rates);
            if (report.diversity) {
                std::cout << report.diversity->generated_count() << " generated and "
                          << report.diversity->baseline_count() << " baseline distances\n";
                for (const auto& s : report.diversity->skipped)
                    std::cerr << "skipped " << s.item_id << " (" << s.reason << ")\n";
            }
            std::cout << "run " << report.manifest.run_id << " -> " << report.manifest_path.string() << "\n";
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << one_line(error_line(e)) << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "InternalError: " << one_line(e.what()) << "\n";
        return 1;
    }
    return 0;
}
