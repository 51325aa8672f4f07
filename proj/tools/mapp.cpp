// Command-line runner for pseudoword probing experiments.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mapp/mapp.hpp"

namespace fs = std::filesystem;
using namespace mapp;

namespace {

struct Options {
    std::string model;
    std::string vocab;
    std::string dataset;
    std::string lexicons;
    std::uint64_t seed = 0;
    int layer = -1;
    std::vector<double> epsilons = default_epsilons();
    std::vector<double> alphas = default_alphas();
    std::vector<std::size_t> ks{1, 5};
    std::size_t inits = 5;
    std::size_t max_steps = 2000;
    bool strict_decode = false;
    std::string magnitude_policy = "rescale";
    std::string out = "out";
    std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    std::size_t directions = 10;
    std::size_t draws = 100;
    std::string portion = "basic";
    std::string store;
    bool no_store = false;

    // train-toy
    std::size_t layers = 2, hidden = 32, heads = 4, ffn = 64;
    std::size_t relations = 2, distractors = 12, cue_class = 8, subjects = 8, corpus = 20000;
    std::size_t train_steps = 4000, batch = 32;
    double train_lr = 3e-3;

    // import-dataset / plot
    std::string input;
};

void add_model_options(CLI::App* cmd, Options& o) {
    cmd->add_option("--model", o.model, "PWAR weight archive")->required()->check(CLI::ExistingFile);
    cmd->add_option("--vocab", o.vocab, "Vocabulary file (default: vocab.txt next to the archive)");
    cmd->add_option("--seed", o.seed, "Master seed");
    cmd->add_option("--layer", o.layer, "Hidden layer matched during induction (default: final)");
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
}

void add_data_options(CLI::App* cmd, Options& o) {
    cmd->add_option("--dataset", o.dataset, "Probe items (JSON lines)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--lexicons", o.lexicons, "Sense lexicons (JSON map)")->check(CLI::ExistingFile);
}

void add_induction_options(CLI::App* cmd, Options& o) {
    cmd->add_option("--inits", o.inits, "Random restarts per pseudoword")->check(CLI::PositiveNumber);
    cmd->add_option("--max-steps", o.max_steps, "Optimizer step cap per restart");
    cmd->add_flag("--strict-decode", o.strict_decode, "Reject pseudowords that fail the decode check");
    cmd->add_option("--k", o.ks, "Top-k cutoffs for sense match")->delimiter(',');
    cmd->add_option("--store", o.store, "Pseudoword cache (default: pseudowords.jsonl in the output directory)");
    cmd->add_flag("--no-store", o.no_store, "Induce every pseudoword afresh and keep nothing");
}

ModelBundle load_model(const Options& o) {
    const fs::path vocab = o.vocab.empty() ? fs::path(o.model).parent_path() / "vocab.txt" : fs::path(o.vocab);
    return load_archive(o.model, vocab);
}

RunConfig run_config(const Options& o) {
    RunConfig cfg;
    cfg.out_dir = o.out;
    cfg.seed = o.seed;
    cfg.induction.num_inits = o.inits;
    cfg.induction.max_steps = o.max_steps;
    cfg.induction.strict_decode = o.strict_decode;
    if (o.layer >= 0) cfg.induction.layer = static_cast<std::size_t>(o.layer);
    cfg.epsilons = o.epsilons;
    cfg.alphas = o.alphas;
    cfg.ks = o.ks;
    cfg.num_directions = o.directions;
    cfg.magnitude_policy = parse_magnitude_policy(o.magnitude_policy);
    cfg.baseline_draws = o.draws;
    cfg.workers = o.workers;
    if (!o.no_store) {
        cfg.store_path = o.store.empty() ? fs::path(o.out) / "pseudowords.jsonl" : fs::path(o.store);
        if (cfg.store_path->has_parent_path()) fs::create_directories(cfg.store_path->parent_path());
    }
    return cfg;
}

LexiconSet lexicons_for(const Options& o) {
    const fs::path path = o.lexicons.empty() ? fs::path(o.dataset).parent_path() / "lexicons.json" : fs::path(o.lexicons);
    return load_lexicons(path);
}

void print_metrics(const ExperimentReport& report) {
    write_metrics_csv(std::cout, report.metrics);
    if (!report.failures.empty()) {
        std::cerr << report.failures.size() << " item(s) failed:\n";
        for (const auto& f : report.failures) std::cerr << "  " << f.item_id << ": " << f.reason << '\n';
    }
    for (const auto& f : report.files) std::cerr << "wrote " << f.string() << '\n';
}

int train_toy_command(const Options& o) {
    ToyCorpusSpec spec;
    spec.num_relations = o.relations;
    spec.num_distractors = o.distractors;
    spec.cue_class_size = o.cue_class;
    spec.subject_class_size = o.subjects;
    spec.corpus_size = o.corpus;
    spec.seed = o.seed;
    const auto toy = gen_toy(spec);

    ModelConfig cfg;
    cfg.num_layers = o.layers;
    cfg.hidden_dim = o.hidden;
    cfg.num_heads = o.heads;
    cfg.ffn_dim = o.ffn;
    cfg.vocab_size = required_vocab_size(toy.corpus);
    cfg.max_positions = 16;
    TrainParams params;
    params.max_steps = o.train_steps;
    params.batch_size = o.batch;
    params.learning_rate = o.train_lr;
    params.on_eval = [](std::size_t step, double loss, double acc) {
        std::cerr << "step " << step << " loss " << format_real(loss, 4) << " held-out accuracy " << format_real(acc, 4)
                  << '\n';
    };
    auto result = train_toy(toy.corpus, cfg, params, o.seed);

    const fs::path out = o.out;
    fs::create_directories(out);
    save_bundle(result.bundle, out / "model.pwar", out / "vocab.txt");
    write_items(out / "items.jsonl", toy.items);
    write_lexicons(out / "lexicons.json", toy.lexicons);
    {
        std::ofstream c(out / "corpus.txt");
        for (const auto& s : toy.corpus) {
            for (std::size_t i = 0; i < s.size(); ++i) c << (i ? " " : "") << s[i];
            c << '\n';
        }
    }
    nlohmann::json report{{"steps", result.report.steps},
                          {"final_loss", format_real(result.report.final_loss)},
                          {"heldout_accuracy", format_real(result.report.heldout_accuracy)},
                          {"converged", result.report.converged},
                          {"vocab_size", cfg.vocab_size}};
    std::ofstream(out / "train_report.json") << report.dump(2) << '\n';
    std::cout << report.dump(2) << '\n';
    if (!result.report.converged)
        std::cerr << "warning: step cap reached before held-out accuracy plateaued\n";
    return 0;
}

int import_command(const Options& o) {
    std::ifstream in(o.input);
    if (!in) throw Error("cannot open " + o.input);
    const auto items = import_raw(in);
    fs::create_directories(fs::path(o.out).parent_path().empty() ? fs::path(".") : fs::path(o.out).parent_path());
    write_items(o.out, items);
    for (const auto& [portion, n] : portion_counts(items)) std::cout << to_string(portion) << ' ' << n << '\n';
    return 0;
}

int plot_command(const Options& o) {
    std::ifstream in(o.input);
    if (!in) throw Error("cannot open " + o.input);
    const auto rows = svg::read_metrics_csv(in);
    const fs::path out = o.out;
    std::map<std::string, svg::Series> series;
    std::vector<std::pair<std::string, double>> bars;
    for (const auto& r : rows) {
        const auto name = r.condition + " @" + std::to_string(r.k);
        if (r.group.starts_with("eps=")) {
            series[name].name = name;
            series[name].points.emplace_back(std::stod(r.group.substr(4)), r.accuracy());
        } else if (r.group.starts_with("alpha=") && r.group.find(";code=") != std::string::npos) {
            const auto code = r.group.substr(r.group.find(";code=") + 6);
            const auto key = name + " " + code;
            series[key].name = key;
            series[key].points.emplace_back(std::stod(r.group.substr(6)), r.accuracy());
        } else if (r.k == 1) {
            bars.emplace_back(r.condition + " " + r.group, r.accuracy());
        }
    }
    std::vector<svg::Series> list;
    for (auto& [k, s] : series) list.push_back(std::move(s));
    if (!list.empty() || bars.empty())
        svg::write_file(out, svg::line_chart(fs::path(o.input).stem().string(), "grid value", "accuracy", list));
    else
        svg::write_file(out, svg::bar_chart(fs::path(o.input).stem().string(), "group", "accuracy @1", bars));
    std::cerr << "wrote " << out.string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Masked pseudoword probing of masked language models"};
    app.set_config("--config", "", "TOML configuration file; command-line flags take precedence");
    app.require_subcommand(1);
    Options o;

    auto* train = app.add_subcommand("train-toy", "Generate the synthetic corpus and train a toy encoder");
    train->add_option("--seed", o.seed, "Master seed");
    train->add_option("--out", o.out, "Output directory");
    train->add_option("--layers", o.layers, "Encoder layers");
    train->add_option("--hidden", o.hidden, "Hidden size");
    train->add_option("--heads", o.heads, "Attention heads");
    train->add_option("--ffn", o.ffn, "Feed-forward size");
    train->add_option("--relations", o.relations, "Ambiguous relation words");
    train->add_option("--distractors", o.distractors, "Unambiguous relation words");
    train->add_option("--cue-class-size", o.cue_class, "Cue words per sense");
    train->add_option("--subjects", o.subjects, "Subject words");
    train->add_option("--corpus-size", o.corpus, "Training sentences");
    train->add_option("--train-steps", o.train_steps, "Training step cap");
    train->add_option("--batch", o.batch, "Sentences per step");
    train->add_option("--train-lr", o.train_lr, "Training learning rate");

    auto* import = app.add_subcommand("import-dataset", "Convert the annotated raw format to JSON lines");
    import->add_option("input", o.input, "Raw annotated file")->required()->check(CLI::ExistingFile);
    import->add_option("--out", o.out, "Output JSON-lines file")->required();

    auto* induce_cmd = app.add_subcommand("induce", "Induce and store pseudowords for one dataset portion");
    add_model_options(induce_cmd, o);
    add_data_options(induce_cmd, o);
    add_induction_options(induce_cmd, o);
    induce_cmd->add_option("--portion", o.portion, "basic, minimal_pairs or generalization");

    auto* spec_cmd = app.add_subcommand("specialize", "Vanilla versus pseudoword masked prediction");
    add_model_options(spec_cmd, o);
    add_data_options(spec_cmd, o);
    add_induction_options(spec_cmd, o);

    auto* perturb_cmd = app.add_subcommand("perturb", "Masked prediction around pseudowords");
    add_model_options(perturb_cmd, o);
    add_data_options(perturb_cmd, o);
    add_induction_options(perturb_cmd, o);
    perturb_cmd->add_option("--epsilons", o.epsilons, "Cosine distances")->delimiter(',');
    perturb_cmd->add_option("--directions", o.directions, "Random directions per item");
    perturb_cmd->add_option("--magnitude-policy", o.magnitude_policy, "rescale or unit");

    auto* interp_cmd = app.add_subcommand("interpolate", "Interpolate between minimal-pair pseudowords");
    add_model_options(interp_cmd, o);
    add_data_options(interp_cmd, o);
    add_induction_options(interp_cmd, o);
    interp_cmd->add_option("--alphas", o.alphas, "Interpolation weights")->delimiter(',');

    auto* gen_cmd = app.add_subcommand("generalize", "Transplant pseudowords to unseen sentences");
    add_model_options(gen_cmd, o);
    add_data_options(gen_cmd, o);
    add_induction_options(gen_cmd, o);

    auto* base_cmd = app.add_subcommand("baseline", "Random-vector baseline");
    add_model_options(base_cmd, o);
    add_data_options(base_cmd, o);
    base_cmd->add_option("--draws", o.draws, "Random vectors per item")->check(CLI::PositiveNumber);

    auto* plot = app.add_subcommand("plot", "Render a metrics CSV as SVG");
    plot->add_option("input", o.input, "Metrics CSV")->required()->check(CLI::ExistingFile);
    plot->add_option("--out", o.out, "Output SVG file")->required();

    CLI11_PARSE(app, argc, argv);
    try {
        if (*train) return train_toy_command(o);
        if (*import) return import_command(o);
        if (*plot) return plot_command(o);
        const auto bundle = load_model(o);
        const auto items = load_items(o.dataset);
        const auto cfg = run_config(o);
        if (*induce_cmd) {
            print_metrics(run_induce(bundle, items, parse_portion(o.portion), cfg));
            return 0;
        }
        const auto lexicons = lexicons_for(o);
        if (*spec_cmd) print_metrics(run_specialize(bundle, items, lexicons, cfg));
        if (*perturb_cmd) print_metrics(run_perturb(bundle, items, lexicons, cfg));
        if (*interp_cmd) print_metrics(run_interpolate(bundle, items, lexicons, cfg));
        if (*gen_cmd) print_metrics(run_generalize(bundle, items, lexicons, cfg));
        if (*base_cmd) print_metrics(run_baseline(bundle, items, lexicons, cfg));
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
