// cdpauth: synthesize, print, attack, train, authenticate and evaluate
// copy detection patterns.
//
// Exit codes: 0 success, 2 usage or validation error, 1 runtime failure.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cdp/cdp.hpp"
#include "cdp/config.hpp"
#include "cdp/io.hpp"
#include "cdp/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Input/validation problem detected after parsing; maps to exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::uint64_t seed = 0;
    bool seed_given = false;
    unsigned threads = 1;
    bool json = false;
};

fs::path default_out(const std::string& sub) {
    if (const char* env = std::getenv("CDP_OUT_DIR"); env && *env) return fs::path(env) / sub;
    return fs::path("cdp_out") / sub;
}

fs::path resolve_out(const std::string& given, const std::string& sub) {
    return given.empty() ? default_out(sub) : fs::path(given);
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw cdp::IoError("cannot create output directory '" + dir.string() + "'");
}

/// Records the resolved configuration, tool version and hashes of every input.
void write_manifest(const fs::path& dir, const std::string& command, const json& config,
                    const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs) {
    json in = json::array(), out = json::array();
    for (const auto& p : inputs) in.push_back({{"path", p.generic_string()}, {"fnv1a64", cdp::io::file_hash(p)}});
    for (const auto& p : outputs) out.push_back(p.filename().generic_string());
    cdp::io::write_json(dir / "manifest.json", {{"tool", "cdpauth"},
                                                {"version", CDP_VERSION},
                                                {"command", command},
                                                {"config", config},
                                                {"inputs", in},
                                                {"outputs", out}});
}

cdp::ChannelParams preset(const std::string& name) {
    if (name == "A" || name == "a") return cdp::printer_a();
    if (name == "B" || name == "b") return cdp::printer_b();
    throw UsageError("unknown printer preset '" + name + "' (expected A or B)");
}

std::string index_name(const std::string& prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%05zu.pgm", prefix.c_str(), i);
    return buf;
}

void emit(const Globals& g, const json& j, const std::string& text) {
    if (g.json)
        std::cout << j.dump() << "\n";
    else if (!text.empty())
        std::cout << text;
}

// ------------------------------------------------------------------- gen

struct GenOpts {
    std::size_t n = 1;
    std::size_t L = 228;
    double p = 0.5;
    std::string out;
};

int cmd_gen(const GenOpts& o, const Globals& g) {
    const fs::path dir = resolve_out(o.out, "templates");
    ensure_dir(dir);
    std::vector<fs::path> outputs;
    for (std::size_t i = 0; i < o.n; ++i) {
        const auto t = cdp::generate_template(o.L, o.p, cdp::derive_seed(g.seed, i));
        outputs.push_back(dir / index_name("t", i));
        cdp::io::save_template(outputs.back(), t);
    }
    write_manifest(dir, "gen", {{"n", o.n}, {"L", o.L}, {"p", o.p}, {"seed", g.seed}}, {}, outputs);
    emit(g, {{"written", outputs.size()}, {"out", dir.generic_string()}},
         "wrote " + std::to_string(outputs.size()) + " templates to " + dir.string() + "\n");
    return 0;
}

// ------------------------------------------------------------ print / attack

struct ChannelOpts {
    std::string preset;
    std::optional<int> k;
    std::optional<double> blur, gamma, noise;

    cdp::ChannelParams resolve() const {
        cdp::ChannelParams c = ::preset(preset);
        if (k) c.k = *k;
        if (blur) c.blur_sigma = *blur;
        if (gamma) c.dot_gain_gamma = *gamma;
        if (noise) c.noise_sigma = *noise;
        try {
            c.validate();
        } catch (const cdp::ParameterError& e) {
            throw UsageError(e.what());
        }
        return c;
    }
};

void add_channel_opts(CLI::App* sub, ChannelOpts& c, const std::string& preset_flag) {
    sub->add_option(preset_flag, c.preset, "printer preset (A or B)")->required();
    sub->add_option("--k", c.k, "override magnification");
    sub->add_option("--blur", c.blur, "override Gaussian PSF sigma (pixels)");
    sub->add_option("--gamma", c.gamma, "override dot-gain exponent");
    sub->add_option("--noise", c.noise, "override acquisition noise sigma");
}

struct PrintOpts {
    ChannelOpts channel;
    std::string in, out;
};

int cmd_print(const PrintOpts& o, const Globals& g) {
    const cdp::ChannelParams params = o.channel.resolve();
    const auto inputs = cdp::io::list_pgm(o.in);
    if (inputs.empty()) throw UsageError("no .pgm templates in '" + o.in + "'");
    const fs::path dir = resolve_out(o.out, "printed");
    ensure_dir(dir);
    std::vector<fs::path> outputs(inputs.size());
    cdp::parallel_for(inputs.size(), g.threads, [&](std::size_t i) {
        const auto t = cdp::io::load_template(inputs[i]);
        const auto ch = params.with_seed(cdp::derive_seed(g.seed, i));
        outputs[i] = dir / inputs[i].filename();
        cdp::io::save_printed(outputs[i], cdp::print_code(t, ch),
                              {{"channel", cdp::io::channel_to_json(ch)},
                               {"template", inputs[i].filename().generic_string()}});
    });
    write_manifest(dir, "print", {{"channel", cdp::io::channel_to_json(params)}, {"preset", o.channel.preset}},
                   inputs, outputs);
    emit(g, {{"written", outputs.size()}, {"out", dir.generic_string()}},
         "printed " + std::to_string(outputs.size()) + " codes to " + dir.string() + "\n");
    return 0;
}

struct AttackOpts {
    ChannelOpts channel;
    std::string in, out;
    int k = 0;
};

int cmd_attack(const AttackOpts& o, const Globals& g) {
    const cdp::ChannelParams reprint = o.channel.resolve();
    const auto inputs = cdp::io::list_pgm(o.in);
    if (inputs.empty()) throw UsageError("no .pgm images in '" + o.in + "'");
    const fs::path dir = resolve_out(o.out, "fakes");
    ensure_dir(dir);
    const auto estimator = cdp::otsu_majority_estimator();
    std::vector<fs::path> outputs(inputs.size());
    cdp::parallel_for(inputs.size(), g.threads, [&](std::size_t i) {
        const auto x = cdp::io::load_printed(inputs[i], o.k);
        const auto ch = reprint.with_seed(cdp::derive_seed(g.seed, i));
        outputs[i] = dir / inputs[i].filename();
        cdp::io::save_printed(outputs[i], cdp::make_fake(x, ch, estimator),
                              {{"channel", cdp::io::channel_to_json(ch)},
                               {"estimator_id", estimator.id()},
                               {"source", inputs[i].filename().generic_string()}});
    });
    write_manifest(dir, "attack", {{"reprint", cdp::io::channel_to_json(reprint)}, {"preset", o.channel.preset}},
                   inputs, outputs);
    emit(g, {{"written", outputs.size()}, {"out", dir.generic_string()}},
         "produced " + std::to_string(outputs.size()) + " fakes in " + dir.string() + "\n");
    return 0;
}

// ------------------------------------------------------------------- train

struct TrainOpts {
    std::string templates, printed, out, border = "interior";
    int h = 3;
    int k = 0;
    double epsilon = 1e-4;
};

/// Loads matching (template, printed) file lists; counts must agree.
void load_pairs(const std::string& tdir, const std::string& pdir, int k, std::vector<cdp::Template>& ts,
                std::vector<cdp::PrintedImage>& xs, std::vector<fs::path>& files) {
    const auto tf = cdp::io::list_pgm(tdir);
    const auto pf = cdp::io::list_pgm(pdir);
    if (tf.empty()) throw UsageError("no templates in '" + tdir + "'");
    if (tf.size() != pf.size())
        throw UsageError("template count (" + std::to_string(tf.size()) + ") differs from printed count (" +
                         std::to_string(pf.size()) + ")");
    for (std::size_t i = 0; i < tf.size(); ++i) {
        ts.push_back(cdp::io::load_template(tf[i]));
        xs.push_back(cdp::io::load_printed(pf[i], k));
        files.push_back(tf[i]);
        files.push_back(pf[i]);
    }
}

int cmd_train(const TrainOpts& o, const Globals& g) {
    std::vector<cdp::Template> ts;
    std::vector<cdp::PrintedImage> xs;
    std::vector<fs::path> inputs;
    load_pairs(o.templates, o.printed, o.k, ts, xs, inputs);
    cdp::CodebookConfig cfg;
    cfg.h = o.h;
    cfg.k = o.k > 0 ? o.k : xs.front().k;
    cfg.border = cdp::parse_border_mode(o.border);
    cfg.epsilon = o.epsilon;
    const auto cb = cdp::train_codebook(ts, xs, cfg, cdp::otsu_majority_estimator(), g.threads);
    const fs::path out = o.out.empty() ? default_out("train") / "codebook.json" : fs::path(o.out);
    if (out.has_parent_path()) ensure_dir(out.parent_path());
    cdp::io::save_codebook(out, cb);
    json summary{{"entries", cb.entries().size()},
                 {"observations", cb.global().count},
                 {"global_P", cb.global_p()},
                 {"global_P_b", cb.global_pb()},
                 {"out", out.generic_string()}};
    emit(g, summary,
         "codebook with " + std::to_string(cb.entries().size()) + " entries (" + std::to_string(cb.global().count) +
             " observations, global P_b " + cdp::io::fmt_double(cb.global_pb()) + ") -> " + out.string() + "\n");
    return 0;
}

// -------------------------------------------------------------------- auth

struct AuthOpts {
    std::string codebook, template_path, probe, metric = "M-LLS";
    double mu = 0.25;
    std::optional<double> threshold;
    std::string cal_templates, cal_originals, cal_fakes;
    std::optional<double> max_fpr;
};

cdp::Score score_one(cdp::MetricId m, const cdp::Template& t, const cdp::PrintedImage& y, const cdp::Codebook& cb,
                     double mu) {
    const auto est = cdp::otsu_majority_estimator()(y, cb.config().k);
    const auto mask = cdp::build_mask(t, cb, mu);
    return cdp::score_probe(m, {t, y, est, cb, mask, cb.config().k});
}

int cmd_auth(const AuthOpts& o, const Globals& g) {
    const auto cb = cdp::io::load_codebook(o.codebook);
    const cdp::MetricId metric = cdp::parse_metric(o.metric);
    const int k = cb.config().k;
    const auto t = cdp::io::load_template(o.template_path);
    const auto y = cdp::io::load_printed(o.probe, k);
    const cdp::Score s = score_one(metric, t, y, cb, o.mu);

    double threshold;
    std::string threshold_source;
    if (o.threshold) {
        threshold = s.orientation() == cdp::Orientation::higher_is_original ? *o.threshold : -*o.threshold;
        threshold_source = "given";
    } else {
        if (o.cal_templates.empty() || o.cal_originals.empty() || o.cal_fakes.empty())
            throw UsageError("auth needs --threshold or all of --cal-templates, --cal-originals, --cal-fakes");
        std::vector<cdp::Template> ts;
        std::vector<cdp::PrintedImage> xs, fs_;
        std::vector<fs::path> files;
        load_pairs(o.cal_templates, o.cal_originals, k, ts, xs, files);
        std::vector<cdp::Template> ts2;
        load_pairs(o.cal_templates, o.cal_fakes, k, ts2, fs_, files);
        std::vector<double> vo(ts.size()), vf(ts.size());
        cdp::parallel_for(ts.size(), g.threads, [&](std::size_t i) {
            vo[i] = score_one(metric, ts[i], xs[i], cb, o.mu).oriented();
            vf[i] = score_one(metric, ts[i], fs_[i], cb, o.mu).oriented();
        });
        const auto rule = o.max_fpr ? cdp::ThresholdRule::tpr_at(*o.max_fpr) : cdp::ThresholdRule::eer();
        threshold = cdp::select_threshold(vo, vf, rule).threshold;
        threshold_source = "calibrated";
    }
    const bool original = s.oriented() >= threshold;
    const double raw_threshold = s.orientation() == cdp::Orientation::higher_is_original ? threshold : -threshold;
    json j{{"metric", o.metric},
           {"score", s.value},
           {"threshold", raw_threshold},
           {"threshold_source", threshold_source},
           {"decision", original ? "original" : "fake"},
           {"fallbacks", s.fallback_count},
           {"degenerate", s.degenerate}};
    emit(g, j,
         o.metric + " score " + cdp::io::fmt_double(s.value) + " threshold " + cdp::io::fmt_double(raw_threshold) +
             " -> " + (original ? "original" : "fake") + "\n");
    return 0;
}

// -------------------------------------------------------------------- eval

struct EvalOpts {
    std::string config, out;
    std::optional<std::size_t> L;
};

int cmd_eval(const EvalOpts& o, const Globals& g) {
    cdp::ExperimentConfig cfg;
    std::vector<fs::path> inputs;
    bool seeds_from_config = false;
    if (!o.config.empty()) {
        const auto kv = cdp::KeyValueConfig::parse(cdp::io::read_file(o.config));
        seeds_from_config = kv.has("seeds");
        try {
            cfg = cdp::experiment_from_config(kv, cfg);
        } catch (const cdp::ParameterError& e) {
            throw UsageError(e.what());
        }
        inputs.push_back(o.config);
    }
    if (g.seed_given && !seeds_from_config) cfg.seeds = {g.seed, g.seed + 1, g.seed + 2};
    if (o.L) cfg.L = *o.L;
    cfg.threads = g.threads;
    try {
        cfg.validate();
    } catch (const cdp::ParameterError& e) {
        throw UsageError(e.what());
    }
    const fs::path dir = resolve_out(o.out, "eval");
    ensure_dir(dir);
    const auto rep = cdp::run_experiment(cfg);
    auto outputs = cdp::io::write_eval_report(dir, rep);
    outputs.push_back(dir / "config.txt");
    cdp::io::write_file(outputs.back(), cdp::to_config_text(cfg));
    write_manifest(dir, "eval", {{"resolved", cdp::to_config_text(cfg)}}, inputs, outputs);

    std::string text = "metric    total AUC\n";
    for (auto m : rep.metrics) {
        char line[64];
        std::snprintf(line, sizeof line, "%-9s %.4f\n", std::string(cdp::to_string(m)).c_str(), rep.total_average.at(m));
        text += line;
    }
    text += "reports in " + dir.string() + "\n";
    emit(g, cdp::io::summary_json(rep), text);
    return 0;
}

// --------------------------------------------------------------- stability

struct StabilityOpts {
    std::vector<std::size_t> sizes{1, 2, 5, 10, 20, 50, 100};
    std::size_t reference = 720;
    std::size_t repeats = 10;
    std::size_t L = 64;
    std::string preset = "A", border = "interior", out;
    int h = 3;
};

int cmd_stability(const StabilityOpts& o, const Globals& g) {
    cdp::StabilityConfig cfg;
    cfg.L = o.L;
    cfg.printer = preset(o.preset);
    cfg.h = o.h;
    cfg.border = cdp::parse_border_mode(o.border);
    cfg.seed = g.seed;
    cfg.threads = g.threads;
    for (auto s : o.sizes)
        if (s == 0 || s > o.reference) throw UsageError("sizes must lie in [1, --reference]");
    const fs::path dir = resolve_out(o.out, "stability");
    ensure_dir(dir);
    const auto curve = cdp::stability_study(o.sizes, o.reference, o.repeats, cfg);
    std::vector<fs::path> outputs{dir / "stability.csv", dir / "stability.svg"};
    cdp::io::write_file(outputs[0], cdp::io::stability_csv(curve));
    cdp::io::write_file(outputs[1], cdp::io::stability_svg(curve));
    write_manifest(dir, "stability",
                   {{"sizes", o.sizes},
                    {"reference", o.reference},
                    {"repeats", o.repeats},
                    {"L", o.L},
                    {"preset", o.preset},
                    {"h", o.h},
                    {"border", o.border},
                    {"seed", g.seed}},
                   {}, outputs);
    json j = json::array();
    for (const auto& pt : curve) j.push_back({{"size", pt.size}, {"mean_d1", pt.mean_d1}, {"std_d1", pt.std_d1}});
    emit(g, j, cdp::io::stability_csv(curve));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Copy detection pattern toolkit: simulate, train and authenticate"};
    app.require_subcommand(1);
    Globals g;
    auto* seed_opt = app.add_option("--seed", g.seed, "base random seed")->capture_default_str();
    app.add_option("--threads", g.threads, "worker threads (0 = all cores)")->capture_default_str();
    app.add_flag("--json", g.json, "machine-readable JSON on stdout");

    GenOpts gen;
    auto* gen_cmd = app.add_subcommand("gen", "generate random binary templates");
    gen_cmd->add_option("--n", gen.n, "number of templates")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--L", gen.L, "symbols per side")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--p", gen.p, "black symbol probability")->check(CLI::Range(0.0, 1.0));
    gen_cmd->add_option("--out", gen.out, "output directory");

    PrintOpts print;
    auto* print_cmd = app.add_subcommand("print", "print and acquire templates through a simulated channel");
    add_channel_opts(print_cmd, print.channel, "--preset");
    print_cmd->add_option("--in", print.in, "template directory")->required()->check(CLI::ExistingDirectory);
    print_cmd->add_option("--out", print.out, "output directory");

    AttackOpts attack;
    auto* attack_cmd = app.add_subcommand("attack", "estimate-and-reprint fakes from acquired originals");
    add_channel_opts(attack_cmd, attack.channel, "--reprint");
    attack_cmd->add_option("--in", attack.in, "directory of acquired originals")->required()->check(CLI::ExistingDirectory);
    attack_cmd->add_option("--in-k", attack.k, "magnification of the inputs (default: from sidecar)");
    attack_cmd->add_option("--out", attack.out, "output directory");

    TrainOpts train;
    auto* train_cmd = app.add_subcommand("train", "learn a neighborhood codebook from (template, original) pairs");
    train_cmd->set_help_flag("--help", "print this help message and exit");
    train_cmd->add_option("--templates", train.templates)->required()->check(CLI::ExistingDirectory);
    train_cmd->add_option("--printed", train.printed)->required()->check(CLI::ExistingDirectory);
    train_cmd->add_option("--h", train.h, "neighborhood size (odd)")->check(CLI::Range(1, 7));
    train_cmd->add_option("--border", train.border)->check(CLI::IsMember({"interior", "white_pad"}));
    train_cmd->add_option("--k", train.k, "magnification (default: from sidecar)");
    train_cmd->add_option("--epsilon", train.epsilon, "query clamp")->check(CLI::Range(0.0, 0.49));
    train_cmd->add_option("--out", train.out, "codebook JSON path");

    AuthOpts auth;
    auto* auth_cmd = app.add_subcommand("auth", "score a probe and decide original vs fake");
    auth_cmd->add_option("--codebook", auth.codebook)->required()->check(CLI::ExistingFile);
    auth_cmd->add_option("--template", auth.template_path)->required()->check(CLI::ExistingFile);
    auth_cmd->add_option("--probe", auth.probe)->required()->check(CLI::ExistingFile);
    auth_cmd->add_option("--metric", auth.metric)
        ->check(CLI::IsMember({"LLS", "MSE", "PCOR", "HAMM", "M-LLS", "M-MSE", "M-PCOR", "M-HAMM"}));
    auth_cmd->add_option("--mu", auth.mu, "attention mask threshold")->check(CLI::Range(0.0, 1.0));
    auth_cmd->add_option("--threshold", auth.threshold, "decision threshold on the raw score");
    auth_cmd->add_option("--cal-templates", auth.cal_templates)->check(CLI::ExistingDirectory);
    auth_cmd->add_option("--cal-originals", auth.cal_originals)->check(CLI::ExistingDirectory);
    auth_cmd->add_option("--cal-fakes", auth.cal_fakes)->check(CLI::ExistingDirectory);
    auth_cmd->add_option("--max-fpr", auth.max_fpr, "calibrate for best TPR at this FPR instead of EER")
        ->check(CLI::Range(0.0, 1.0));

    EvalOpts eval;
    auto* eval_cmd = app.add_subcommand("eval", "run the 2-printer x 4-fake evaluation grid");
    eval_cmd->add_option("--config", eval.config, "key = value experiment config")->check(CLI::ExistingFile);
    eval_cmd->add_option("--L", eval.L, "override template size")->check(CLI::PositiveNumber);
    eval_cmd->add_option("--out", eval.out, "output directory");

    StabilityOpts stab;
    auto* stab_cmd = app.add_subcommand("stability", "codebook variability versus training-set size");
    stab_cmd->set_help_flag("--help", "print this help message and exit");
    stab_cmd->add_option("--sizes", stab.sizes, "training-set sizes")->delimiter(',');
    stab_cmd->add_option("--reference", stab.reference, "pairs in the reference codebook")->check(CLI::PositiveNumber);
    stab_cmd->add_option("--repeats", stab.repeats, "draws per size")->check(CLI::PositiveNumber);
    stab_cmd->add_option("--L", stab.L, "template size")->check(CLI::PositiveNumber);
    stab_cmd->add_option("--preset", stab.preset)->check(CLI::IsMember({"A", "B"}));
    stab_cmd->add_option("--h", stab.h)->check(CLI::Range(1, 7));
    stab_cmd->add_option("--border", stab.border)->check(CLI::IsMember({"interior", "white_pad"}));
    stab_cmd->add_option("--out", stab.out, "output directory");

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    g.seed_given = seed_opt->count() > 0;

    try {
        if (*gen_cmd) return cmd_gen(gen, g);
        if (*print_cmd) return cmd_print(print, g);
        if (*attack_cmd) return cmd_attack(attack, g);
        if (*train_cmd) return cmd_train(train, g);
        if (*auth_cmd) return cmd_auth(auth, g);
        if (*eval_cmd) return cmd_eval(eval, g);
        if (*stab_cmd) return cmd_stability(stab, g);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const cdp::ParameterError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const cdp::DimensionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const cdp::CompatibilityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
