#include "cli.hpp"

#include "snecl/config.hpp"
#include "snecl/error.hpp"
#include "snecl/evaluation.hpp"
#include "snecl/experiment.hpp"
#include "snecl/io.hpp"
#include "snecl/oracles.hpp"
#include "snecl/plot.hpp"
#include "snecl/trainer.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#ifndef SNECL_DEFAULT_PRESET_DIR
#define SNECL_DEFAULT_PRESET_DIR "presets"
#endif

namespace snecl::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Options every experiment subcommand shares.
struct CommonOptions {
    std::string preset;
    std::vector<std::string> configs;
    std::string out;
};

void add_common(CLI::App& sub, CommonOptions& o) {
    sub.add_option("--preset", o.preset, "Preset name (presets/<name>.cfg) or path");
    sub.add_option("--config", o.configs, "Config file; repeat to layer several");
    sub.add_option("--out", o.out, "Output path");
    sub.allow_extras();
}

std::string env_or_empty(const char* name) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string();
}

fs::path resolve_preset(const std::string& name) {
    if (name.find('/') != std::string::npos || name.ends_with(".cfg")) return name;
    std::vector<fs::path> dirs;
    if (const auto dir = env_or_empty("SNECL_PRESET_DIR"); !dir.empty()) dirs.emplace_back(dir);
    dirs.emplace_back(SNECL_DEFAULT_PRESET_DIR);
    for (const auto& dir : dirs) {
        const fs::path p = dir / (name + ".cfg");
        if (fs::exists(p)) return p;
    }
    throw ValidationError("unknown preset '" + name + "' (searched SNECL_PRESET_DIR and " +
                          std::string(SNECL_DEFAULT_PRESET_DIR) + ")");
}

/// `--key value` and `--key=value` pairs left over after the named options.
KeyValues parse_overrides(const std::vector<std::string>& extras) {
    KeyValues kv;
    for (std::size_t i = 0; i < extras.size(); ++i) {
        const std::string& tok = extras[i];
        if (!tok.starts_with("--") || tok.size() == 2) {
            throw UsageError("unexpected argument '" + tok + "' (overrides take the form --key value)");
        }
        const std::string body = tok.substr(2);
        if (const auto eq = body.find('='); eq != std::string::npos) {
            kv.set(body.substr(0, eq), body.substr(eq + 1));
            continue;
        }
        if (i + 1 >= extras.size()) throw UsageError("option '" + tok + "' needs a value");
        kv.set(body, extras[++i]);
    }
    return kv;
}

std::set<std::string> known_keys() {
    std::set<std::string> keys;
    for (const KeyValues& kv : {TrainConfig{}.to_kv(), DataConfig{}.to_kv(), EvalOptions{}.to_kv()}) {
        for (const auto& [k, v] : kv.entries()) keys.insert(k);
    }
    return keys;
}

/// Precedence: preset, then config files in order, then command-line flags.
KeyValues load_config(const CommonOptions& o, const std::vector<std::string>& extras, bool allow_sweep) {
    KeyValues kv;
    if (!o.preset.empty()) kv.merge(KeyValues::parse_file(resolve_preset(o.preset).string()));
    for (const auto& path : o.configs) kv.merge(KeyValues::parse_file(path));
    kv.merge(parse_overrides(extras));
    const auto known = known_keys();
    for (const auto& [k, v] : kv.entries()) {
        if (known.count(k) != 0) continue;
        if (allow_sweep && k.starts_with("sweep.") && known.count(k.substr(6)) != 0) continue;
        throw ValidationError("unknown config key '" + k + "'");
    }
    return kv;
}

/// `--out` when given, else `$SNECL_OUT_DIR/<fallback>`; a usage error when neither exists.
fs::path output_path(const std::string& out, const std::string& fallback, const std::string& what) {
    if (!out.empty()) return out;
    if (const auto dir = env_or_empty("SNECL_OUT_DIR"); !dir.empty()) return fs::path(dir) / fallback;
    throw UsageError("missing output path: pass --out <" + what + "> or set SNECL_OUT_DIR");
}

void ensure_parent(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

/// Writes through a temporary file so readers never see a partial file.
void write_atomic(const fs::path& p, const std::string& content) {
    ensure_parent(p);
    const fs::path tmp = p.string() + ".tmp";
    write_text_file(tmp.string(), content);
    fs::rename(tmp, p);
}

std::string to_text(const KeyValues& kv) {
    std::ostringstream os;
    kv.write(os);
    return os.str();
}

KeyValues effective_config(const KeyValues& kv) {
    KeyValues eff = DataConfig::from_kv(kv).to_kv();
    eff.merge(TrainConfig::from_kv(kv).to_kv());
    eff.merge(EvalOptions::from_kv(kv).to_kv());
    return eff;
}

LabeledDataset read_dataset_file(const std::string& path) {
    std::istringstream is(read_text_file(path));
    return read_dataset_csv(is);
}

// ---- gen --------------------------------------------------------------------

int cmd_gen(const CommonOptions& o, const std::vector<std::string>& extras, const std::string& split,
            std::ostream& out) {
    const KeyValues kv = load_config(o, extras, false);
    const DataConfig data = DataConfig::from_kv(kv);
    const fs::path path = output_path(o.out, "dataset.csv", "file.csv");
    const LabeledDataset ds = split == "test" ? data.test_set() : data.train_set();
    std::ostringstream os;
    write_dataset_csv(os, ds);
    write_atomic(path, os.str());
    out << "dataset = " << path.string() << "\npoints = " << ds.size() << "\ndim = " << ds.dim()
        << "\nclasses = " << data.m << '\n';
    return exit_ok;
}

// ---- train ------------------------------------------------------------------

int cmd_train(const CommonOptions& o, const std::vector<std::string>& extras, const std::string& data_path,
              std::ostream& out) {
    const KeyValues kv = load_config(o, extras, false);
    const TrainConfig cfg = TrainConfig::from_kv(kv);
    cfg.validate();
    const DataConfig data = DataConfig::from_kv(kv);
    const KeyValues eff = effective_config(kv);
    const fs::path dir = output_path(o.out, "train", "directory");

    TrainData td;
    if (!data_path.empty()) {
        if (cfg.augment.kind == AugmentKind::resample) {
            throw ValidationError("augment = resample needs the generating mixture; drop --data or "
                                  "choose augment = gaussian_noise or mixup");
        }
        td.dataset = read_dataset_file(data_path);
    } else {
        td.dataset = data.train_set();
        td.gmm = data.gmm();
    }

    const TrainReport report = train_encoder(td, cfg);

    fs::create_directories(dir);
    std::ostringstream ckpt;
    write_checkpoint(report, ckpt);
    write_atomic(dir / "checkpoint.snecl", ckpt.str());
    std::ostringstream log;
    write_training_log(report, log);
    write_atomic(dir / "train_log.csv", log.str());
    std::ostringstream emb;
    write_embedding_csv(emb, report.encoder.embed(td.dataset.x), td.dataset.labels);
    write_atomic(dir / "embedding.csv", emb.str());
    write_atomic(dir / "config.cfg", to_text(eff));

    const EpochStats& last = report.history.back();
    out << "checkpoint = " << (dir / "checkpoint.snecl").string() << "\nepochs = " << last.epoch
        << "\nfinal_loss = " << format_double(last.loss) << "\nfinal_align = " << format_double(last.align)
        << "\nfinal_uniform = " << format_double(last.uniform) << '\n';
    return exit_ok;
}

// ---- eval -------------------------------------------------------------------

struct NamedCheckpoint {
    std::string name;
    std::string path;
};

NamedCheckpoint parse_checkpoint_arg(const std::string& arg, std::size_t index) {
    const auto eq = arg.find('=');
    if (eq != std::string::npos && eq > 0) return {arg.substr(0, eq), arg.substr(eq + 1)};
    return {"model" + std::to_string(index), arg};
}

int cmd_eval(const CommonOptions& o, const std::vector<std::string>& extras,
             const std::vector<std::string>& checkpoints, const std::string& ref_path,
             const std::string& query_path, std::ostream& out) {
    const KeyValues kv = load_config(o, extras, false);
    const DataConfig data = DataConfig::from_kv(kv);
    const EvalOptions options = EvalOptions::from_kv(kv);

    std::optional<GmmSpec> gmm;
    if (ref_path.empty() && query_path.empty()) gmm = data.gmm();
    const LabeledDataset ref = ref_path.empty() ? data.train_set() : read_dataset_file(ref_path);
    const LabeledDataset query = query_path.empty() ? data.test_set() : read_dataset_file(query_path);

    std::optional<fs::path> dir;
    if (!o.out.empty() || !env_or_empty("SNECL_OUT_DIR").empty()) dir = output_path(o.out, "eval", "directory");

    KeyValues combined;
    const bool prefixed = checkpoints.size() > 1;
    std::vector<std::pair<std::string, Matrix>> heatmaps;
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        const NamedCheckpoint ck = parse_checkpoint_arg(checkpoints[i], i);
        const TrainReport model = load_checkpoint(ck.path);
        const EvalReport report = evaluate_encoder(model.encoder, ref, query, gmm, options);
        const std::string prefix = prefixed ? ck.name + "." : "";
        combined.set(prefix + "checkpoint", ck.path);
        combined.set(prefix + "normalize", to_string(model.encoder.norm));
        combined.set(prefix + "d_z", static_cast<std::int64_t>(model.encoder.output_dim()));
        const KeyValues metrics = report.to_kv();
        for (const auto& [k, v] : metrics.entries()) combined.set(prefix + k, v);
        if (report.heatmap.size() > 0) {
            heatmaps.emplace_back(prefixed ? ck.name + "_heatmap.csv" : "heatmap.csv", report.heatmap);
        }
    }

    const std::string text = to_text(combined);
    out << text;
    if (dir) {
        fs::create_directories(*dir);
        write_atomic(*dir / "eval_report.txt", text);
        for (const auto& [file, h] : heatmaps) {
            std::ostringstream os;
            write_heatmap_csv(os, h);
            write_atomic(*dir / file, os.str());
        }
    }
    return exit_ok;
}

// ---- verify -----------------------------------------------------------------

int cmd_verify(const std::string& suite, const VerifyOptions& options, std::ostream& out) {
    std::vector<std::string> names;
    if (suite == "all") {
        names = verify_suite_names();
    } else {
        names.push_back(suite);
    }
    bool all_passed = true;
    for (const auto& name : names) {
        const SuiteResult r = run_verify_suite(name, options);
        out << (r.passed ? "PASS " : "FAIL ") << r.name << '\n';
        for (const auto& line : r.lines) out << "  " << line << '\n';
        all_passed = all_passed && r.passed;
    }
    return all_passed ? exit_ok : exit_verify_failed;
}

// ---- sweep ------------------------------------------------------------------

std::string csv_cell(const std::string& v) {
    if (v.find_first_of(",\"\n") == std::string::npos) return v;
    std::string q = "\"";
    for (char c : v) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

struct SweepCell {
    std::size_t index = 0;
    KeyValues kv;         // full input config of the cell
    std::string echo_row; // cell index plus the config echo, without metrics
};

const std::vector<std::string> sweep_metrics = {"final_loss", "final_align", "knn_accuracy", "probe_accuracy"};

std::vector<SweepCell> expand_grid(const KeyValues& kv, std::string& header) {
    KeyValues base;
    std::vector<std::pair<std::string, std::vector<std::string>>> axes;
    for (const auto& [k, v] : kv.entries()) {
        if (k.starts_with("sweep.")) {
            auto values = kv.get_list(k);
            if (values.empty()) throw ValidationError("sweep axis '" + k + "' has no values");
            axes.emplace_back(k.substr(6), std::move(values));
        } else {
            base.set(k, v);
        }
    }
    if (axes.empty()) throw ValidationError("sweep needs at least one sweep.<key> = v1,v2,... axis");

    std::size_t total = 1;
    for (const auto& axis : axes) total *= axis.second.size();
    std::vector<SweepCell> cells;
    for (std::size_t i = 0; i < total; ++i) {
        KeyValues cell = base;
        // Last axis varies fastest.
        std::size_t rest = i;
        for (auto it = axes.rbegin(); it != axes.rend(); ++it) {
            cell.set(it->first, it->second[rest % it->second.size()]);
            rest /= it->second.size();
        }
        const KeyValues eff = effective_config(cell);
        TrainConfig::from_kv(cell).validate();
        std::string row = std::to_string(i);
        std::string h = "cell";
        for (const auto& [k, v] : eff.entries()) {
            h += "," + k;
            row += "," + csv_cell(v);
        }
        header = h;
        cells.push_back({i, std::move(cell), std::move(row)});
    }
    for (const auto& m : sweep_metrics) header += "," + m;
    return cells;
}

std::string run_sweep_cell(const SweepCell& cell) {
    const TrainConfig cfg = TrainConfig::from_kv(cell.kv);
    const DataConfig data = DataConfig::from_kv(cell.kv);
    EvalOptions options = EvalOptions::from_kv(cell.kv);
    options.lipschitz_pairs = 0;
    TrainData td{data.train_set(), data.gmm()};
    const TrainReport report = train_encoder(td, cfg);
    const EvalReport eval = evaluate_encoder(report.encoder, td.dataset, data.test_set(), td.gmm, options);
    const EpochStats& last = report.history.back();
    return cell.echo_row + "," + format_double(last.loss) + "," + format_double(last.align) + "," +
           format_double(*eval.knn_accuracy) + "," + format_double(*eval.probe_accuracy);
}

int cmd_sweep(const CommonOptions& o, const std::vector<std::string>& extras, std::size_t jobs,
              std::ostream& out, std::ostream& err) {
    const KeyValues kv = load_config(o, extras, true);
    std::string header;
    const std::vector<SweepCell> cells = expand_grid(kv, header);
    const fs::path dir = output_path(o.out, "sweep", "directory");
    const fs::path cell_dir = dir / "cells";
    fs::create_directories(cell_dir);

    auto cell_path = [&](std::size_t i) {
        char name[32];
        std::snprintf(name, sizeof name, "cell_%04zu.csv", i);
        return cell_dir / name;
    };
    // A cell is complete when its file holds this header and a row with the same config echo.
    auto complete = [&](const SweepCell& c) {
        const fs::path p = cell_path(c.index);
        if (!fs::exists(p)) return false;
        std::istringstream is(read_text_file(p.string()));
        std::string h, row;
        return std::getline(is, h) && h == header && std::getline(is, row) &&
               row.starts_with(c.echo_row + ",");
    };

    std::vector<std::string> status(cells.size());
    std::vector<std::string> errors(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            if (complete(cells[i])) {
                status[i] = "skipped (complete)";
                continue;
            }
            try {
                write_atomic(cell_path(i), header + "\n" + run_sweep_cell(cells[i]) + "\n");
                status[i] = "done";
            } catch (const std::exception& e) {
                errors[i] = e.what();
                status[i] = "failed";
            }
        }
    };
    const std::size_t n_threads = std::clamp<std::size_t>(jobs, 1, cells.size());
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    bool failed = false;
    std::string merged = header + "\n";
    for (std::size_t i = 0; i < cells.size(); ++i) {
        out << "cell " << i << ": " << status[i] << '\n';
        if (!errors[i].empty()) {
            err << "error: cell " << i << ": " << errors[i] << '\n';
            failed = true;
            continue;
        }
        std::istringstream is(read_text_file(cell_path(i).string()));
        std::string h, row;
        std::getline(is, h);
        std::getline(is, row);
        merged += row + "\n";
    }
    if (failed) return exit_failure;
    write_atomic(dir / "sweep.csv", merged);
    out << "sweep = " << (dir / "sweep.csv").string() << "\ncells = " << cells.size() << '\n';
    return exit_ok;
}

// ---- plot -------------------------------------------------------------------

int cmd_plot(const std::string& input, const std::string& kind, const std::string& title,
             const std::string& out_arg, std::ostream& out) {
    const PlotKind k = parse_plot_kind(kind);
    const fs::path path = output_path(out_arg, fs::path(input).stem().string() + ".svg", "file.svg");
    std::istringstream is(read_text_file(input));
    const std::string svg = render_svg(read_csv_table(is), k, title);
    write_atomic(path, svg);
    out << "svg = " << path.string() << '\n';
    return exit_ok;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Contrastive learning as neighbour embedding: experiments and oracles", "snecl"};
    app.require_subcommand(1);

    CommonOptions common;
    std::string split = "train";
    std::string data_path;
    std::string ref_path;
    std::vector<std::string> checkpoints;
    std::string suite;
    VerifyOptions verify;
    std::size_t jobs = 1;
    std::string plot_input;
    std::string plot_kind = "scatter2d";
    std::string plot_title;

    auto* gen = app.add_subcommand("gen", "Sample a mixture dataset to CSV");
    add_common(*gen, common);
    gen->add_option("--split", split, "train or test sample")->check(CLI::IsMember({"train", "test"}));

    auto* train = app.add_subcommand("train", "Train an encoder; write checkpoint, log and embedding");
    add_common(*train, common);
    train->add_option("--data", data_path, "Dataset CSV instead of sampling from data.* keys");

    auto* eval = app.add_subcommand("eval", "Evaluate checkpoints; write a report and heatmaps");
    add_common(*eval, common);
    eval->add_option("--checkpoint", checkpoints, "Checkpoint path, optionally name=path; repeatable")
        ->required();
    eval->add_option("--ref", ref_path, "Reference dataset CSV (KNN/probe training side)");
    eval->add_option("--data", data_path, "Query dataset CSV");

    auto* ver = app.add_subcommand("verify", "Run an oracle suite; exit 4 on any failing check");
    std::vector<std::string> suites = verify_suite_names();
    suites.emplace_back("all");
    ver->add_option("suite", suite, "Suite name or all")->required()->check(CLI::IsMember(suites));
    ver->add_option("--trials", verify.trials, "Trial count (0 keeps the suite default)");
    ver->add_option("--seed", verify.seed, "Random seed");

    auto* sweep = app.add_subcommand("sweep", "Grid sweep over sweep.<key> axes; resumable");
    add_common(*sweep, common);
    sweep->add_option("--jobs", jobs, "Cells trained in parallel")->check(CLI::PositiveNumber);

    auto* plot = app.add_subcommand("plot", "Render a CSV as a standalone SVG");
    plot->add_option("input", plot_input, "Input CSV")->required();
    plot->add_option("--kind", plot_kind, "scatter2d, line or heatmap");
    plot->add_option("--title", plot_title, "Title text");
    plot->add_option("--out", common.out, "Output SVG path");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*gen) return cmd_gen(common, gen->remaining(), split, out);
        if (*train) return cmd_train(common, train->remaining(), data_path, out);
        if (*eval) return cmd_eval(common, eval->remaining(), checkpoints, ref_path, data_path, out);
        if (*ver) return cmd_verify(suite, verify, out);
        if (*sweep) return cmd_sweep(common, sweep->remaining(), jobs, out, err);
        if (*plot) return cmd_plot(plot_input, plot_kind, plot_title, common.out, out);
    } catch (const UsageError& e) {
        err << "error[usage]: " << e.what() << '\n';
        return exit_usage;
    } catch (const ValidationError& e) {
        err << "error[validation]: " << e.what() << '\n';
        return exit_validation;
    } catch (const FormatError& e) {
        err << "error[format]: " << e.what() << '\n';
        return exit_failure;
    } catch (const NumericError& e) {
        err << "error[numeric]: " << e.what() << '\n';
        return exit_failure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_failure;
    }
    return exit_usage;
}

} // namespace snecl::cli
