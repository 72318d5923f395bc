// Acceptance runner: one PASS/FAIL line per criterion, exit 1 if any fails.
#include "CLI11.hpp"

#include "cli.hpp"
#include "snecl/embedopt.hpp"
#include "snecl/experiment.hpp"
#include "snecl/io.hpp"
#include "snecl/losses.hpp"
#include "snecl/oracles.hpp"
#include "snecl/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

namespace fs = std::filesystem;
using namespace snecl;

namespace {

constexpr std::uint64_t seed_count = 10;

struct Verdict {
    bool passed = false;
    std::string summary;
    std::vector<std::string> details;
};

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

KeyValues preset(const std::string& name) {
    return KeyValues::parse_file(std::string(SNECL_PRESET_DIR) + "/" + name + ".cfg");
}

// A preset with both the training and the data seed replaced by `seed`.
struct Run {
    DataConfig data;
    TrainConfig train;
    EvalOptions eval;
};

Run seeded(const std::string& name, std::uint64_t seed) {
    KeyValues kv = preset(name);
    kv.set("seed", static_cast<std::int64_t>(seed));
    kv.set("data.seed", static_cast<std::int64_t>(seed));
    Run r{DataConfig::from_kv(kv), TrainConfig::from_kv(kv), EvalOptions::from_kv(kv)};
    r.eval.lipschitz_pairs = 0;
    return r;
}

struct Outcome {
    TrainReport train;
    EvalReport eval;
    LabeledDataset train_set;
};

Outcome train_and_eval(const Run& r) {
    const GmmSpec g = r.data.gmm();
    const LabeledDataset train_set = r.data.train_set();
    TrainReport rep = train_encoder(TrainData{train_set, g}, r.train);
    EvalReport ev = evaluate_encoder(rep.encoder, train_set, r.data.test_set(), g, r.eval);
    return {std::move(rep), std::move(ev), train_set};
}

std::string suite_details(const std::string& suite, Verdict& v) {
    const SuiteResult res = run_verify_suite(suite);
    v.passed = res.passed;
    v.details = res.lines;
    return suite;
}

Verdict criterion_equivalence() {
    Verdict v;
    suite_details("equivalence", v);
    v.summary = "|kl_match - InfoNCE - log(1/2n)| < 1e-10 for n in {2, 8, 64}, 10 draws each";
    return v;
}

Verdict criterion_gradients() {
    Verdict v;
    suite_details("gradients", v);
    v.summary = "central differences (step 1e-4) within relative error 1e-5, 5 instances per loss";
    return v;
}

Verdict criterion_theorem1() {
    Verdict v;
    suite_details("theorem1", v);
    v.summary = "argmin sets identical in 100/100 instances (n in {3,4,5}), identity within 1e-9";
    return v;
}

Verdict criterion_rearrangement() {
    Verdict v;
    suite_details("rearrangement", v);
    v.summary = "identity attains both minima in 50/50 instances (m in {3,4})";
    return v;
}

Verdict criterion_ce() {
    Verdict v;
    suite_details("ce_decomposition", v);
    v.summary = "cross-entropy residual spread < 1e-8 over 5 feature assignments, 32 cells";
    return v;
}

Verdict criterion_tammes() {
    Verdict v;
    suite_details("tammes", v);
    v.summary = "4 pairs on S^2: class-mean cosines within 1e-2 of -1/3; closed forms exact to 1e-12";
    return v;
}

Verdict criterion_fig3b() {
    Verdict v;
    int good = 0;
    for (std::uint64_t s = 1; s <= seed_count; ++s) {
        const Outcome o = train_and_eval(seeded("fig3b", s));
        const Matrix z = o.train.encoder.embed(o.train_set.x);
        const auto gaps = circular_gaps_deg(normalize_rows(class_means(z, o.train_set.labels)));
        double worst_gap = 0.0;
        for (double g : gaps) worst_gap = std::max(worst_gap, std::abs(g - 72.0));
        const bool ok = *o.eval.align >= 0.99 && worst_gap <= 5.0 && gaps.size() == 5;
        good += ok;
        std::string line = std::string(ok ? "PASS" : "FAIL") + " seed " + std::to_string(s) +
                           ": align=" + fmt(*o.eval.align, 6) + " gaps(deg)=";
        for (std::size_t i = 0; i < gaps.size(); ++i) line += (i ? "," : "") + fmt(gaps[i]);
        v.details.push_back(line);
    }
    v.passed = good >= 8;
    v.summary = "spherical SimCLR on the pentagon: align >= 0.99 and gaps 72 +- 5 deg in " +
                std::to_string(good) + "/10 seeds (need >= 8)";
    return v;
}

Verdict criterion_ood() {
    Verdict v;
    int good = 0;
    double sphere_sum = 0, euclid_sum = 0, sphere_rt = 0, euclid_rt = 0;
    for (std::uint64_t s = 1; s <= seed_count; ++s) {
        const Outcome sphere = train_and_eval(seeded("fig3d", s));
        const Outcome euclid = train_and_eval(seeded("fig3e", s));
        const double a = *sphere.eval.ood_probe_accuracy;
        const double b = *euclid.eval.ood_probe_accuracy;
        const bool ok = b >= 0.95 && a <= 0.70;
        good += ok;
        sphere_sum += a;
        euclid_sum += b;
        sphere_rt += *sphere.eval.ood_retrained_probe_accuracy;
        euclid_rt += *euclid.eval.ood_retrained_probe_accuracy;
        v.details.push_back(std::string(ok ? "PASS" : "FAIL") + " seed " + std::to_string(s) +
                            ": shifted probe sphere=" + fmt(a) + " euclidean=" + fmt(b) +
                            " (retrained probe: sphere=" + fmt(*sphere.eval.ood_retrained_probe_accuracy) +
                            " euclidean=" + fmt(*euclid.eval.ood_retrained_probe_accuracy) + ")");
    }
    const double n = static_cast<double>(seed_count);
    v.details.push_back("mean shifted probe: sphere=" + fmt(sphere_sum / n) + " euclidean=" + fmt(euclid_sum / n) +
                        "; mean retrained probe: sphere=" + fmt(sphere_rt / n) + " euclidean=" + fmt(euclid_rt / n));
    v.passed = good >= 8;
    v.summary = "shift (1,1): euclidean probe >= 0.95 and spherical probe <= 0.70 in " + std::to_string(good) +
                "/10 seeds (need >= 8)";
    return v;
}

Verdict criterion_order() {
    Verdict v;
    int good = 0;
    for (std::uint64_t s = 1; s <= seed_count; ++s) {
        const Outcome o = train_and_eval(seeded("order-d1m4", s));
        const OrderVerdict ov = *o.eval.order;
        const bool ok = ov != OrderVerdict::mismatch;
        good += ok;
        v.details.push_back(std::string(ok ? "PASS" : "FAIL") + " seed " + std::to_string(s) + ": " + to_string(ov));
    }
    v.passed = good >= 9;
    v.summary = "1-D line mixture, m=4: order match or reverse_match in " + std::to_string(good) +
                "/10 seeds (need >= 9)";
    return v;
}

Verdict criterion_weighted() {
    Verdict v;
    Rng rng(10);
    double worst = 0.0;
    for (int t = 0; t < 10; ++t) {
        Matrix a(16, 4), b(16, 4);
        for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
        for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rng.normal();
        std::vector<double> ious;
        for (int i = 0; i < 16; ++i) {
            const auto [c1, c2] = sample_crop_pair(rng);
            ious.push_back(iou(c1, c2));
        }
        const auto w = p_weighted_pairs(ious, 1e6);
        worst = std::max(worst, std::abs(infonce_weighted(a, b, w, 0.5, Similarity::cosine) -
                                         infonce(a, b, 0.5, Similarity::cosine)));
    }
    std::vector<int> hist(10, 0);
    double sum = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto [c1, c2] = sample_crop_pair(rng);
        const double u = iou(c1, c2);
        sum += u;
        ++hist[static_cast<std::size_t>(std::min(9.0, std::floor(u * 10.0)))];
    }
    const double mean = sum / 1000.0;
    const bool weight_ok = worst < 1e-6;
    const bool iou_ok = mean >= 0.4 && mean <= 0.6;
    v.details.push_back(std::string(weight_ok ? "PASS" : "FAIL") +
                        " tau_w=1e6: max |weighted - unweighted| = " + fmt(worst, 3));
    std::string h;
    for (std::size_t i = 0; i < hist.size(); ++i) h += (i ? "," : "") + std::to_string(hist[i]);
    v.details.push_back(std::string(iou_ok ? "PASS" : "FAIL") + " IoU of 1000 crop pairs: mean=" + fmt(mean) +
                        " histogram(0.1 bins)=" + h);
    v.passed = weight_ok && iou_ok;
    v.summary = "tau_w -> 1e6 matches the unweighted loss within 1e-6; crop IoU mean in [0.4, 0.6]";
    return v;
}

Verdict criterion_tsimclr() {
    Verdict v;
    int good = 0;
    for (std::uint64_t s = 1; s <= seed_count; ++s) {
        const double t = *train_and_eval(seeded("gmm8-tsimclr", s)).eval.knn_accuracy;
        const double c = *train_and_eval(seeded("gmm8-simclr", s)).eval.knn_accuracy;
        const bool ok = t >= c;
        good += ok;
        v.details.push_back(std::string(ok ? "PASS" : "FAIL") + " seed " + std::to_string(s) +
                            ": knn t-SimCLR=" + fmt(t) + " SimCLR=" + fmt(c));
    }
    v.passed = good >= 8;
    v.summary = "d_z=1 on an 8-D mixture: t-SimCLR KNN >= SimCLR KNN in " + std::to_string(good) +
                "/10 seeds (need >= 8)";
    return v;
}

// Runs the CLI on every preset into `dir`; returns the CSV files written.
std::vector<fs::path> run_presets(const fs::path& dir, std::vector<std::string>& errors) {
    std::vector<fs::path> names;
    for (const auto& e : fs::directory_iterator(SNECL_PRESET_DIR)) {
        if (e.path().extension() == ".cfg") names.push_back(e.path());
    }
    std::sort(names.begin(), names.end());
    for (const fs::path& p : names) {
        const std::string name = p.stem().string();
        const KeyValues kv = KeyValues::parse_file(p.string());
        bool sweep = false;
        for (const auto& [k, _] : kv.entries()) sweep = sweep || k.rfind("sweep.", 0) == 0;
        const fs::path out = dir / name;
        std::vector<std::vector<std::string>> cmds;
        if (sweep) {
            cmds.push_back({"sweep", "--preset", name, "--out", out.string()});
        } else if (kv.has("loss")) {
            cmds.push_back({"train", "--preset", name, "--out", (out / "train").string()});
            cmds.push_back({"eval", "--preset", name, "--checkpoint", (out / "train/checkpoint.snecl").string(),
                            "--out", (out / "eval").string()});
        } else {
            cmds.push_back({"gen", "--preset", name, "--out", (out / "train.csv").string()});
            cmds.push_back({"gen", "--preset", name, "--split", "test", "--out", (out / "test.csv").string()});
        }
        for (const auto& cmd : cmds) {
            std::ostringstream sink, err;
            if (cli::run(cmd, sink, err) != cli::exit_ok) errors.push_back(name + ": " + err.str());
        }
    }
    std::vector<fs::path> csvs;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.path().extension() == ".csv") csvs.push_back(fs::relative(e.path(), dir));
    }
    std::sort(csvs.begin(), csvs.end());
    return csvs;
}

Verdict criterion_determinism() {
    Verdict v;
    const fs::path root = fs::temp_directory_path() / ("snecl_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    std::vector<std::string> errors;
    const auto first = run_presets(root / "a", errors);
    const auto second = run_presets(root / "b", errors);
    std::size_t identical = 0;
    for (const fs::path& rel : first) {
        const bool same = fs::exists(root / "b" / rel) &&
                          read_text_file((root / "a" / rel).string()) == read_text_file((root / "b" / rel).string());
        identical += same;
        if (!same) v.details.push_back("FAIL differs: " + rel.string());
    }
    for (const auto& e : errors) v.details.push_back("FAIL run error: " + e);
    v.details.push_back("compared " + std::to_string(first.size()) + " CSV files, " + std::to_string(identical) +
                        " byte-identical");
    v.passed = errors.empty() && !first.empty() && first == second && identical == first.size();
    v.summary = "every preset run twice gives byte-identical CSV outputs";
    fs::remove_all(root);
    return v;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"snecl acceptance criteria"};
    std::vector<int> selected;
    bool verbose = true;
    app.add_option("--criterion", selected, "Criterion number (1-12); repeatable, default all")
        ->check(CLI::Range(1, 12));
    app.add_flag("!--quiet", verbose, "Only print the verdict lines");
    CLI11_PARSE(app, argc, argv);

    const std::map<int, std::function<Verdict()>> criteria{
        {1, criterion_equivalence}, {2, criterion_gradients}, {3, criterion_theorem1}, {4, criterion_rearrangement},
        {5, criterion_ce},          {6, criterion_tammes},    {7, criterion_fig3b},    {8, criterion_ood},
        {9, criterion_order},       {10, criterion_weighted}, {11, criterion_tsimclr}, {12, criterion_determinism},
    };
    if (selected.empty()) {
        for (const auto& [k, _] : criteria) selected.push_back(k);
    }
    bool all = true;
    for (int k : selected) {
        Verdict v;
        try {
            v = criteria.at(k)();
        } catch (const std::exception& e) {
            v.passed = false;
            v.summary = std::string("error: ") + e.what();
        }
        all = all && v.passed;
        std::cout << (v.passed ? "PASS" : "FAIL") << " criterion " << k << ": " << v.summary << '\n';
        if (verbose) {
            for (const auto& d : v.details) std::cout << "    " << d << '\n';
        }
        std::cout.flush();
    }
    return all ? 0 : 1;
}
