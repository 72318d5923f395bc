#include "snecl/embedopt.hpp"
#include "snecl/error.hpp"
#include "snecl/experiment.hpp"
#include "snecl/losses.hpp"
#include "snecl/oracles.hpp"
#include "snecl/trainer.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

namespace py = pybind11;
using namespace snecl;

namespace {

// Python dict -> flat key/value config. bool values become true/false,
// lists become comma-separated text.
KeyValues to_kv(const py::dict& config) {
    KeyValues kv;
    for (const auto& [k, v] : config) {
        const std::string key = py::str(k);
        if (py::isinstance<py::bool_>(v)) {
            kv.set(key, std::string(v.cast<bool>() ? "true" : "false"));
        } else if (py::isinstance<py::list>(v) || py::isinstance<py::tuple>(v)) {
            std::string joined;
            for (const auto& item : v) joined += (joined.empty() ? "" : ",") + std::string(py::str(item));
            kv.set(key, joined);
        } else {
            kv.set(key, std::string(py::str(v)));
        }
    }
    return kv;
}

py::dict to_dict(const KeyValues& kv) {
    py::dict out;
    for (const auto& [k, v] : kv.entries()) out[py::str(k)] = v;
    return out;
}

py::tuple dataset_tuple(const LabeledDataset& d) {
    return py::make_tuple(d.x, d.labels);
}

LabeledDataset dataset_from(const Matrix& x, const std::vector<int>& labels) {
    LabeledDataset d{x, labels};
    d.validate();
    return d;
}

} // namespace

PYBIND11_MODULE(_snecl, m) {
    m.doc() = "Contrastive learning as neighbour embedding: losses, training and evaluation";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_IOError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    m.def(
        "sample_gmm",
        [](const py::dict& config, const std::string& split) {
            const DataConfig d = DataConfig::from_kv(to_kv(config));
            if (split == "train") return dataset_tuple(d.train_set());
            if (split == "test") return dataset_tuple(d.test_set());
            throw ValidationError("split must be train or test, got '" + split + "'");
        },
        py::arg("config") = py::dict(), py::arg("split") = "train",
        "Sample (x, labels) from the mixture described by data.* keys.");

    py::class_<TrainReport>(m, "Model")
        .def("embed", [](const TrainReport& r, const Matrix& x) { return r.encoder.embed(x); }, py::arg("x"))
        .def_property_readonly("config", [](const TrainReport& r) { return to_dict(r.config.to_kv()); })
        .def_property_readonly("history",
                               [](const TrainReport& r) {
                                   py::list rows;
                                   for (const EpochStats& e : r.history) {
                                       py::dict row;
                                       row["epoch"] = e.epoch;
                                       row["loss"] = e.loss;
                                       row["align"] = e.align;
                                       row["uniform"] = e.uniform;
                                       rows.append(row);
                                   }
                                   return rows;
                               })
        .def("save", [](const TrainReport& r, const std::string& path) { save_checkpoint(r, path); },
             py::arg("path"));

    m.def("load", &load_checkpoint, py::arg("path"), "Load a checkpoint written by Model.save or the CLI.");

    m.def(
        "train",
        [](const py::dict& config) {
            const KeyValues kv = to_kv(config);
            const DataConfig d = DataConfig::from_kv(kv);
            const TrainConfig c = TrainConfig::from_kv(kv);
            py::gil_scoped_release release;
            return train_encoder(TrainData{d.train_set(), d.gmm()}, c);
        },
        py::arg("config") = py::dict(), "Train on the data.* mixture with the given config keys.");

    m.def(
        "train_on",
        [](const Matrix& x, const std::vector<int>& labels, const py::dict& config) {
            const TrainConfig c = TrainConfig::from_kv(to_kv(config));
            if (c.augment.kind == AugmentKind::resample) {
                throw ValidationError("augment = resample needs the mixture; use train() or another augmentation");
            }
            const LabeledDataset d = dataset_from(x, labels);
            py::gil_scoped_release release;
            return train_encoder(TrainData{d, std::nullopt}, c);
        },
        py::arg("x"), py::arg("labels"), py::arg("config") = py::dict(),
        "Train on a given dataset (augment must not be resample).");

    m.def(
        "evaluate",
        [](const TrainReport& model, const py::dict& config) {
            const KeyValues kv = to_kv(config);
            const DataConfig d = DataConfig::from_kv(kv);
            const EvalOptions o = EvalOptions::from_kv(kv);
            const EvalReport rep = evaluate_encoder(model.encoder, d.train_set(), d.test_set(), d.gmm(), o);
            py::dict out = to_dict(rep.to_kv());
            out["heatmap"] = rep.heatmap;
            return out;
        },
        py::arg("model"), py::arg("config") = py::dict(),
        "Evaluate a model on the data.* mixture; returns the report as a dict.");

    m.def("verify_suites", &verify_suite_names);
    m.def(
        "verify",
        [](const std::string& suite, std::uint64_t seed, std::size_t trials) {
            const SuiteResult r = run_verify_suite(suite, VerifyOptions{seed, trials});
            return py::make_tuple(r.passed, r.lines);
        },
        py::arg("suite"), py::arg("seed") = 0, py::arg("trials") = 0,
        "Run one oracle suite; returns (passed, detail lines).");

    m.def(
        "infonce",
        [](const Matrix& anchors, const Matrix& views, double tau, const std::string& sim) {
            return infonce(anchors, views, tau, parse_similarity(sim));
        },
        py::arg("anchors"), py::arg("views"), py::arg("tau") = 1.0, py::arg("sim") = "cosine");

    m.def("t_simclr_loss", &t_simclr_loss, py::arg("anchors"), py::arg("views"), py::arg("t_df") = 5.0,
          py::arg("tau") = 1.0);

    m.def(
        "positive_pair_kl",
        [](const Matrix& anchors, const Matrix& views, double tau) {
            return kl_match(p_positive_pairs(static_cast<std::size_t>(anchors.rows())),
                            QBuilder::gaussian(Similarity::cosine, tau).build(interleave_pairs(anchors, views)));
        },
        py::arg("anchors"), py::arg("views"), py::arg("tau") = 1.0,
        "KL(P~ || Q~) for the positive-pair P and a cosine Gaussian Q on interleaved features.");

    m.def("tammes", &tammes_closed_form, py::arg("n"), py::arg("d_z"),
          "Closed-form optimal n points on the unit sphere in R^d_z (polygon or simplex).");
}
