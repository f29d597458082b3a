// Python bindings: weight maps, oracle weights, data generation and runs.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ctxens/config.hpp"
#include "ctxens/constraints.hpp"
#include "ctxens/datagen.hpp"
#include "ctxens/error.hpp"
#include "ctxens/oracle.hpp"
#include "ctxens/pipeline.hpp"
#include "ctxens/verify.hpp"

namespace py = pybind11;
using namespace ctxens;

namespace {

ConstraintKind kind_of(const std::string& name) { return parse_constraint(name); }

py::dict result_dict(const pipeline::ExperimentResult& r) {
    std::vector<std::size_t> t;
    std::vector<double> y, ens, curve;
    for (const auto& rec : r.records) {
        t.push_back(rec.t);
        y.push_back(rec.y);
        ens.push_back(rec.ensemble);
    }
    for (const auto& p : r.curve.points) curve.push_back(p.value);
    py::dict d;
    d["model_names"] = r.model_names;
    d["t"] = t;
    d["y"] = y;
    d["ensemble"] = ens;
    d["curve"] = curve;
    d["final_cumulative_error"] = r.final_cumulative_error;
    d["base_final_errors"] = r.base_final_errors;
    d["config_hash"] = r.config_hash;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Context-aware ensemble weighting";

    static py::exception<Error> exc(m, "CtxensError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            exc(e.what());
        }
    });

    m.def("transform", [](const Vector& p, const std::string& kind) { return transform(p, kind_of(kind)).values(); },
          py::arg("p"), py::arg("kind"));

    m.def(
        "optimal_weights",
        [](const Matrix& c, const Vector& a, double sigma2, const std::string& kind) {
            const ConditionalStats stats(c, a, sigma2);
            switch (kind_of(kind)) {
                case ConstraintKind::Unconstrained: return optimal_unconstrained(stats).values();
                case ConstraintKind::Affine: return optimal_affine(stats).values();
                case ConstraintKind::Convex: break;
            }
            return optimal_convex(stats).values();
        },
        py::arg("c"), py::arg("a"), py::arg("sigma2"), py::arg("kind"));

    m.def(
        "generate",
        [](const std::string& mix, std::size_t length, std::uint64_t seed, double noise_sigma) {
            datagen::SyntheticSpec spec;
            spec.mix = datagen::parse_mix(mix);
            spec.length = length;
            spec.seed = seed;
            spec.noise_sigma = noise_sigma;
            const auto ds = datagen::generate(spec);
            py::dict d;
            d["y"] = ds.frame.values();
            for (std::size_t j = 0; j < ds.frame.side_info().names.size(); ++j) {
                d[py::str(ds.frame.side_info().names[j])] =
                    Vector(ds.frame.side_info().values.col(static_cast<Eigen::Index>(j)));
            }
            return d;
        },
        py::arg("mix"), py::arg("length") = 730, py::arg("seed") = 0, py::arg("noise_sigma") = 1.0);

    m.def(
        "run_config", [](const std::string& path) { return result_dict(pipeline::run_experiment(config::parse_file(path))); },
        py::arg("path"));
    m.def(
        "run_config_text", [](const std::string& text) { return result_dict(pipeline::run_experiment(config::parse(text))); },
        py::arg("text"));

    m.def(
        "verify",
        [](const std::string& suite, std::uint64_t seed) { return verify::run_suite(suite, seed).passed(); },
        py::arg("suite"), py::arg("seed") = 0);
}
