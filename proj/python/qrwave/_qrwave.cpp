#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <vector>

#include "qrwave/errors.hpp"
#include "qrwave/experiments.hpp"
#include "qrwave/operators.hpp"
#include "qrwave/solvers.hpp"

namespace py = pybind11;
using namespace qrwave;

namespace {

// pybind11 holders cannot point to const; converts to BasisPtr on use
using PyBasis = std::shared_ptr<EigenBasis>;
using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a) {
    if (a.ndim() != 1) throw std::invalid_argument("expected a 1-d array");
    return {a.data(), a.data() + a.size()};
}

Array to_array(std::span<const double> v) {
    Array out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

SpectralField field(const BasisPtr& basis, const Array& coeffs) { return SpectralField(basis, to_vector(coeffs)); }

// (len(times), n_modes) matrix
Array stack(const std::vector<SpectralField>& fields, std::size_t n) {
    Array out({static_cast<py::ssize_t>(fields.size()), static_cast<py::ssize_t>(n)});
    double* dst = out.mutable_data();
    for (const auto& f : fields) {
        std::copy(f.coeffs().begin(), f.coeffs().end(), dst);
        dst += n;
    }
    return out;
}

py::dict trajectory_dict(const Trajectory& t) {
    py::dict d;
    d["times"] = to_array(t.times);
    d["values"] = stack(t.values, t.basis->size());
    d["dvalues"] = stack(t.dvalues, t.basis->size());
    return d;
}

TerminalData terminal(const BasisPtr& basis, const Array& f0, const Array& f1, double T) {
    TerminalData td{field(basis, f0), field(basis, f1), T};
    td.validate();
    return td;
}

py::dict sweep_dict(const SweepReport& r) {
    py::list rows;
    for (const auto& row : r.rows) {
        py::dict d;
        d["eps"] = row.eps;
        d["gamma"] = row.gamma;
        d["t"] = row.t;
        d["err_l2"] = row.err_l2;
        d["bound1"] = row.bound1;
        d["ratio1"] = row.ratio1;
        d["err_grad"] = row.err_grad;
        d["bound2"] = row.bound2;
        d["ratio2"] = row.ratio2;
        d["err_dt_plus_int"] = row.err_dt_plus_int;
        d["bound3"] = row.bound3;
        d["ratio3"] = row.ratio3;
        rows.append(d);
    }
    py::list cells;
    for (const auto& c : r.cells) {
        py::dict d;
        d["t"] = c.t;
        d["metric"] = c.metric;
        d["fitted_slope"] = c.fitted_slope;
        d["predicted_slope"] = c.predicted_slope;
        d["c_hat"] = c.c_hat;
        d["spread"] = c.spread;
        cells.append(d);
    }
    py::dict out;
    out["kind"] = r.kind == SweepKind::holder ? "holder" : "weak";
    out["eps_used"] = r.eps_used;
    out["rows"] = rows;
    out["cells"] = cells;
    out["skipped"] = r.skipped;
    out["M"] = r.M;
    return out;
}

}  // namespace

PYBIND11_MODULE(_qrwave, m) {
    m.doc() = "Spectral solvers for the regularized backward damped wave equation";

    py::register_exception<AssumptionViolation>(m, "AssumptionViolation", PyExc_ValueError);
    py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    py::class_<EigenBasis, PyBasis>(m, "Basis")
        .def(py::init([](double length, std::size_t n) { return std::make_shared<EigenBasis>(length, n); }),
             py::arg("length"), py::arg("n_modes"))
        .def_property_readonly("length", &EigenBasis::length)
        .def_property_readonly("eigenvalues", [](const EigenBasis& b) { return to_array(b.eigenvalues()); })
        .def("__len__", &EigenBasis::size)
        .def("synthesize", [](const PyBasis& b, const Array& coeffs, const Array& x) {
            const auto grid = to_vector(x);
            return to_array(synthesize(field(b, coeffs), grid));
        }, py::arg("coeffs"), py::arg("x"));

    py::class_<RegConfig>(m, "RegConfig")
        .def_static("with_gamma", &RegConfig::with_gamma, py::arg("gamma"), py::arg("eps") = 0.0,
                    py::arg("C0") = 2.0, py::arg("C1") = 1.0, py::arg("K") = 1.0)
        .def_static("holder_schedule", &RegConfig::holder_schedule, py::arg("eps"), py::arg("C0") = 2.0,
                    py::arg("C1") = 1.0, py::arg("K") = 1.0)
        .def_readonly("eps", &RegConfig::eps)
        .def_readonly("gamma", &RegConfig::gamma)
        .def_readonly("cutoff", &RegConfig::cutoff)
        .def_readonly("rho", &RegConfig::rho)
        .def_readonly("C0", &RegConfig::C0)
        .def_readonly("C1", &RegConfig::C1)
        .def_readonly("K", &RegConfig::K)
        .def("__repr__", [](const RegConfig& c) {
            return "RegConfig(gamma=" + std::to_string(c.gamma) + ", cutoff=" + std::to_string(c.cutoff) +
                   ", rho=" + std::to_string(c.rho) + ")";
        });

    m.def("norm_l2", [](const PyBasis& b, const Array& c) { return norm_l2(field(b, c)); });
    m.def("norm_h1", [](const PyBasis& b, const Array& c) { return norm_h1(field(b, c)); });
    m.def("norm_grad", [](const PyBasis& b, const Array& c) { return norm_grad(field(b, c)); });
    m.def("norm_gevrey", [](const PyBasis& b, const Array& c, double sigma, double alpha) {
        return norm_gevrey(field(b, c), sigma, alpha);
    }, py::arg("basis"), py::arg("coeffs"), py::arg("sigma") = 1.0, py::arg("alpha") = 1.0);

    m.def("apply_Q", [](const PyBasis& b, const Array& c, const RegConfig& cfg) {
        return to_array(apply_Q(field(b, c), cfg).coeffs());
    });
    m.def("apply_P", [](const PyBasis& b, const Array& c, const RegConfig& cfg) {
        return to_array(apply_P(field(b, c), cfg).coeffs());
    });

    m.def("forward_solve", [](const PyBasis& b, const Array& u0, const Array& u1, double T, const Array& times) {
        const auto grid = to_vector(times);
        return trajectory_dict(forward_solve(field(b, u0), field(b, u1), T, grid));
    }, py::arg("basis"), py::arg("u0"), py::arg("u1"), py::arg("T"), py::arg("times"));

    m.def("naive_backward_solve", [](const PyBasis& b, const Array& f0, const Array& f1, double T,
                                     const Array& times) {
        const auto grid = to_vector(times);
        auto r = naive_backward_solve(terminal(b, f0, f1, T), grid);
        py::dict d = trajectory_dict(r.trajectory);
        d["valid"] = std::vector<bool>(r.valid.begin(), r.valid.end());
        d["overflow_modes"] = r.overflow_modes;
        return d;
    }, py::arg("basis"), py::arg("f0"), py::arg("f1"), py::arg("T"), py::arg("times"));

    m.def("regularized_backward_solve", [](const PyBasis& b, const Array& f0, const Array& f1, double T,
                                           const RegConfig& cfg, const Array& times) {
        const auto grid = to_vector(times);
        return trajectory_dict(regularized_backward_solve(terminal(b, f0, f1, T), cfg, grid));
    }, py::arg("basis"), py::arg("f0"), py::arg("f1"), py::arg("T"), py::arg("cfg"), py::arg("times"));

    m.def("galerkin_step_solve", [](const PyBasis& b, const Array& f0, const Array& f1, double T,
                                    const RegConfig& cfg, double dt, const Array& times) {
        const auto grid = to_vector(times);
        return trajectory_dict(galerkin_step_solve(terminal(b, f0, f1, T), cfg, cfg.rho, dt, grid));
    }, py::arg("basis"), py::arg("f0"), py::arg("f1"), py::arg("T"), py::arg("cfg"), py::arg("dt"),
       py::arg("times"));

    m.def("picard_solve", [](const PyBasis& b, const Array& f0, const Array& f1, double T, const RegConfig& cfg,
                             std::size_t n_modes, const Array& times, std::size_t iterations, std::size_t substeps) {
        const auto grid = to_vector(times);
        PicardOptions opts;
        opts.iterations = iterations;
        opts.substeps = substeps;
        PicardStats stats;
        py::dict d = trajectory_dict(picard_solve(terminal(b, f0, f1, T), cfg, cfg.rho, n_modes, grid, opts, &stats));
        d["windows"] = stats.windows;
        d["max_iterations_used"] = stats.max_iterations_used;
        d["last_difference"] = stats.last_difference;
        return d;
    }, py::arg("basis"), py::arg("f0"), py::arg("f1"), py::arg("T"), py::arg("cfg"), py::arg("n_modes"),
       py::arg("times"), py::arg("iterations") = 200, py::arg("substeps") = 128);

    m.def("convergence_sweep", [](double length, std::size_t n_modes, const std::string& truth,
                                  const std::vector<double>& eps_grid, const std::vector<double>& times,
                                  double T, std::size_t time_count, bool noise, bool weak, std::uint64_t seed,
                                  unsigned threads) {
        SweepConfig c;
        c.basis = build_basis(length, n_modes);
        if (truth == "gevrey") {
            c.truth.kind = TruthKind::gevrey_profile;
            c.truth.velocity = TruthVelocity::decaying;
        } else if (truth != "explicit") {
            throw std::invalid_argument("truth must be 'explicit' or 'gevrey'");
        }
        c.eps_grid = eps_grid;
        c.times_of_interest = times;
        c.T = T;
        c.time_count = time_count;
        c.noise = noise;
        c.seed = seed;
        c.threads = threads;
        py::gil_scoped_release release;
        SweepReport r = weak ? weak_noise_experiment(c) : convergence_sweep(c);
        py::gil_scoped_acquire acquire;
        return sweep_dict(r);
    }, py::arg("length"), py::arg("n_modes"), py::arg("truth") = "gevrey",
       py::arg("eps_grid") = std::vector<double>{1e-2, 1e-3, 1e-4, 1e-5, 1e-6},
       py::arg("times") = std::vector<double>{0.0, 0.25, 0.45}, py::arg("T") = 0.5, py::arg("time_count") = 201,
       py::arg("noise") = true, py::arg("weak") = false, py::arg("seed") = 1, py::arg("threads") = 1);

    m.def("illposedness_demo", [](double length, std::size_t mode, double T, double eps, const RegConfig& cfg) {
        auto r = illposedness_demo(length, mode, T, eps, cfg);
        py::dict d;
        d["mu"] = r.mu;
        d["T"] = r.T;
        d["eps"] = r.eps;
        d["overflow"] = r.overflow;
        d["amplification"] = r.amplification;
        d["predicted"] = r.predicted;
        d["relative_error"] = r.relative_error;
        d["regularized_high"] = r.regularized_high;
        d["regularized_amplification"] = r.regularized_amplification;
        d["message"] = r.message;
        return d;
    }, py::arg("length"), py::arg("mode"), py::arg("T"), py::arg("eps"), py::arg("cfg"));
}
