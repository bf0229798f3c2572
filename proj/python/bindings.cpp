#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "pulsesync/analysis.hpp"
#include "pulsesync/dde.hpp"
#include "pulsesync/dirac.hpp"
#include "pulsesync/errors.hpp"
#include "pulsesync/experiments.hpp"
#include "pulsesync/lintheory.hpp"
#include "pulsesync/network.hpp"
#include "pulsesync/pulse.hpp"

namespace py = pybind11;
using namespace pulsesync;

namespace {

RealMatrix to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2 || a.shape(0) != a.shape(1))
        throw InvalidArgument("coupling must be a square 2-D array");
    const auto n = static_cast<std::size_t>(a.shape(0));
    RealMatrix m(n, n);
    auto r = a.unchecked<2>();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) = r(i, j);
    return m;
}

py::array_t<double> from_matrix(const RealMatrix& m) {
    py::array_t<double> out({m.rows(), m.cols()});
    auto w = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) w(i, j) = m(i, j);
    return out;
}

py::array_t<double> phases_array(const Trajectory& t, bool rates) {
    py::array_t<double> out({t.nodes(), t.oscillators()});
    auto w = out.mutable_unchecked<2>();
    for (std::size_t k = 0; k < t.nodes(); ++k)
        for (std::size_t i = 0; i < t.oscillators(); ++i)
            w(k, i) = rates ? t.rate(k, i) : t.phase(k, i);
    return out;
}

py::array_t<double> times_array(const Trajectory& t) {
    py::array_t<double> out(t.nodes());
    auto w = out.mutable_unchecked<1>();
    for (std::size_t k = 0; k < t.nodes(); ++k) w(k) = t.time(k);
    return out;
}

}  // namespace

PYBIND11_MODULE(pulsesync, m) {
    m.doc() = "Delayed pulse-coupled phase oscillators";

    auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    auto invalid = py::register_exception<InvalidArgument>(m, "InvalidArgument", error.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", invalid.ptr());
    auto numerical = py::register_exception<NumericalError>(m, "NumericalError", error.ptr());
    py::register_exception<NoDecay>(m, "NoDecay", numerical.ptr());
    py::register_exception<DefectiveMatrix>(m, "DefectiveMatrix", numerical.ptr());
    py::register_exception<StepTooLarge>(m, "StepTooLarge", numerical.ptr());
    py::register_exception<InfiniteSyncTime>(m, "InfiniteSyncTime", numerical.ptr());

    py::class_<PulseFunction>(m, "Pulse")
        .def(py::init([](double xi, double w, int comb_range) {
                 return PulseFunction::gaussian_comb({xi, w, comb_range});
             }),
             py::arg("xi") = 1.0, py::arg("w") = 0.1, py::arg("comb_range") = 20)
        .def_static("constant", &PulseFunction::constant, py::arg("level"), py::arg("xi") = 1.0)
        .def_property_readonly("period", &PulseFunction::period)
        .def_property_readonly("width", &PulseFunction::width)
        .def("__call__",
             [](const PulseFunction& p, py::object th) {
                 return py::vectorize([&p](double x) { return p.value(x); })(th);
             })
        .def("derivative", [](const PulseFunction& p, py::object th) {
            return py::vectorize([&p](double x) { return p.derivative(x); })(th);
        });

    py::enum_<MeanRateModel>(m, "MeanRateModel")
        .value("first_order", MeanRateModel::first_order)
        .value("leading_order", MeanRateModel::leading_order);

    py::class_<TheoryParams>(m, "TheoryParams")
        .def(py::init([](const PulseFunction& pulse, double omega, double jtilde, double delta_t,
                         double mean_phase0, MeanRateModel model) {
                 TheoryParams p;
                 p.pulse = pulse;
                 p.omega = omega;
                 p.jtilde = jtilde;
                 p.delta_t = delta_t;
                 p.mean_phase0 = mean_phase0;
                 p.rate_model = model;
                 return p;
             }),
             py::arg("pulse"), py::arg("omega"), py::arg("jtilde"), py::arg("delta_t"),
             py::arg("mean_phase0") = 0.0, py::arg("rate_model") = MeanRateModel::first_order)
        .def_readwrite("omega", &TheoryParams::omega)
        .def_readwrite("jtilde", &TheoryParams::jtilde)
        .def_readwrite("delta_t", &TheoryParams::delta_t)
        .def_readwrite("mean_phase0", &TheoryParams::mean_phase0)
        .def_readwrite("rate_model", &TheoryParams::rate_model);

    m.def("period_integrals", [](const TheoryParams& p) {
        const PeriodIntegrals pi = period_integrals(p);
        return py::make_tuple(pi.psi, pi.S);
    }, "Returns (psi, S).");
    m.def("sync_time_two", &sync_time_two);
    m.def("mode_sync_time", &mode_sync_time, py::arg("lam"), py::arg("params"));
    m.def("mean_phase_at", [](double t, const TheoryParams& p) { return mean_phase_at(t, p, p.mean_phase0); });
    m.def("predict_phi",
          [](const std::vector<double>& times, double phi0, const TheoryParams& p) {
              return LinearPredictor(p).phi_series(times, phi0);
          },
          py::arg("times"), py::arg("phi0"), py::arg("params"));
    m.def("predict_mode",
          [](const std::vector<double>& times, std::complex<double> lambda,
             std::complex<double> amplitude, const TheoryParams& p) {
              const LinearPredictor lp(p);
              return lp.mode_series(times, make_mode_prediction(lambda, amplitude, p));
          },
          py::arg("times"), py::arg("lam"), py::arg("amplitude"), py::arg("params"));

    m.def("all_to_all", [](std::size_t n, double a) { return from_matrix(make_all_to_all(n, a).weights()); });
    m.def("ring_laplacian",
          [](std::size_t n, double a) { return from_matrix(make_ring_laplacian(n, a).weights()); });
    m.def("spectrum",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& j) {
              const SpectralDecomposition sd = spectral_decompose(CouplingMatrix(to_matrix(j)));
              py::list modes;
              for (const ModeStability& s : classify_stability(sd))
                  modes.append(py::dict(py::arg("index") = s.index, py::arg("lam") = s.lambda,
                                        py::arg("growth") = s.growth,
                                        py::arg("verdict") = to_string(s.verdict)));
              return py::dict(py::arg("eigenvalues") = sd.eigenvalues,
                              py::arg("perron_index") = sd.perron_index,
                              py::arg("row_sum") = sd.row_sum, py::arg("modes") = modes);
          },
          "Eigenvalues, Perron index, row sum and per-mode stability.");

    py::class_<Trajectory>(m, "Trajectory")
        .def_property_readonly("times", &times_array)
        .def_property_readonly("phases", [](const Trajectory& t) { return phases_array(t, false); })
        .def_property_readonly("rates", [](const Trajectory& t) { return phases_array(t, true); })
        .def_property_readonly("step", &Trajectory::step);

    m.def("integrate",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& coupling,
             const PulseFunction& pulse, double omega, double delta_t,
             const std::vector<double>& theta0, double t_end, double h, bool frozen_history) {
              const SystemSpec spec(pulse, CouplingMatrix(to_matrix(coupling)), omega, delta_t);
              Rk4Options opt;
              opt.verify_halving = false;
              opt.policy = frozen_history ? HistoryPolicy::frozen : HistoryPolicy::constant_rate;
              py::gil_scoped_release release;
              return integrate_rk4(spec, theta0, t_end, h, opt);
          },
          py::arg("coupling"), py::arg("pulse"), py::arg("omega"), py::arg("delta_t"),
          py::arg("theta0"), py::arg("t_end"), py::arg("h"), py::arg("frozen_history") = false,
          "Method-of-steps RK4 integration.");

    m.def("measure_sync_time",
          [](const Trajectory& t, std::size_t i, std::size_t j, double upper, double lower) {
              return measure_sync_time(windowed_phase_diff(t, i, j), upper, lower).tau;
          },
          py::arg("trajectory"), py::arg("i") = 0, py::arg("j") = 1, py::arg("upper") = 0.9,
          py::arg("lower") = 0.01, "Fitted sync time of the windowed theta_i - theta_j.");
    m.def("strong_sync",
          [](const Trajectory& t, double tol) {
              py::list out;
              for (const SyncReport& r : strong_sync_check(t, tol))
                  out.append(py::dict(py::arg("i") = r.i, py::arg("j") = r.j, py::arg("mu") = r.mu,
                                      py::arg("residual") = r.residual,
                                      py::arg("synced") = r.synced,
                                      py::arg("tau") = r.tau_measured));
              return out;
          },
          py::arg("trajectory"), py::arg("tol"));

    m.def("simulate_dirac",
          [](double omega, double jump, double delta_t, const std::vector<double>& theta0,
             double t_end, const std::vector<double>& sample_times) {
              DiracParams p;
              p.omega = omega;
              p.jump = jump;
              p.delta_t = delta_t;
              const EventTrajectory ev = simulate_dirac(p, theta0, t_end);
              py::array_t<double> phases({sample_times.size(), theta0.size()});
              auto w = phases.mutable_unchecked<2>();
              for (std::size_t k = 0; k < sample_times.size(); ++k)
                  for (std::size_t i = 0; i < theta0.size(); ++i) w(k, i) = ev.phase(i, sample_times[k]);
              py::list events;
              for (const PulseEvent& e : ev.events())
                  events.append(py::make_tuple(e.time, e.emitter, e.jumps.size()));
              return py::make_tuple(phases, events);
          },
          py::arg("omega"), py::arg("jump"), py::arg("delta_t"), py::arg("theta0"),
          py::arg("t_end"), py::arg("sample_times"),
          "Returns (phases at sample_times, [(t, emitter, receivers)]).");

    m.def("run_experiment",
          [](const std::string& kind, const std::map<std::string, std::string>& config,
             const std::filesystem::path& out_dir) {
              return run_experiment(ExperimentConfig(kind, config, {}), out_dir);
          },
          py::arg("kind"), py::arg("config"), py::arg("out_dir"));
}
