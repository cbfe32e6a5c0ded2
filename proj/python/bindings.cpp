#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nfdoa/baselines.hpp"
#include "nfdoa/pipeline.hpp"

namespace py = pybind11;
using namespace nfdoa;

namespace {

using ComplexArray = py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>;

py::array_t<std::complex<double>> matrix_to_numpy(const CMatrix& m) {
    py::array_t<std::complex<double>> out({m.rows(), m.cols()});
    auto r = out.mutable_unchecked<2>();
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) r(i, j) = m(i, j);
    return out;
}

CMatrix matrix_from_numpy(const ComplexArray& a) {
    if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D complex array");
    CMatrix m(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
    auto r = a.unchecked<2>();
    for (py::ssize_t i = 0; i < a.shape(0); ++i)
        for (py::ssize_t j = 0; j < a.shape(1); ++j)
            m(static_cast<int>(i), static_cast<int>(j)) = r(i, j);
    return m;
}

py::array_t<std::complex<double>> vector_to_numpy(const CVector& v) {
    std::vector<py::ssize_t> shape{static_cast<py::ssize_t>(v.size())};
    py::array_t<std::complex<double>> out(shape);
    auto r = out.mutable_unchecked<1>();
    for (std::size_t i = 0; i < v.size(); ++i) r(static_cast<py::ssize_t>(i)) = v[i];
    return out;
}

CVector vector_from_numpy(const ComplexArray& a) {
    if (a.ndim() != 1) throw std::invalid_argument("expected a 1-D complex array");
    CVector v(static_cast<std::size_t>(a.shape(0)));
    auto r = a.unchecked<1>();
    for (py::ssize_t i = 0; i < a.shape(0); ++i) v[static_cast<std::size_t>(i)] = r(i);
    return v;
}

CovMatrix cov_from(const ComplexArray& a, CovKind kind) { return {matrix_from_numpy(a), kind}; }

std::vector<Sample> dataset_from_python(const std::vector<std::pair<ComplexArray, double>>& pairs) {
    std::vector<Sample> out;
    out.reserve(pairs.size());
    for (const auto& [feature, label] : pairs)
        out.push_back({vector_from_numpy(feature), label, 0.0, label * 180.0 / M_PI});
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Near-field DoA estimation: VCM reconstruction, subspace features, "
              "complex-valued residual network, MUSIC baselines";

    py::class_<ArrayConfig>(m, "ArrayConfig")
        .def(py::init(&ArrayConfig::ula), py::arg("n_elements"), py::arg("spacing") = 0.5,
             py::arg("wavelength") = 0.0107)
        .def_readonly("n_elements", &ArrayConfig::n_elements)
        .def_readonly("spacing", &ArrayConfig::spacing)
        .def_readonly("wavelength", &ArrayConfig::wavelength)
        .def_readonly("ref_index", &ArrayConfig::ref_index)
        .def_property_readonly("aperture", &ArrayConfig::aperture)
        .def("__repr__", [](const ArrayConfig& c) {
            return "ArrayConfig(n_elements=" + std::to_string(c.n_elements) + ")";
        });

    py::class_<SourcePlacement>(m, "SourcePlacement")
        .def(py::init([](double theta, double range) { return SourcePlacement{theta, range}; }),
             py::arg("theta"), py::arg("range"))
        .def_readwrite("theta", &SourcePlacement::theta)
        .def_readwrite("range", &SourcePlacement::range);

    m.def("rayleigh_distance", &rayleigh_distance, py::arg("aperture"), py::arg("wavelength"));
    m.def("fresnel_bounds", &fresnel_bounds, py::arg("config"));
    m.def("exact_range", &exact_range, py::arg("source"), py::arg("config"), py::arg("n"));
    m.def("fresnel_params", [](const SourcePlacement& s, const ArrayConfig& c) {
        FresnelParams fp = fresnel_params(s, c);
        return std::make_pair(fp.alpha, fp.beta);
    });

    m.def("near_field_steering", [](const SourcePlacement& s, const ArrayConfig& c) {
        return vector_to_numpy(near_field_steering(s, c));
    });
    m.def("fresnel_steering", [](const SourcePlacement& s, const ArrayConfig& c) {
        return vector_to_numpy(fresnel_steering(s, c));
    });
    m.def("far_field_steering", [](double theta, const ArrayConfig& c) {
        return vector_to_numpy(far_field_steering(theta, c));
    });

    m.def(
        "received_snapshots",
        [](const std::vector<SourcePlacement>& sources, const ArrayConfig& config, int snapshots,
           double snr_db, std::uint64_t seed) {
            return matrix_to_numpy(
                received_snapshots(sources, config, snapshots, NoiseSpec{snr_db, seed}).data);
        },
        py::arg("sources"), py::arg("config"), py::arg("snapshots"), py::arg("snr_db"),
        py::arg("seed"));

    m.def("sample_covariance", [](const ComplexArray& snapshots, const ArrayConfig& config) {
        SnapshotSet set{matrix_from_numpy(snapshots), config, {}};
        return matrix_to_numpy(sample_covariance(set).data);
    });
    m.def("analytic_covariance",
          [](const std::vector<SourcePlacement>& sources, const ArrayConfig& config,
             double noise_var) {
              return matrix_to_numpy(analytic_covariance(sources, config, noise_var).data);
          });
    m.def("far_field_ideal_covariance",
          [](const std::vector<SourcePlacement>& sources, const ArrayConfig& config,
             double noise_var) {
              return matrix_to_numpy(far_field_ideal_covariance(sources, config, noise_var).data);
          });
    m.def("reconstruct_vcm", [](const ComplexArray& raw) {
        return matrix_to_numpy(reconstruct_vcm(cov_from(raw, CovKind::raw)).data);
    });
    m.def("crop_vcm", [](const ComplexArray& vcm, int n_in) {
        return matrix_to_numpy(crop_vcm(cov_from(vcm, CovKind::vcm), n_in).data);
    });
    m.def("hermitian_eig", [](const ComplexArray& matrix) {
        EigResult eig = hermitian_eig(matrix_from_numpy(matrix));
        return std::make_pair(eig.values, matrix_to_numpy(eig.vectors));
    });
    m.def("signal_subspace", [](const ComplexArray& matrix, int n_sources) {
        Subspace sub = signal_subspace(cov_from(matrix, CovKind::raw), n_sources);
        return py::make_tuple(matrix_to_numpy(sub.vectors), sub.eigenvalues, sub.noise_floor);
    });
    m.def("music_spectrum_far",
          [](const ComplexArray& matrix, int n_sources, double spacing,
             const std::vector<double>& theta_grid) {
              return music_spectrum_far(cov_from(matrix, CovKind::vcm), n_sources, spacing,
                                        theta_grid);
          });
    m.def(
        "near_field_music",
        [](const ComplexArray& raw, int n_sources, const ArrayConfig& config, double theta_lo_deg,
           double theta_hi_deg, double theta_step_deg, double range_lo, double range_hi,
           double range_step) {
            MusicGrid grid = MusicGrid::regular(theta_lo_deg, theta_hi_deg, theta_step_deg,
                                                range_lo, range_hi, range_step);
            MusicResult res = near_field_music(cov_from(raw, CovKind::raw), n_sources, grid, config);
            std::vector<std::pair<double, double>> estimates;
            for (const MusicEstimate& e : res.estimates) estimates.push_back({e.theta, e.range});
            return py::make_tuple(estimates, res.spectrum,
                                  static_cast<int>(grid.theta_axis.size()),
                                  static_cast<int>(grid.range_axis.size()));
        },
        py::arg("raw"), py::arg("n_sources"), py::arg("config"), py::arg("theta_lo_deg") = -90.0,
        py::arg("theta_hi_deg") = 90.0, py::arg("theta_step_deg") = 0.1,
        py::arg("range_lo") = 200.0, py::arg("range_hi") = 1800.0, py::arg("range_step") = 25.0);

    m.def("features_from_snapshots",
          [](const ComplexArray& snapshots, const ArrayConfig& config, int n_in, int n_sources) {
              SnapshotSet set{matrix_from_numpy(snapshots), config, {}};
              return matrix_to_numpy(features_from_snapshots(set, n_in, n_sources));
          });

    py::class_<DatasetSpec>(m, "DatasetSpec")
        .def(py::init<>())
        .def_readwrite("distances", &DatasetSpec::distances)
        .def_readwrite("theta_lo_deg", &DatasetSpec::theta_lo_deg)
        .def_readwrite("theta_hi_deg", &DatasetSpec::theta_hi_deg)
        .def_readwrite("theta_step_deg", &DatasetSpec::theta_step_deg)
        .def_readwrite("snapshots", &DatasetSpec::snapshots)
        .def_readwrite("snr_db", &DatasetSpec::snr_db)
        .def_readwrite("seed", &DatasetSpec::seed)
        .def_readwrite("n_in", &DatasetSpec::n_in)
        .def_readwrite("array", &DatasetSpec::array);

    py::class_<Sample>(m, "Sample")
        .def_property_readonly("feature", [](const Sample& s) { return vector_to_numpy(s.feature); })
        .def_readonly("label", &Sample::label)
        .def_readonly("distance", &Sample::distance)
        .def_readonly("theta_deg", &Sample::theta_deg);

    m.def("build_dataset", &build_dataset, py::arg("spec"),
          py::call_guard<py::gil_scoped_release>());

    py::enum_<LossKind>(m, "LossKind").value("mae", LossKind::mae).value("mse", LossKind::mse);
    py::enum_<OptimizerKind>(m, "OptimizerKind")
        .value("sgd", OptimizerKind::sgd)
        .value("adam", OptimizerKind::adam);
    py::enum_<LrSchedule>(m, "LrSchedule")
        .value("constant", LrSchedule::constant)
        .value("cosine", LrSchedule::cosine);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("optimizer", &TrainConfig::optimizer)
        .def_readwrite("learning_rate", &TrainConfig::learning_rate)
        .def_readwrite("lr_schedule", &TrainConfig::lr_schedule)
        .def_readwrite("adam_beta1", &TrainConfig::adam_beta1)
        .def_readwrite("adam_beta2", &TrainConfig::adam_beta2)
        .def_readwrite("adam_eps", &TrainConfig::adam_eps)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("loss", &TrainConfig::loss)
        .def_readwrite("seed", &TrainConfig::seed);

    py::class_<History>(m, "History")
        .def_readonly("train_loss", &History::train_loss)
        .def_readonly("val_loss", &History::val_loss)
        .def("to_csv", &History::to_csv);

    py::class_<EvalReport>(m, "EvalReport")
        .def_readonly("rmse_deg", &EvalReport::rmse_deg)
        .def_readonly("mae_deg", &EvalReport::mae_deg)
        .def_readonly("errors_deg", &EvalReport::errors_deg);

    py::class_<Model>(m, "Model")
        .def("predict",
             [](Model& model, const ComplexArray& feature) {
                 return model.forward(vector_from_numpy(feature));
             })
        .def_property_readonly("name", &Model::name)
        .def_property_readonly("input_size", &Model::input_size)
        .def_property_readonly("flops", &Model::flops);

    m.def("build_cvnn", &build_cvnn, py::arg("n_in"), py::arg("seed"));
    m.def("build_tdnn", py::overload_cast<int, std::uint64_t>(&build_tdnn), py::arg("n_in"),
          py::arg("seed"));

    m.def(
        "train_model",
        [](Model& model, const std::vector<Sample>& dataset, const TrainConfig& config,
           double val_fraction) { return train_model(model, dataset, config, val_fraction); },
        py::arg("model"), py::arg("dataset"), py::arg("config"), py::arg("val_fraction") = 0.1,
        py::call_guard<py::gil_scoped_release>());
    m.def(
        "train_on_pairs",
        [](Model& model, const std::vector<std::pair<ComplexArray, double>>& pairs,
           const TrainConfig& config, double val_fraction) {
            std::vector<Sample> dataset = dataset_from_python(pairs);
            return train_model(model, dataset, config, val_fraction);
        },
        py::arg("model"), py::arg("pairs"), py::arg("config"), py::arg("val_fraction") = 0.0);
    m.def("evaluate", [](Model& model, const std::vector<Sample>& dataset) {
        return evaluate(model, dataset);
    });

    m.def("flops_count", &flops_count);
    m.def(
        "tdnn_flops",
        [](int n_in) {
            TdnnSpec spec;
            spec.n_in = n_in;
            return tdnn_flops(spec);
        },
        py::arg("n_in"));

    m.def("save_checkpoint",
          [](const Model& model, const TrainConfig& config, std::uint64_t seed,
             const std::string& path) { save_checkpoint(model, config, seed, "", path); });
    m.def("load_checkpoint", &load_checkpoint, py::arg("path"));

    m.attr("__version__") = "0.1.0";
}
