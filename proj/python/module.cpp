#include "kseg/config.hpp"
#include "kseg/experiments.hpp"
#include "kseg/gabor.hpp"
#include "kseg/metrics.hpp"
#include "kseg/phantom.hpp"
#include "kseg/segmenter.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace kseg;

namespace {

GrayImage to_image(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw Error(ErrorCode::Validation, "image must be a 2-D array");
    const int h = static_cast<int>(a.shape(0));
    const int w = static_cast<int>(a.shape(1));
    return GrayImage(w, h, std::vector<double>(a.data(), a.data() + a.size()));
}

BinaryMask to_mask(const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw Error(ErrorCode::Validation, "mask must be a 2-D array");
    std::vector<std::uint8_t> v(a.data(), a.data() + a.size());
    for (auto& x : v) x = x ? 1 : 0;
    return BinaryMask(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), std::move(v));
}

py::array_t<double> from_image(const GrayImage& img) {
    py::array_t<double> out({img.height(), img.width()});
    std::copy(img.data().begin(), img.data().end(), out.mutable_data());
    return out;
}

py::array_t<std::uint8_t> from_mask(const BinaryMask& m) {
    py::array_t<std::uint8_t> out({m.height(), m.width()});
    std::copy(m.data().begin(), m.data().end(), out.mutable_data());
    return out;
}

Contour to_contour(const std::vector<std::pair<double, double>>& pts) {
    Contour c;
    for (const auto& [x, y] : pts) c.points.push_back({x, y});
    return c;
}

SegConfig to_config(const py::dict& overrides) {
    SegConfig cfg;
    const auto json_mod = py::module_::import("json");
    const std::string text = py::str(json_mod.attr("dumps")(overrides));
    apply_config_json(cfg, nlohmann::json::parse(text));
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Narrow-band graph-cut segmentation with Gabor features";
    m.attr("__version__") = kToolkitVersion;

    static py::exception<Error> kseg_error(m, "KsegError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object err = kseg_error;
            py::object inst = err(std::string(e.what()));
            inst.attr("code") = std::string(to_string(e.code()));
            inst.attr("field_path") = e.field_path();
            PyErr_SetObject(kseg_error.ptr(), inst.ptr());
        }
    });

    m.def("make_phantom", [](const std::string& preset, std::uint64_t seed, std::optional<double> speckle) {
        PhantomSpec spec = PhantomSpec::for_preset(parse_preset(preset), seed);
        if (speckle) spec.speckle = *speckle;
        const Phantom ph = make_phantom(spec);
        std::vector<std::pair<double, double>> init;
        for (const auto& p : phantom_init_points(ph).points) init.emplace_back(p.x, p.y);
        py::dict d;
        d["image"] = from_image(ph.image);
        d["truth"] = from_mask(ph.truth);
        d["init"] = init;
        d["speckle"] = spec.speckle;
        return d;
    }, py::arg("preset"), py::arg("seed") = 0, py::arg("speckle") = py::none());

    m.def("default_config", [] { return config_to_json(SegConfig{}).dump(); },
          "Default configuration as a JSON string");

    m.def("segment", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& image,
                        const std::vector<std::pair<double, double>>& points, const py::dict& config) {
        const GrayImage img = to_image(image);
        const SegConfig cfg = to_config(config);
        SegResult r;
        {
            py::gil_scoped_release release;
            r = run(img, to_contour(points), cfg);
        }
        std::vector<std::pair<int, int>> contour;
        for (const auto& p : r.contour) contour.emplace_back(p.x, p.y);
        std::vector<double> fractions;
        for (const auto& d : r.diagnostics) fractions.push_back(d.changed_fraction());
        py::dict d;
        d["mask"] = from_mask(r.mask);
        d["contour"] = contour;
        d["iterations"] = r.iterations_run;
        d["converged"] = r.converged;
        d["changed_fractions"] = fractions;
        return d;
    }, py::arg("image"), py::arg("points"), py::arg("config") = py::dict());

    m.def("gabor_feature_map", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& image,
                                  int scales, int directions) {
        GaborParams p;
        p.num_scales = scales;
        p.num_directions = directions;
        const FeatureMap f = gabor_feature_map(to_image(image), p);
        py::array_t<double> out({f.height, f.width});
        std::copy(f.data.begin(), f.data.end(), out.mutable_data());
        return out;
    }, py::arg("image"), py::arg("scales") = 3, py::arg("directions") = 8);

    m.def("dice", [](const py::array_t<std::uint8_t>& e, const py::array_t<std::uint8_t>& f) { return dice(to_mask(e), to_mask(f)); });
    m.def("jaccard", [](const py::array_t<std::uint8_t>& e, const py::array_t<std::uint8_t>& f) { return jaccard(to_mask(e), to_mask(f)); });
    m.def("mean_distance", [](const py::array_t<std::uint8_t>& e, const py::array_t<std::uint8_t>& f) {
        return mean_distance(to_mask(e), to_mask(f));
    });
    m.def("icc", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& values) {
        if (values.ndim() != 2) throw Error(ErrorCode::Validation, "measurements must be a 2-D array (runs x subjects)");
        Measurements ms{static_cast<int>(values.shape(0)), static_cast<int>(values.shape(1)),
                        std::vector<double>(values.data(), values.data() + values.size())};
        return icc(ms);
    }, "ICC(A,k) with runs as rows and subjects as columns");
}
