// SPDX-License-Identifier: Apache-2.0
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "nacn2n/backbone.hpp"
#include "nacn2n/chain.hpp"
#include "nacn2n/checkpoint.hpp"
#include "nacn2n/cli.hpp"
#include "nacn2n/errors.hpp"
#include "nacn2n/metrics.hpp"
#include "nacn2n/noise.hpp"
#include "nacn2n/phantom.hpp"

namespace py = pybind11;
using namespace nacn2n;

namespace {

using Array = py::array_t<float, py::array::c_style | py::array::forcecast>;

ImageGrid to_grid(const Array& a) {
    if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
    const int h = static_cast<int>(a.shape(0));
    const int w = static_cast<int>(a.shape(1));
    return ImageGrid(h, w, std::vector<float>(a.data(), a.data() + a.size()));
}

Array to_array(const ImageGrid& g) {
    Array out({g.height(), g.width()});
    std::copy(g.pixels().begin(), g.pixels().end(), out.mutable_data());
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "nacn2n core bindings";

    // later registrations are tried first, so the base class goes first
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);

    py::class_<NoiseSpec>(m, "NoiseSpec")
        .def(py::init([](std::optional<double> k, double var, std::uint64_t seed) {
                 NoiseSpec s{k, var, 0.0, seed};
                 validate(s);
                 return s;
             }),
             py::arg("poisson_scale") = 255.0, py::arg("gaussian_variance") = 15.0,
             py::arg("seed") = 2024)
        .def_readonly("poisson_scale", &NoiseSpec::poisson_scale)
        .def_readonly("gaussian_variance", &NoiseSpec::gaussian_variance)
        .def("variance_at", &NoiseSpec::variance_at, py::arg("p"));

    m.def(
        "corrupt",
        [](const Array& img, const NoiseSpec& spec, std::uint64_t seed) {
            return to_array(corrupt(to_grid(img), spec, seed));
        },
        py::arg("image"), py::arg("spec") = NoiseSpec{}, py::arg("seed") = 0,
        "Adds mixed Poisson-Gaussian noise to a normalized image (unclipped).");

    m.def(
        "psnr", [](const Array& x, const Array& y, double max_value) { return psnr(to_grid(x), to_grid(y), max_value); },
        py::arg("x"), py::arg("y"), py::arg("max_value") = 1.0);

    m.def(
        "ssim",
        [](const Array& x, const Array& y, bool windowed) {
            SsimOptions o;
            o.mode = windowed ? SsimMode::windowed : SsimMode::global;
            return ssim(to_grid(x), to_grid(y), o);
        },
        py::arg("x"), py::arg("y"), py::arg("windowed") = false);

    m.def(
        "phantom", [](int size, std::uint64_t seed) { return to_array(random_phantom(size, seed)); },
        py::arg("size") = 64, py::arg("seed") = 0);

    py::class_<ChainModel<float>>(m, "Chain")
        .def(py::init([](const std::string& backbone, int modules, int base_channels, int depth,
                         std::uint64_t seed) {
                 BackboneConfig c = BackboneConfig::defaults_for(backbone);
                 if (base_channels > 0) c.base_channels = base_channels;
                 if (depth > 0) c.depth = depth;
                 return compose_chain<float>(build_backbone<float>(c), modules, seed);
             }),
             py::arg("backbone") = "unet", py::arg("modules") = 5, py::arg("base_channels") = 0,
             py::arg("depth") = 0, py::arg("seed") = 2024)
        .def_property_readonly("parameter_count", &ChainModel<float>::parameter_count)
        .def_property_readonly("modules", &ChainModel<float>::modules)
        .def(
            "__call__",
            [](const ChainModel<float>& c, const Array& img) { return to_array(forward(c, to_grid(img)).final); },
            py::arg("image"))
        .def(
            "intermediates",
            [](const ChainModel<float>& c, const Array& img) {
                std::vector<Array> out;
                for (const auto& g : forward(c, to_grid(img), true).intermediates) out.push_back(to_array(g));
                return out;
            },
            py::arg("image"));

    m.def(
        "load_chain", [](const std::string& dir) { return restore_chain(load_checkpoint(dir)); },
        py::arg("checkpoint_dir"));

    m.def(
        "run_cli",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "nacn2n");
            std::vector<const char*> argv;
            for (const auto& a : args) argv.push_back(a.c_str());
            std::ostringstream out, err;
            int code;
            {
                py::gil_scoped_release release;
                code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs a CLI subcommand in-process; returns (exit_code, stdout, stderr).");
}
