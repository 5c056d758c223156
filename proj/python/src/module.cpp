#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "creditarf/app/commands.hpp"
#include "creditarf/arf/embedding.hpp"
#include "creditarf/crp/checkpoint.hpp"
#include "creditarf/dataset/rating.hpp"
#include "creditarf/error.hpp"
#include "creditarf/train/metrics.hpp"

namespace py = pybind11;
using namespace creditarf;

namespace {

py::array_t<float> to_array(const nx::Tensor<float>& t) {
  py::array_t<float> a(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
  std::copy(t.values().begin(), t.values().end(), a.mutable_data());
  return a;
}

nx::Tensor<float> from_array(const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
  nx::Shape shape(a.shape(), a.shape() + a.ndim());
  return nx::Tensor<float>(std::move(shape), std::vector<float>(a.data(), a.data() + a.size()));
}

std::vector<data::RatingClass> classes(const std::vector<std::string>& names) {
  std::vector<data::RatingClass> out;
  out.reserve(names.size());
  for (const auto& n : names) out.push_back(data::map_rating(n));
  return out;
}

py::object json_to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json py_to_json(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

}  // namespace

PYBIND11_MODULE(_creditarf, m) {
  m.doc() = "Bindings for the creditarf C++ core";
  m.attr("__version__") = CREDITARF_VERSION;
  m.attr("CLASS_NAMES") = std::vector<std::string>(data::kClassNames.begin(), data::kClassNames.end());

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<ModeError>(m, "ModeError", PyExc_RuntimeError);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = app::run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command line with `args`; returns (exit_code, stdout, stderr).");

  m.def(
      "consolidate_rating",
      [](const std::string& raw) { return std::string(data::class_name(data::map_rating(raw))); }, py::arg("raw"),
      "Maps an agency grade such as 'BBB-' to one of the seven classes.");

  m.def(
      "hash_embed",
      [](const std::string& sentence, std::size_t m, std::uint64_t seed) {
        const auto v = arf::hash_embed(sentence, m, seed);
        return to_array(nx::Tensor<float>({v.size()}, v));
      },
      py::arg("sentence"), py::arg("dim"), py::arg("seed"));

  m.def(
      "read_arfe",
      [](const std::filesystem::path& path) {
        const auto cache = arf::ArfeCache::load(path);
        py::dict entries;
        for (const auto& [key, rows] : cache.entries) entries[py::str(key)] = to_array(rows);
        return py::make_tuple(cache.dim, entries);
      },
      py::arg("path"), "Returns (dim, {key: float32 array [n x dim]}).");

  m.def(
      "write_arfe",
      [](const std::filesystem::path& path, std::uint32_t dim, const py::dict& entries) {
        arf::ArfeCache cache;
        cache.dim = dim;
        for (const auto& [key, rows] : entries) {
          cache.insert(key.cast<std::string>(),
                       from_array(rows.cast<py::array_t<float, py::array::c_style | py::array::forcecast>>()));
        }
        cache.save(path);
      },
      py::arg("path"), py::arg("dim"), py::arg("entries"));

  m.def(
      "read_checkpoint",
      [](const std::filesystem::path& path) {
        const auto ckpt = crp::Checkpoint::load(path);
        py::dict tensors;
        for (const auto& [name, t] : ckpt.tensors) tensors[py::str(name)] = to_array(t);
        py::dict meta;
        meta["spec_digest"] = ckpt.meta.spec_digest;
        meta["epochs"] = ckpt.meta.epochs;
        meta["final_lr"] = ckpt.meta.final_lr;
        return py::make_tuple(tensors, meta);
      },
      py::arg("path"), "Returns ({name: float32 array}, {spec_digest, epochs, final_lr}).");

  m.def(
      "evaluate_predictions",
      [](const std::vector<std::string>& predictions, const std::vector<std::string>& labels) {
        const auto p = classes(predictions), l = classes(labels);
        return json_to_py(train::to_json(train::report_from_confusion(train::confusion_matrix(p, l))));
      },
      py::arg("predictions"), py::arg("labels"), "Metrics report (as written to report.json) for class names.");

  m.def(
      "compare_reports",
      [](const py::object& baseline, const py::object& with_arf) {
        const auto cmp = train::compare_runs(train::report_from_json(py_to_json(baseline)),
                                             train::report_from_json(py_to_json(with_arf)));
        return py::make_tuple(train::comparison_table(cmp), train::comparison_csv(cmp));
      },
      py::arg("baseline"), py::arg("with_arf"), "Returns (text table, CSV) for two report dicts.");

  m.def("format_delta", &train::format_delta, py::arg("delta"));
}
