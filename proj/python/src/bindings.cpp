#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "iotad/pipeline.hpp"

namespace py = pybind11;
using namespace iotad;

namespace {

// JSON crosses the boundary as text; the Python side decodes it.
std::string dump(const nlohmann::json& j) { return j.dump(); }

py::dict record_dict(const kdd::Record& r) {
  py::dict d;
  d["index"] = r.index;
  d["protocol_type"] = r.protocol_type;
  d["service"] = r.service;
  d["flag"] = r.flag;
  d["label"] = r.raw_label;
  d["category"] = std::string(kdd::category_name(r.category));
  std::vector<double> numeric(r.numeric.begin(), r.numeric.end());
  d["numeric"] = numeric;
  return d;
}

Averaging parse_mode(const std::string& mode) {
  if (mode == "binary") return Averaging::kBinary;
  if (mode == "macro") return Averaging::kMacro;
  if (mode == "weighted") return Averaging::kWeighted;
  throw Error(ErrorCode::kInvalidArgument, "averaging must be binary, macro or weighted");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "KDD Cup 99 intrusion detectors";

  // Module-lifetime reference; the translator runs until interpreter exit.
  static PyObject* error_type =
      py::exception<Error>(m, "IotadError", PyExc_RuntimeError).inc_ref().ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type)(std::string(e.what()));
      exc.attr("code") = to_string(e.code());
      PyErr_SetObject(error_type, exc.ptr());
    }
  });

  m.def("parse_record", [](const std::string& line) { return record_dict(kdd::parse_record(line)); },
        py::arg("line"));
  m.def("category_of", [](const std::string& label) { return std::string(kdd::category_name(kdd::map_attack_category(label))); },
        py::arg("label"));
  m.def("sha256_hex", [](const py::bytes& b) { return kdd::sha256_hex(std::string(b)); }, py::arg("data"));
  m.def("dataset_summary_json", [](const std::string& path) { return dump(dataset_summary(kdd::load_dataset(path))); },
        py::arg("path"));
  m.def("nearest_rank_percentile", &nearest_rank_percentile, py::arg("values"), py::arg("p"));

  m.def(
      "metrics_json",
      [](const std::vector<int>& truth, const std::vector<int>& pred, std::size_t n_classes, const std::string& mode) {
        return dump(to_json(metrics(confusion(truth, pred, n_classes), parse_mode(mode))));
      },
      py::arg("truth"), py::arg("predicted"), py::arg("n_classes"), py::arg("mode"));
  m.def(
      "confusion",
      [](const std::vector<int>& truth, const std::vector<int>& pred, std::size_t n_classes) {
        const auto cm = confusion(truth, pred, n_classes);
        std::vector<std::vector<std::int64_t>> rows(n_classes, std::vector<std::int64_t>(n_classes));
        for (std::size_t i = 0; i < n_classes; ++i)
          for (std::size_t j = 0; j < n_classes; ++j) rows[i][j] = cm.at(i, j);
        return rows;
      },
      py::arg("truth"), py::arg("predicted"), py::arg("n_classes"));

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def("set", &RunConfig::set, py::arg("key"), py::arg("value"))
      .def("get", &RunConfig::get, py::arg("key"))
      .def("apply_text", &RunConfig::apply_text, py::arg("text"), py::arg("origin") = "<python>")
      .def("apply_file", &RunConfig::apply_file, py::arg("path"))
      .def("apply_desk_scale", &RunConfig::apply_desk_scale)
      .def("resolved_text", &RunConfig::resolved_text)
      .def("hash", &RunConfig::hash)
      .def_static("known_keys", &RunConfig::known_keys);

  m.def(
      "run_ingest_json",
      [](const RunConfig& c) {
        std::ostringstream log;
        return py::make_tuple(dump(run_ingest(c, log)), log.str());
      },
      py::arg("config"));
  m.def(
      "run_train_json",
      [](const RunConfig& c) {
        std::ostringstream log;
        std::string summary;
        {
          py::gil_scoped_release release;
          summary = dump(run_train(c, log));
        }
        return py::make_tuple(summary, log.str());
      },
      py::arg("config"));
  m.def(
      "run_evaluate_json",
      [](const RunConfig& c, const std::string& bundle, std::optional<double> percentile, std::optional<double> lambda) {
        std::ostringstream log;
        auto j = run_evaluate(c, bundle, log, {percentile, lambda});
        return py::make_tuple(dump(j), log.str());
      },
      py::arg("config"), py::arg("bundle"), py::arg("threshold_percentile") = py::none(),
      py::arg("lambda_") = py::none());

  py::class_<TrainedModel>(m, "Bundle")
      .def(py::init([](const std::string& path) { return load_bundle(path); }), py::arg("path"))
      .def_property_readonly("kind", [](const TrainedModel& t) { return model_kind_name(t.kind); })
      .def_property_readonly("input_width", &TrainedModel::input_width)
      .def_property_readonly("dataset_checksum", [](const TrainedModel& t) { return t.dataset_checksum; })
      .def_property_readonly("config_hash", [](const TrainedModel& t) { return t.config_hash; })
      .def("set_lenient", [](TrainedModel& t, bool lenient) { t.preprocessor.encoder.set_lenient(lenient); })
      .def(
          "score_lines",
          [](const TrainedModel& t, const std::vector<std::string>& lines) {
            py::list out;
            for (const auto& r : score_records(t, lines)) {
              py::dict d;
              d["index"] = r.index;
              d["ok"] = r.ok;
              d["predicted"] = r.predicted;
              d["score"] = r.score ? py::cast(*r.score) : py::none();
              d["anomalous"] = r.anomalous;
              d["error"] = r.error;
              out.append(d);
            }
            return out;
          },
          py::arg("lines"));
}
