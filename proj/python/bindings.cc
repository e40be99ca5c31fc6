// Python bindings. Structured values cross the boundary as JSON text; the
// package wrapper converts them to and from dicts.

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "undf/checkpoint.h"
#include "undf/errors.h"
#include "undf/io.h"
#include "undf/metrics.h"
#include "undf/neural_filter.h"
#include "undf/pipeline.h"
#include "undf/wav.h"

namespace py = pybind11;
using namespace undf;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> ToVector(const Array& a) {
  if (a.ndim() != 1) throw ValidationError("expected a 1-D array");
  return {a.data(), a.data() + a.size()};
}

Array FromVector(const std::vector<double>& v) {
  Array out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Array FromRows(const std::vector<std::vector<double>>& rows) {
  const py::ssize_t n = rows.empty() ? 0 : static_cast<py::ssize_t>(rows.front().size());
  Array out({static_cast<py::ssize_t>(rows.size()), n});
  auto m = out.mutable_unchecked<2>();
  for (py::ssize_t r = 0; r < out.shape(0); ++r) {
    for (py::ssize_t c = 0; c < n; ++c) m(r, c) = rows[r][c];
  }
  return out;
}

Array FromMatrix(const Eigen::MatrixXd& x) {
  Array out({static_cast<py::ssize_t>(x.rows()), static_cast<py::ssize_t>(x.cols())});
  auto m = out.mutable_unchecked<2>();
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) m(r, c) = x(r, c);
  }
  return out;
}

StftConfig StftFrom(int win, int hop, const std::string& window, int rate) {
  StftConfig c{rate, win, hop, window};
  c.Validate();
  return c;
}

py::dict RenderedToDict(const RenderedScene& r) {
  py::dict d;
  d["mics"] = FromRows(r.mic_signals);
  d["components"] = FromRows(r.ref_components);
  d["doas"] = r.doas;
  d["sample_rate"] = r.sample_rate;
  d["reference_index"] = r.reference_index;
  return d;
}

}  // namespace

PYBIND11_MODULE(_undf, m) {
  m.doc() = "Native core of the undf package";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<DegeneratePatternError>(m, "DegeneratePatternError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<NotFoundError>(m, "NotFoundError", PyExc_LookupError);
  py::register_exception<IngestionError>(m, "IngestionError", PyExc_IOError);

  m.def("eval_simplified_dma", [](double mu, double theta_s, int order_j, double theta) {
    const SimplifiedDmaSpec s{mu, theta_s, order_j};
    Validate(s);
    return EvalSimplifiedDma(s, theta);
  }, py::arg("mu"), py::arg("theta_s"), py::arg("order_j"), py::arg("theta"));

  m.def("pattern_vector", [](const std::string& spec_json, int length) {
    return ConditioningVector(GainPatternFromJson(Json::parse(spec_json)), length).gains;
  }, py::arg("spec_json"), py::arg("length") = kDefaultPatternLength,
        "Floored pattern vector of an analytic spec or a vector pattern.");

  m.def("pattern_gain", [](const std::string& spec_json, double theta) {
    return GainAt(GainPatternFromJson(Json::parse(spec_json)), theta);
  }, py::arg("spec_json"), py::arg("theta"));

  m.def("recipe_patterns", [](const std::string& recipe, std::uint64_t seed, int count, int length) {
    RecipeConfig cfg;
    cfg.recipe = ParseRecipe(recipe);
    cfg.rng_seed = seed;
    if (count > 0) cfg.patterns_per_setup = count;
    std::vector<std::vector<double>> out;
    for (const auto& p : RecipePatterns(cfg)) out.push_back(SamplePattern(p, length).gains);
    return out;
  }, py::arg("recipe"), py::arg("seed") = 0, py::arg("count") = 0, py::arg("length") = kDefaultPatternLength);

  m.def("stft", [](const Array& signal, int win, int hop, const std::string& window, int rate) {
    const auto cfg = StftFrom(win, hop, window, rate);
    const Spectrogram s = Stft(ToVector(signal), cfg);
    py::array_t<std::complex<double>> out({static_cast<py::ssize_t>(s.frames()), static_cast<py::ssize_t>(s.bins())});
    auto o = out.mutable_unchecked<2>();
    for (int t = 0; t < s.frames(); ++t) {
      for (int f = 0; f < s.bins(); ++f) o(t, f) = s.data(t, f);
    }
    return out;
  }, py::arg("signal"), py::arg("win_len") = 512, py::arg("hop") = 256, py::arg("window") = "sqrt-hann",
        py::arg("sample_rate") = 16000);

  m.def("istft", [](const py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>& spec,
                    std::size_t num_samples, int win, int hop, const std::string& window, int rate) {
    const auto cfg = StftFrom(win, hop, window, rate);
    if (spec.ndim() != 2) throw ValidationError("expected a frames x bins array");
    Spectrogram s = Spectrogram::Zeros(cfg, num_samples);
    if (spec.shape(0) != s.frames() || spec.shape(1) != s.bins()) {
      throw ValidationError("spectrogram shape does not match num_samples and the STFT settings");
    }
    auto in = spec.unchecked<2>();
    for (int t = 0; t < s.frames(); ++t) {
      for (int f = 0; f < s.bins(); ++f) s.data(t, f) = in(t, f);
    }
    return FromVector(Istft(s));
  }, py::arg("spec"), py::arg("num_samples"), py::arg("win_len") = 512, py::arg("hop") = 256,
        py::arg("window") = "sqrt-hann", py::arg("sample_rate") = 16000);

  m.def("simulate", [](const std::string& scene_json, const std::string& base_dir) {
    const SceneSpec spec = SceneFromJson(Json::parse(scene_json), base_dir);
    return RenderedToDict(RenderMics(spec, BuildDefaultArray()));
  }, py::arg("scene_json"), py::arg("base_dir") = "");

  m.def("process_timeline", [](const std::string& scene_json, const std::string& timeline_json,
                               const std::string& method, const std::string& model_path, int win, int hop) {
    const SceneSpec spec = SceneFromJson(Json::parse(scene_json));
    const RenderedScene scene = RenderMics(spec, BuildDefaultArray());
    const Filter filter = ParseFilterMethod(method) == FilterMethod::kNeural
                              ? Filter::Neural(std::make_shared<const Checkpoint>(LoadCheckpoint(model_path)))
                              : Filter::Oracle(StftFrom(win, hop, "sqrt-hann", spec.sample_rate));
    const auto timeline = TimelineFromJson(Json::parse(timeline_json), filter.pattern_length());
    TimelineRender r;
    {
      py::gil_scoped_release release;
      r = ProcessTimeline(scene, timeline, filter);
    }
    py::dict d;
    d["unprocessed"] = FromVector(r.unprocessed);
    d["processed"] = FromVector(r.processed);
    d["frame_pattern_index"] = r.frame_pattern_index;
    d["source_gains"] = FromMatrix(r.source_gains);
    d["processed_db"] = FromMatrix(r.processed_db);
    d["unprocessed_db"] = FromMatrix(r.unprocessed_db);
    d["target"] = r.target ? py::object(FromVector(*r.target)) : py::none();
    d["sdr"] = r.sdr ? py::object(py::float_(*r.sdr)) : py::none();
    d["sdr_unprocessed"] = r.sdr_unprocessed ? py::object(py::float_(*r.sdr_unprocessed)) : py::none();
    return d;
  }, py::arg("scene_json"), py::arg("timeline_json"), py::arg("method") = "parametric-oracle",
        py::arg("model_path") = "", py::arg("win_len") = 512, py::arg("hop") = 256);

  m.def("sdr", [](const Array& target, const Array& estimate) { return Sdr(ToVector(target), ToVector(estimate)); },
        py::arg("target"), py::arg("estimate"));

  m.def("loss_l1", [](const std::vector<Array>& targets, const std::vector<Array>& estimates, double epsilon) {
    std::vector<std::vector<double>> t;
    std::vector<std::vector<double>> e;
    for (const auto& a : targets) t.push_back(ToVector(a));
    for (const auto& a : estimates) e.push_back(ToVector(a));
    return LossL1(t, e, epsilon);
  }, py::arg("targets"), py::arg("estimates"), py::arg("epsilon") = 1e-7);

  m.def("read_wav", [](const std::string& path) {
    const WavData w = ReadWav(path);
    return py::make_tuple(FromRows(w.channels), w.sample_rate);
  }, py::arg("path"));

  m.def("write_wav", [](const std::string& path, const py::array_t<double, py::array::c_style | py::array::forcecast>& data,
                        int sample_rate) {
    WavData w;
    w.sample_rate = sample_rate;
    if (data.ndim() == 1) {
      w.channels = {std::vector<double>(data.data(), data.data() + data.size())};
    } else if (data.ndim() == 2) {
      for (py::ssize_t c = 0; c < data.shape(0); ++c) {
        const double* row = data.data() + c * data.shape(1);
        w.channels.emplace_back(row, row + data.shape(1));
      }
    } else {
      throw ValidationError("write_wav expects a 1-D or channels x samples array");
    }
    WriteWav(path, w);
  }, py::arg("path"), py::arg("data"), py::arg("sample_rate") = 16000);

  m.def("resample", [](const Array& signal, int from_rate, int to_rate) {
    return FromVector(Resample(ToVector(signal), from_rate, to_rate));
  }, py::arg("signal"), py::arg("from_rate"), py::arg("to_rate"));
}
