#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>
#include <vector>

#include "edgemetric/data.hpp"
#include "edgemetric/error.hpp"
#include "edgemetric/eval.hpp"
#include "edgemetric/metric.hpp"
#include "edgemetric/model_io.hpp"
#include "edgemetric/png_io.hpp"
#include "edgemetric/workflow.hpp"

namespace py = pybind11;
using namespace edgemetric;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using Mask = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

MultiChannelImage image_from(const Array& a) {
  if (a.ndim() != 2 && a.ndim() != 3)
    throw Error(ErrorCode::kInvalidArgument, "image must be HxW or HxWxC");
  const int h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  const int c = a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1;
  if (c != 1 && c != 3) throw Error(ErrorCode::kColorSpace, "image needs 1 or 3 channels");
  MultiChannelImage img(w, h, c, c == 3 ? ColorSpace::kRgb : ColorSpace::kGray);
  std::copy(a.data(), a.data() + a.size(), img.values().begin());
  return img;
}

Array image_to(const MultiChannelImage& img) {
  std::vector<py::ssize_t> shape = {img.height(), img.width()};
  if (img.channels() > 1) shape.push_back(img.channels());
  Array out(shape);
  std::copy(img.values().begin(), img.values().end(), out.mutable_data());
  return out;
}

Array map_to(const RealMap& m) {
  Array out({m.height(), m.width()});
  std::copy(m.values().begin(), m.values().end(), out.mutable_data());
  return out;
}

RealMap map_from(const Array& a) {
  if (a.ndim() != 2) throw Error(ErrorCode::kInvalidArgument, "map must be HxW");
  RealMap m(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::copy(a.data(), a.data() + a.size(), m.values().begin());
  return m;
}

Mask mask_to(const BinaryMap& m) {
  Mask out({m.height(), m.width()});
  std::copy(m.values().begin(), m.values().end(), out.mutable_data());
  return out;
}

BinaryMap mask_from(const Mask& a) {
  if (a.ndim() != 2) throw Error(ErrorCode::kInvalidArgument, "mask must be HxW");
  BinaryMap m(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  for (std::size_t i = 0; i < m.size(); ++i) m.values()[i] = a.data()[i] ? 1 : 0;
  return m;
}

std::vector<double> vec(const Array& a) { return {a.data(), a.data() + a.size()}; }

KernelType parse_kernel(const std::string& name) {
  if (name == "rbf") return KernelType::kRbf;
  if (name == "linear") return KernelType::kLinear;
  throw Error(ErrorCode::kInvalidArgument, "kernel must be 'rbf' or 'linear'");
}

// Codebook-only model learned from the given images.
ModelFile codebook_model(const std::vector<Array>& images) {
  std::vector<MultiChannelImage> imgs;
  for (const auto& a : images) imgs.push_back(image_from(a));
  ModelFile m;
  m.textons = TextonConfig{};
  m.codebook = learn_texton_codebook(imgs, *m.textons);
  return m;
}

Detector detector_for(const ModelFile& model, const std::string& mode, double radius) {
  if (mode == "chi2-equal") return make_detector(model, false, false, radius);
  if (mode == "chi2-learned") {
    if (!model.chi_square)
      throw Error(ErrorCode::kIncompatibleModel, "model file holds no chi-square weights");
    return make_detector(model, false, true, radius);
  }
  if (mode == "lbm") {
    if (!model.metric) throw Error(ErrorCode::kIncompatibleModel, "model file holds no learned metric");
    return make_detector(model, true, false, radius);
  }
  throw Error(ErrorCode::kInvalidArgument, "mode must be chi2-equal, chi2-learned or lbm");
}

py::dict report_dict(const EvalReport& r) {
  py::dict d;
  d["ods"] = r.ods;
  d["ods_threshold"] = r.ods_threshold;
  d["ois"] = r.ois;
  d["ap"] = r.ap;
  d["max_recall"] = r.max_recall;
  py::list curve;
  for (const PRPoint& p : r.table.dataset)
    curve.append(py::make_tuple(p.threshold, p.precision, p.recall, p.f));
  d["curve"] = curve;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Boundary detection with chi-square and learned histogram metrics.";

  py::register_exception<Error>(m, "EdgemetricError", PyExc_RuntimeError);

  m.def("load_image", [](const std::filesystem::path& p) { return image_to(load_image(p)); },
        "Decode a PNG into an HxW or HxWx3 float array in [0, 1].");
  m.def("save_image", [](const std::filesystem::path& p, const Array& a) {
    save_image_png(p, image_from(a));
  });

  m.def("chi_square", [](const Array& u, const Array& v) { return chi_square(vec(u), vec(v)); });
  m.def("logistic_transform", [](const Array& u, const Array& alpha, const Array& beta) {
    const auto out = logistic_transform(vec(u), vec(alpha), vec(beta));
    return Array(static_cast<py::ssize_t>(out.size()), out.data());
  });
  m.def("kernel_distance",
        [](const Array& a, const Array& b, const std::string& kernel, double sigma) {
          return kernel_distance(vec(a), vec(b), parse_kernel(kernel), sigma);
        },
        py::arg("a"), py::arg("b"), py::arg("kernel") = "rbf", py::arg("sigma") = kDefaultSigma);

  py::class_<ModelFile>(m, "Model")
      .def_static("load", [](const std::filesystem::path& p) { return load_model(p); })
      .def_static("from_images", &codebook_model,
                  "Codebook-only model (chi2-equal) with textons learned from the images.")
      .def("save", [](const ModelFile& self, const std::filesystem::path& p) { save_model(p, self); })
      .def_property_readonly("has_metric", [](const ModelFile& s) { return s.metric.has_value(); })
      .def_property_readonly("has_chi_square",
                             [](const ModelFile& s) { return s.chi_square.has_value(); })
      .def_property_readonly("radii", [](const ModelFile& s) { return s.features.scales.radii; });

  m.def("detect",
        [](const Array& image, std::optional<ModelFile> model, const std::string& mode,
           double smooth_radius) {
          const ModelFile resolved = model ? *model : codebook_model({image});
          const Detection d = detector_for(resolved, mode, smooth_radius).detect(image_from(image));
          return py::make_tuple(map_to(d.raw.strength), map_to(d.thinned.strength));
        },
        py::arg("image"), py::arg("model") = py::none(), py::arg("mode") = "chi2-equal",
        py::arg("smooth_radius") = 1.0,
        "Returns (raw, thinned) boundary strength maps.");

  m.def("match_boundaries", [](const Mask& candidate, const Mask& gt, double tolerance) {
    const MatchResult r = match_boundaries(mask_from(candidate), mask_from(gt), tolerance);
    return py::make_tuple(r.matches, mask_to(r.candidate_matched), mask_to(r.gt_matched));
  });

  m.def("evaluate",
        [](const std::vector<Array>& maps, const std::vector<std::vector<Mask>>& annotations,
           int thresholds, double tolerance) {
          std::vector<RealMap> strength;
          for (const auto& a : maps) strength.push_back(map_from(a));
          std::vector<std::vector<BinaryMap>> gt;
          for (const auto& row : annotations) {
            gt.emplace_back();
            for (const auto& a : row) gt.back().push_back(mask_from(a));
          }
          EvalOptions opt;
          opt.thresholds = default_thresholds(thresholds);
          opt.tolerance = tolerance;
          return report_dict(summarize(pr_curve(strength, gt, opt)));
        },
        py::arg("maps"), py::arg("annotations"), py::arg("thresholds") = 33,
        py::arg("tolerance") = 0.0,
        "PR evaluation. tolerance 0 picks the diagonal-relative default per image.");

  m.def("synth_generate",
        [](const std::filesystem::path& root, std::optional<std::string> spec_json) {
          const CorpusSpec spec = spec_json ? parse_corpus_spec(*spec_json) : default_corpus_spec();
          return synth_generate(spec, root).size();
        },
        py::arg("root"), py::arg("spec_json") = py::none(),
        "Writes a synthetic dataset and returns the number of items.");

  m.def("vertical_step", [](int w, int h, int column, double base, double contrast) {
    const SynthSample s = vertical_step(w, h, column, base, contrast);
    return py::make_tuple(image_to(s.image), mask_to(s.boundary));
  });

  m.def("train",
        [](const std::filesystem::path& data, const std::string& kernel, double learning_rate,
           int epochs, int images_per_epoch, int sgd_passes, std::uint64_t seed) {
          const auto items = load_dataset(data);
          const LoadedSplit train = load_split(items, Split::kTrain);
          const LoadedSplit val = load_split(items, Split::kVal);
          TrainConfig cfg;
          cfg.kernel = parse_kernel(kernel);
          cfg.learning_rate = learning_rate;
          cfg.max_epochs = epochs;
          cfg.images_per_epoch = images_per_epoch;
          cfg.sgd_passes = sgd_passes;
          cfg.seed = seed;
          LbmTraining out;
          {
            py::gil_scoped_release release;
            out = train_lbm(train, val, FeatureConfig{}, TextonConfig{}, cfg);
          }
          return py::make_tuple(out.model, out.result.best_validation_f);
        },
        py::arg("data"), py::arg("kernel") = "rbf", py::arg("learning_rate") = 1e-4,
        py::arg("epochs") = 40, py::arg("images_per_epoch") = 20, py::arg("sgd_passes") = 16,
        py::arg("seed") = 1,
        "Train the learned metric on a dataset root. Returns (model, best validation F).");
}
