#include "edgemetric/model_io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "edgemetric/png_io.hpp"

namespace edgemetric {
namespace {

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <typename T>
std::string join(const T& values) {
  std::string out;
  for (const auto& v : values) {
    if (!out.empty()) out += ' ';
    if constexpr (std::is_floating_point_v<std::decay_t<decltype(v)>>)
      out += format_double(v);
    else
      out += std::to_string(v);
  }
  return out;
}

[[noreturn]] void corrupt(const std::string& msg) {
  fail(ErrorCode::kCorruptModel, "model file: " + msg);
}

class Fields {
 public:
  explicit Fields(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kModelMagic)
      corrupt("missing header '" + std::string(kModelMagic) + "'");
    int lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) corrupt("line " + std::to_string(lineno) + " has no '='");
      std::string key = line.substr(0, eq);
      while (!key.empty() && key.back() == ' ') key.pop_back();
      std::string value = line.substr(eq + 1);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      if (!values_.emplace(key, value).second) corrupt("duplicate key " + key);
    }
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  const std::string& str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) corrupt("missing key " + key);
    return it->second;
  }

  template <typename T>
  std::vector<T> list(const std::string& key) const {
    const std::string& s = str(key);
    std::vector<T> out;
    const char* p = s.data();
    const char* end = s.data() + s.size();
    while (p < end) {
      while (p < end && *p == ' ') ++p;
      if (p == end) break;
      T v{};
      auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc() || (res.ptr != end && *res.ptr != ' '))
        corrupt("bad number in " + key);
      out.push_back(v);
      p = res.ptr;
    }
    return out;
  }

  template <typename T>
  T scalar(const std::string& key) const {
    auto v = list<T>(key);
    if (v.size() != 1) corrupt(key + " must hold one value");
    return v.front();
  }

  template <typename T>
  std::vector<T> sized(const std::string& key, std::size_t n) const {
    auto v = list<T>(key);
    if (v.size() != n)
      corrupt(key + " holds " + std::to_string(v.size()) + " values, expected " +
              std::to_string(n));
    return v;
  }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace

std::string serialize_model(const ModelFile& model) {
  std::ostringstream out;
  out << kModelMagic << '\n';
  const FeatureConfig& f = model.features;
  out << "features.bins = " << join(f.bins) << '\n';
  out << "features.radii = " << join(f.scales.radii) << '\n';
  out << "features.n_orient = " << f.scales.n_orient << '\n';
  if (model.textons) {
    out << "textons.n_orient = " << model.textons->n_orient << '\n';
    out << "textons.scales = " << join(model.textons->scales) << '\n';
    out << "textons.k = " << model.textons->k << '\n';
    out << "textons.seed = " << model.textons->seed << '\n';
  }
  if (model.codebook) {
    out << "codebook.k = " << model.codebook->k << '\n';
    out << "codebook.dim = " << model.codebook->dim << '\n';
    out << "codebook.centroids = " << join(model.codebook->centroids) << '\n';
  }
  if (model.metric) {
    const MetricModel& m = *model.metric;
    out << "lbm.kernel = " << to_string(m.kernel) << '\n';
    out << "lbm.sigma = " << format_double(m.sigma) << '\n';
    out << "lbm.N = " << m.n << '\n';
    out << "lbm.M = " << m.m << '\n';
    out << "lbm.scales = " << m.scale_count() << '\n';
    for (int s = 0; s < m.scale_count(); ++s) {
      out << "lbm.scale" << s << ".alpha = " << join(m.scales[s].alpha) << '\n';
      out << "lbm.scale" << s << ".beta = " << join(m.scales[s].beta) << '\n';
    }
  }
  if (model.chi_square) {
    const ChiSquareModel& c = *model.chi_square;
    out << "chi2.mode = "
        << (c.mode == ChiSquareModel::Mode::kEqual ? "equal" : "learned") << '\n';
    out << "chi2.scales = " << c.scales << '\n';
    out << "chi2.weights = " << join(c.weights) << '\n';
  }
  return out.str();
}

ModelFile parse_model(const std::string& text,
                      const std::optional<FeatureConfig>& expected) {
  const Fields fields(text);
  ModelFile model;

  const auto bins = fields.sized<int>("features.bins", kCueCount);
  std::copy(bins.begin(), bins.end(), model.features.bins.begin());
  model.features.scales.radii = fields.list<int>("features.radii");
  model.features.scales.n_orient = fields.scalar<int>("features.n_orient");
  for (int b : model.features.bins)
    if (b < 1) corrupt("bin counts must be positive");
  try {
    model.features.scales.validate();
  } catch (const Error& e) {
    corrupt(e.what());
  }
  if (expected && !(*expected == model.features))
    fail(ErrorCode::kIncompatibleModel,
         "model was built for a different feature layout (bins or radii differ)");

  if (fields.has("textons.k")) {
    TextonConfig t;
    t.n_orient = fields.scalar<int>("textons.n_orient");
    t.scales = fields.list<double>("textons.scales");
    t.k = fields.scalar<int>("textons.k");
    t.seed = fields.scalar<std::uint64_t>("textons.seed");
    model.textons = t;
  }
  if (fields.has("codebook.k")) {
    TextonCodebook cb;
    cb.k = fields.scalar<int>("codebook.k");
    cb.dim = fields.scalar<int>("codebook.dim");
    if (cb.k < 1 || cb.dim < 1) corrupt("codebook dimensions must be positive");
    cb.centroids = fields.sized<double>("codebook.centroids",
                                        static_cast<std::size_t>(cb.k) * cb.dim);
    if (cb.k > model.features.bins[kCueTexton])
      corrupt("codebook has more textons than texton bins");
    model.codebook = cb;
  }
  if (fields.has("lbm.kernel")) {
    MetricModel m;
    const std::string& kernel = fields.str("lbm.kernel");
    if (kernel == "rbf")
      m.kernel = KernelType::kRbf;
    else if (kernel == "linear")
      m.kernel = KernelType::kLinear;
    else
      corrupt("unknown kernel " + kernel);
    m.sigma = fields.scalar<double>("lbm.sigma");
    m.n = fields.scalar<int>("lbm.N");
    m.m = fields.scalar<int>("lbm.M");
    m.features = model.features;
    if (m.m != model.features.total_bins())
      corrupt("lbm.M = " + std::to_string(m.m) + " does not match the bin layout (" +
              std::to_string(model.features.total_bins()) + ")");
    if (m.n < 1) corrupt("lbm.N must be positive");
    const int scales = fields.scalar<int>("lbm.scales");
    if (scales != model.features.scales.scales()) corrupt("lbm.scales does not match radii");
    for (int s = 0; s < scales; ++s) {
      const std::string prefix = "lbm.scale" + std::to_string(s);
      ScaleParams p;
      p.alpha = fields.sized<double>(prefix + ".alpha", m.n);
      p.beta = fields.sized<double>(prefix + ".beta", static_cast<std::size_t>(m.n) * m.m);
      m.scales.push_back(std::move(p));
    }
    m.validate();
    model.metric = std::move(m);
  }
  if (fields.has("chi2.mode")) {
    ChiSquareModel c;
    const std::string& mode = fields.str("chi2.mode");
    if (mode == "equal")
      c.mode = ChiSquareModel::Mode::kEqual;
    else if (mode == "learned")
      c.mode = ChiSquareModel::Mode::kLearned;
    else
      corrupt("unknown chi2 mode " + mode);
    c.scales = fields.scalar<int>("chi2.scales");
    if (c.scales != model.features.scales.scales()) corrupt("chi2.scales does not match radii");
    c.weights = fields.sized<double>("chi2.weights",
                                     static_cast<std::size_t>(kCueCount) * c.scales);
    try {
      c.validate();
    } catch (const Error& e) {
      corrupt(e.what());
    }
    model.chi_square = std::move(c);
  }
  return model;
}

void save_model(const std::filesystem::path& path, const ModelFile& model) {
  write_file_atomically(path, serialize_model(model));
}

ModelFile load_model(const std::filesystem::path& path,
                     const std::optional<FeatureConfig>& expected) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open model file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str(), expected);
}

}  // namespace edgemetric
