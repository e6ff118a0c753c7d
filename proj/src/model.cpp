#include "vandet/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "vandet/text.hpp"

namespace vandet {

namespace {

// log(1 + e^t) without overflow for large |t|.
double log1pexp(double t) {
  if (t > 0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// The regularized logistic objective over sparse instances, with the bias
// handled as an implicit appended constant feature. Caches the per-instance
// decision values (from fun) and curvature weights (from grad) the way the
// trust-region loop consumes them: fun at a point, then grad at the same
// point, then Hessian-vector products at that gradient's point.
class LrFunction {
 public:
  LrFunction(const std::vector<LabeledInstance>& instances, double c,
             double bias_value, std::int32_t n_features)
      : instances_(instances),
        c_(c),
        bias_value_(bias_value > 0 ? bias_value : 0.0),
        n_features_(n_features) {
    if (n_features_ < 1) throw std::invalid_argument("n_features must be >= 1");
    for (const LabeledInstance& inst : instances_) {
      if (inst.label != 1 && inst.label != -1) {
        throw std::invalid_argument("labels must be +1 or -1");
      }
      if (inst.features.max_id() >= n_features_) {
        throw std::invalid_argument(
            "feature id " + std::to_string(inst.features.max_id()) +
            " out of range for n_features = " + std::to_string(n_features_));
      }
    }
    z_.resize(static_cast<Eigen::Index>(instances_.size()));
    d_.resize(static_cast<Eigen::Index>(instances_.size()));
  }

  bool has_bias() const { return bias_value_ > 0; }
  Eigen::Index dim() const { return n_features_ + (has_bias() ? 1 : 0); }

  double dot(const Eigen::VectorXd& w, const SparseVector& x) const {
    double s = 0;
    for (const SparseEntry& e : x) s += w[e.id] * e.value;
    if (has_bias()) s += w[n_features_] * bias_value_;
    return s;
  }

  void add_scaled(double coef, const SparseVector& x,
                  Eigen::VectorXd& out) const {
    for (const SparseEntry& e : x) out[e.id] += coef * e.value;
    if (has_bias()) out[n_features_] += coef * bias_value_;
  }

  double fun(const Eigen::VectorXd& w) {
    check_dim(w);
    double loss = 0;
    for (std::size_t i = 0; i < instances_.size(); ++i) {
      const double z = dot(w, instances_[i].features);
      z_[static_cast<Eigen::Index>(i)] = z;
      loss += log1pexp(-instances_[i].label * z);
    }
    return 0.5 * w.squaredNorm() + c_ * loss;
  }

  // Requires fun() to have been evaluated at the same w.
  Eigen::VectorXd grad(const Eigen::VectorXd& w) {
    check_dim(w);
    Eigen::VectorXd g = w;
    for (std::size_t i = 0; i < instances_.size(); ++i) {
      const double y = instances_[i].label;
      const double sig = sigmoid(y * z_[static_cast<Eigen::Index>(i)]);
      d_[static_cast<Eigen::Index>(i)] = sig * (1.0 - sig);
      add_scaled(c_ * (sig - 1.0) * y, instances_[i].features, g);
    }
    return g;
  }

  // Requires grad() to have been evaluated at the current iterate.
  Eigen::VectorXd Hv(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out = v;
    for (std::size_t i = 0; i < instances_.size(); ++i) {
      const double xv = dot(v, instances_[i].features);
      add_scaled(c_ * d_[static_cast<Eigen::Index>(i)] * xv,
                 instances_[i].features, out);
    }
    return out;
  }

 private:
  void check_dim(const Eigen::VectorXd& w) const {
    if (w.size() != dim()) {
      throw std::invalid_argument("weight vector has dimension " +
                                  std::to_string(w.size()) + ", expected " +
                                  std::to_string(dim()));
    }
  }

  const std::vector<LabeledInstance>& instances_;
  double c_;
  double bias_value_;
  std::int32_t n_features_;
  Eigen::VectorXd z_;  // decision value per instance (cached by fun)
  Eigen::VectorXd d_;  // sigma*(1-sigma) per instance (cached by grad)
};

// Steihaug conjugate-gradient solve of H s = -g restricted to ||s|| <= delta.
// On return r = -g - H s (the residual).
int solve_trust_region_subproblem(const LrFunction& f, double delta,
                                  const Eigen::VectorXd& g, Eigen::VectorXd& s,
                                  Eigen::VectorXd& r) {
  s = Eigen::VectorXd::Zero(g.size());
  r = -g;
  Eigen::VectorXd d = r;
  const double cg_tol = 0.1 * g.norm();
  double r_sq = r.squaredNorm();
  int cg_iter = 0;
  const int max_cg = std::max<int>(2 * static_cast<int>(g.size()), 100);
  while (std::sqrt(r_sq) > cg_tol && cg_iter < max_cg) {
    ++cg_iter;
    const Eigen::VectorXd hd = f.Hv(d);
    // H = I + (positive semidefinite) keeps d.hd >= d.d > 0.
    double alpha = r_sq / d.dot(hd);
    s += alpha * d;
    if (s.norm() > delta) {
      s -= alpha * d;
      // Step to the trust-region boundary along d.
      const double sd = s.dot(d);
      const double ss = s.squaredNorm();
      const double dd = d.squaredNorm();
      const double dsq = delta * delta;
      const double rad = std::sqrt(sd * sd + dd * (dsq - ss));
      alpha = sd >= 0 ? (dsq - ss) / (sd + rad) : (rad - sd) / dd;
      s += alpha * d;
      r -= alpha * hd;
      break;
    }
    r -= alpha * hd;
    const double r_sq_new = r.squaredNorm();
    d = r + (r_sq_new / r_sq) * d;
    r_sq = r_sq_new;
  }
  return cg_iter;
}

}  // namespace

double lr_objective(const Eigen::VectorXd& w,
                    const std::vector<LabeledInstance>& instances, double c,
                    double bias_value, std::int32_t n_features) {
  LrFunction f(instances, c, bias_value, n_features);
  return f.fun(w);
}

Eigen::VectorXd lr_gradient(const Eigen::VectorXd& w,
                            const std::vector<LabeledInstance>& instances,
                            double c, double bias_value,
                            std::int32_t n_features) {
  LrFunction f(instances, c, bias_value, n_features);
  f.fun(w);
  return f.grad(w);
}

LinearModel train(const std::vector<LabeledInstance>& instances,
                  std::int32_t n_features, const TrainConfig& cfg) {
  if (instances.empty()) throw std::invalid_argument("no training instances");
  if (cfg.c <= 0) throw std::invalid_argument("penalty c must be > 0");
  if (cfg.tolerance <= 0) throw std::invalid_argument("tolerance must be > 0");
  if (cfg.max_iterations < 1) {
    throw std::invalid_argument("max_iterations must be >= 1");
  }
  const std::int32_t inferred = infer_feature_count(instances);
  if (n_features <= 0) {
    n_features = std::max<std::int32_t>(inferred, 1);
  } else if (inferred > n_features) {
    throw std::invalid_argument("instances use feature ids beyond n_features");
  }

  LrFunction fobj(instances, cfg.c, cfg.bias_value, n_features);

  // Trust-region update constants (standard values for this scheme).
  constexpr double kEta0 = 1e-4, kEta1 = 0.25, kEta2 = 0.75;
  constexpr double kSigma1 = 0.25, kSigma2 = 0.5, kSigma3 = 4.0;

  Eigen::VectorXd w = Eigen::VectorXd::Zero(fobj.dim());
  double f = fobj.fun(w);
  Eigen::VectorXd g = fobj.grad(w);
  const double gnorm0 = g.norm();
  const double stop = cfg.tolerance * std::max(1.0, gnorm0);
  double gnorm = gnorm0;
  double delta = gnorm0;

  bool converged = gnorm <= stop;
  std::string stall;
  int iter = 1;
  int passes = 0;  // counts rejected steps too
  const int max_passes = cfg.max_iterations * 100;
  while (!converged && iter <= cfg.max_iterations && ++passes <= max_passes) {
    Eigen::VectorXd s, r;
    solve_trust_region_subproblem(fobj, delta, g, s, r);
    const Eigen::VectorXd w_new = w + s;
    const double gs = g.dot(s);
    const double predicted = -0.5 * (gs - s.dot(r));
    const double f_new = fobj.fun(w_new);
    const double actual = f - f_new;
    const double snorm = s.norm();
    if (iter == 1) delta = std::min(delta, snorm);

    const double denom = f_new - f - gs;
    const double alpha =
        denom <= 0 ? kSigma3 : std::max(kSigma1, -0.5 * (gs / denom));
    if (actual < kEta0 * predicted) {
      delta = std::min(std::max(alpha, kSigma1) * snorm, kSigma2 * delta);
    } else if (actual < kEta1 * predicted) {
      delta = std::max(kSigma1 * delta,
                       std::min(alpha * snorm, kSigma2 * delta));
    } else if (actual < kEta2 * predicted) {
      delta = std::max(kSigma1 * delta,
                       std::min(alpha * snorm, kSigma3 * delta));
    } else {
      delta = std::max(delta, std::min(alpha * snorm, kSigma3 * delta));
    }

    if (actual > kEta0 * predicted) {
      ++iter;
      w = w_new;
      f = f_new;
      g = fobj.grad(w);
      gnorm = g.norm();
      if (gnorm <= stop) {
        converged = true;
        break;
      }
    }
    if (f < -1e32) {
      stall = "objective diverged below -1e32";
      break;
    }
    if (std::abs(actual) <= 0 && predicted <= 0) {
      stall = "no further reduction possible";
      break;
    }
    if (std::abs(actual) <= 1e-12 * std::abs(f) &&
        std::abs(predicted) <= 1e-12 * std::abs(f)) {
      stall = "step reductions below numerical precision";
      break;
    }
  }

  if (!converged) {
    std::ostringstream msg;
    msg << "solver did not reach gradient norm " << stop << " (got " << gnorm
        << ") after " << (iter - 1) << " accepted steps";
    if (!stall.empty()) msg << ": " << stall;
    throw TrainFailure(msg.str(), std::move(w), gnorm, iter - 1);
  }

  LinearModel model;
  model.n_features = n_features;
  model.weights = w.head(n_features);
  if (fobj.has_bias()) {
    model.bias_value = cfg.bias_value;
    model.bias_weight = w[n_features];
  }
  model.c = cfg.c;
  return model;
}

double LinearModel::decision_value(const SparseVector& x) const {
  double s = 0;
  for (const SparseEntry& e : x) {
    if (e.id < n_features) s += weights[e.id] * e.value;
  }
  return s + bias_weight * bias_value;
}

double LinearModel::predict_raw(const SparseVector& x) const {
  return sigmoid(decision_value(x));
}

double LinearModel::predict(const SparseVector& x) const {
  const double p = predict_raw(x);
  return calibration ? (*calibration)(p) : p;
}

IsotonicMap::IsotonicMap(std::vector<double> breakpoints,
                         std::vector<double> values)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
  if (values_.size() != breakpoints_.size() + 1) {
    throw std::invalid_argument("need exactly one value per block");
  }
  for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
    if (!std::isfinite(breakpoints_[i])) {
      throw std::invalid_argument("breakpoints must be finite");
    }
    if (i > 0 && breakpoints_[i - 1] >= breakpoints_[i]) {
      throw std::invalid_argument("breakpoints must be strictly increasing");
    }
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!(values_[i] >= 0 && values_[i] <= 1)) {
      throw std::invalid_argument("calibrated values must lie in [0, 1]");
    }
    if (i > 0 && values_[i - 1] > values_[i]) {
      throw std::invalid_argument("calibrated values must be nondecreasing");
    }
  }
}

double IsotonicMap::operator()(double score) const {
  const auto it =
      std::upper_bound(breakpoints_.begin(), breakpoints_.end(), score);
  return values_[static_cast<std::size_t>(it - breakpoints_.begin())];
}

IsotonicMap fit_pav(const std::vector<double>& scores,
                    const std::vector<int>& labels, std::ostream* warnings) {
  if (scores.empty()) throw std::invalid_argument("no calibration points");
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("scores and labels differ in length");
  }
  for (int y : labels) {
    if (y != 0 && y != 1) {
      throw std::invalid_argument("calibration labels must be 0 or 1");
    }
  }
  if (scores.size() < 1000 && warnings) {
    *warnings << "warning: calibration fitted on only " << scores.size()
              << " points; at least 1000 recommended\n";
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  struct Block {
    double sum;
    double count;
    double lo, hi;  // score range covered
    double mean() const { return sum / count; }
  };
  std::vector<Block> blocks;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const double score = scores[order[k]];
    const double label = labels[order[k]];
    if (!blocks.empty() && blocks.back().hi == score) {
      blocks.back().sum += label;  // equal scores share one initial block
      blocks.back().count += 1;
    } else {
      blocks.push_back({label, 1, score, score});
    }
    while (blocks.size() >= 2 &&
           blocks[blocks.size() - 2].mean() >= blocks.back().mean()) {
      Block merged = blocks[blocks.size() - 2];
      merged.sum += blocks.back().sum;
      merged.count += blocks.back().count;
      merged.hi = blocks.back().hi;
      blocks.pop_back();
      blocks.back() = merged;
    }
  }

  std::vector<double> breakpoints, values;
  breakpoints.reserve(blocks.size() - 1);
  values.reserve(blocks.size());
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    values.push_back(std::clamp(blocks[k].mean(), 0.0, 1.0));
    if (k + 1 < blocks.size()) {
      breakpoints.push_back(0.5 * (blocks[k].hi + blocks[k + 1].lo));
    }
  }
  return IsotonicMap(std::move(breakpoints), std::move(values));
}

namespace {

constexpr const char* kModelMagic = "vandet-model 1";

std::string expect_line(std::istream& in, const std::string& context) {
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("model file truncated at " + context);
  }
  return line;
}

std::string expect_field(std::istream& in, const std::string& key) {
  const std::string line = expect_line(in, key);
  if (!line.starts_with(key + " ")) {
    throw std::runtime_error("model file: expected '" + key + " ...', got '" +
                             line + "'");
  }
  return line.substr(key.size() + 1);
}

double parse_double(const std::string& s, const std::string& context) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (errno != 0 || end == s.c_str() || *end != '\0') {
    throw std::runtime_error("model file: bad number '" + s + "' in " +
                             context);
  }
  return v;
}

}  // namespace

void save_model(const std::filesystem::path& path, const LinearModel& model,
                const std::string& comment) {
  if (model.n_features < 1 ||
      model.weights.size() != model.n_features) {
    throw std::invalid_argument("model weight vector size mismatch");
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  if (!comment.empty()) out << "# " << comment << '\n';
  out << kModelMagic << '\n';
  out << "n_features " << model.n_features << '\n';
  out << "bias_value " << format_g17(model.bias_value) << '\n';
  out << "scaling " << to_string(model.scaling) << '\n';
  out << "c " << format_g17(model.c) << '\n';
  out << "bias_weight " << format_g17(model.bias_weight) << '\n';
  out << "weights\n";
  for (std::int32_t i = 0; i < model.n_features; ++i) {
    out << format_g17(model.weights[i]) << '\n';
  }
  if (model.calibration) {
    const IsotonicMap& map = *model.calibration;
    out << "calibration " << map.breakpoints().size() << '\n';
    for (std::size_t i = 0; i < map.breakpoints().size(); ++i) {
      out << format_g17(map.breakpoints()[i]) << ' '
          << format_g17(map.values()[i]) << '\n';
    }
    out << "inf " << format_g17(map.values().back()) << '\n';
  }
  out << "end\n";
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

LinearModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string header = expect_line(in, "header");
  while (header.starts_with("#")) header = expect_line(in, "header");
  if (header != kModelMagic) {
    throw std::runtime_error(path.string() + ": not a model file");
  }
  LinearModel model;
  model.n_features =
      static_cast<std::int32_t>(parse_double(expect_field(in, "n_features"),
                                             "n_features"));
  if (model.n_features < 1) {
    throw std::runtime_error(path.string() + ": bad n_features");
  }
  model.bias_value = parse_double(expect_field(in, "bias_value"), "bias_value");
  model.scaling = scaling_kind_from_string(expect_field(in, "scaling"));
  model.c = parse_double(expect_field(in, "c"), "c");
  model.bias_weight =
      parse_double(expect_field(in, "bias_weight"), "bias_weight");
  if (expect_line(in, "weights") != "weights") {
    throw std::runtime_error(path.string() + ": missing weights section");
  }
  model.weights.resize(model.n_features);
  for (std::int32_t i = 0; i < model.n_features; ++i) {
    model.weights[i] = parse_double(expect_line(in, "weight"), "weights");
  }
  std::string line = expect_line(in, "trailer");
  if (line.starts_with("calibration ")) {
    const long k = std::strtol(line.c_str() + 12, nullptr, 10);
    if (k < 0) throw std::runtime_error(path.string() + ": bad block count");
    std::vector<double> breakpoints, values;
    for (long i = 0; i <= k; ++i) {
      const std::string pair = expect_line(in, "calibration pair");
      const std::size_t space = pair.find(' ');
      if (space == std::string::npos) {
        throw std::runtime_error(path.string() + ": bad calibration pair");
      }
      const double bp = parse_double(pair.substr(0, space), "breakpoint");
      values.push_back(parse_double(pair.substr(space + 1), "value"));
      if (i < k) {
        breakpoints.push_back(bp);
      } else if (bp != std::numeric_limits<double>::infinity()) {
        throw std::runtime_error(path.string() +
                                 ": final breakpoint must be inf");
      }
    }
    model.calibration.emplace(std::move(breakpoints), std::move(values));
    line = expect_line(in, "trailer");
  }
  if (line != "end") {
    throw std::runtime_error(path.string() + ": missing end marker");
  }
  return model;
}

}  // namespace vandet
