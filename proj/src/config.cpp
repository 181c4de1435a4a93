#include "p2pfl/config.hpp"

#include <cmath>
#include <initializer_list>
#include <limits>
#include <set>

#include "p2pfl/error.hpp"

namespace p2pfl {
namespace {

using nlohmann::json;

[[noreturn]] void invalid(const std::string& path, const std::string& message) {
  throw ConfigError(ConfigError::Kind::kValidation, path, message);
}

// Path-tracking view over one JSON node.
class Node {
 public:
  Node(const json& value, std::string path) : value_(&value), path_(std::move(path)) {}

  const json& value() const { return *value_; }
  const std::string& path() const { return path_; }

  bool has(const char* key) const { return value_->is_object() && value_->contains(key); }

  Node at(const char* key) const {
    if (!has(key)) invalid(path_ + "." + key, "required key is missing");
    return Node(value_->at(key), path_ + "." + key);
  }
  Node at(std::size_t index) const {
    return Node(value_->at(index), path_ + "[" + std::to_string(index) + "]");
  }

  void expect_object(std::initializer_list<const char*> allowed) const {
    if (!value_->is_object()) invalid(path_, "expected an object");
    const std::set<std::string> known(allowed.begin(), allowed.end());
    for (const auto& [key, _] : value_->items()) {
      if (!known.contains(key)) {
        throw ConfigError(ConfigError::Kind::kUnknownKey, path_ + "." + key, "unknown key");
      }
    }
  }

  std::size_t array_size() const {
    if (!value_->is_array()) invalid(path_, "expected an array");
    return value_->size();
  }

  double number() const {
    if (!value_->is_number()) invalid(path_, "expected a number");
    const double v = value_->get<double>();
    if (!std::isfinite(v)) invalid(path_, "expected a finite number");
    return v;
  }

  std::uint64_t unsigned_integer(std::uint64_t minimum) const {
    if (!value_->is_number_integer()) invalid(path_, "expected an integer");
    if (value_->is_number_unsigned()) {
      const auto v = value_->get<std::uint64_t>();
      if (v < minimum) invalid(path_, "must be >= " + std::to_string(minimum));
      return v;
    }
    const auto v = value_->get<std::int64_t>();
    if (v < 0 || static_cast<std::uint64_t>(v) < minimum) {
      invalid(path_, "must be >= " + std::to_string(minimum));
    }
    return static_cast<std::uint64_t>(v);
  }

  bool boolean() const {
    if (!value_->is_boolean()) invalid(path_, "expected true or false");
    return value_->get<bool>();
  }

  std::string string() const {
    if (!value_->is_string()) invalid(path_, "expected a string");
    return value_->get<std::string>();
  }

  Eigen::VectorXd vector() const {
    const std::size_t n = array_size();
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) v(static_cast<Eigen::Index>(k)) = at(k).number();
    return v;
  }

  Eigen::MatrixXd square_matrix() const {
    const std::size_t n = array_size();
    if (n == 0) invalid(path_, "matrix must be non-empty");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const Node row = at(i);
      if (row.array_size() != n) {
        invalid(row.path(), "row has " + std::to_string(row.value().size()) +
                                " entries, expected " + std::to_string(n));
      }
      for (std::size_t j = 0; j < n; ++j) {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row.at(j).number();
      }
    }
    return m;
  }

 private:
  const json* value_;
  std::string path_;
};

WeightMatrix read_graph(const Node& graph) {
  graph.expect_object({"weights", "cooperation", "horizon"});
  const Node weights = graph.at("weights");
  const Eigen::MatrixXd raw = weights.square_matrix();
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    const std::string row_path = weights.path() + "[" + std::to_string(i) + "]";
    if ((raw.row(i).array() < 0.0).any()) invalid(row_path, "NegativeWeight: row has a negative entry");
    const double sum = raw.row(i).sum();
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      invalid(row_path, "NotStochastic: row " + std::to_string(i) + " sums to " + std::to_string(sum));
    }
  }
  try {
    return validate_weight_matrix(raw);
  } catch (const Error& e) {
    invalid(weights.path(), e.what());
  }
}

InstanceDistribution read_instances(const Node& node) {
  node.expect_object({"uniform", "discrete"});
  if (node.has("uniform") == node.has("discrete")) {
    invalid(node.path(), "give exactly one of \"uniform\" or \"discrete\"");
  }
  try {
    if (node.has("uniform")) {
      const Node u = node.at("uniform");
      u.expect_object({"low", "high"});
      const Eigen::VectorXd low = u.at("low").vector();
      const Eigen::VectorXd high = u.at("high").vector();
      if (low.size() != high.size()) invalid(u.path(), "low and high differ in length");
      for (Eigen::Index k = 0; k < low.size(); ++k) {
        if (low(k) > high(k)) invalid(u.path() + ".low[" + std::to_string(k) + "]", "exceeds high");
      }
      return InstanceDistribution::uniform_box(low, high);
    }
    const Node d = node.at("discrete");
    d.expect_object({"points", "probabilities"});
    const Node points = d.at("points");
    std::vector<Instance> support;
    for (std::size_t k = 0; k < points.array_size(); ++k) support.push_back(points.at(k).vector());
    const Eigen::VectorXd probs = d.at("probabilities").vector();
    return InstanceDistribution::discrete(std::move(support),
                                          std::vector<double>(probs.data(), probs.data() + probs.size()));
  } catch (const Error& e) {
    invalid(node.path(), e.what());
  }
}

std::shared_ptr<const LikelihoodModel> read_model(const Node& node) {
  node.expect_object({"family", "link", "classes", "intercept", "truth", "noise_std", "instances"});
  const std::string family = node.at("family").string();
  const bool intercept = node.has("intercept") ? node.at("intercept").boolean() : true;
  const Parameter truth = node.at("truth").vector();
  InstanceDistribution instances = read_instances(node.at("instances"));
  try {
    if (family == "gaussian") {
      if (node.has("link") || node.has("classes")) {
        invalid(node.path(), "gaussian nodes take no link or classes");
      }
      const double noise = node.at("noise_std").number();
      if (!(noise > 0.0)) invalid(node.path() + ".noise_std", "must be positive");
      return std::make_shared<LinearGaussianModel>(noise, std::move(instances), truth, intercept);
    }
    if (family != "bernoulli" && family != "categorical") {
      invalid(node.path() + ".family", "expected bernoulli, categorical or gaussian");
    }
    if (node.has("noise_std")) invalid(node.path() + ".noise_std", "only gaussian nodes have noise");
    ProbabilityLink link = ProbabilityLink::kLogistic;
    if (node.has("link")) {
      const std::string name = node.at("link").string();
      if (name == "identity") {
        link = ProbabilityLink::kIdentity;
      } else if (name != "logistic") {
        invalid(node.path() + ".link", "expected logistic or identity");
      }
    }
    std::size_t classes = 2;
    if (family == "categorical") {
      classes = static_cast<std::size_t>(node.at("classes").unsigned_integer(2));
    } else if (node.has("classes") && node.at("classes").unsigned_integer(2) != 2) {
      invalid(node.path() + ".classes", "bernoulli nodes have two classes");
    }
    return std::make_shared<CategoricalModel>(classes, link, std::move(instances), truth, intercept);
  } catch (const Error& e) {
    invalid(node.path(), e.what());
  }
}

void read_bound(const Node& node, BoundOverrides& out) {
  node.expect_object({"n_nodes", "n_params", "C", "k_theta", "lambda_max"});
  if (node.has("n_nodes")) out.n_nodes = node.at("n_nodes").unsigned_integer(1);
  if (node.has("n_params")) out.n_params = node.at("n_params").unsigned_integer(1);
  if (node.has("C")) {
    const double c = node.at("C").number();
    if (!(c > 0.0)) invalid(node.path() + ".C", "must be positive");
    out.log_ratio_bound = c;
  }
  if (node.has("k_theta")) {
    const Node k = node.at("k_theta");
    if (k.value().is_string()) {
      if (k.string() != "inf") invalid(k.path(), "expected a positive number or \"inf\"");
      out.k_theta = std::numeric_limits<double>::infinity();
    } else {
      const double v = k.number();
      if (!(v > 0.0)) invalid(k.path(), "must be positive");
      out.k_theta = v;
    }
  }
  if (node.has("lambda_max")) {
    const double l = node.at("lambda_max").number();
    if (!(l >= 0.0 && l < 1.0)) invalid(node.path() + ".lambda_max", "must lie in [0, 1)");
    out.lambda_max = l;
  }
}

}  // namespace

ConfigError::ConfigError(Kind kind, std::string path, const std::string& message)
    : std::runtime_error(std::string(p2pfl::to_string(kind)) + " at " + path + ": " + message),
      kind_(kind),
      path_(std::move(path)) {}

std::string_view to_string(ConfigError::Kind kind) {
  switch (kind) {
    case ConfigError::Kind::kSyntax: return "SyntaxError";
    case ConfigError::Kind::kValidation: return "ValidationError";
    case ConfigError::Kind::kUnknownKey: return "UnknownKey";
  }
  return "ConfigError";
}

ConfigDocument parse_config(std::string_view text) {
  json tree;
  try {
    tree = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(ConfigError::Kind::kSyntax, "byte " + std::to_string(e.byte), e.what());
  }

  const Node root(tree, "$");
  root.expect_object({"schema_version", "scenario", "output"});
  // Top-level paths drop the "$." prefix.
  const Node version(root.at("schema_version").value(), "schema_version");
  if (version.unsigned_integer(0) != 1) invalid("schema_version", "must equal 1");
  const Node scenario(root.at("scenario").value(), "scenario");
  scenario.expect_object({"graph", "engine", "parameters", "prior", "nodes", "rounds", "trials",
                          "seed", "delta", "mc_samples", "baseline", "test_set", "bound"});

  const Node graph = scenario.at("graph");
  ConfigDocument doc(Scenario(read_graph(graph)));
  doc.tree = tree;
  Scenario& s = doc.scenario;
  if (graph.has("cooperation")) s.cooperate = graph.at("cooperation").boolean();
  if (graph.has("horizon")) {
    doc.horizon = static_cast<std::size_t>(graph.at("horizon").unsigned_integer(1));
  }

  if (scenario.has("engine")) {
    const std::string engine = scenario.at("engine").string();
    if (engine == "gaussian") {
      s.engine = Engine::kGaussian;
    } else if (engine != "discrete") {
      invalid("scenario.engine", "expected discrete or gaussian");
    }
  }
  if (scenario.has("rounds")) s.n_rounds = scenario.at("rounds").unsigned_integer(1);
  if (scenario.has("trials")) s.trials = scenario.at("trials").unsigned_integer(1);
  if (scenario.has("seed")) s.master_seed = scenario.at("seed").unsigned_integer(0);
  if (scenario.has("mc_samples")) s.mc_samples = scenario.at("mc_samples").unsigned_integer(1);
  if (scenario.has("baseline")) s.run_baseline = scenario.at("baseline").boolean();
  if (scenario.has("delta")) {
    const double delta = scenario.at("delta").number();
    if (!(delta > 0.0 && delta < 1.0)) invalid("scenario.delta", "must lie in (0, 1)");
    s.delta = delta;
  }
  if (scenario.has("bound")) read_bound(scenario.at("bound"), doc.bound);

  if (scenario.has("parameters")) {
    const Node params = scenario.at("parameters");
    std::vector<Parameter> points;
    for (std::size_t k = 0; k < params.array_size(); ++k) points.push_back(params.at(k).vector());
    try {
      s.theta_set.emplace(std::move(points));
    } catch (const Error& e) {
      invalid(params.path(), e.what());
    }
  }

  if (scenario.has("prior")) {
    const Node prior = scenario.at("prior");
    if (s.engine == Engine::kDiscrete) {
      prior.expect_object({"probabilities"});
      const Node probs = prior.at("probabilities");
      const Eigen::VectorXd p = probs.vector();
      if (!s.theta_set || static_cast<std::size_t>(p.size()) != s.theta_set->size()) {
        invalid(probs.path(), "needs one probability per parameter");
      }
      if (!((p.array() > 0.0).all())) invalid(probs.path(), "prior masses must be positive");
      s.discrete_prior = belief_from_probabilities(p);
    } else {
      prior.expect_object({"mean", "covariance"});
      const Eigen::VectorXd mean = prior.at("mean").vector();
      const Node cov = prior.at("covariance");
      const Eigen::MatrixXd covariance = cov.square_matrix();
      if (covariance.rows() != mean.size()) invalid(cov.path(), "shape does not match the mean");
      try {
        s.gaussian_prior = GaussianBelief::from_covariance(mean, covariance);
      } catch (const Error& e) {
        invalid(cov.path(), e.what());
      }
    }
  }

  if (scenario.has("nodes")) {
    const Node nodes = scenario.at("nodes");
    if (nodes.array_size() != s.graph.size()) {
      invalid(nodes.path(), "has " + std::to_string(nodes.value().size()) + " entries for " +
                                std::to_string(s.graph.size()) + " graph nodes");
    }
    for (std::size_t i = 0; i < nodes.array_size(); ++i) s.models.push_back(read_model(nodes.at(i)));
    try {
      validate_scenario(s);
    } catch (const Error& e) {
      invalid("scenario", e.what());
    }
  }

  if (scenario.has("test_set")) {
    const Node t = scenario.at("test_set");
    t.expect_object({"size", "low", "high", "points", "labels"});
    if (t.has("points")) {
      if (t.has("size") || t.has("low") || t.has("high")) {
        invalid(t.path(), "give either points/labels or size/low/high");
      }
      const Node points = t.at("points");
      const Eigen::VectorXd labels = t.at("labels").vector();
      if (static_cast<std::size_t>(labels.size()) != points.array_size()) {
        invalid(t.path() + ".labels", "needs one label per point");
      }
      std::vector<std::pair<Eigen::VectorXd, double>> pairs;
      for (std::size_t k = 0; k < points.array_size(); ++k) {
        pairs.emplace_back(points.at(k).vector(), labels(static_cast<Eigen::Index>(k)));
      }
      doc.test_points = std::move(pairs);
    } else {
      TestSetSpec spec;
      if (t.has("size")) spec.size = t.at("size").unsigned_integer(1);
      spec.low = t.at("low").vector();
      spec.high = t.at("high").vector();
      if (spec.low.size() != spec.high.size()) invalid(t.path(), "low and high differ in length");
      doc.test_set_spec = spec;
    }
  }

  if (root.has("output")) {
    const Node out(root.at("output").value(), "output");
    out.expect_object({"dir", "format"});
    if (out.has("dir")) doc.output.dir = out.at("dir").string();
    if (out.has("format")) {
      doc.output.format = out.at("format").string();
      if (doc.output.format != "csv" && doc.output.format != "json") {
        invalid("output.format", "expected csv or json");
      }
    }
  }
  return doc;
}

std::string serialize_config(const ConfigDocument& doc) { return doc.tree.dump(2) + "\n"; }

Scenario runnable_scenario(const ConfigDocument& doc) {
  if (!doc.has_nodes()) invalid("scenario.nodes", "required to run a simulation");
  Scenario s = doc.scenario;
  if (s.engine != Engine::kGaussian) return s;

  const auto& reference = dynamic_cast<const LinearGaussianModel&>(*s.models.front());
  try {
    if (doc.test_points) {
      std::vector<Eigen::VectorXd> xs;
      std::vector<double> ys;
      for (const auto& [x, y] : *doc.test_points) {
        if (x.size() != reference.instances().low().size()) {
          invalid("scenario.test_set.points", "point dimension does not match the model");
        }
        xs.push_back(x);
        ys.push_back(y);
      }
      s.test_set = TestSet::explicit_points(std::move(xs), std::move(ys));
    } else {
      TestSetSpec spec;
      if (doc.test_set_spec) {
        spec = *doc.test_set_spec;
      } else {
        // Default: union of the nodes' instance ranges.
        spec.low = reference.instances().low();
        spec.high = reference.instances().high();
        for (const auto& m : s.models) {
          spec.low = spec.low.cwiseMin(m->instances().low());
          spec.high = spec.high.cwiseMax(m->instances().high());
        }
      }
      s.test_set = TestSet::generate(reference, spec.size, spec.low, spec.high, s.master_seed);
    }
  } catch (const Error& e) {
    invalid("scenario.test_set", e.what());
  }
  return s;
}

}  // namespace p2pfl
