#include "rll/encoder.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "rll/encoder_kernels.hpp"
#include "rll/error.hpp"
#include "rll/io.hpp"
#include "rll/rng.hpp"

namespace rll {

std::size_t EncoderParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) {
    n += layer.weights.size() + layer.bias.size();
  }
  return n;
}

namespace {

void check_config(const EncoderConfig& cfg) {
  if (cfg.layer_sizes.size() < 2) {
    throw Error("encoder needs at least two layer sizes (input and embedding)");
  }
  for (int s : cfg.layer_sizes) {
    if (s < 1) {
      throw Error("layer sizes must be positive");
    }
  }
  if (cfg.eta <= 0.0) {
    throw Error("eta must be positive");
  }
  if (cfg.learning_rate < 0.0) {
    throw Error("learning rate must be non-negative");
  }
  if (cfg.epochs < 1) {
    throw Error("epochs must be >= 1");
  }
  if (cfg.init_scale <= 0.0) {
    throw Error("init_scale must be positive");
  }
}

}  // namespace

EncoderParams init_params(const EncoderConfig& cfg) {
  check_config(cfg);
  Rng rng(cfg.seed);
  EncoderParams params;
  params.layers.resize(cfg.layer_sizes.size() - 1);
  for (std::size_t l = 0; l + 1 < cfg.layer_sizes.size(); ++l) {
    Layer& layer = params.layers[l];
    layer.in = cfg.layer_sizes[l];
    layer.out = cfg.layer_sizes[l + 1];
    layer.weights.resize(static_cast<std::size_t>(layer.out) * layer.in);
    layer.bias.assign(layer.out, 0.0);
    const double bound = cfg.init_scale / std::sqrt(static_cast<double>(layer.in));
    for (auto& w : layer.weights) {
      w = rng.uniform(-bound, bound);
    }
  }
  return params;
}

EncoderParams zeros_like(const EncoderParams& params) {
  EncoderParams z = params;
  for (auto& layer : z.layers) {
    std::fill(layer.weights.begin(), layer.weights.end(), 0.0);
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
  }
  return z;
}

void axpy_params(double a, const EncoderParams& src, EncoderParams& dst) {
  if (src.layers.size() != dst.layers.size()) {
    throw Error("parameter shape mismatch");
  }
  for (std::size_t l = 0; l < src.layers.size(); ++l) {
    const auto& s = src.layers[l];
    auto& d = dst.layers[l];
    for (std::size_t i = 0; i < s.weights.size(); ++i) {
      d.weights[i] += a * s.weights[i];
    }
    for (std::size_t i = 0; i < s.bias.size(); ++i) {
      d.bias[i] += a * s.bias[i];
    }
  }
}

EmbeddingVector forward(const EncoderParams& params, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != params.input_dim()) {
    throw Error("dimension mismatch: input has " + std::to_string(x.size()) +
                " features, encoder expects " + std::to_string(params.input_dim()));
  }
  std::vector<std::vector<double>> acts;
  kernels::forward_trace(params, x.data(), acts);
  return acts.back();
}

double cosine_relevance(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.size() != b.size()) {
    throw Error("dimension mismatch in cosine_relevance");
  }
  double aa = 0.0, bb = 0.0, ab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa += a[i] * a[i];
    bb += b[i] * b[i];
    ab += a[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0 || !std::isfinite(aa) || !std::isfinite(bb)) {
    throw Error("degenerate embedding (zero or non-finite norm)");
  }
  const double r = ab / (std::sqrt(aa) * std::sqrt(bb));
  if (!std::isfinite(r)) {
    throw Error("non-finite relevance");
  }
  return std::min(1.0, std::max(-1.0, r));
}

namespace {

// Resolves id-keyed groups onto a dense feature matrix so the index kernels
// can run. Row order is first appearance across the group sequence.
struct ResolvedBatch {
  kernels::FeatureMatrix x;
  std::vector<IndexGroup> groups;
  std::vector<double> conf;
};

ResolvedBatch resolve_batch(const std::vector<Group>& groups, const FeatureMap& features,
                            const ConfidenceProfile& conf) {
  ResolvedBatch rb;
  std::unordered_map<std::string, int> row_of;
  std::vector<const std::vector<double>*> rows;
  std::vector<double> deltas;

  auto intern = [&](const std::string& id) -> int {
    auto it = row_of.find(id);
    if (it != row_of.end()) {
      return it->second;
    }
    auto fit = features.find(id);
    if (fit == features.end()) {
      throw Error("missing features for id " + id);
    }
    auto cit = conf.find(id);
    if (cit == conf.end()) {
      throw Error("missing confidence for id " + id);
    }
    const int row = static_cast<int>(rows.size());
    row_of.emplace(id, row);
    rows.push_back(&fit->second);
    deltas.push_back(cit->second.assigned_confidence);
    return row;
  };

  rb.groups.reserve(groups.size());
  for (const auto& g : groups) {
    if (g.anchor_id == g.target_id) {
      throw Error("group anchor and target must differ");
    }
    IndexGroup ig;
    ig.anchor = intern(g.anchor_id);
    ig.target = intern(g.target_id);
    ig.negatives.reserve(g.negative_ids.size());
    for (const auto& id : g.negative_ids) {
      ig.negatives.push_back(intern(id));
    }
    rb.groups.push_back(std::move(ig));
  }
  if (rows.empty()) {
    throw Error("no groups to evaluate");
  }
  const int dim = static_cast<int>(rows.front()->size());
  rb.x = kernels::FeatureMatrix(static_cast<int>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<int>(rows[i]->size()) != dim) {
      throw Error("inconsistent feature dimensions across group members");
    }
    std::copy(rows[i]->begin(), rows[i]->end(), rb.x.row(static_cast<int>(i)));
  }
  rb.conf = std::move(deltas);
  return rb;
}

}  // namespace

double group_posterior(const EncoderParams& params, const Group& g,
                       const FeatureMap& features, const ConfidenceProfile& conf,
                       double eta) {
  ResolvedBatch rb = resolve_batch({g}, features, conf);
  kernels::GroupWork work;
  work.resize(params, static_cast<int>(g.negative_ids.size()));
  kernels::group_forward(params, rb.x, rb.groups.front(), rb.conf, eta, work);
  return work.soft.front();
}

double batch_loss(const EncoderParams& params, const std::vector<Group>& groups,
                  const FeatureMap& features, const ConfidenceProfile& conf,
                  double eta) {
  if (groups.empty()) {
    throw Error("batch_loss needs at least one group");
  }
  ResolvedBatch rb = resolve_batch(groups, features, conf);
  return kernels::batch_loss_omp(params, rb.x, rb.groups, rb.conf, eta);
}

EncoderParams gradient(const EncoderParams& params, const std::vector<Group>& groups,
                       const FeatureMap& features, const ConfidenceProfile& conf,
                       double eta) {
  if (groups.empty()) {
    throw Error("gradient needs at least one group");
  }
  ResolvedBatch rb = resolve_batch(groups, features, conf);
  EncoderParams grad = zeros_like(params);
  kernels::batch_gradient_omp(params, rb.x, rb.groups, rb.conf, eta, grad);
  return grad;
}

double finite_difference_check(const EncoderParams& params,
                               const std::vector<Group>& groups,
                               const FeatureMap& features,
                               const ConfidenceProfile& conf, double eta, double h) {
  if (h <= 0.0) {
    throw Error("finite difference step must be positive");
  }
  ResolvedBatch rb = resolve_batch(groups, features, conf);
  EncoderParams analytic = zeros_like(params);
  kernels::batch_gradient_serial(params, rb.x, rb.groups, rb.conf, eta, analytic);

  EncoderParams probe = params;
  double worst = 0.0;
  auto probe_coord = [&](double& value, double analytic_g) {
    const double saved = value;
    value = saved + h;
    const double up = kernels::batch_loss_serial(probe, rb.x, rb.groups, rb.conf, eta);
    value = saved - h;
    const double down = kernels::batch_loss_serial(probe, rb.x, rb.groups, rb.conf, eta);
    value = saved;
    const double fd = (up - down) / (2.0 * h);
    const double rel = std::fabs(analytic_g - fd) / (std::fabs(fd) + 1e-12);
    worst = std::max(worst, rel);
  };
  for (std::size_t l = 0; l < probe.layers.size(); ++l) {
    for (std::size_t i = 0; i < probe.layers[l].weights.size(); ++i) {
      probe_coord(probe.layers[l].weights[i], analytic.layers[l].weights[i]);
    }
    for (std::size_t i = 0; i < probe.layers[l].bias.size(); ++i) {
      probe_coord(probe.layers[l].bias[i], analytic.layers[l].bias[i]);
    }
  }
  return worst;
}

TrainResult train(const Dataset& ds, const ConfidenceProfile& profile,
                  const GroupingConfig& grouping_cfg, const EncoderConfig& encoder_cfg) {
  check_config(encoder_cfg);
  if (encoder_cfg.layer_sizes.front() != ds.feature_dim) {
    throw Error("dimension mismatch: encoder input layer must equal feature_dim");
  }

  auto [pos_ids, neg_ids] = partition_by_label(ds, profile);
  const int n_groups = grouping_cfg.groups_per_epoch > 0
                           ? grouping_cfg.groups_per_epoch
                           : default_groups_per_epoch(pos_ids.size());

  // GroupSampler validates |D+| >= 2 and |D-| >= k
  GroupSampler sampler(static_cast<int>(pos_ids.size()),
                       static_cast<int>(neg_ids.size()), grouping_cfg.k,
                       grouping_cfg.seed);

  const kernels::FeatureMatrix x = kernels::feature_matrix(ds);
  std::vector<double> conf(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    conf[i] = profile.at(ds.examples[i].id).assigned_confidence;
  }
  const auto index = id_index(ds);
  std::vector<int> pos_rows(pos_ids.size()), neg_rows(neg_ids.size());
  for (std::size_t i = 0; i < pos_ids.size(); ++i) {
    pos_rows[i] = index.at(pos_ids[i]);
  }
  for (std::size_t i = 0; i < neg_ids.size(); ++i) {
    neg_rows[i] = index.at(neg_ids[i]);
  }

  TrainResult result;
  result.params = init_params(encoder_cfg);
  EncoderParams grad = zeros_like(result.params);
  std::vector<IndexGroup> groups(n_groups);
  result.loss_trace.reserve(encoder_cfg.epochs);

  const double step = encoder_cfg.learning_rate / n_groups;
  for (int epoch = 0; epoch < encoder_cfg.epochs; ++epoch) {
    for (int i = 0; i < n_groups; ++i) {
      IndexGroup g = sampler.next();
      g.anchor = pos_rows[g.anchor];
      g.target = pos_rows[g.target];
      for (auto& neg : g.negatives) {
        neg = neg_rows[neg];
      }
      groups[i] = std::move(g);
    }
    double loss;
    try {
      loss = kernels::batch_gradient_omp(result.params, x, groups, conf,
                                         encoder_cfg.eta, grad);
    } catch (const Error& e) {
      throw Error("training diverged (" + std::string(e.what()) + ") at epoch " +
                  std::to_string(epoch));
    }
    const double mean_loss = loss / n_groups;
    if (!std::isfinite(mean_loss)) {
      throw Error("training diverged (non-finite loss) at epoch " +
                  std::to_string(epoch));
    }
    result.loss_trace.push_back(mean_loss);
    axpy_params(-step, grad, result.params);
  }
  return result;
}

EmbeddingMap embed_dataset(const EncoderParams& params, const Dataset& ds) {
  if (params.input_dim() != ds.feature_dim) {
    throw Error("dimension mismatch: encoder input layer must equal feature_dim");
  }
  const kernels::FeatureMatrix x = kernels::feature_matrix(ds);
  kernels::FeatureMatrix out;
  kernels::embed_all_omp(params, x, out);
  EmbeddingMap map;
  map.reserve(ds.size());
  for (int i = 0; i < out.rows; ++i) {
    map.emplace(ds.examples[i].id,
                EmbeddingVector(out.row(i), out.row(i) + out.cols));
  }
  return map;
}

void save_params(const EncoderParams& params, const std::string& path) {
  if (params.layers.empty()) {
    throw Error("cannot save an empty encoder");
  }
  std::ostringstream out;
  out << "rll-encoder 1\n";
  out << "sizes " << params.layers.size() + 1;
  out << ' ' << params.layers.front().in;
  for (const auto& layer : params.layers) {
    out << ' ' << layer.out;
  }
  out << '\n';
  for (const auto& layer : params.layers) {
    out << "weights";
    for (double w : layer.weights) {
      out << ' ' << fmt_double(w);
    }
    out << "\nbias";
    for (double b : layer.bias) {
      out << ' ' << fmt_double(b);
    }
    out << '\n';
  }
  atomic_write(path, out.str());
}

EncoderParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open checkpoint: " + path);
  }
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "rll-encoder" || version != 1) {
    throw Error("unsupported checkpoint header in " + path);
  }
  std::string token;
  int count = 0;
  in >> token >> count;
  if (token != "sizes" || count < 2) {
    throw Error("malformed checkpoint: " + path);
  }
  std::vector<int> sizes(count);
  for (int& s : sizes) {
    if (!(in >> s) || s < 1) {
      throw Error("malformed checkpoint sizes: " + path);
    }
  }
  EncoderParams params;
  params.layers.resize(count - 1);
  for (int l = 0; l + 1 < count; ++l) {
    Layer& layer = params.layers[l];
    layer.in = sizes[l];
    layer.out = sizes[l + 1];
    layer.weights.resize(static_cast<std::size_t>(layer.out) * layer.in);
    layer.bias.resize(layer.out);
    in >> token;
    if (token != "weights") {
      throw Error("malformed checkpoint (expected weights): " + path);
    }
    for (auto& w : layer.weights) {
      if (!(in >> w)) {
        throw Error("malformed checkpoint weights: " + path);
      }
    }
    in >> token;
    if (token != "bias") {
      throw Error("malformed checkpoint (expected bias): " + path);
    }
    for (auto& b : layer.bias) {
      if (!(in >> b)) {
        throw Error("malformed checkpoint bias: " + path);
      }
    }
  }
  for (const auto& layer : params.layers) {
    for (double w : layer.weights) {
      if (!std::isfinite(w)) {
        throw Error("non-finite weight in checkpoint: " + path);
      }
    }
    for (double b : layer.bias) {
      if (!std::isfinite(b)) {
        throw Error("non-finite bias in checkpoint: " + path);
      }
    }
  }
  return params;
}

}  // namespace rll
