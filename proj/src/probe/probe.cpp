#include "scog/probe/probe.hpp"

#include <cmath>
#include <limits>

#include "scog/error.hpp"
#include "scog/random.hpp"

namespace scog::probe {

using nlohmann::json;

std::string to_string(Arch arch) {
  switch (arch) {
    case Arch::linear: return "linear";
    case Arch::sim_mlp: return "sim_mlp";
    case Arch::enh_mlp: return "enh_mlp";
    case Arch::attention: return "attention";
  }
  return "linear";
}

Arch parse_arch(const std::string& name) {
  for (Arch a : {Arch::linear, Arch::sim_mlp, Arch::enh_mlp, Arch::attention}) {
    if (to_string(a) == name) return a;
  }
  throw ValidationError("unknown probe architecture \"" + name +
                        "\" (linear|sim_mlp|enh_mlp|attention)");
}

namespace {

Eigen::Index ix(std::size_t n) { return static_cast<Eigen::Index>(n); }

bool is_mlp(Arch a) { return a == Arch::sim_mlp || a == Arch::enh_mlp; }

std::size_t feature_width(Arch a, std::size_t d) { return a == Arch::enh_mlp ? 4 * d : 2 * d; }

// Visits each parameter block as a matrix in block_names() order. The bias
// scalar of the linear probe is presented as a 1x1 block.
template <typename Params, typename Fn>
void for_each_block(Params& p, Fn&& fn) {
  switch (p.arch) {
    case Arch::linear: {
      fn("w", p.w);
      Eigen::Matrix<double, 1, 1> b;
      b(0, 0) = p.b;
      fn("b", b);
      if constexpr (!std::is_const_v<Params>) p.b = b(0, 0);
      break;
    }
    case Arch::sim_mlp:
    case Arch::enh_mlp:
      fn("W1", p.W1);
      fn("b1", p.b1);
      fn("W2", p.W2);
      fn("b2", p.b2);
      break;
    case Arch::attention:
      fn("Wq", p.Wq);
      fn("Wk", p.Wk);
      break;
  }
}

void check_inputs(const ProbeParams& p, const Vector& h_e, const Vector& h_a) {
  if (static_cast<std::size_t>(h_e.size()) != p.d || static_cast<std::size_t>(h_a.size()) != p.d) {
    throw ValidationError("probe input dims (" + std::to_string(h_e.size()) + ", " +
                          std::to_string(h_a.size()) + ") do not match d = " +
                          std::to_string(p.d));
  }
}

void check_finite(const LossAndGrad& lg) {
  if (!std::isfinite(lg.loss)) throw Error("non-finite loss");
  for_each_block(lg.grad, [](const char* name, const auto& m) {
    if (!m.allFinite()) throw Error(std::string("non-finite gradient in block ") + name);
  });
}

// log(1 + exp(x)) without overflow.
double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

Vector softmax(const Vector& logits) {
  const double m = logits.maxCoeff();
  Vector e = (logits.array() - m).exp().matrix();
  return e / e.sum();
}

struct MlpPass {
  Vector z, pre, hidden, logits, probs;
};

MlpPass mlp_forward(const ProbeParams& p, const Vector& h_e, const Vector& h_a) {
  MlpPass f;
  f.z = pair_features(p.arch, h_e, h_a);
  f.pre = p.W1 * f.z + p.b1;
  f.hidden = f.pre.cwiseMax(0.0);
  f.logits = p.W2 * f.hidden + p.b2;
  f.probs = softmax(f.logits);
  return f;
}

void step(ProbeParams& p, const ProbeParams& g, double lr) {
  p.w -= lr * g.w;
  p.b -= lr * g.b;
  p.W1 -= lr * g.W1;
  p.b1 -= lr * g.b1;
  p.W2 -= lr * g.W2;
  p.b2 -= lr * g.b2;
  p.Wq -= lr * g.Wq;
  p.Wk -= lr * g.Wk;
}

std::uint64_t shuffle_seed(std::uint64_t seed) { return seed * 0x9E3779B97F4A7C15ULL + 1; }

}  // namespace

ProbeParams ProbeParams::zeros(Arch arch, std::size_t d) {
  if (d == 0) throw ValidationError("probe dim must be positive");
  ProbeParams p;
  p.arch = arch;
  p.d = d;
  if (arch == Arch::linear) {
    p.w = Vector::Zero(ix(2 * d));
  } else if (is_mlp(arch)) {
    p.W1 = Matrix::Zero(ix(d), ix(feature_width(arch, d)));
    p.b1 = Vector::Zero(ix(d));
    p.W2 = Matrix::Zero(2, ix(d));
    p.b2 = Vector::Zero(2);
  } else {
    p.Wq = Matrix::Zero(ix(d), ix(d));
    p.Wk = Matrix::Zero(ix(d), ix(d));
  }
  return p;
}

ProbeParams ProbeParams::random(Arch arch, std::size_t d, std::uint64_t seed) {
  ProbeParams p = zeros(arch, d);
  std::mt19937_64 rng(seed);
  auto fill = [&](auto& m, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = (2.0 * uniform_unit(rng) - 1.0) * bound;
    }
  };
  if (arch == Arch::linear) {
    fill(p.w, 2 * d);
    p.b = (2.0 * uniform_unit(rng) - 1.0) / std::sqrt(2.0 * static_cast<double>(d));
  } else if (is_mlp(arch)) {
    fill(p.W1, feature_width(arch, d));
    fill(p.b1, feature_width(arch, d));
    fill(p.W2, d);
    fill(p.b2, d);
  } else {
    fill(p.Wq, d);
    fill(p.Wk, d);
  }
  return p;
}

ProbeParams ProbeParams::identity_attention(std::size_t d) {
  ProbeParams p = zeros(Arch::attention, d);
  p.Wq.setIdentity();
  p.Wk.setIdentity();
  return p;
}

std::vector<std::string> ProbeParams::block_names() const {
  std::vector<std::string> names;
  for_each_block(*this, [&](const char* name, const auto&) { names.emplace_back(name); });
  return names;
}

std::vector<double> ProbeParams::flatten() const {
  std::vector<double> out;
  for_each_block(*this, [&](const char*, const auto& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
    }
  });
  return out;
}

std::size_t ProbeParams::size() const { return flatten().size(); }

void ProbeParams::unflatten(std::span<const double> values) {
  if (values.size() != size()) {
    throw ValidationError("parameter vector has " + std::to_string(values.size()) +
                          " entries, expected " + std::to_string(size()));
  }
  std::size_t k = 0;
  for_each_block(*this, [&](const char*, auto& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = values[k++];
    }
  });
}

json ProbeParams::to_json() const {
  json blocks = json::object();
  for_each_block(*this, [&](const char* name, const auto& m) {
    std::vector<double> data;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    }
    blocks[name] = {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
  });
  return {{"arch", scog::probe::to_string(arch)}, {"d", d}, {"blocks", blocks}};
}

ProbeParams ProbeParams::from_json(const json& j) {
  try {
    ProbeParams p = zeros(parse_arch(j.at("arch").get<std::string>()), j.at("d").get<std::size_t>());
    const auto& blocks = j.at("blocks");
    for_each_block(p, [&](const char* name, auto& m) {
      const auto& b = blocks.at(name);
      const auto data = b.at("data").get<std::vector<double>>();
      if (b.at("rows").get<Eigen::Index>() != m.rows() ||
          b.at("cols").get<Eigen::Index>() != m.cols() ||
          data.size() != static_cast<std::size_t>(m.rows() * m.cols())) {
        throw ValidationError(std::string("probe block ") + name + " has the wrong shape");
      }
      std::size_t k = 0;
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = data[k++];
      }
      if (!m.allFinite()) throw ValidationError(std::string("probe block ") + name + " not finite");
    });
    return p;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("probe parameters: ") + e.what());
  }
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vector pair_features(Arch arch, const Vector& h_e, const Vector& h_a) {
  const auto d = h_e.size();
  Vector z(arch == Arch::enh_mlp ? 4 * d : 2 * d);
  z.head(d) = h_e;
  z.segment(d, d) = h_a;
  if (arch == Arch::enh_mlp) {
    z.segment(2 * d, d) = (h_e - h_a).cwiseAbs();
    z.segment(3 * d, d) = h_e.cwiseProduct(h_a);
  }
  return z;
}

double forward_linear(const ProbeParams& p, const Vector& h_e, const Vector& h_a) {
  if (p.arch != Arch::linear) throw ValidationError("forward_linear on a non-linear probe");
  check_inputs(p, h_e, h_a);
  return sigmoid(p.w.dot(pair_features(p.arch, h_e, h_a)) + p.b);
}

double forward_sim_mlp(const ProbeParams& p, const Vector& h_e, const Vector& h_a) {
  if (p.arch != Arch::sim_mlp) throw ValidationError("forward_sim_mlp on another architecture");
  check_inputs(p, h_e, h_a);
  return mlp_forward(p, h_e, h_a).probs(1);
}

double forward_enh_mlp(const ProbeParams& p, const Vector& h_e, const Vector& h_a) {
  if (p.arch != Arch::enh_mlp) throw ValidationError("forward_enh_mlp on another architecture");
  check_inputs(p, h_e, h_a);
  return mlp_forward(p, h_e, h_a).probs(1);
}

double forward(const ProbeParams& p, const Vector& h_e, const Vector& h_a) {
  switch (p.arch) {
    case Arch::linear: return forward_linear(p, h_e, h_a);
    case Arch::sim_mlp: return forward_sim_mlp(p, h_e, h_a);
    case Arch::enh_mlp: return forward_enh_mlp(p, h_e, h_a);
    case Arch::attention: break;
  }
  throw ValidationError("the attention probe scores candidate sets, not pairs");
}

Vector attention_scores(const ProbeParams& p, const Vector& h_e,
                        const std::vector<Vector>& candidates) {
  if (p.arch != Arch::attention) throw ValidationError("attention_scores on a pair probe");
  if (candidates.empty()) throw ValidationError("attention_scores needs at least one candidate");
  const Vector q = p.Wq * h_e;
  Vector logits(ix(candidates.size()));
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    check_inputs(p, h_e, candidates[j]);
    logits(ix(j)) = q.dot(p.Wk * candidates[j]) / std::sqrt(static_cast<double>(p.d));
  }
  return softmax(logits);
}

LossAndGrad loss_and_gradients(const ProbeParams& p, std::span<const PairExample* const> batch) {
  if (batch.empty()) throw ValidationError("empty training batch");
  if (p.arch == Arch::attention) {
    throw ValidationError("the attention probe trains on candidate sets");
  }
  LossAndGrad out{0.0, ProbeParams::zeros(p.arch, p.d)};
  auto& g = out.grad;
  for (const PairExample* ex : batch) {
    check_inputs(p, ex->h_e, ex->h_a);
    const double y = ex->label;
    if (p.arch == Arch::linear) {
      const Vector z = pair_features(p.arch, ex->h_e, ex->h_a);
      const double s = p.w.dot(z) + p.b;
      out.loss += softplus(s) - y * s;
      const double ds = sigmoid(s) - y;
      g.w += ds * z;
      g.b += ds;
    } else {
      const MlpPass f = mlp_forward(p, ex->h_e, ex->h_a);
      const double lse = f.logits.maxCoeff() +
                         std::log((f.logits.array() - f.logits.maxCoeff()).exp().sum());
      out.loss += lse - f.logits(ex->label);
      Vector dl = f.probs;
      dl(ex->label) -= 1.0;
      g.W2 += dl * f.hidden.transpose();
      g.b2 += dl;
      Vector dpre = p.W2.transpose() * dl;
      for (Eigen::Index k = 0; k < dpre.size(); ++k) {
        if (f.pre(k) <= 0.0) dpre(k) = 0.0;
      }
      g.W1 += dpre * f.z.transpose();
      g.b1 += dpre;
    }
  }
  const double n = static_cast<double>(batch.size());
  out.loss /= n;
  g.w /= n;
  g.b /= n;
  g.W1 /= n;
  g.b1 /= n;
  g.W2 /= n;
  g.b2 /= n;
  check_finite(out);
  return out;
}

LossAndGrad loss_and_gradients(const ProbeParams& p, std::span<const PairExample> batch) {
  std::vector<const PairExample*> ptrs;
  for (const auto& ex : batch) ptrs.push_back(&ex);
  return loss_and_gradients(p, std::span<const PairExample* const>(ptrs));
}

LossAndGrad loss_and_gradients(const ProbeParams& p,
                               std::span<const AttentionExample* const> batch) {
  if (batch.empty()) throw ValidationError("empty training batch");
  if (p.arch != Arch::attention) throw ValidationError("candidate sets need the attention probe");
  LossAndGrad out{0.0, ProbeParams::zeros(p.arch, p.d)};
  const double scale = 1.0 / std::sqrt(static_cast<double>(p.d));
  for (const AttentionExample* ex : batch) {
    const auto t = ix(static_cast<std::size_t>(ex->target));
    if (ex->target < 0 || static_cast<std::size_t>(ex->target) >= ex->candidates.size()) {
      throw ValidationError("attention target index out of range");
    }
    const Vector q = p.Wq * ex->h_e;
    std::vector<Vector> keys;
    Vector logits(ix(ex->candidates.size()));
    for (std::size_t j = 0; j < ex->candidates.size(); ++j) {
      check_inputs(p, ex->h_e, ex->candidates[j]);
      keys.push_back(p.Wk * ex->candidates[j]);
      logits(ix(j)) = q.dot(keys.back()) * scale;
    }
    const double m = logits.maxCoeff();
    out.loss += m + std::log((logits.array() - m).exp().sum()) - logits(t);
    Vector ds = softmax(logits);
    ds(t) -= 1.0;
    Vector dq = Vector::Zero(ix(p.d));
    for (std::size_t j = 0; j < keys.size(); ++j) {
      dq += ds(ix(j)) * scale * keys[j];
      out.grad.Wk += (ds(ix(j)) * scale) * q * ex->candidates[j].transpose();
    }
    out.grad.Wq += dq * ex->h_e.transpose();
  }
  const double n = static_cast<double>(batch.size());
  out.loss /= n;
  out.grad.Wq /= n;
  out.grad.Wk /= n;
  check_finite(out);
  return out;
}

LossAndGrad loss_and_gradients(const ProbeParams& p, std::span<const AttentionExample> batch) {
  std::vector<const AttentionExample*> ptrs;
  for (const auto& ex : batch) ptrs.push_back(&ex);
  return loss_and_gradients(p, std::span<const AttentionExample* const>(ptrs));
}

ProbeMetrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn,
                                 double threshold) {
  ProbeMetrics m;
  m.tp = tp;
  m.fp = fp;
  m.tn = tn;
  m.fn = fn;
  m.threshold = threshold;
  m.no_predicted_positives = tp + fp == 0;
  m.no_positives = tp + fn == 0;
  m.precision = m.no_predicted_positives ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  m.recall = m.no_positives ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  m.f1 = m.precision + m.recall == 0.0 ? 0.0
                                       : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  const std::size_t total = tp + fp + tn + fn;
  m.accuracy = total == 0 ? 0.0 : static_cast<double>(tp + tn) / static_cast<double>(total);
  return m;
}

ProbeMetrics evaluate_probe(const ProbeParams& params, std::span<const PairExample> pairs,
                            double threshold) {
  if (pairs.empty()) throw ValidationError("evaluate_probe needs at least one pair");
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (const auto& ex : pairs) {
    const bool predicted = forward(params, ex.h_e, ex.h_a) >= threshold;
    if (predicted) (ex.label ? tp : fp)++;
    else (ex.label ? fn : tn)++;
  }
  return metrics_from_counts(tp, fp, tn, fn, threshold);
}

json to_json(const ProbeMetrics& m) {
  return {{"precision", m.precision}, {"recall", m.recall},       {"f1", m.f1},
          {"accuracy", m.accuracy},   {"threshold", m.threshold}, {"tp", m.tp},
          {"fp", m.fp},               {"tn", m.tn},               {"fn", m.fn},
          {"no_positives", m.no_positives},
          {"no_predicted_positives", m.no_predicted_positives}};
}

double attention_accuracy(const ProbeParams& params, std::span<const AttentionExample> examples) {
  if (examples.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& ex : examples) {
    const Vector a = attention_scores(params, ex.h_e, ex.candidates);
    Eigen::Index best = 0;
    a.maxCoeff(&best);
    hits += best == ex.target;
  }
  return static_cast<double>(hits) / static_cast<double>(examples.size());
}

void validate(const TrainConfig& c) {
  if (c.epochs < 1) throw ValidationError("TrainConfig.epochs must be >= 1");
  if (!(c.split_fraction > 0.0 && c.split_fraction < 1.0)) {
    throw ValidationError("TrainConfig.split_fraction must lie strictly between 0 and 1");
  }
  if (!(c.negative_ratio > 0.0)) throw ValidationError("TrainConfig.negative_ratio must be > 0");
  if (!(c.learning_rate >= 0.0) || !std::isfinite(c.learning_rate)) {
    throw ValidationError("TrainConfig.learning_rate must be finite and >= 0");
  }
  if (c.batch_size == 0) throw ValidationError("TrainConfig.batch_size must be positive");
}

json to_json(const EpochStats& e) {
  return {{"epoch", e.epoch},
          {"steps", e.steps},
          {"train_loss", e.train_loss},
          {"heldout", to_json(e.heldout)},
          {"heldout_accuracy", e.heldout_accuracy}};
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n,
                                                                            double fraction,
                                                                            std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  seeded_shuffle(order, rng);
  const auto n_train = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> held(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(train.begin(), train.end());
  std::sort(held.begin(), held.end());
  return {train, held};
}

namespace {

// Shared mini-batch loop. `loss_of` computes LossAndGrad for a batch of
// indices; `report` fills held-out fields of the epoch record.
template <typename LossFn, typename FullLossFn, typename ReportFn>
std::vector<EpochStats> descend(ProbeParams& params, std::size_t n, const TrainConfig& config,
                                LossFn&& loss_of, FullLossFn&& full_loss, ReportFn&& report) {
  std::vector<EpochStats> history;
  std::mt19937_64 rng(shuffle_seed(config.seed));
  std::vector<std::size_t> order(n);
  std::size_t steps = 0;
  bool capped = false;
  for (int epoch = 1; epoch <= config.epochs && !capped; ++epoch) {
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    seeded_shuffle(order, rng);
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      const auto lg = loss_of(std::span<const std::size_t>(order.data() + start, end - start));
      step(params, lg.grad, config.learning_rate);
      ++steps;
      if (config.max_steps && steps >= config.max_steps) {
        capped = true;
        break;
      }
    }
    EpochStats e;
    e.epoch = epoch;
    e.steps = steps;
    e.train_loss = full_loss();
    report(e);
    history.push_back(e);
  }
  return history;
}

}  // namespace

TrainResult train_probe(const std::vector<PairExample>& train,
                        const std::vector<PairExample>& heldout, Arch arch,
                        const TrainConfig& config) {
  validate(config);
  if (arch == Arch::attention) throw ValidationError("use train_attention for the attention probe");
  if (train.empty()) throw ValidationError("empty training set");
  bool pos = false, neg = false;
  for (const auto& ex : train) (ex.label ? pos : neg) = true;
  if (!(pos && neg)) throw ValidationError("training set holds a single class");

  TrainResult out;
  const std::size_t d = static_cast<std::size_t>(train.front().h_e.size());
  out.params = ProbeParams::random(arch, d, config.seed);
  std::vector<const PairExample*> all;
  for (const auto& ex : train) all.push_back(&ex);
  out.history = descend(
      out.params, train.size(), config,
      [&](std::span<const std::size_t> idx) {
        std::vector<const PairExample*> batch;
        for (auto i : idx) batch.push_back(&train[i]);
        return loss_and_gradients(out.params, std::span<const PairExample* const>(batch));
      },
      [&] { return loss_and_gradients(out.params, std::span<const PairExample* const>(all)).loss; },
      [&](EpochStats& e) {
        if (!heldout.empty()) {
          e.heldout = evaluate_probe(out.params, heldout, config.threshold);
          e.heldout_accuracy = e.heldout.accuracy;
        }
      });
  return out;
}

TrainResult train_probe(const std::vector<PairExample>& pairs, Arch arch,
                        const TrainConfig& config) {
  validate(config);
  auto [tr, ho] = split_indices(pairs.size(), config.split_fraction, config.seed);
  std::vector<PairExample> train, heldout;
  for (auto i : tr) train.push_back(pairs[i]);
  for (auto i : ho) heldout.push_back(pairs[i]);
  TrainResult out = train_probe(train, heldout, arch, config);
  out.train_indices = std::move(tr);
  out.heldout_indices = std::move(ho);
  return out;
}

TrainResult train_attention(const std::vector<AttentionExample>& examples,
                            const TrainConfig& config, std::optional<ProbeParams> init) {
  validate(config);
  if (examples.empty()) throw ValidationError("no attention examples");
  auto [tr, ho] = split_indices(examples.size(), config.split_fraction, config.seed);
  if (tr.empty()) throw ValidationError("attention training split is empty");
  std::vector<AttentionExample> heldout;
  for (auto i : ho) heldout.push_back(examples[i]);

  TrainResult out;
  out.params = init ? *init
                    : ProbeParams::identity_attention(
                          static_cast<std::size_t>(examples.front().h_e.size()));
  std::vector<const AttentionExample*> all;
  for (auto i : tr) all.push_back(&examples[i]);
  out.history = descend(
      out.params, tr.size(), config,
      [&](std::span<const std::size_t> idx) {
        std::vector<const AttentionExample*> batch;
        for (auto i : idx) batch.push_back(all[i]);
        return loss_and_gradients(out.params, std::span<const AttentionExample* const>(batch));
      },
      [&] {
        return loss_and_gradients(out.params, std::span<const AttentionExample* const>(all)).loss;
      },
      [&](EpochStats& e) { e.heldout_accuracy = attention_accuracy(out.params, heldout); });
  out.train_indices = std::move(tr);
  out.heldout_indices = std::move(ho);
  return out;
}

json to_json(const AttentionSummary& s) {
  auto group = [](const ScoreSummary& g) {
    return json{{"avg", g.avg}, {"max", g.max}, {"min", g.min}, {"count", g.count}};
  };
  return {{"target", group(s.target)}, {"non_target", group(s.non_target)},
          {"examples", s.examples}};
}

AttentionSummary attention_analysis(const ProbeParams& params,
                                    std::span<const AttentionExample> examples) {
  AttentionSummary s;
  double tsum = 0.0, nsum = 0.0;
  s.target.min = s.non_target.min = std::numeric_limits<double>::infinity();
  s.target.max = s.non_target.max = -std::numeric_limits<double>::infinity();
  auto add = [](ScoreSummary& g, double& sum, double v) {
    sum += v;
    ++g.count;
    g.max = std::max(g.max, v);
    g.min = std::min(g.min, v);
  };
  for (const auto& ex : examples) {
    if (ex.candidates.size() < 2) continue;
    const Vector a = attention_scores(params, ex.h_e, ex.candidates);
    ++s.examples;
    for (Eigen::Index j = 0; j < a.size(); ++j) {
      if (j == ex.target) add(s.target, tsum, a(j));
      else add(s.non_target, nsum, a(j));
    }
  }
  if (s.examples == 0) {
    throw ValidationError("attention analysis needs samples with at least two candidates");
  }
  s.target.avg = tsum / static_cast<double>(s.target.count);
  s.non_target.avg = nsum / static_cast<double>(s.non_target.count);
  return s;
}

}  // namespace scog::probe

namespace scog::probe {

ProbeMetrics probe_metrics_from_json(const nlohmann::json& j) {
  try {
    auto m = metrics_from_counts(j.at("tp").get<std::size_t>(), j.at("fp").get<std::size_t>(),
                                 j.at("tn").get<std::size_t>(), j.at("fn").get<std::size_t>(),
                                 j.at("threshold").get<double>());
    // Averaged metrics (per-layer mode) do not follow from the summed counts.
    m.precision = j.at("precision").get<double>();
    m.recall = j.at("recall").get<double>();
    m.f1 = j.at("f1").get<double>();
    m.accuracy = j.at("accuracy").get<double>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("ProbeMetrics: ") + e.what());
  }
}

AttentionSummary attention_summary_from_json(const nlohmann::json& j) {
  auto group = [](const nlohmann::json& g) {
    return ScoreSummary{g.at("avg").get<double>(), g.at("max").get<double>(),
                        g.at("min").get<double>(), g.at("count").get<std::size_t>()};
  };
  try {
    AttentionSummary s;
    s.target = group(j.at("target"));
    s.non_target = group(j.at("non_target"));
    s.examples = j.at("examples").get<std::size_t>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("AttentionSummary: ") + e.what());
  }
}

}  // namespace scog::probe
