#include "rsub/alignment/das.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "rsub/common/error.hpp"
#include "rsub/common/seed.hpp"
#include "rsub/numerics/adam.hpp"
#include "rsub/numerics/kernels.hpp"
#include "rsub/numerics/linalg.hpp"

namespace rsub {

DasConfig DasConfig::desk() {
  DasConfig c;
  c.epochs = 3;
  c.rotation_lr = 3e-3;
  c.mask_lr = 1e-2;
  return c;
}

nlohmann::json DasConfig::to_json() const {
  return {{"k", k},
          {"mask_mode", mask_mode},
          {"epochs", epochs},
          {"batch", batch},
          {"rotation_lr", rotation_lr},
          {"mask_lr", mask_lr},
          {"warmup_fraction", warmup_fraction},
          {"temperature_start", temperature_start},
          {"temperature_end", temperature_end},
          {"tap", tap.to_string()},
          {"seed", seed}};
}

DasConfig DasConfig::from_json(const nlohmann::json& j) {
  DasConfig c = desk();
  c.k = j.value("k", c.k);
  c.mask_mode = j.value("mask_mode", c.mask_mode);
  c.epochs = j.value("epochs", c.epochs);
  c.batch = j.value("batch", c.batch);
  c.rotation_lr = j.value("rotation_lr", c.rotation_lr);
  c.mask_lr = j.value("mask_lr", c.mask_lr);
  c.warmup_fraction = j.value("warmup_fraction", c.warmup_fraction);
  c.temperature_start = j.value("temperature_start", c.temperature_start);
  c.temperature_end = j.value("temperature_end", c.temperature_end);
  if (j.contains("tap")) c.tap = Tap::parse(j["tap"].get<std::string>());
  c.seed = j.value("seed", c.seed);
  return c;
}

Label interchange_oracle(const ModelWeights& w, const CounterfactualPair& pair) {
  const Label got = decide(forward_with_taps(w, pair.swapped()).logits);
  if (got != pair.counterfactual) {
    fail(ErrorKind::kDatasetIntegrity,
         "interchange oracle gives " + std::string(to_string(got)) + " but the pair stores " +
             std::string(to_string(pair.counterfactual)));
  }
  return got;
}

std::size_t verify_pairs(const ModelWeights& w, std::span<const CounterfactualPair> pairs) {
  std::vector<EncodedPrompt> swapped;
  swapped.reserve(pairs.size());
  for (const auto& p : pairs) swapped.push_back(p.swapped());
  const auto got = decide_all(w, swapped);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) ok += got[i] == pairs[i].counterfactual;
  return ok;
}

namespace {

void copy_rows(const Tensor& src, std::size_t src_row, Tensor& dst, std::size_t dst_row,
               std::size_t count) {
  const std::size_t c = src.cols();
  std::copy_n(src.data() + src_row * c, count * c, dst.data() + dst_row * c);
}

}  // namespace

TapCache::TapCache(const ModelWeights& w, std::span<const CounterfactualPair> pairs, Tap tap,
                   std::size_t chunk)
    : w_(w), tap_(tap) {
  const ModelConfig& c = w.config;
  require(!pairs.empty(), ErrorKind::kContract, "tap cache needs pairs");
  require(tap.layer >= 0 && tap.layer <= c.layers && tap.position >= 0 && tap.position < c.context,
          ErrorKind::kContract, "tap " + tap.to_string() + " outside the model");
  const std::size_t n = pairs.size(), d = static_cast<std::size_t>(c.d_model);
  std::vector<EncodedPrompt> targets, sources;
  for (const auto& p : pairs) {
    targets.push_back(p.target);
    sources.push_back(p.source);
    labels_.push_back(p.counterfactual);
    base_.push_back(p.base);
    final_pos_.push_back(p.target.final_pos);
  }
  T_ = std::max(readout_length(targets), static_cast<std::size_t>(tap.position + 1));
  affects_ = std::any_of(final_pos_.begin(), final_pos_.end(), [&](int f) {
    return tap.layer < c.layers ? f >= tap.position : f == tap.position;
  });
  residual_ = Tensor::zeros(n * T_, d);
  targets_ = Tensor::zeros(n, d);
  sources_ = Tensor::zeros(n, d);
  const std::size_t Ts = static_cast<std::size_t>(tap.position + 1);
  for (std::size_t at = 0; at < n; at += chunk) {
    const std::size_t m = std::min(chunk, n - at);
    ad::Tape tape;
    Graph g(tape, w, false);
    ad::Var xv = g.run_to(std::span(targets).subspan(at, m), T_, tap.layer);
    ad::Var sv = g.run_to(std::span(sources).subspan(at, m), Ts, tap.layer);
    const Tensor& x = xv.value();
    const Tensor& s = sv.value();
    copy_rows(x, 0, residual_, at * T_, m * T_);
    for (std::size_t i = 0; i < m; ++i) {
      copy_rows(x, i * T_ + tap.position, targets_, at + i, 1);
      copy_rows(s, i * Ts + tap.position, sources_, at + i, 1);
    }
  }
}

ad::Var TapCache::dii_logits(Graph& g, std::span<const std::size_t> idx,
                             const std::function<ad::Var(ad::Var, ad::Var)>& rotated_dii,
                             std::vector<int>* classes) const {
  const std::size_t m = idx.size(), d = targets_.cols();
  require(m > 0, ErrorKind::kContract, "das loss needs a nonempty batch");
  Tensor res = Tensor::zeros(m * T_, d), tgt = Tensor::zeros(m, d), src = Tensor::zeros(m, d);
  std::vector<std::size_t> tap_rows(m), out_rows(m);
  for (std::size_t i = 0; i < m; ++i) {
    copy_rows(residual_, idx[i] * T_, res, i * T_, T_);
    copy_rows(targets_, idx[i], tgt, i, 1);
    copy_rows(sources_, idx[i], src, i, 1);
    tap_rows[i] = i * T_ + static_cast<std::size_t>(tap_.position);
    out_rows[i] = i * T_ + static_cast<std::size_t>(final_pos_[idx[i]]);
    if (classes) classes->push_back(labels_[idx[i]] == Label::kYes ? 0 : 1);
  }
  ad::Tape& tape = g.tape();
  ad::Var replaced = rotated_dii(tape.constant(std::move(tgt)), tape.constant(std::move(src)));
  ad::Var x = ad::scatter_rows(tape.constant(std::move(res)), replaced, tap_rows);
  x = g.run_from(x, tap_.layer, m, T_);
  return g.yes_no_logits(x, out_rows);
}

ad::Var TapCache::loss(Graph& g, std::span<const std::size_t> idx,
                       const std::function<ad::Var(ad::Var, ad::Var)>& rotated_dii) const {
  std::vector<int> classes;
  ad::Var logits = dii_logits(g, idx, rotated_dii, &classes);
  return ad::cross_entropy(logits, classes);
}

namespace {

template <typename Fn>
void for_chunks(std::size_t n, std::size_t chunk, Fn&& fn) {
  std::vector<std::size_t> idx;
  for (std::size_t at = 0; at < n; at += chunk) {
    idx.resize(std::min(chunk, n - at));
    std::iota(idx.begin(), idx.end(), at);
    fn(idx);
  }
}

std::function<ad::Var(ad::Var, ad::Var)> fixed_dii(const Subspace& s) {
  return [&s](ad::Var t, ad::Var src) {
    Tensor out = dii_rows(t.value(), src.value(), s);
    return t.tape->constant(std::move(out));
  };
}

}  // namespace

std::vector<Label> TapCache::dii_decisions(const Subspace& s) const {
  std::vector<Label> out(size());
  for_chunks(size(), 256, [&](std::span<const std::size_t> idx) {
    ad::Tape tape;
    Graph g(tape, w_, false);
    const Tensor& logits = dii_logits(g, idx, fixed_dii(s), nullptr).value();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      out[idx[i]] = decide({logits.at(i, 0), logits.at(i, 1)});
    }
  });
  return out;
}

double TapCache::iia(const Subspace& s) const {
  const auto got = dii_decisions(s);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < size(); ++i) hits += got[i] == labels_[i];
  return static_cast<double>(hits) / static_cast<double>(size());
}

double TapCache::trivial_baseline() const {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < size(); ++i) hits += base_[i] == labels_[i];
  return static_cast<double>(hits) / static_cast<double>(size());
}

double das_loss(const TapCache& cache, const Subspace& s) {
  double total = 0;
  for_chunks(cache.size(), 256, [&](std::span<const std::size_t> idx) {
    ad::Tape tape;
    Graph g(tape, cache.weights(), false);
    total += cache.loss(g, idx, fixed_dii(s)).value()[0] * static_cast<double>(idx.size());
  });
  return total / static_cast<double>(cache.size());
}

std::string log_to_jsonl(const std::vector<DasLogEntry>& log) {
  std::ostringstream os;
  for (const auto& e : log) {
    nlohmann::json j = {{"step", e.step},
                        {"epoch", e.epoch},
                        {"loss", e.loss},
                        {"orthonormality_residual", e.orthonormality_residual}};
    j["dev_iia"] = e.dev_iia ? nlohmann::json(*e.dev_iia) : nlohmann::json(nullptr);
    os << j.dump() << '\n';
  }
  return os.str();
}

Tensor initial_rotation(std::size_t d, std::uint64_t seed) {
  SeedStream rng(seed);
  Tensor m = Tensor::zeros(d, d);
  for (float& v : m.values()) v = static_cast<float>(rng.normal());
  return qr_orthonormalize(m).columns();
}

Tensor rotation_matrix(const Tensor& r0, const Tensor& upper) {
  ad::Tape tape;
  return ad::matmul(tape.constant(r0), ad::cayley(ad::skew_from_upper(tape.constant(upper), r0.rows())))
      .value();
}

namespace {

Subspace extract_subspace(const Tensor& rotation, const Tensor* mask_logits, int k, Tap tap,
                          const std::string& run_id) {
  const std::size_t d = rotation.rows();
  std::vector<std::size_t> cols;
  if (mask_logits) {
    for (std::size_t j = 0; j < d; ++j) {
      if ((*mask_logits)[j] > 0.0f) cols.push_back(j);  // gate > 0.5
    }
  } else {
    for (int j = 0; j < k; ++j) cols.push_back(static_cast<std::size_t>(j));
  }
  if (cols.empty()) return Subspace(OrthonormalBasis::empty(d), tap, "trained", run_id);
  Tensor b = Tensor::zeros(d, cols.size());
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) b.at(i, j) = rotation.at(i, cols[j]);
  }
  return Subspace(OrthonormalBasis(std::move(b)), tap, "trained", run_id);
}

}  // namespace

DasResult train_das(const TapCache& train, const TapCache& dev, const DasConfig& config) {
  const ModelConfig& mc = train.weights().config;
  const std::size_t d = static_cast<std::size_t>(mc.d_model);
  require(config.mask_mode || (config.k >= 0 && config.k <= mc.d_model), ErrorKind::kContract,
          "DAS k must lie in [0, d]");
  require(config.epochs >= 1 && config.batch >= 1, ErrorKind::kContract,
          "DAS epochs and batch must be positive");
  require(train.tap() == config.tap && dev.tap() == config.tap, ErrorKind::kContract,
          "tap caches do not match the configured tap");
  const std::string run_id = "das-" + config.tap.to_string() + "-" + std::to_string(config.seed);
  const Tensor r0 = initial_rotation(d, derive_seed(config.seed, "das/rotation"));
  SeedStream order_rng(derive_seed(config.seed, "das/order"));

  std::map<std::string, Tensor> params;
  params.emplace("rotation", Tensor::zeros(1, d * (d - 1) / 2));
  if (config.mask_mode) params.emplace("mask", Tensor::zeros(1, d));
  Adam rot_opt({.learning_rate = config.rotation_lr});
  Adam mask_opt({.learning_rate = config.mask_lr});

  const std::size_t n = train.size(), b = static_cast<std::size_t>(config.batch);
  const std::size_t steps_per_epoch = (n + b - 1) / b;
  const std::size_t total = steps_per_epoch * static_cast<std::size_t>(config.epochs);
  const double warmup = std::max(1.0, config.warmup_fraction * static_cast<double>(total));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  DasResult result;
  auto current = [&] {
    Tensor rot = rotation_matrix(r0, params.at("rotation"));
    return extract_subspace(rot, config.mask_mode ? &params.at("mask") : nullptr, config.k,
                            config.tap, run_id);
  };
  int step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(order_rng.next() % i)]);
    }
    double last_loss = 0;
    // A tap that cannot reach the readout has an identically zero gradient.
    for (std::size_t at = 0; train.affects_readout() && at < n; at += b, ++step) {
      std::span<const std::size_t> idx(order.data() + at, std::min(b, n - at));
      const double progress = total > 1 ? static_cast<double>(step) / (total - 1) : 1.0;
      const double temperature =
          config.temperature_start *
          std::pow(config.temperature_end / config.temperature_start, progress);
      ad::Tape tape;
      Graph g(tape, train.weights(), false);
      ad::Var up = tape.parameter("rotation", params.at("rotation"));
      ad::Var rot = ad::matmul(tape.constant(r0), ad::cayley(ad::skew_from_upper(up, d)));
      std::function<ad::Var(ad::Var, ad::Var)> dii;
      if (config.mask_mode) {
        ad::Var gate = ad::sigmoid(
            ad::scale(tape.parameter("mask", params.at("mask")), static_cast<float>(1.0 / temperature)));
        dii = [&, gate](ad::Var t, ad::Var s) {
          const std::vector<int> zeros(t.value().rows(), 0);
          ad::Var delta = ad::hadamard(ad::matmul(ad::sub(s, t), rot), ad::embedding_gather(gate, zeros));
          return ad::add(t, ad::matmul(delta, ad::transpose(rot)));
        };
      } else {
        ad::Var basis = ad::slice_cols(rot, 0, static_cast<std::size_t>(config.k));
        dii = [&, basis](ad::Var t, ad::Var s) {
          return ad::add(t, ad::matmul(ad::matmul(ad::sub(s, t), basis), ad::transpose(basis)));
        };
      }
      ad::Var loss = train.loss(g, idx, dii);
      last_loss = loss.value()[0];
      if (!std::isfinite(last_loss)) {
        fail(ErrorKind::kDivergence, "non-finite DAS loss at step " + std::to_string(step));
      }
      auto grads = tape.backward(loss);
      const double scale = std::min(1.0, (step + 1) / warmup);
      ad::GradientMap rg{{"rotation", grads.at("rotation")}};
      rot_opt.step(params, rg, scale);
      if (config.mask_mode) {
        ad::GradientMap mg{{"mask", grads.at("mask")}};
        mask_opt.step(params, mg, scale);
      }
      if (config.log_every > 0 && step % config.log_every == 0) {
        const Tensor r = rotation_matrix(r0, params.at("rotation"));
        result.log.push_back({step, epoch, last_loss, std::nullopt, orthonormality_residual(r)});
      }
    }
    const Subspace s = current();
    const double iia = dev.iia(s);
    result.dev_iia_per_epoch.push_back(iia);
    result.log.push_back({step, epoch, last_loss, iia,
                          orthonormality_residual(rotation_matrix(r0, params.at("rotation")))});
  }
  result.subspace = current();
  result.final_dev_iia = result.dev_iia_per_epoch.back();
  return result;
}

DasResult train_das(const ModelWeights& w, std::span<const CounterfactualPair> train,
                    std::span<const CounterfactualPair> dev, const DasConfig& config) {
  TapCache tc(w, train, config.tap), dc(w, dev, config.tap);
  return train_das(tc, dc, config);
}

double iia_eval(const ModelWeights& w, const Subspace& s, std::span<const CounterfactualPair> pairs) {
  require(!pairs.empty(), ErrorKind::kContract, "iia_eval needs pairs");
  std::vector<EncodedPrompt> targets, sources;
  for (const auto& p : pairs) {
    targets.push_back(p.target);
    sources.push_back(p.source);
  }
  InterventionSpec spec{InterventionKind::kDii, s.tap(), s};
  const auto r = run_with_intervention(w, targets, spec, sources);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) hits += r.decisions[i] == pairs[i].counterfactual;
  return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

}  // namespace rsub
