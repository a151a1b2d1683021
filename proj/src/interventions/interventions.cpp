#include "rsub/interventions/interventions.hpp"

#include <algorithm>

#include "rsub/common/error.hpp"
#include "rsub/common/tensor_file.hpp"
#include "rsub/numerics/kernels.hpp"

namespace rsub {

std::string Tap::to_string() const {
  return std::to_string(layer) + ":" + std::to_string(position);
}

Tap Tap::parse(std::string_view text) {
  const auto colon = text.find(':');
  require(colon != std::string_view::npos, ErrorKind::kUsage,
          "tap must look like LAYER:POS, got '" + std::string(text) + "'");
  try {
    return {std::stoi(std::string(text.substr(0, colon))),
            std::stoi(std::string(text.substr(colon + 1)))};
  } catch (const std::exception&) {
    fail(ErrorKind::kUsage, "tap must look like LAYER:POS, got '" + std::string(text) + "'");
  }
}

Subspace::Subspace(OrthonormalBasis basis, Tap tap, std::string provenance, std::string run_id)
    : basis_(std::move(basis)),
      tap_(tap),
      provenance_(std::move(provenance)),
      run_id_(std::move(run_id)) {}

void Subspace::validate_for(const ModelConfig& c) const {
  require(static_cast<int>(d()) == c.d_model, ErrorKind::kTransfer,
          "subspace dimension " + std::to_string(d()) + " does not match model width " +
              std::to_string(c.d_model));
  require(tap_.layer >= 0 && tap_.layer <= c.layers && tap_.position >= 0 &&
              tap_.position < c.context,
          ErrorKind::kContract, "tap " + tap_.to_string() + " outside the model");
}

namespace {

void check_vector(const Subspace& s, std::span<const float> v) {
  require(v.size() == s.d(), ErrorKind::kContract,
          "vector of length " + std::to_string(v.size()) + " for subspace in d=" +
              std::to_string(s.d()));
}

Tensor as_row(std::span<const float> v) { return Tensor::row_vector({v.begin(), v.end()}); }

std::vector<float> to_vector(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

}  // namespace

Tensor project_rows(const Subspace& s, const Tensor& x) {
  require(x.cols() == s.d(), ErrorKind::kContract,
          "rows of width " + std::to_string(x.cols()) + " for subspace in d=" + std::to_string(s.d()));
  if (s.k() == 0) return Tensor::zeros(x.rows(), x.cols());
  const Tensor& b = s.basis().columns();
  return kernels::matmul_bt(kernels::matmul(x, b), b);
}

Tensor complement_rows(const Subspace& s, const Tensor& x) {
  return kernels::sub(x, project_rows(s, x));
}

Tensor dii_rows(const Tensor& target, const Tensor& source, const Subspace& s) {
  kernels::check_same_shape(target, source, "dii_replace");
  return kernels::add(complement_rows(s, target), project_rows(s, source));
}

std::vector<float> project(const Subspace& s, std::span<const float> v) {
  check_vector(s, v);
  return to_vector(project_rows(s, as_row(v)));
}

std::vector<float> complement_project(const Subspace& s, std::span<const float> v) {
  check_vector(s, v);
  return to_vector(complement_rows(s, as_row(v)));
}

std::vector<float> dii_replace(std::span<const float> target, std::span<const float> source,
                               const Subspace& s) {
  check_vector(s, target);
  check_vector(s, source);
  return to_vector(dii_rows(as_row(target), as_row(source), s));
}

std::string_view to_string(AverageScope s) {
  return s == AverageScope::kBatch ? "batch" : "per-profile-variants";
}

namespace {

Tensor group_means(const Tensor& reps, std::size_t group) {
  const std::size_t n = reps.rows(), d = reps.cols();
  Tensor means = Tensor::zeros(n, d);
  for (std::size_t g0 = 0; g0 < n; g0 += group) {
    std::vector<double> acc(d, 0.0);
    for (std::size_t i = g0; i < g0 + group; ++i) {
      for (std::size_t j = 0; j < d; ++j) acc[j] += reps.at(i, j);
    }
    for (std::size_t i = g0; i < g0 + group; ++i) {
      for (std::size_t j = 0; j < d; ++j) means.at(i, j) = static_cast<float>(acc[j] / group);
    }
  }
  return means;
}

}  // namespace

Tensor batch_race_average(const Tensor& reps, const Subspace& s, AverageScope scope) {
  require(reps.rows() >= 1, ErrorKind::kContract, "race averaging needs a nonempty batch");
  std::size_t group = reps.rows();
  if (scope == AverageScope::kPerProfileVariants) {
    require(reps.rows() % kNumRaces == 0, ErrorKind::kContract,
            "per-profile averaging needs the batch grouped in blocks of 4 race variants");
    group = kNumRaces;
  }
  // Same subspace component for every member of a group; own complement kept.
  return kernels::add(complement_rows(s, reps), project_rows(s, group_means(reps, group)));
}

Tensor full_average(const Tensor& reps) {
  require(reps.rows() >= 1, ErrorKind::kContract, "full averaging needs a nonempty batch");
  return group_means(reps, reps.rows());
}

Subspace random_subspace(std::size_t d, std::size_t k, SeedStream& rng, Tap tap) {
  require(d >= 1 && k <= d, ErrorKind::kContract, "random subspace needs k <= d");
  if (k == 0) return Subspace(OrthonormalBasis::empty(d), tap, "random");
  Tensor m = Tensor::zeros(d, k);
  for (float& v : m.values()) v = static_cast<float>(rng.normal());
  return Subspace(qr_orthonormalize(m), tap, "random");
}

std::string_view to_string(InterventionKind k) {
  switch (k) {
    case InterventionKind::kNone: return "Original";
    case InterventionKind::kDii: return "DII";
    case InterventionKind::kRaceAverage: return "Race Avg";
    case InterventionKind::kRaceProject: return "Race Proj";
    case InterventionKind::kFullAverage: return "Full Avg";
    case InterventionKind::kRandomProject: return "Random Proj";
  }
  return "?";
}

void InterventionSpec::validate(const ModelConfig& c) const {
  require(tap.layer >= 0 && tap.layer <= c.layers && tap.position >= 0 && tap.position < c.context,
          ErrorKind::kContract, "tap " + tap.to_string() + " outside the model");
  const bool needs_subspace = kind == InterventionKind::kDii ||
                              kind == InterventionKind::kRaceAverage ||
                              kind == InterventionKind::kRaceProject ||
                              kind == InterventionKind::kRandomProject;
  if (needs_subspace) {
    require(subspace.has_value(), ErrorKind::kContract,
            std::string(to_string(kind)) + " needs a subspace");
    subspace->validate_for(c);
  }
  if (kind == InterventionKind::kRandomProject) {
    require(subspace->provenance() == "random", ErrorKind::kContract,
            "Random Proj needs a subspace from random_subspace");
  }
}

nlohmann::json InterventionSpec::to_json() const {
  nlohmann::json j = {{"kind", to_string(kind)}, {"tap", tap.to_string()}};
  if (subspace) {
    j["k"] = subspace->k();
    j["subspace_provenance"] = subspace->provenance();
    j["subspace_run_id"] = subspace->run_id();
  }
  if (kind == InterventionKind::kRaceAverage) j["scope"] = to_string(scope);
  return j;
}

namespace {

Tensor gather_tap_rows(const Tensor& x, std::size_t n, std::size_t T, int pos) {
  Tensor out = Tensor::zeros(n, x.cols());
  for (std::size_t i = 0; i < n; ++i) {
    const auto src = x.row(i * T + static_cast<std::size_t>(pos));
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

void append_layer(std::vector<TapTrace>& traces, std::size_t first, const Tensor& x, std::size_t T) {
  const std::size_t n = x.rows() / T;
  for (std::size_t i = 0; i < n; ++i) {
    auto& tr = traces[first + i];
    const auto* begin = x.data() + i * T * x.cols();
    tr.data.insert(tr.data.end(), begin, begin + T * x.cols());
  }
}

}  // namespace

InterventionResult run_with_intervention(const ModelWeights& w,
                                         std::span<const EncodedPrompt> prompts,
                                         const InterventionSpec& spec,
                                         std::span<const EncodedPrompt> sources, bool record_traces,
                                         std::size_t chunk) {
  const ModelConfig& c = w.config;
  spec.validate(c);
  const std::size_t n = prompts.size();
  if (spec.kind == InterventionKind::kDii) {
    require(sources.size() == n, ErrorKind::kContract,
            "DII needs one source prompt per target prompt");
  }
  const int layer = spec.tap.layer;
  const std::size_t T =
      record_traces ? static_cast<std::size_t>(c.context)
                    : std::max(readout_length(prompts), static_cast<std::size_t>(spec.tap.position + 1));

  InterventionResult result;
  if (record_traces) {
    result.traces.resize(n);
    for (auto& tr : result.traces) {
      tr.layers = c.layers + 1;
      tr.positions = c.context;
      tr.d = c.d_model;
    }
  }

  // Pass 1: residual streams at the tap layer.
  std::vector<Tensor> residual;
  Tensor tap_rows = Tensor::zeros(n, static_cast<std::size_t>(c.d_model));
  for (std::size_t at = 0; at < n; at += chunk) {
    auto part = prompts.subspan(at, std::min(chunk, n - at));
    ad::Tape tape;
    Graph g(tape, w, false);
    ad::Var x = g.embed(part, T);
    if (record_traces) append_layer(result.traces, at, x.value(), T);
    for (int i = 0; i < layer; ++i) {
      x = g.block(i, x, part.size(), T);
      if (record_traces) append_layer(result.traces, at, x.value(), T);
    }
    Tensor rows = gather_tap_rows(x.value(), part.size(), T, spec.tap.position);
    std::copy(rows.values().begin(), rows.values().end(), tap_rows.row(at).begin());
    residual.push_back(x.value());
  }

  Tensor replaced;
  switch (spec.kind) {
    case InterventionKind::kNone: replaced = tap_rows; break;
    case InterventionKind::kDii: {
      Tensor src = Tensor::zeros(n, static_cast<std::size_t>(c.d_model));
      const std::size_t Ts = static_cast<std::size_t>(spec.tap.position + 1);
      for (std::size_t at = 0; at < n; at += chunk) {
        auto part = sources.subspan(at, std::min(chunk, n - at));
        ad::Tape tape;
        Graph g(tape, w, false);
        Tensor rows = gather_tap_rows(g.run_to(part, Ts, layer).value(), part.size(), Ts,
                                      spec.tap.position);
        std::copy(rows.values().begin(), rows.values().end(), src.row(at).begin());
      }
      replaced = dii_rows(tap_rows, src, *spec.subspace);
      break;
    }
    case InterventionKind::kRaceAverage:
      replaced = batch_race_average(tap_rows, *spec.subspace, spec.scope);
      break;
    case InterventionKind::kRaceProject:
    case InterventionKind::kRandomProject:
      replaced = complement_rows(*spec.subspace, tap_rows);
      break;
    case InterventionKind::kFullAverage: replaced = full_average(tap_rows); break;
  }

  // Pass 2: write the tap rows back and finish the forward pass.
  result.logits.reserve(n);
  std::size_t ci = 0;
  for (std::size_t at = 0; at < n; at += chunk, ++ci) {
    auto part = prompts.subspan(at, std::min(chunk, n - at));
    ad::Tape tape;
    Graph g(tape, w, false);
    std::vector<std::size_t> rows(part.size());
    for (std::size_t i = 0; i < part.size(); ++i) {
      rows[i] = i * T + static_cast<std::size_t>(spec.tap.position);
    }
    Tensor repl = Tensor::zeros(part.size(), static_cast<std::size_t>(c.d_model));
    for (std::size_t i = 0; i < part.size(); ++i) {
      const auto src = replaced.row(at + i);
      std::copy(src.begin(), src.end(), repl.row(i).begin());
    }
    ad::Var x = ad::scatter_rows(tape.constant(std::move(residual[ci])), tape.constant(repl), rows);
    if (record_traces) {
      // Replace the tap layer's recorded entry with the modified stream.
      for (std::size_t i = 0; i < part.size(); ++i) {
        auto& tr = result.traces[at + i];
        tr.data.resize(static_cast<std::size_t>(layer) * T * c.d_model);
      }
      append_layer(result.traces, at, x.value(), T);
    }
    for (int i = layer; i < c.layers; ++i) {
      x = g.block(i, x, part.size(), T);
      if (record_traces) append_layer(result.traces, at, x.value(), T);
    }
    const Tensor& l = g.yes_no_logits(x, final_rows(part, T)).value();
    for (std::size_t i = 0; i < part.size(); ++i) result.logits.push_back({l.at(i, 0), l.at(i, 1)});
  }
  result.decisions.reserve(n);
  for (const auto& l : result.logits) result.decisions.push_back(decide(l));
  return result;
}

void save_subspace(const Subspace& s, const std::filesystem::path& path) {
  TensorFile f;
  f.header = {{"kind", "subspace"},
              {"d", s.d()},
              {"k", s.k()},
              {"tap_layer", s.tap().layer},
              {"tap_position", s.tap().position},
              {"provenance", s.provenance()},
              {"run_id", s.run_id()}};
  f.sections.emplace_back("basis", s.basis().columns());
  f.save(path);
}

Subspace load_subspace(const std::filesystem::path& path) {
  TensorFile f = TensorFile::load(path);
  require(f.header.value("kind", "") == "subspace", ErrorKind::kFormatShape,
          path.string() + " is not a subspace file");
  const Tensor& b = f.section("basis");
  const auto d = f.header.at("d").get<std::size_t>();
  const auto k = f.header.at("k").get<std::size_t>();
  if (b.shape() != std::vector<std::size_t>{d, k}) {
    fail(ErrorKind::kFormatShape, "basis shape " + b.shape_string() + " does not match header");
  }
  OrthonormalBasis basis = k == 0 ? OrthonormalBasis::empty(d) : OrthonormalBasis(b);
  return Subspace(std::move(basis),
                  {f.header.at("tap_layer").get<int>(), f.header.at("tap_position").get<int>()},
                  f.header.value("provenance", "trained"), f.header.value("run_id", ""));
}

}  // namespace rsub
