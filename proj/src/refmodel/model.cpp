#include "rsub/refmodel/model.hpp"

#include <algorithm>
#include <cmath>

#include "rsub/common/error.hpp"
#include "rsub/common/seed.hpp"
#include "rsub/common/tensor_file.hpp"

namespace rsub {

void ModelConfig::validate() const {
  require(layers >= 1 && d_model >= 1 && heads >= 1 && vocab >= 2 && context >= 1 && ffn_mult >= 1,
          ErrorKind::kContract, "model config: sizes must be positive");
  require(d_model % heads == 0, ErrorKind::kContract, "model config: d must be divisible by heads");
  require(yes_id >= 0 && yes_id < vocab && no_id >= 0 && no_id < vocab && yes_id != no_id,
          ErrorKind::kContract, "model config: bad Yes/No token ids");
}

nlohmann::json ModelConfig::to_json() const {
  return {{"layers", layers}, {"d_model", d_model}, {"heads", heads},   {"vocab", vocab},
          {"context", context}, {"yes_id", yes_id}, {"no_id", no_id}, {"ffn_mult", ffn_mult}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.layers = j.value("layers", c.layers);
  c.d_model = j.value("d_model", c.d_model);
  c.heads = j.value("heads", c.heads);
  c.vocab = j.value("vocab", c.vocab);
  c.context = j.value("context", c.context);
  c.yes_id = j.value("yes_id", c.yes_id);
  c.no_id = j.value("no_id", c.no_id);
  c.ffn_mult = j.value("ffn_mult", c.ffn_mult);
  c.validate();
  return c;
}

std::vector<std::pair<std::string, std::vector<std::size_t>>> ModelWeights::layout(
    const ModelConfig& c) {
  const std::size_t d = c.d_model, f = static_cast<std::size_t>(c.ffn_mult) * d;
  std::vector<std::pair<std::string, std::vector<std::size_t>>> out;
  out.push_back({"tok_emb", {static_cast<std::size_t>(c.vocab), d}});
  out.push_back({"pos_emb", {static_cast<std::size_t>(c.context), d}});
  for (int i = 0; i < c.layers; ++i) {
    const std::string p = "block" + std::to_string(i) + ".";
    out.push_back({p + "attn_norm", {1, d}});
    out.push_back({p + "wqkv", {d, 3 * d}});
    out.push_back({p + "wo", {d, d}});
    out.push_back({p + "ffn_norm", {1, d}});
    out.push_back({p + "w1", {d, f}});
    out.push_back({p + "b1", {1, f}});
    out.push_back({p + "w2", {f, d}});
    out.push_back({p + "b2", {1, d}});
  }
  out.push_back({"final_norm", {1, d}});
  out.push_back({"head", {d, static_cast<std::size_t>(c.vocab)}});
  return out;
}

namespace {

bool is_gain(const std::string& name) { return name.ends_with("norm"); }
bool is_bias(const std::string& name) { return name.ends_with(".b1") || name.ends_with(".b2"); }

}  // namespace

ModelWeights ModelWeights::initialize(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ModelWeights w;
  w.config = config;
  SeedStream rng(seed);
  for (auto& [name, shape] : layout(config)) {
    Tensor t(shape);
    if (is_gain(name)) {
      for (float& v : t.values()) v = 1.0f;
    } else if (!is_bias(name)) {
      for (float& v : t.values()) v = static_cast<float>(rng.normal(0.0, 0.02));
    }
    w.params.emplace(name, std::move(t));
  }
  return w;
}

ModelWeights ModelWeights::zeros(const ModelConfig& config) {
  config.validate();
  ModelWeights w;
  w.config = config;
  for (auto& [name, shape] : layout(config)) w.params.emplace(name, Tensor(shape));
  return w;
}

void save_weights(const ModelWeights& w, const std::filesystem::path& path) {
  TensorFile f;
  f.header = {{"kind", "model"}, {"config", w.config.to_json()}, {"meta", w.meta}};
  for (const auto& [name, shape] : ModelWeights::layout(w.config)) {
    f.sections.emplace_back(name, w.params.at(name));
  }
  f.save(path);
}

ModelWeights load_weights(const std::filesystem::path& path, const ModelConfig* expected) {
  TensorFile f = TensorFile::load(path);
  require(f.header.value("kind", "") == "model", ErrorKind::kFormatShape,
          path.string() + " is not a model file");
  ModelWeights w;
  w.config = ModelConfig::from_json(f.header.at("config"));
  if (expected && !(*expected == w.config)) {
    fail(ErrorKind::kFormatShape, "model file config " + w.config.to_json().dump() +
                                      " does not match expected " + expected->to_json().dump());
  }
  w.meta = f.header.value("meta", nlohmann::json::object());
  for (const auto& [name, shape] : ModelWeights::layout(w.config)) {
    const Tensor& t = f.section(name);
    if (t.shape() != shape) {
      fail(ErrorKind::kFormatShape, "section " + name + " has shape " + t.shape_string() +
                                        ", expected " + shape_string(shape));
    }
    w.params.emplace(name, t);
  }
  return w;
}

Graph::Graph(ad::Tape& tape, const ModelWeights& w, bool trainable)
    : tape_(tape), w_(w), trainable_(trainable) {}

ad::Var Graph::param(const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  auto pit = w_.params.find(name);
  require(pit != w_.params.end(), ErrorKind::kContract, "unknown parameter " + name);
  ad::Var v = trainable_ ? tape_.parameter(name, pit->second) : tape_.constant(pit->second);
  bound_.emplace(name, v);
  return v;
}

void validate_prompt(const ModelConfig& c, const EncodedPrompt& e) {
  require(static_cast<int>(e.tokens.size()) == c.context, ErrorKind::kContract,
          "prompt length does not match the model context");
  for (int t : e.tokens) {
    require(t >= 0 && t < c.vocab, ErrorKind::kContract,
            "token id " + std::to_string(t) + " outside vocabulary");
  }
  require(e.final_pos >= 0 && e.final_pos < c.context, ErrorKind::kContract,
          "final position out of range");
}

ad::Var Graph::embed(std::span<const EncodedPrompt> prompts, std::size_t seq_len) {
  require(seq_len >= 1 && seq_len <= static_cast<std::size_t>(config().context),
          ErrorKind::kContract, "sequence length out of range");
  std::vector<int> ids, pos;
  ids.reserve(prompts.size() * seq_len);
  pos.reserve(prompts.size() * seq_len);
  for (const auto& e : prompts) {
    validate_prompt(config(), e);
    for (std::size_t t = 0; t < seq_len; ++t) {
      ids.push_back(e.tokens[t]);
      pos.push_back(static_cast<int>(t));
    }
  }
  return ad::add(ad::embedding_gather(param("tok_emb"), ids),
                 ad::embedding_gather(param("pos_emb"), pos));
}

ad::Var Graph::block(int index, ad::Var x, std::size_t n, std::size_t seq_len) {
  const std::string p = "block" + std::to_string(index) + ".";
  ad::Var h = ad::rms_normalize(x, param(p + "attn_norm"));
  ad::Var att = ad::causal_attention(ad::matmul(h, param(p + "wqkv")), n, seq_len,
                                     static_cast<std::size_t>(config().heads));
  x = ad::add(x, ad::matmul(att, param(p + "wo")));
  h = ad::rms_normalize(x, param(p + "ffn_norm"));
  ad::Var f = ad::gelu(ad::add(ad::matmul(h, param(p + "w1")), param(p + "b1")));
  return ad::add(x, ad::add(ad::matmul(f, param(p + "w2")), param(p + "b2")));
}

ad::Var Graph::run_to(std::span<const EncodedPrompt> prompts, std::size_t seq_len, int layer) {
  require(layer >= 0 && layer <= config().layers, ErrorKind::kContract, "layer out of range");
  ad::Var x = embed(prompts, seq_len);
  for (int i = 0; i < layer; ++i) x = block(i, x, prompts.size(), seq_len);
  return x;
}

ad::Var Graph::run_from(ad::Var x, int layer, std::size_t n, std::size_t seq_len) {
  require(layer >= 0 && layer <= config().layers, ErrorKind::kContract, "layer out of range");
  for (int i = layer; i < config().layers; ++i) x = block(i, x, n, seq_len);
  return x;
}

ad::Var Graph::logits(ad::Var x, std::span<const std::size_t> rows) {
  ad::Var h = ad::rms_normalize(ad::gather_rows(x, rows), param("final_norm"));
  return ad::matmul(h, param("head"));
}

ad::Var Graph::yes_no_logits(ad::Var x, std::span<const std::size_t> rows) {
  auto it = bound_.find("#head_yes_no");
  if (it == bound_.end()) {
    const std::vector<std::size_t> cols{static_cast<std::size_t>(config().yes_id),
                                        static_cast<std::size_t>(config().no_id)};
    it = bound_.emplace("#head_yes_no", ad::gather_cols(param("head"), cols)).first;
  }
  ad::Var h = ad::rms_normalize(ad::gather_rows(x, rows), param("final_norm"));
  return ad::matmul(h, it->second);
}

std::size_t readout_length(std::span<const EncodedPrompt> prompts) {
  int m = 0;
  for (const auto& e : prompts) m = std::max(m, e.final_pos);
  return static_cast<std::size_t>(m + 1);
}

std::vector<std::size_t> final_rows(std::span<const EncodedPrompt> prompts, std::size_t seq_len) {
  std::vector<std::size_t> rows(prompts.size());
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    require(static_cast<std::size_t>(prompts[i].final_pos) < seq_len, ErrorKind::kContract,
            "final position beyond sequence length");
    rows[i] = i * seq_len + static_cast<std::size_t>(prompts[i].final_pos);
  }
  return rows;
}

std::span<const float> TapTrace::at(int layer, int pos) const {
  require(layer >= 0 && layer < layers && pos >= 0 && pos < positions, ErrorKind::kContract,
          "trace index out of range");
  const auto off = (static_cast<std::size_t>(layer) * positions + pos) * d;
  return std::span<const float>(data).subspan(off, static_cast<std::size_t>(d));
}

ForwardResult forward_with_taps(const ModelWeights& w, const EncodedPrompt& prompt) {
  const auto& c = w.config;
  const std::size_t T = static_cast<std::size_t>(c.context);
  ad::Tape tape;
  Graph g(tape, w, false);
  std::span<const EncodedPrompt> one(&prompt, 1);
  ForwardResult r;
  r.trace.layers = c.layers + 1;
  r.trace.positions = c.context;
  r.trace.d = c.d_model;
  ad::Var x = g.embed(one, T);
  auto record = [&](const Tensor& v) {
    r.trace.data.insert(r.trace.data.end(), v.values().begin(), v.values().end());
  };
  record(x.value());
  for (int i = 0; i < c.layers; ++i) {
    x = g.block(i, x, 1, T);
    record(x.value());
  }
  const auto rows = final_rows(one, T);
  const Tensor& l = g.yes_no_logits(x, rows).value();
  r.logits = {l[0], l[1]};
  return r;
}

std::vector<LogitPair> yes_no_logits(const ModelWeights& w, std::span<const EncodedPrompt> prompts,
                                     std::size_t chunk) {
  std::vector<LogitPair> out;
  out.reserve(prompts.size());
  for (std::size_t at = 0; at < prompts.size(); at += chunk) {
    auto part = prompts.subspan(at, std::min(chunk, prompts.size() - at));
    const std::size_t T = readout_length(part);
    ad::Tape tape;
    Graph g(tape, w, false);
    ad::Var x = g.run_to(part, T, w.config.layers);
    const Tensor& l = g.yes_no_logits(x, final_rows(part, T)).value();
    for (std::size_t i = 0; i < part.size(); ++i) out.push_back({l.at(i, 0), l.at(i, 1)});
  }
  return out;
}

Label decide(LogitPair l) {
  require(std::isfinite(l.yes) && std::isfinite(l.no), ErrorKind::kNumericDomain,
          "non-finite logits in decide");
  return l.yes > l.no ? Label::kYes : Label::kNo;
}

std::vector<Label> decide_all(const ModelWeights& w, std::span<const EncodedPrompt> prompts) {
  std::vector<Label> out;
  out.reserve(prompts.size());
  for (const auto& l : yes_no_logits(w, prompts)) out.push_back(decide(l));
  return out;
}

}  // namespace rsub
