#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "rsub/numerics/ops.hpp"
#include "rsub/numerics/tape.hpp"
#include "rsub/tasks/tasks.hpp"

namespace rsub {

struct ModelConfig {
  int layers = 4;
  int d_model = 64;
  int heads = 4;
  int vocab = tok::kVocabSize;
  int context = tok::kContextLength;
  int yes_id = tok::kYes;
  int no_id = tok::kNo;
  int ffn_mult = 4;

  void validate() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
  bool operator==(const ModelConfig&) const = default;
};

/// Parameters of the decoder. Block i (0-based) maps residual layer i to i + 1;
/// layer 0 is token plus position embedding.
struct ModelWeights {
  ModelConfig config;
  std::map<std::string, Tensor> params;
  nlohmann::json meta = nlohmann::json::object();  // teacher, settings, training record

  static ModelWeights initialize(const ModelConfig& config, std::uint64_t seed);
  /// All-zero parameters (norm gains included).
  static ModelWeights zeros(const ModelConfig& config);
  static std::vector<std::pair<std::string, std::vector<std::size_t>>> layout(const ModelConfig& c);
};

void save_weights(const ModelWeights& w, const std::filesystem::path& path);
/// With `expected`, a config that differs raises kFormatShape.
ModelWeights load_weights(const std::filesystem::path& path,
                          const ModelConfig* expected = nullptr);

/// Parameters bound onto a tape, built lazily. Sequences are packed as
/// n * seq_len rows.
class Graph {
 public:
  Graph(ad::Tape& tape, const ModelWeights& w, bool trainable);

  ad::Var param(const std::string& name);
  ad::Tape& tape() { return tape_; }
  const ModelConfig& config() const { return w_.config; }

  ad::Var embed(std::span<const EncodedPrompt> prompts, std::size_t seq_len);
  ad::Var block(int index, ad::Var x, std::size_t n, std::size_t seq_len);
  /// Residual stream at `layer` (0..L).
  ad::Var run_to(std::span<const EncodedPrompt> prompts, std::size_t seq_len, int layer);
  /// Continues from the residual stream at `layer` through the last block.
  ad::Var run_from(ad::Var x, int layer, std::size_t n, std::size_t seq_len);
  /// Full-vocabulary logits at the listed rows.
  ad::Var logits(ad::Var x, std::span<const std::size_t> rows);
  /// n x 2 logits restricted to (Yes, No).
  ad::Var yes_no_logits(ad::Var x, std::span<const std::size_t> rows);

 private:
  ad::Tape& tape_;
  const ModelWeights& w_;
  bool trainable_;
  std::map<std::string, ad::Var> bound_;
};

/// Rows up to the latest final position are enough for the readout.
std::size_t readout_length(std::span<const EncodedPrompt> prompts);
std::vector<std::size_t> final_rows(std::span<const EncodedPrompt> prompts, std::size_t seq_len);

struct LogitPair {
  float yes = 0;
  float no = 0;
};

/// (L + 1) x context x d activations.
struct TapTrace {
  int layers = 0;
  int positions = 0;
  int d = 0;
  std::vector<float> data;

  std::span<const float> at(int layer, int pos) const;
  bool operator==(const TapTrace&) const = default;
};

struct ForwardResult {
  LogitPair logits;
  TapTrace trace;
};

ForwardResult forward_with_taps(const ModelWeights& w, const EncodedPrompt& prompt);
std::vector<LogitPair> yes_no_logits(const ModelWeights& w, std::span<const EncodedPrompt> prompts,
                                     std::size_t chunk = 256);

Label decide(LogitPair l);
std::vector<Label> decide_all(const ModelWeights& w, std::span<const EncodedPrompt> prompts);

void validate_prompt(const ModelConfig& c, const EncodedPrompt& e);

}  // namespace rsub
