#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rsub/common/seed.hpp"
#include "rsub/numerics/linalg.hpp"
#include "rsub/refmodel/model.hpp"

namespace rsub {

/// Residual-stream location: layer 0..L (0 = embeddings) and token position.
struct Tap {
  int layer = 0;
  int position = 0;

  std::string to_string() const;
  /// "LAYER:POS"
  static Tap parse(std::string_view text);
  bool operator==(const Tap&) const = default;
};

class Subspace {
 public:
  Subspace() = default;
  Subspace(OrthonormalBasis basis, Tap tap, std::string provenance = "trained",
           std::string run_id = "");

  const OrthonormalBasis& basis() const { return basis_; }
  const Tap& tap() const { return tap_; }
  std::size_t d() const { return basis_.ambient_dim(); }
  std::size_t k() const { return basis_.k(); }
  const std::string& provenance() const { return provenance_; }
  const std::string& run_id() const { return run_id_; }

  void validate_for(const ModelConfig& c) const;

 private:
  OrthonormalBasis basis_;
  Tap tap_;
  std::string provenance_ = "trained";
  std::string run_id_;
};

/// B (B^T v)
std::vector<float> project(const Subspace& s, std::span<const float> v);
/// v - B (B^T v)
std::vector<float> complement_project(const Subspace& s, std::span<const float> v);
std::vector<float> dii_replace(std::span<const float> target, std::span<const float> source,
                               const Subspace& s);

/// Row-wise versions over n x d tensors.
Tensor project_rows(const Subspace& s, const Tensor& x);
Tensor complement_rows(const Subspace& s, const Tensor& x);
Tensor dii_rows(const Tensor& target, const Tensor& source, const Subspace& s);

enum class AverageScope { kBatch, kPerProfileVariants };
std::string_view to_string(AverageScope s);

Tensor batch_race_average(const Tensor& reps, const Subspace& s, AverageScope scope);
Tensor full_average(const Tensor& reps);

Subspace random_subspace(std::size_t d, std::size_t k, SeedStream& rng, Tap tap = {});

enum class InterventionKind { kNone, kDii, kRaceAverage, kRaceProject, kFullAverage, kRandomProject };
std::string_view to_string(InterventionKind k);

struct InterventionSpec {
  InterventionKind kind = InterventionKind::kNone;
  Tap tap;
  std::optional<Subspace> subspace;
  AverageScope scope = AverageScope::kBatch;

  void validate(const ModelConfig& c) const;
  nlohmann::json to_json() const;
};

struct InterventionResult {
  std::vector<LogitPair> logits;
  std::vector<Label> decisions;
  std::vector<TapTrace> traces;  // filled only on request
};

/// Runs to the tap, transforms the tap-position activations of the whole batch
/// at once, then resumes. Batch-statistic kinds average over all `prompts`.
InterventionResult run_with_intervention(const ModelWeights& w,
                                         std::span<const EncodedPrompt> prompts,
                                         const InterventionSpec& spec,
                                         std::span<const EncodedPrompt> sources = {},
                                         bool record_traces = false, std::size_t chunk = 256);

void save_subspace(const Subspace& s, const std::filesystem::path& path);
Subspace load_subspace(const std::filesystem::path& path);

}  // namespace rsub
