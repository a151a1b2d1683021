#include "rsub/alignment/sweep.hpp"

#include <cstdio>
#include <numeric>
#include <sstream>

#include "rsub/common/error.hpp"
#include "rsub/common/seed.hpp"

namespace rsub {

const SweepCell& SweepResult::cell(Tap t) const {
  for (const auto& c : cells) {
    if (c.tap == t) return c;
  }
  fail(ErrorKind::kUsage, "no sweep cell at " + t.to_string());
}

std::string SweepResult::to_csv() const {
  std::ostringstream os;
  os << "layer,position,dev_iia,test_iia,seed\n";
  char buf[64];
  for (const auto& c : cells) {
    os << c.tap.layer << ',' << c.tap.position << ',';
    if (c.error) {
      os << "nan,nan,";
    } else {
      std::snprintf(buf, sizeof buf, "%.6f,%.6f,", c.dev_iia, c.test_iia);
      os << buf;
    }
    os << c.seed << '\n';
  }
  return os.str();
}

namespace {

bool better(const SweepCell& a, const SweepCell& b) {
  if (a.dev_iia != b.dev_iia) return a.dev_iia > b.dev_iia;
  if (a.tap.layer != b.tap.layer) return a.tap.layer > b.tap.layer;
  return a.tap.position > b.tap.position;
}

}  // namespace

SweepResult location_sweep(const ModelWeights& w, std::span<const CounterfactualPair> train,
                           std::span<const CounterfactualPair> dev,
                           std::span<const CounterfactualPair> test, const DasConfig& config,
                           std::span<const int> layers, std::span<const int> positions) {
  require(!layers.empty() && !positions.empty(), ErrorKind::kUsage, "empty sweep grid");
  SweepResult result;
  std::optional<std::size_t> best;
  for (int layer : layers) {
    for (int pos : positions) {
      SweepCell cell;
      cell.tap = Tap{layer, pos};
      cell.seed = derive_seed(config.seed, "cell/" + cell.tap.to_string());
      try {
        TapCache dc(w, dev, cell.tap), tc(w, test, cell.tap);
        if (result.cells.empty()) result.trivial_baseline = tc.trivial_baseline();
        DasConfig cfg = config;
        cfg.tap = cell.tap;
        cfg.seed = cell.seed;
        Subspace s;
        if (dc.affects_readout()) {
          TapCache trc(w, train, cell.tap);
          s = train_das(trc, dc, cfg).subspace;
          cell.trained = true;
        } else {
          s = Subspace(OrthonormalBasis::empty(static_cast<std::size_t>(w.config.d_model)),
                       cell.tap);
        }
        cell.dev_iia = dc.iia(s);
        cell.test_iia = tc.iia(s);
        result.cells.push_back(cell);
        if (!best || better(result.cells.back(), result.cells[*best])) {
          best = result.cells.size() - 1;
          result.best = cell.tap;
          result.best_subspace = std::move(s);
        }
      } catch (const Error& e) {
        cell.error = e.what();
        result.cells.push_back(cell);
      }
    }
  }
  require(result.best_subspace.has_value(), ErrorKind::kDivergence, "every sweep cell failed");
  return result;
}

SweepResult location_sweep(const ModelWeights& w, std::span<const CounterfactualPair> train,
                           std::span<const CounterfactualPair> dev,
                           std::span<const CounterfactualPair> test, const DasConfig& config) {
  std::vector<int> layers(static_cast<std::size_t>(w.config.layers + 1));
  std::vector<int> positions(static_cast<std::size_t>(w.config.context));
  std::iota(layers.begin(), layers.end(), 0);
  std::iota(positions.begin(), positions.end(), 0);
  return location_sweep(w, train, dev, test, config, layers, positions);
}

}  // namespace rsub
