#include "drivestyle/baselines/baselines.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace drivestyle::baselines {

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::kDiffusionBC: return "diffusion-bc";
    case BaselineKind::kUncondDiffusionBC: return "uncond-diffusion-bc";
    case BaselineKind::kMse: return "mse";
    case BaselineKind::kDiscretized: return "discretized";
    case BaselineKind::kGaussian: return "gaussian";
    case BaselineKind::kKMeans: return "kmeans";
    case BaselineKind::kKMeansResidual: return "kmeans-residual";
    case BaselineKind::kEbmDerivFree: return "ebm-deriv-free";
    case BaselineKind::kIdmFixed: return "idm-fixed";
    case BaselineKind::kIdmLearned: return "idm-learned";
  }
  throw std::logic_error("to_string: unknown baseline kind");
}

BaselineKind baseline_kind_from_string(const std::string& name) {
  for (BaselineKind kind : all_baseline_kinds()) {
    if (to_string(kind) == name) return kind;
  }
  throw std::invalid_argument("unknown baseline kind '" + name + "'");
}

std::vector<BaselineKind> all_baseline_kinds() {
  return {BaselineKind::kDiffusionBC,    BaselineKind::kUncondDiffusionBC,
          BaselineKind::kMse,            BaselineKind::kDiscretized,
          BaselineKind::kGaussian,       BaselineKind::kKMeans,
          BaselineKind::kKMeansResidual, BaselineKind::kEbmDerivFree,
          BaselineKind::kIdmFixed,       BaselineKind::kIdmLearned};
}

datasets::Action act(const BaselinePolicy& artifact, const datasets::Observation& o,
                     const styles::ContextWindow& warmup, Rng& rng) {
  policy::EgoPolicyHooks hooks = artifact.make_hooks();
  if (hooks.begin) hooks.begin(warmup, rng);
  return datasets::Action{hooks.act(o, rng)};
}

std::vector<double> kmeans_centers_1d(const std::vector<double>& values, int k,
                                      std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("kmeans_centers_1d: k must be >= 1");
  if (values.size() < static_cast<std::size_t>(k)) {
    throw std::invalid_argument("kmeans_centers_1d: fewer values than clusters");
  }
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> centers(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    centers[static_cast<std::size_t>(c)] =
        sorted[sorted.size() * (2 * static_cast<std::size_t>(c) + 1) /
               (2 * static_cast<std::size_t>(k))];
  }
  Rng rng(seed);
  std::vector<int> assign(values.size(), -1);
  for (int iter = 0; iter < 200; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < values.size(); ++i) {
      int best = 0;
      double bd = std::abs(values[i] - centers[0]);
      for (int c = 1; c < k; ++c) {
        const double d = std::abs(values[i] - centers[static_cast<std::size_t>(c)]);
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    for (int c = 0; c < k; ++c) {
      double sum = 0.0;
      std::size_t count = 0;
      for (std::size_t i = 0; i < values.size(); ++i) {
        if (assign[i] == c) {
          sum += values[i];
          ++count;
        }
      }
      if (count > 0) {
        centers[static_cast<std::size_t>(c)] = sum / static_cast<double>(count);
      } else {
        centers[static_cast<std::size_t>(c)] = values[rng.index(values.size())];
        changed = true;
      }
    }
    if (!changed) break;
  }
  std::sort(centers.begin(), centers.end());
  return centers;
}

int discretized_bin(double action, int bins) {
  return std::min(bins - 1, std::max(0, static_cast<int>(std::floor(action * bins))));
}

double discretized_center(int bin, int bins) {
  return (bin + 0.5) / static_cast<double>(bins);
}

double derivative_free_minimize(
    const std::function<std::vector<double>(const std::vector<double>&)>& energies,
    int n_candidates, int iters, double init_noise, double noise_shrink, Rng& rng) {
  if (n_candidates < 1 || iters < 0) {
    throw std::invalid_argument("derivative_free_minimize: bad budget");
  }
  std::vector<double> candidates(static_cast<std::size_t>(n_candidates));
  for (double& c : candidates) c = rng.uniform();
  double noise = init_noise;
  for (int iter = 0; iter < iters; ++iter) {
    const std::vector<double> e = energies(candidates);
    double min_e = e[0];
    for (double v : e) min_e = std::min(min_e, v);
    std::vector<double> w(candidates.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] = std::exp(-(e[i] - min_e));
      sum += w[i];
    }
    std::vector<double> next(candidates.size());
    for (std::size_t i = 0; i < next.size(); ++i) {
      const double u = rng.uniform() * sum;
      double cum = 0.0;
      std::size_t pick = candidates.size() - 1;
      for (std::size_t j = 0; j < w.size(); ++j) {
        cum += w[j];
        if (u < cum) {
          pick = j;
          break;
        }
      }
      next[i] = std::clamp(candidates[pick] + noise * rng.normal(), 0.0, 1.0);
    }
    candidates = std::move(next);
    noise *= noise_shrink;
  }
  const std::vector<double> e = energies(candidates);
  std::size_t best = 0;
  for (std::size_t i = 1; i < e.size(); ++i) {
    if (e[i] < e[best]) best = i;
  }
  return candidates[best];
}

std::vector<IdmStyleRow> default_idm_style_table() {
  IdmStyleRow aggressive{"aggressive", {}};
  aggressive.params.v0 = 30.0;
  aggressive.params.T = 1.0;
  aggressive.params.a_max = 2.0;
  aggressive.params.b = 3.0;
  aggressive.params.s0 = 1.0;
  IdmStyleRow normal{"normal", {}};
  normal.params.v0 = 25.0;
  normal.params.T = 1.5;
  normal.params.a_max = 1.5;
  normal.params.b = 2.0;
  normal.params.s0 = 2.0;
  IdmStyleRow timid{"timid", {}};
  timid.params.v0 = 20.0;
  timid.params.T = 2.0;
  timid.params.a_max = 1.0;
  timid.params.b = 1.5;
  timid.params.s0 = 3.0;
  return {aggressive, normal, timid};
}

namespace {

nlohmann::json row_to_json(const IdmStyleRow& row) {
  return {{"name", row.name},     {"v0", row.params.v0}, {"T", row.params.T},
          {"a_max", row.params.a_max}, {"b", row.params.b},   {"delta", row.params.delta},
          {"s0", row.params.s0}};
}

IdmStyleRow row_from_json(const nlohmann::json& j) {
  IdmStyleRow row;
  row.name = j.at("name").get<std::string>();
  row.params.v0 = j.at("v0").get<double>();
  row.params.T = j.at("T").get<double>();
  row.params.a_max = j.at("a_max").get<double>();
  row.params.b = j.at("b").get<double>();
  row.params.delta = j.at("delta").get<double>();
  row.params.s0 = j.at("s0").get<double>();
  row.params.validate();
  return row;
}

}  // namespace

std::vector<IdmStyleRow> load_idm_style_table(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_idm_style_table: cannot open '" + path + "'");
  nlohmann::json j;
  is >> j;
  std::vector<IdmStyleRow> table;
  for (const auto& row : j.at("styles")) table.push_back(row_from_json(row));
  if (table.empty()) throw std::runtime_error("load_idm_style_table: empty table");
  return table;
}

void save_idm_style_table(const std::string& path, const std::vector<IdmStyleRow>& table) {
  nlohmann::json j;
  j["styles"] = nlohmann::json::array();
  for (const IdmStyleRow& row : table) j["styles"].push_back(row_to_json(row));
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_idm_style_table: cannot open '" + path + "'");
  os << j.dump(2) << "\n";
}

}  // namespace drivestyle::baselines
