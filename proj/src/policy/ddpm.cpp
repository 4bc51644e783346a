#include "drivestyle/policy/ddpm.hpp"

#include "drivestyle/common/hash.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace drivestyle::policy {

using namespace numkit;

SamplerKind SamplerKind::diffusion_x(int x) {
  if (x < 1) throw std::invalid_argument("SamplerKind: Diffusion-X needs extra_steps >= 1");
  SamplerKind s;
  s.type = Type::kDiffusionX;
  s.extra_steps = x;
  return s;
}

SamplerKind SamplerKind::kde(int n, std::optional<double> bw) {
  if (n < 1) throw std::invalid_argument("SamplerKind: KDE needs n_samples >= 1");
  SamplerKind s;
  s.type = Type::kKde;
  s.n_samples = n;
  s.bandwidth = bw;
  return s;
}

std::string SamplerKind::describe() const {
  switch (type) {
    case Type::kDdpm: return "ddpm";
    case Type::kDiffusionX: return "diffusion-x:" + std::to_string(extra_steps);
    case Type::kKde:
      return "kde:" + std::to_string(n_samples) +
             (bandwidth ? ":" + std::to_string(*bandwidth) : "");
  }
  return "ddpm";
}

SamplerKind SamplerKind::parse(const std::string& text) {
  if (text.empty() || text == "ddpm") return ddpm();
  if (text.rfind("diffusion-x:", 0) == 0) return diffusion_x(std::stoi(text.substr(12)));
  if (text.rfind("kde:", 0) == 0) {
    const std::string rest = text.substr(4);
    const auto colon = rest.find(':');
    if (colon == std::string::npos) return kde(std::stoi(rest));
    return kde(std::stoi(rest.substr(0, colon)), std::stod(rest.substr(colon + 1)));
  }
  throw std::invalid_argument("SamplerKind: cannot parse '" + text + "'");
}

DdpmDraws draw_ddpm_batch(std::size_t n, const NoiseSchedule& schedule, Rng& rng) {
  DdpmDraws d;
  d.t.resize(n);
  d.eps.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    d.t[i] = 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(schedule.T)));
    d.eps[i] = rng.normal();
  }
  return d;
}

Var ddpm_loss_var(Graph& g, const DenoiserNet& net, const Tensor& obs, const Tensor& actions,
                  std::optional<Var> styles, const NoiseSchedule& schedule, const DdpmDraws& draws,
                  bool with_grad) {
  const Eigen::Index B = obs.rows();
  if (actions.rows() != B || static_cast<Eigen::Index>(draws.t.size()) != B) {
    throw std::invalid_argument("ddpm_loss: batch size mismatch");
  }
  Tensor a_t({B, 1});
  Tensor eps({B, 1});
  std::vector<double> t_values(static_cast<std::size_t>(B));
  for (Eigen::Index i = 0; i < B; ++i) {
    const std::size_t s = static_cast<std::size_t>(i);
    eps.at2(i, 0) = draws.eps[s];
    a_t.at2(i, 0) = forward_noise(actions.at2(i, 0), draws.t[s], draws.eps[s], schedule);
    t_values[s] = static_cast<double>(draws.t[s]);
  }
  const Tensor t_sin = sinusoidal_embedding(t_values, net.config().time_embed);

  if (net.config().conditioned()) {
    if (!styles.has_value()) throw std::invalid_argument("ddpm_loss: conditioning required");
    const Tensor& sv = g.value(*styles);
    if (sv.ndim() != 2 || sv.rows() != B || sv.cols() != net.config().style_dim) {
      throw std::invalid_argument("ddpm_loss: style batch must be [B,style_dim]");
    }
  } else {
    styles.reset();
  }
  Var pred = net.predict(g, g.input(obs), g.input(a_t), g.input(t_sin), styles, with_grad);
  return mse(pred, g.input(eps));
}

Var ddpm_loss_var(Graph& g, const DenoiserNet& net, const Tensor& obs, const Tensor& actions,
                  const Tensor& styles, const NoiseSchedule& schedule, const DdpmDraws& draws,
                  bool with_grad) {
  std::optional<Var> style_var;
  if (net.config().conditioned()) style_var = g.input(styles);
  return ddpm_loss_var(g, net, obs, actions, style_var, schedule, draws, with_grad);
}

double reverse_step(double a_t, int t, double eps_hat, const NoiseSchedule& schedule,
                    double noise) {
  if (t < 1 || t > schedule.T) throw std::invalid_argument("reverse_step: t out of range");
  const std::size_t i = static_cast<std::size_t>(t);
  const double mean = (a_t - (1.0 - schedule.alpha[i]) / std::sqrt(1.0 - schedule.alpha_bar[i]) *
                                 eps_hat) /
                      std::sqrt(schedule.alpha[i]);
  return mean + schedule.sigma[i] * noise;
}

double kde_select(const std::vector<double>& samples, std::optional<double> bandwidth) {
  if (samples.empty()) throw std::invalid_argument("kde_select: no samples");
  if (samples.size() == 1) return samples.front();
  double h;
  if (bandwidth) {
    h = *bandwidth;
  } else {
    // Silverman's rule over the drawn samples.
    const double n = static_cast<double>(samples.size());
    double mean = 0.0;
    for (double s : samples) mean += s;
    mean /= n;
    double var = 0.0;
    for (double s : samples) var += (s - mean) * (s - mean);
    var /= (n - 1.0);
    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    const double q1 = sorted[static_cast<std::size_t>(0.25 * (n - 1))];
    const double q3 = sorted[static_cast<std::size_t>(0.75 * (n - 1))];
    const double spread = std::min(std::sqrt(var), (q3 - q1) / 1.34);
    h = 0.9 * spread * std::pow(n, -0.2);
  }
  if (!(h > 1e-12)) return samples.front();  // degenerate cloud, all ~identical

  double best = samples.front();
  double best_density = -1.0;
  for (double x : samples) {
    double density = 0.0;
    for (double s : samples) {
      const double u = (x - s) / h;
      density += std::exp(-0.5 * u * u);
    }
    if (density > best_density) {
      best_density = density;
      best = x;
    }
  }
  return best;
}

DiffusionPolicy::DiffusionPolicy(const DenoiserConfig& config, const NoiseSchedule& schedule,
                                 std::uint64_t seed)
    : config_(config), schedule_(schedule) {
  config.validate();
  if (schedule.T < 1) throw std::invalid_argument("DiffusionPolicy: empty schedule");
  store_ = std::make_unique<ParamStore>();
  Rng rng(splitmix64(seed ^ 0xde9015ull));
  net_ = DenoiserNet(*store_, "denoiser", config, rng);
}

ParamStore& DiffusionPolicy::params() {
  if (frozen_) throw std::logic_error("DiffusionPolicy: frozen, parameters are immutable");
  return *store_;
}

double predict_eps_with_net(const DenoiserNet& net, const std::array<double, 5>& obs, double a_t,
                            int t, const Eigen::VectorXd* conditioning) {
  const DenoiserConfig& config = net.config();
  Graph g;
  Tensor o({1, config.obs_dim});
  for (int k = 0; k < config.obs_dim; ++k) o.at2(0, k) = obs[static_cast<std::size_t>(k)];
  Tensor a({1, 1});
  a.at2(0, 0) = a_t;
  const Tensor t_sin = sinusoidal_embedding({static_cast<double>(t)}, config.time_embed);
  std::optional<Var> style_var;
  if (config.conditioned()) {
    if (conditioning == nullptr) {
      throw std::invalid_argument("predict_eps: conditioning vector required");
    }
    if (conditioning->size() != config.style_dim) {
      throw std::invalid_argument("predict_eps: conditioning dimension mismatch");
    }
    Tensor c({1, config.style_dim});
    for (Eigen::Index k = 0; k < conditioning->size(); ++k) c.at2(0, k) = (*conditioning)(k);
    style_var = g.input(std::move(c));
  }
  Var pred = net.predict(g, g.input(std::move(o)), g.input(std::move(a)), g.input(t_sin),
                         style_var, false);
  return g.value(pred).at(0);
}

double sample_action_with_net(const DenoiserNet& net, const NoiseSchedule& schedule,
                              const std::array<double, 5>& obs,
                              const Eigen::VectorXd* conditioning, const SamplerKind& sampler,
                              Rng& rng) {
  auto one_ddpm_draw = [&]() {
    double a = rng.normal();
    for (int t = schedule.T; t >= 1; --t) {
      const double eps_hat = predict_eps_with_net(net, obs, a, t, conditioning);
      const double noise = (t > 1) ? rng.normal() : 0.0;
      a = reverse_step(a, t, eps_hat, schedule, noise);
    }
    return a;
  };

  double action;
  switch (sampler.type) {
    case SamplerKind::Type::kDdpm:
      action = one_ddpm_draw();
      break;
    case SamplerKind::Type::kDiffusionX: {
      action = one_ddpm_draw();
      for (int x = 0; x < sampler.extra_steps; ++x) {
        action = reverse_step(action, 1, predict_eps_with_net(net, obs, action, 1, conditioning),
                              schedule, 0.0);
      }
      break;
    }
    case SamplerKind::Type::kKde: {
      std::vector<double> draws(static_cast<std::size_t>(sampler.n_samples));
      for (double& d : draws) d = one_ddpm_draw();
      action = kde_select(draws, sampler.bandwidth);
      break;
    }
    default:
      throw std::logic_error("sample_action: unknown sampler");
  }
  return std::clamp(action, 0.0, 1.0);
}

double DiffusionPolicy::predict_eps(const std::array<double, 5>& obs, double a_t, int t,
                                    const styles::StyleVector* style) const {
  return predict_eps_with_net(net_, obs, a_t, t, style);
}

double DiffusionPolicy::sample_action(const std::array<double, 5>& obs,
                                      const styles::StyleVector* style,
                                      const SamplerKind& sampler, Rng& rng) const {
  return sample_action_with_net(net_, schedule_, obs, style, sampler, rng);
}

double DiffusionPolicy::batch_loss(const Tensor& obs, const Tensor& actions, const Tensor& styles,
                                   Rng& rng) const {
  Graph g;
  const DdpmDraws draws = draw_ddpm_batch(static_cast<std::size_t>(obs.rows()), schedule_, rng);
  Var loss = ddpm_loss_var(g, net_, obs, actions, styles, schedule_, draws, false);
  return g.value(loss).at(0);
}

std::uint64_t DiffusionPolicy::param_checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& p : store_->all()) {
    const auto* bytes = reinterpret_cast<const char*>(p->value.data());
    const std::size_t n = static_cast<std::size_t>(p->value.size()) * sizeof(double);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(bytes[i]);
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

void DiffusionPolicy::save(const std::string& path, const std::string& fingerprint,
                           std::uint64_t seed, const SamplerKind& sampler) const {
  CheckpointHeader header;
  header.fingerprint = fingerprint;
  header.seed = seed;
  header.meta["kind"] = "diffusion-policy";
  header.meta["obs_dim"] = std::to_string(config_.obs_dim);
  header.meta["style_dim"] = std::to_string(config_.style_dim);
  header.meta["hidden"] = std::to_string(config_.hidden);
  header.meta["embed"] = std::to_string(config_.embed);
  header.meta["time_embed"] = std::to_string(config_.time_embed);
  header.meta["n_hidden"] = std::to_string(config_.n_hidden);
  header.meta["T"] = std::to_string(schedule_.T);
  header.meta["beta_min"] = std::to_string(schedule_.beta[1]);
  header.meta["beta_max"] = std::to_string(schedule_.beta[static_cast<std::size_t>(schedule_.T)]);
  header.meta["sampler"] = sampler.describe();
  save_checkpoint(path, header, *store_);
}

SamplerKind DiffusionPolicy::sampler_from_header(const CheckpointHeader& header) {
  const auto it = header.meta.find("sampler");
  return it == header.meta.end() ? SamplerKind::ddpm() : SamplerKind::parse(it->second);
}

DiffusionPolicy DiffusionPolicy::load(const std::string& path) {
  const Checkpoint ckpt = read_checkpoint(path);
  if (ckpt.header.meta.at("kind") != "diffusion-policy") {
    throw std::runtime_error("DiffusionPolicy::load: '" + path + "' has wrong kind");
  }
  DenoiserConfig config;
  config.obs_dim = std::stoi(ckpt.header.meta.at("obs_dim"));
  config.style_dim = std::stoi(ckpt.header.meta.at("style_dim"));
  config.hidden = std::stoi(ckpt.header.meta.at("hidden"));
  config.embed = std::stoi(ckpt.header.meta.at("embed"));
  config.time_embed = std::stoi(ckpt.header.meta.at("time_embed"));
  config.n_hidden = std::stoi(ckpt.header.meta.at("n_hidden"));
  const NoiseSchedule schedule = make_schedule(std::stoi(ckpt.header.meta.at("T")),
                                               std::stod(ckpt.header.meta.at("beta_min")),
                                               std::stod(ckpt.header.meta.at("beta_max")));
  DiffusionPolicy policy(config, schedule, ckpt.header.seed);
  load_into(ckpt, *policy.store_);
  policy.freeze();
  return policy;
}

}  // namespace drivestyle::policy
