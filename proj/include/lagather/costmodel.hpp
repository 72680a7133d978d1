#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lagather/collectives.hpp"
#include "lagather/core.hpp"
#include "lagather/counts.hpp"
#include "lagather/fabric.hpp"

namespace lagather {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Per-message latency (s) and per-byte cost (s/byte), non-local and local.
struct LinkParams {
  double alpha = 0.0;
  double beta = 0.0;
  double alpha_local = 0.0;
  double beta_local = 0.0;

  friend bool operator==(const LinkParams&, const LinkParams&) = default;
};

struct CostParams {
  LinkParams eager;
  LinkParams rendezvous;
  std::int64_t threshold_bytes = 8192;

  // Same link parameters for both protocols.
  static CostParams single_protocol(const LinkParams& link, std::int64_t threshold = 8192) {
    return CostParams{link, link, threshold};
  }

  friend bool operator==(const CostParams&, const CostParams&) = default;
};

// Model-relative defaults; mirrors presets/default.params.
inline CostParams default_cost_params() {
  return CostParams{LinkParams{2e-6, 4e-10, 3e-7, 8e-11}, LinkParams{6e-6, 2.5e-10, 1.2e-6, 5e-11}, 8192};
}

inline void validate(const CostParams& params) {
  for (const LinkParams* l : {&params.eager, &params.rendezvous})
    for (double v : {l->alpha, l->beta, l->alpha_local, l->beta_local})
      if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("cost parameters must be finite and >= 0");
  if (params.threshold_bytes <= 0) throw std::invalid_argument("threshold_bytes must be > 0");
}

// Non-fatal observations: local links that cost more than non-local ones.
inline std::vector<std::string> locality_warnings(const CostParams& params) {
  std::vector<std::string> out;
  auto check = [&](const char* proto, const LinkParams& l) {
    if (l.alpha < l.alpha_local) out.push_back(std::string(proto) + ".alpha < " + proto + ".alpha_local");
    if (l.beta < l.beta_local) out.push_back(std::string(proto) + ".beta < " + proto + ".beta_local");
  };
  check("eager", params.eager);
  check("rendezvous", params.rendezvous);
  return out;
}

enum class Protocol { Eager, Rendezvous };

inline Protocol protocol_select(std::int64_t message_bytes, const CostParams& params) noexcept {
  return message_bytes >= params.threshold_bytes ? Protocol::Rendezvous : Protocol::Eager;
}

inline const LinkParams& link_for(Protocol proto, const CostParams& params) noexcept {
  return proto == Protocol::Rendezvous ? params.rendezvous : params.eager;
}

// Parses `key = value` lines; '#' starts a comment. All keys are required.
inline CostParams parse_cost_params(std::istream& in) {
  std::map<std::string, double, std::less<>> values;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return std::string_view{};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view text = line;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument("params line " + std::to_string(lineno) + ": expected key = value");
    const auto key = trim(text.substr(0, eq));
    const auto raw = trim(text.substr(eq + 1));
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
    if (ec != std::errc{} || ptr != raw.data() + raw.size())
      throw std::invalid_argument("params line " + std::to_string(lineno) + ": bad number '" + std::string(raw) + "'");
    if (!values.emplace(std::string(key), v).second)
      throw std::invalid_argument("params line " + std::to_string(lineno) + ": duplicate key " + std::string(key));
  }

  CostParams out;
  const std::pair<const char*, double*> slots[] = {
      {"eager.alpha", &out.eager.alpha},
      {"eager.beta", &out.eager.beta},
      {"eager.alpha_local", &out.eager.alpha_local},
      {"eager.beta_local", &out.eager.beta_local},
      {"rendezvous.alpha", &out.rendezvous.alpha},
      {"rendezvous.beta", &out.rendezvous.beta},
      {"rendezvous.alpha_local", &out.rendezvous.alpha_local},
      {"rendezvous.beta_local", &out.rendezvous.beta_local},
  };
  for (const auto& [key, dst] : slots) {
    const auto it = values.find(key);
    if (it == values.end()) throw std::invalid_argument(std::string("params: missing key ") + key);
    *dst = it->second;
    values.erase(it);
  }
  const auto th = values.find("threshold_bytes");
  if (th == values.end()) throw std::invalid_argument("params: missing key threshold_bytes");
  if (th->second != std::floor(th->second)) throw std::invalid_argument("params: threshold_bytes must be an integer");
  out.threshold_bytes = static_cast<std::int64_t>(th->second);
  values.erase(th);
  if (!values.empty()) throw std::invalid_argument("params: unknown key " + values.begin()->first);
  validate(out);
  return out;
}

inline CostParams load_cost_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read params file " + path);
  return parse_cost_params(in);
}

inline void write_cost_params(std::ostream& os, const CostParams& params) {
  std::ostringstream ss;
  ss.precision(17);
  auto put = [&](const char* proto, const LinkParams& l) {
    ss << proto << ".alpha = " << l.alpha << '\n'
       << proto << ".beta = " << l.beta << '\n'
       << proto << ".alpha_local = " << l.alpha_local << '\n'
       << proto << ".beta_local = " << l.beta_local << '\n';
  };
  put("eager", params.eager);
  put("rendezvous", params.rendezvous);
  ss << "threshold_bytes = " << params.threshold_bytes << '\n';
  os << ss.str();
}

struct MessageSizes {
  std::vector<std::int64_t> nonlocal;  // bytes per message
  std::vector<std::int64_t> local;
};

// Message counts and byte volumes sent by one rank: n/s non-local, n_local /
// s_local local. With `sizes`, the protocol is chosen per message; without,
// per class from the class's mean message size.
struct ModelInput {
  std::int64_t n = 0;
  std::int64_t s = 0;
  std::int64_t n_local = 0;
  std::int64_t s_local = 0;
  std::optional<MessageSizes> sizes;
};

inline void validate(const ModelInput& in) {
  if (in.n < 0 || in.s < 0 || in.n_local < 0 || in.s_local < 0)
    throw std::invalid_argument("model input counts must be >= 0");
  if ((in.n == 0 && in.s > 0) || (in.n_local == 0 && in.s_local > 0))
    throw std::invalid_argument("model input has bytes without messages");
  if (in.sizes) {
    auto sum = [](const std::vector<std::int64_t>& v) { return std::accumulate(v.begin(), v.end(), std::int64_t{0}); };
    if (static_cast<std::int64_t>(in.sizes->nonlocal.size()) != in.n ||
        static_cast<std::int64_t>(in.sizes->local.size()) != in.n_local || sum(in.sizes->nonlocal) != in.s ||
        sum(in.sizes->local) != in.s_local)
      throw std::invalid_argument("per-message sizes disagree with the message totals");
  }
}

namespace detail {

// alpha * count + beta * bytes for one class of messages.
template <typename AlphaFn, typename BetaFn>
double class_cost(std::int64_t count, std::int64_t bytes, const std::vector<std::int64_t>* sizes,
                  const CostParams& params, AlphaFn alpha, BetaFn beta) {
  if (sizes) {
    double t = 0.0;
    for (std::int64_t m : *sizes) {
      const LinkParams& l = link_for(protocol_select(m, params), params);
      t += alpha(l) + beta(l) * static_cast<double>(m);
    }
    return t;
  }
  if (count == 0) return 0.0;
  const LinkParams& l = link_for(protocol_select(bytes / count, params), params);
  return alpha(l) * static_cast<double>(count) + beta(l) * static_cast<double>(bytes);
}

}  // namespace detail

// alpha * (n + n_local) + beta * (s + s_local): locality ignored, non-local
// parameters throughout.
inline double postal_cost(const ModelInput& in, const CostParams& params) {
  validate(in);
  auto a = [](const LinkParams& l) { return l.alpha; };
  auto b = [](const LinkParams& l) { return l.beta; };
  if (in.sizes) {
    return detail::class_cost(in.n, in.s, &in.sizes->nonlocal, params, a, b) +
           detail::class_cost(in.n_local, in.s_local, &in.sizes->local, params, a, b);
  }
  return detail::class_cost(in.n + in.n_local, in.s + in.s_local, nullptr, params, a, b);
}

// alpha * n + beta * s + alpha_local * n_local + beta_local * s_local
inline double locality_cost(const ModelInput& in, const CostParams& params) {
  validate(in);
  const auto* nl = in.sizes ? &in.sizes->nonlocal : nullptr;
  const auto* lo = in.sizes ? &in.sizes->local : nullptr;
  return detail::class_cost(in.n, in.s, nl, params, [](const LinkParams& l) { return l.alpha; },
                            [](const LinkParams& l) { return l.beta; }) +
         detail::class_cost(in.n_local, in.s_local, lo, params, [](const LinkParams& l) { return l.alpha_local; },
                            [](const LinkParams& l) { return l.beta_local; });
}

inline ModelInput model_input_from_profile(std::span<const MessageShape> profile, const Topology& topo) {
  ModelInput in;
  in.sizes.emplace();
  for (const auto& m : profile) {
    const std::int64_t bytes = m.values * topo.value_width();
    if (m.locality == Locality::NonLocal) {
      ++in.n;
      in.s += bytes;
      in.sizes->nonlocal.push_back(bytes);
    } else {
      ++in.n_local;
      in.s_local += bytes;
      in.sizes->local.push_back(bytes);
    }
  }
  return in;
}

// Everything `rank` sent in a simulated event log.
inline ModelInput model_input_for_rank(std::span<const MessageEvent> events, Rank rank) {
  ModelInput in;
  in.sizes.emplace();
  for (const auto& e : events) {
    if (e.src != rank) continue;
    if (e.locality == Locality::NonLocal) {
      ++in.n;
      in.s += e.bytes;
      in.sizes->nonlocal.push_back(e.bytes);
    } else {
      ++in.n_local;
      in.s_local += e.bytes;
      in.sizes->local.push_back(e.bytes);
    }
  }
  return in;
}

// Paper: the closed forms, with one protocol for the whole collective chosen
// from the per-rank contribution n * value_width.
// Exact: per-message sums over the critical rank's messages, protocol chosen
// per message.
enum class ModelVariant { Paper, Exact };

inline std::string_view to_string(ModelVariant v) noexcept { return v == ModelVariant::Paper ? "paper" : "exact"; }

namespace detail {

inline const LinkParams& paper_link(const Topology& topo, const CostParams& params) {
  return link_for(protocol_select(static_cast<std::int64_t>(topo.values_per_rank()) * topo.value_width(), params),
                  params);
}

inline double gathered_bytes(const Topology& topo) {
  return static_cast<double>(topo.p()) * topo.values_per_rank() * topo.value_width();
}

inline double exact_model(AlgorithmId alg, const Topology& topo, const CostParams& params) {
  return locality_cost(model_input_from_profile(critical_profile(alg, topo), topo), params);
}

}  // namespace detail

// T = log2(p) * alpha + (b - 1) * beta, b the bytes of the gathered array.
inline double bruck_model(const Topology& topo, const CostParams& params, ModelVariant variant) {
  if (!is_power_of_two(static_cast<std::size_t>(topo.p())))
    throw UnsupportedTopology("bruck requires a power-of-2 process count, got p=" + std::to_string(topo.p()));
  if (variant == ModelVariant::Exact) return detail::exact_model(AlgorithmId::Bruck, topo, params);
  const LinkParams& l = detail::paper_link(topo, params);
  const double b = detail::gathered_bytes(topo);
  return log2_exact(static_cast<std::size_t>(topo.p())) * l.alpha + (b - 1.0) * l.beta;
}

// T = k * alpha + (b / p_l) * beta + (k + 1) * alpha_local + (b - 1) * beta_local
// with k = log_{p_l}(r). The Paper variant takes k as a real number, so it is
// defined for any power-of-two layout with p_l >= 2 (or p = 1).
inline double locality_bruck_model(const Topology& topo, const CostParams& params, ModelVariant variant) {
  if (variant == ModelVariant::Exact) return detail::exact_model(AlgorithmId::LocalityBruck, topo, params);
  require_power_of_two_layout(topo, "locality-bruck");
  if (topo.region_size() == 1 && topo.p() > 1)
    throw UnsupportedTopology("locality-bruck model needs region size >= 2 when p > 1");
  const double k = topo.region_count() == 1 ? 0.0
                                            : std::log2(static_cast<double>(topo.region_count())) /
                                                  std::log2(static_cast<double>(topo.region_size()));
  const LinkParams& l = detail::paper_link(topo, params);
  const double b = detail::gathered_bytes(topo);
  return k * l.alpha + b / topo.region_size() * l.beta + (k + 1.0) * l.alpha_local + (b - 1.0) * l.beta_local;
}

// Paper: (p - 1) * alpha + b * (p - 1) / p * beta.
inline double ring_model(const Topology& topo, const CostParams& params, ModelVariant variant) {
  if (variant == ModelVariant::Exact) return detail::exact_model(AlgorithmId::Ring, topo, params);
  const LinkParams& l = detail::paper_link(topo, params);
  const double b = detail::gathered_bytes(topo);
  return (topo.p() - 1) * l.alpha + b * (topo.p() - 1) / topo.p() * l.beta;
}

// nullopt where no closed form exists (the hierarchical baseline has only the
// Exact variant).
inline std::optional<double> model_cost(AlgorithmId alg, const Topology& topo, const CostParams& params,
                                        ModelVariant variant) {
  switch (alg) {
    case AlgorithmId::Bruck: return bruck_model(topo, params, variant);
    case AlgorithmId::LocalityBruck: return locality_bruck_model(topo, params, variant);
    case AlgorithmId::Ring: return ring_model(topo, params, variant);
    case AlgorithmId::Hierarchical:
      if (variant == ModelVariant::Paper) return std::nullopt;
      return detail::exact_model(alg, topo, params);
  }
  throw std::invalid_argument("unknown algorithm");
}

struct ModelRow {
  Topology topo;
  AlgorithmId algorithm;
  ModelVariant variant;
  std::optional<double> seconds;
  std::string error;  // set when seconds is empty
};

// One row per (topology, algorithm, variant), in that nesting order. Errors
// become row-level markers instead of aborting the sweep.
inline std::vector<ModelRow> sweep_models(std::span<const Topology> topos, const CostParams& params,
                                          std::span<const AlgorithmId> algorithms = kAllAlgorithms) {
  validate(params);
  std::vector<ModelRow> rows;
  for (const auto& topo : topos)
    for (AlgorithmId alg : algorithms)
      for (ModelVariant v : {ModelVariant::Paper, ModelVariant::Exact}) {
        ModelRow row{topo, alg, v, std::nullopt, {}};
        try {
          row.seconds = model_cost(alg, topo, params, v);
          if (!row.seconds) row.error = "no closed-form model";
        } catch (const std::invalid_argument& e) {
          row.error = e.what();
        }
        rows.push_back(std::move(row));
      }
  return rows;
}

}  // namespace lagather
