#include "adasecant/serialize.hpp"

#include <stdexcept>

namespace adasecant {

using nlohmann::json;

json bank_to_json(const StatBank& bank) {
  json j;
  auto& mean = j["mean"] = json::array();
  auto& mean_sq = j["mean_sq"] = json::array();
  auto& tau = j["tau"] = json::array();
  auto& count = j["count"] = json::array();
  for (const MovingStat& s : bank.stats) {
    mean.push_back(s.mean);
    mean_sq.push_back(s.mean_sq);
    tau.push_back(s.tau);
    count.push_back(s.count);
  }
  return j;
}

StatBank bank_from_json(const json& j) {
  const auto& mean = j.at("mean");
  const auto& mean_sq = j.at("mean_sq");
  const auto& tau = j.at("tau");
  const auto& count = j.at("count");
  if (mean.size() != mean_sq.size() || mean.size() != tau.size() ||
      mean.size() != count.size()) {
    throw std::invalid_argument("stat bank: mismatched array lengths");
  }
  StatBank bank(mean.size());
  for (std::size_t i = 0; i < bank.stats.size(); ++i) {
    bank.stats[i].mean = mean[i].get<double>();
    bank.stats[i].mean_sq = mean_sq[i].get<double>();
    bank.stats[i].tau = tau[i].get<double>();
    bank.stats[i].count = count[i].get<std::uint64_t>();
  }
  return bank;
}

std::string to_string(StepFormula f) {
  return f == StepFormula::kTaylor ? "taylor" : "simple";
}

StepFormula step_formula_from_string(const std::string& s) {
  if (s == "simple") return StepFormula::kSimple;
  if (s == "taylor") return StepFormula::kTaylor;
  throw std::invalid_argument("unknown step formula: " + s);
}

std::string to_string(GammaFormula f) {
  return f == GammaFormula::kAppendixBeta ? "appendix" : "rms";
}

GammaFormula gamma_formula_from_string(const std::string& s) {
  if (s == "rms") return GammaFormula::kRmsRatio;
  if (s == "appendix") return GammaFormula::kAppendixBeta;
  throw std::invalid_argument("unknown gamma formula: " + s);
}

json config_to_json(const AdaSecantConfig& cfg) {
  return json{{"use_vr", cfg.use_vr},
              {"use_ag", cfg.use_ag},
              {"use_bn", cfg.use_bn},
              {"use_od", cfg.use_od},
              {"lambda", cfg.lambda},
              {"gamma_clip", cfg.gamma_clip},
              {"outlier_k", cfg.outlier_k},
              {"tau_reset", cfg.tau_reset},
              {"eps", cfg.eps},
              {"step_formula", to_string(cfg.step_formula)},
              {"gamma_formula", to_string(cfg.gamma_formula)},
              {"warmup_steps", cfg.warmup_steps},
              {"warmup_rate", cfg.warmup_rate},
              {"rate_min", cfg.rate_min},
              {"rate_max", cfg.rate_max}};
}

AdaSecantConfig config_from_json(const json& j) {
  AdaSecantConfig cfg;
  cfg.use_vr = j.value("use_vr", cfg.use_vr);
  cfg.use_ag = j.value("use_ag", cfg.use_ag);
  cfg.use_bn = j.value("use_bn", cfg.use_bn);
  cfg.use_od = j.value("use_od", cfg.use_od);
  cfg.lambda = j.value("lambda", cfg.lambda);
  cfg.gamma_clip = j.value("gamma_clip", cfg.gamma_clip);
  cfg.outlier_k = j.value("outlier_k", cfg.outlier_k);
  cfg.tau_reset = j.value("tau_reset", cfg.tau_reset);
  cfg.eps = j.value("eps", cfg.eps);
  if (j.contains("step_formula")) {
    cfg.step_formula = step_formula_from_string(j.at("step_formula"));
  }
  if (j.contains("gamma_formula")) {
    cfg.gamma_formula = gamma_formula_from_string(j.at("gamma_formula"));
  }
  cfg.warmup_steps = j.value("warmup_steps", cfg.warmup_steps);
  cfg.warmup_rate = j.value("warmup_rate", cfg.warmup_rate);
  cfg.rate_min = j.value("rate_min", cfg.rate_min);
  cfg.rate_max = j.value("rate_max", cfg.rate_max);
  return cfg;
}

json state_to_json(const AdaSecantState& state) {
  json j;
  j["dimension"] = state.dimension;
  j["step_count"] = state.step_count;
  j["prev_grad"] = state.prev_grad;
  j["prev_delta"] = state.prev_delta;
  j["adagrad_accum"] = state.adagrad_accum;
  j["banks"] = json{{"g", bank_to_json(state.g_stat)},
                    {"alpha", bank_to_json(state.alpha_stat)},
                    {"delta", bank_to_json(state.delta_stat)},
                    {"alpha_delta", bank_to_json(state.alpha_delta_stat)},
                    {"gamma_num", bank_to_json(state.gamma_num_stat)},
                    {"gamma_den", bank_to_json(state.gamma_den_stat)}};
  return j;
}

AdaSecantState state_from_json(const json& j) {
  AdaSecantState state(j.at("dimension").get<std::size_t>());
  state.step_count = j.at("step_count").get<std::uint64_t>();
  state.prev_grad = j.at("prev_grad").get<std::vector<double>>();
  state.prev_delta = j.at("prev_delta").get<std::vector<double>>();
  state.adagrad_accum = j.at("adagrad_accum").get<std::vector<double>>();
  const auto& banks = j.at("banks");
  state.g_stat = bank_from_json(banks.at("g"));
  state.alpha_stat = bank_from_json(banks.at("alpha"));
  state.delta_stat = bank_from_json(banks.at("delta"));
  state.alpha_delta_stat = bank_from_json(banks.at("alpha_delta"));
  state.gamma_num_stat = bank_from_json(banks.at("gamma_num"));
  state.gamma_den_stat = bank_from_json(banks.at("gamma_den"));
  const std::size_t d = state.dimension;
  if (state.prev_grad.size() != d || state.prev_delta.size() != d ||
      state.adagrad_accum.size() != d || state.g_stat.dimension() != d ||
      state.alpha_stat.dimension() != d || state.delta_stat.dimension() != d ||
      state.alpha_delta_stat.dimension() != d ||
      state.gamma_num_stat.dimension() != d ||
      state.gamma_den_stat.dimension() != d) {
    throw std::invalid_argument("AdaSecantState: mismatched array lengths");
  }
  return state;
}

json baseline_to_json(const BaselineState& state) {
  return json{{"kind", to_string(state.kind)},
              {"dimension", state.dimension},
              {"accum1", state.accum1},
              {"accum2", state.accum2},
              {"step_count", state.step_count},
              {"hyper", state.hyper}};
}

BaselineState baseline_from_json(const json& j) {
  BaselineState state(baseline_kind_from_string(j.at("kind")),
                      j.at("dimension").get<std::size_t>());
  state.accum1 = j.at("accum1").get<std::vector<double>>();
  state.accum2 = j.at("accum2").get<std::vector<double>>();
  state.step_count = j.at("step_count").get<std::uint64_t>();
  state.hyper = j.at("hyper").get<std::map<std::string, double>>();
  if (state.accum1.size() != state.dimension ||
      state.accum2.size() != state.dimension) {
    throw std::invalid_argument("BaselineState: mismatched array lengths");
  }
  return state;
}

}  // namespace adasecant
