#include "imed/effects.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace imed {

void EffectModelSpec::validate() const {
  if (t < 1) throw DataError("effect model needs at least one mediator");
  for (const auto& m : moderators) {
    if (std::find(confounder_mains.begin(), confounder_mains.end(), m) ==
        confounder_mains.end()) {
      throw DataError("moderator '" + m +
                      "' must also appear among the confounder main effects");
    }
  }
}

double EffectParameters::at(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return values[static_cast<Eigen::Index>(i)];
  }
  throw DataError("unknown effect parameter '" + name + "'");
}

bool EffectParameters::has(const std::string& name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

namespace {

std::string moderated_name(const std::string& base, const std::string& mod,
                           const EffectModelSpec& spec) {
  // With a single moderator the plain symbols (theta1c, gamma0c, ...) are
  // unambiguous; with several the moderator name is appended.
  if (spec.moderators.size() == 1) return base + "c";
  return base + "c:" + mod;
}

}  // namespace

EffectDesign build_effect_design(const DuplicatedDataset& dup,
                                 const EffectModelSpec& spec) {
  spec.validate();
  if (spec.t != dup.t) {
    throw DataError("effect model is for t=" + std::to_string(spec.t) +
                    " mediators but the duplicated data has t=" +
                    std::to_string(dup.t));
  }
  const Eigen::Index n = dup.rows();
  const int t = dup.t;

  // Moderator and confounder columns live in the duplicated covariate block.
  auto covariate_col = [&](const std::string& name) -> Eigen::VectorXd {
    const auto& names = dup.schema.covariate_names;
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) {
      throw DataError("effect model references unknown covariate '" + name +
                      "'");
    }
    return dup.covariates.col(it - names.begin());
  };

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd one_minus_j = ones - dup.j;
  Eigen::VectorXd all_equal(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    bool eq = true;
    for (int s = 1; s < t; ++s) {
      if (dup.a(r, s + 1) != dup.a(r, 1)) eq = false;
    }
    all_equal[r] = eq ? 1.0 : 0.0;
  }

  EffectDesign design;
  std::vector<Eigen::VectorXd> cols;
  auto push = [&](const std::string& name, Eigen::VectorXd col) {
    design.names.push_back(name);
    cols.push_back(std::move(col));
  };

  push("mu0", ones);
  for (int s = 0; s < t; ++s) {
    const Eigen::VectorXd main =
        dup.a.col(s + 1).cwiseProduct(one_minus_j);
    push("theta" + std::to_string(s + 1), main);
    for (const auto& mod : spec.moderators) {
      push(moderated_name("theta" + std::to_string(s + 1), mod, spec),
           main.cwiseProduct(covariate_col(mod)));
    }
  }
  push("mu0J", dup.j);
  {
    const Eigen::VectorXd g0 = dup.a.col(0).cwiseProduct(dup.j);
    push("gamma0", g0);
    for (const auto& mod : spec.moderators) {
      push(moderated_name("gamma0", mod, spec),
           g0.cwiseProduct(covariate_col(mod)));
    }
    const Eigen::VectorXd g1 =
        dup.a.col(1).cwiseProduct(all_equal).cwiseProduct(dup.j);
    push("gamma1", g1);
    for (const auto& mod : spec.moderators) {
      push(moderated_name("gamma1", mod, spec),
           g1.cwiseProduct(covariate_col(mod)));
    }
    if (spec.alt_decomposition) {
      push("gamma01", dup.a.col(0).cwiseProduct(g1));
    }
  }
  for (const auto& name : spec.confounder_mains) {
    push("mu:" + name, covariate_col(name));
  }
  if (spec.include_j_by_covariate) {
    for (const auto& name : spec.confounder_mains) {
      push("muJ:" + name, dup.j.cwiseProduct(covariate_col(name)));
    }
  }

  design.X.resize(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    design.X.col(static_cast<Eigen::Index>(c)) = cols[c];
  }
  design.y = dup.response;
  design.w = dup.weight;
  return design;
}

std::string level_suffix(const ModeratorLevel& level) {
  std::string suffix;
  for (const auto& [name, value] : level) {
    if (value == 0.0) continue;
    suffix += "_" + name;
    if (value != 1.0) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "=%g", value);
      suffix += buf;
    }
  }
  return suffix;
}

std::vector<DerivedEffects> derive_effects(
    const EffectParameters& params, const EffectModelSpec& spec,
    const std::vector<ModeratorLevel>& levels) {
  spec.validate();
  auto moderated = [&](const std::string& base, const ModeratorLevel& level) {
    double value = params.at(base);
    for (const auto& mod : spec.moderators) {
      double l = 0.0;
      const auto it = level.find(mod);
      if (it != level.end()) l = it->second;
      value += params.at(moderated_name(base, mod, spec)) * l;
    }
    return value;
  };

  std::vector<DerivedEffects> out;
  for (const auto& level : levels) {
    for (const auto& [name, value] : level) {
      (void)value;
      if (std::find(spec.moderators.begin(), spec.moderators.end(), name) ==
          spec.moderators.end()) {
        throw DataError("level references non-moderator '" + name + "'");
      }
    }
    DerivedEffects d;
    d.level = level;
    d.suffix = level_suffix(level);
    double sum_ie = 0.0;
    for (int s = 0; s < spec.t; ++s) {
      const double ie = moderated("theta" + std::to_string(s + 1), level);
      d.effects["IE" + std::to_string(s + 1)] = ie;
      sum_ie += ie;
    }
    const double joint_ie = moderated("gamma1", level);
    const double de = moderated("gamma0", level);
    d.effects["sumIE"] = sum_ie;
    d.effects["jointIE"] = joint_ie;
    d.effects["mutualIE"] = joint_ie - sum_ie;
    d.effects["DE"] = de;
    d.effects["TE"] = de + joint_ie;
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<std::pair<std::string, double>> EffectEstimates::flattened() const {
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t i = 0; i < params.names.size(); ++i) {
    out.emplace_back(params.names[i], params.values[static_cast<Eigen::Index>(i)]);
  }
  for (const auto& d : derived) {
    for (const auto& [name, value] : d.effects) {
      out.emplace_back(name + d.suffix, value);
    }
  }
  return out;
}

}  // namespace imed
