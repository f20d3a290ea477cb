#include "imed/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "imed/effects.hpp"
#include "imed/inference.hpp"
#include "imed/parallel.hpp"
#include "imed/version.hpp"

namespace imed {

using nlohmann::json;

namespace {

std::string config_hash_hex(const std::string& text) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(rng::hash_name(text)));
  return buf;
}

VariableKind parse_kind(const std::string& kind, const std::string& field) {
  if (kind == "continuous") return VariableKind::continuous;
  if (kind == "binary") return VariableKind::binary;
  throw DataError("config: " + field + " must be 'continuous' or 'binary'");
}

std::vector<TermSpec> parse_terms(const json& j, const std::string& field) {
  if (!j.is_array()) {
    throw DataError("config: " + field + " must be a list of factor lists");
  }
  std::vector<TermSpec> terms;
  for (const auto& term : j) {
    if (!term.is_array()) {
      throw DataError("config: " + field + " entries must be factor lists");
    }
    TermSpec spec;
    for (const auto& f : term) spec.factors.push_back(f.get<std::string>());
    terms.push_back(std::move(spec));
  }
  return terms;
}

VariableSchema parse_schema(const json& j) {
  if (!j.is_object()) throw DataError("config: missing 'schema' object");
  VariableSchema schema;
  auto need = [&](const char* field) -> const json& {
    if (!j.contains(field)) {
      throw DataError(std::string("config: schema is missing '") + field + "'");
    }
    return j.at(field);
  };
  schema.outcome_name = need("outcome").get<std::string>();
  schema.exposure_name = need("exposure").get<std::string>();
  schema.outcome_kind = parse_kind(
      j.value("outcome_kind", std::string("continuous")), "schema.outcome_kind");
  for (const auto& m : need("mediators")) {
    schema.mediator_names.push_back(m.get<std::string>());
  }
  if (j.contains("mediator_kinds")) {
    for (const auto& k : j.at("mediator_kinds")) {
      schema.mediator_kinds.push_back(
          parse_kind(k.get<std::string>(), "schema.mediator_kinds"));
    }
  } else {
    schema.mediator_kinds.assign(schema.mediator_names.size(),
                                 VariableKind::continuous);
  }
  for (const auto& c : j.value("covariates", json::array())) {
    schema.covariate_names.push_back(c.get<std::string>());
  }
  for (const auto& m : j.value("moderators", json::array())) {
    schema.moderator_names.push_back(m.get<std::string>());
  }
  schema.validate();
  return schema;
}

EstimatorConfig parse_estimator(const json& root, const VariableSchema& schema) {
  EstimatorConfig cfg;
  if (!root.contains("estimator")) {
    throw DataError("config: missing 'estimator' object");
  }
  const json& j = root.at("estimator");
  const std::string method = j.value("method", std::string("mc"));
  if (method == "iw") {
    cfg.method = Method::iw;
  } else if (method == "mc") {
    cfg.method = Method::mc;
  } else {
    throw DataError("config: estimator.method must be 'iw' or 'mc'");
  }
  cfg.draws = j.value("draws", 100);

  const std::string marginal =
      j.value("marginal_method", std::string("auto"));
  if (marginal == "auto") {
    cfg.marginal_method.kind = MarginalMethodKind::automatic;
  } else if (marginal == "exact-linear") {
    cfg.marginal_method.kind = MarginalMethodKind::exact_linear;
  } else if (marginal == "monte-carlo") {
    cfg.marginal_method.kind = MarginalMethodKind::monte_carlo;
  } else {
    throw DataError(
        "config: estimator.marginal_method must be 'auto', 'exact-linear' or "
        "'monte-carlo'");
  }
  cfg.marginal_method.draws = j.value("marginal_draws", 2000);
  if (j.contains("truncation_percentile") &&
      !j.at("truncation_percentile").is_null()) {
    cfg.truncation_percentile = j.at("truncation_percentile").get<double>();
  }
  if (j.contains("propensity_terms")) {
    cfg.propensity_terms =
        parse_terms(j.at("propensity_terms"), "estimator.propensity_terms");
  }
  if (j.contains("chain_order")) {
    for (const auto& m : j.at("chain_order")) {
      cfg.chain_order.push_back(m.get<std::string>());
    }
  }
  if (j.contains("chain")) {
    const json& c = j.at("chain");
    if (c.contains("covariate_terms")) {
      cfg.chain.covariate_terms =
          parse_terms(c.at("covariate_terms"), "estimator.chain.covariate_terms");
    }
    cfg.chain.earlier_mains = c.value("earlier_mains", true);
    cfg.chain.earlier_pairwise = c.value("earlier_pairwise", false);
    for (const auto& m : c.value("interaction_moderators", json::array())) {
      cfg.chain.interaction_moderators.push_back(m.get<std::string>());
    }
  }
  if (j.contains("marginal_terms")) {
    for (const auto& [name, terms] : j.at("marginal_terms").items()) {
      cfg.marginal_terms[name] =
          parse_terms(terms, "estimator.marginal_terms." + name);
    }
  }
  if (j.contains("outcome_terms")) {
    const auto terms = parse_terms(j.at("outcome_terms"), "estimator.outcome_terms");
    cfg.outcome_terms[0] = terms;
    cfg.outcome_terms[1] = terms;
  }
  for (int a = 0; a < 2; ++a) {
    const std::string field = "outcome_terms_group" + std::to_string(a);
    if (j.contains(field)) {
      cfg.outcome_terms[a] = parse_terms(j.at(field), "estimator." + field);
    }
  }

  const json& e = root.contains("effect_model") ? root.at("effect_model")
                                                : json::object();
  const std::string link = e.value("link", std::string("identity"));
  if (link == "identity") {
    cfg.effect_spec.link = Link::identity;
  } else if (link == "logit") {
    cfg.effect_spec.link = Link::logit;
  } else {
    throw DataError("config: effect_model.link must be 'identity' or 'logit'");
  }
  for (const auto& m : e.value("moderators", json::array())) {
    cfg.effect_spec.moderators.push_back(m.get<std::string>());
  }
  if (cfg.effect_spec.moderators.empty()) {
    cfg.effect_spec.moderators = schema.moderator_names;
  }
  for (const auto& m : e.value("confounder_mains", json::array())) {
    cfg.effect_spec.confounder_mains.push_back(m.get<std::string>());
  }
  if (cfg.effect_spec.confounder_mains.empty()) {
    cfg.effect_spec.confounder_mains = schema.covariate_names;
  }
  cfg.effect_spec.include_j_by_covariate = e.value("j_by_covariate", false);
  cfg.effect_spec.alt_decomposition = e.value("alt_decomposition", false);
  cfg.effect_spec.t = schema.t();
  cfg.effect_spec.validate();
  if (e.contains("levels")) {
    for (const auto& level : e.at("levels")) {
      ModeratorLevel ml;
      for (const auto& [name, value] : level.items()) {
        ml[name] = value.get<double>();
      }
      cfg.report_levels.push_back(std::move(ml));
    }
  }
  return cfg;
}

StudyConfig parse_study(const json& root) {
  if (!root.contains("simulate")) {
    throw DataError("config: missing 'simulate' object");
  }
  const json& j = root.at("simulate");
  StudyConfig study;
  if (!j.contains("study")) throw DataError("config: simulate.study is required");
  study.study = j.at("study").get<int>();
  study.n = j.value("n", 500);
  study.params.b1 = j.value("b1", 0.0);
  study.params.e21 = j.value("e21", 0.0);
  study.params.a2 = j.value("a2", 0.0);
  study.replicates = j.value("replicates", 200);
  study.bootstrap_B = j.value("bootstrap_replicates", 0);
  study.level = j.value("level", 0.95);
  study.draws = j.value("draws", 100);
  study.truth_population = j.value("truth_population", 50000);
  if (j.contains("estimators")) {
    study.estimators.clear();
    for (const auto& e : j.at("estimators")) {
      const std::string name = e.get<std::string>();
      if (name == "iw") {
        study.estimators.push_back(StudyEstimator::iw);
      } else if (name == "mc") {
        study.estimators.push_back(StudyEstimator::mc);
      } else if (name == "mc-misspecified") {
        study.estimators.push_back(StudyEstimator::mc_misspecified);
      } else {
        throw DataError("config: unknown simulate estimator '" + name + "'");
      }
    }
  }
  return study;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig cfg;
  cfg.config_text = text;

  if (!j.contains("command")) throw DataError("config: 'command' is required");
  const std::string command = j.at("command").get<std::string>();
  if (command == "analyze") {
    cfg.command = Command::analyze;
  } else if (command == "bootstrap") {
    cfg.command = Command::bootstrap_ci;
  } else if (command == "sensitivity") {
    cfg.command = Command::sensitivity;
  } else if (command == "simulate") {
    cfg.command = Command::simulate;
  } else if (command == "diagnose-weights") {
    cfg.command = Command::diagnose_weights;
  } else {
    throw DataError("config: unknown command '" + command + "'");
  }

  if (!j.contains("seed")) {
    throw DataError("config: 'seed' is required (no wall-clock seeding)");
  }
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.threads = j.value("threads", 0);
  if (!j.contains("output")) throw DataError("config: 'output' is required");
  cfg.output = j.at("output").get<std::string>();

  if (cfg.command == Command::simulate) {
    cfg.study = parse_study(j);
    cfg.study.seed = cfg.seed;
    return cfg;
  }

  if (!j.contains("data")) throw DataError("config: 'data' is required");
  cfg.data_path = j.at("data").get<std::string>();
  cfg.schema = parse_schema(j.contains("schema") ? j.at("schema") : json());
  cfg.estimator = parse_estimator(j, cfg.schema);
  cfg.estimator.seed = cfg.seed;

  if (j.contains("bootstrap")) {
    const json& b = j.at("bootstrap");
    cfg.bootstrap_replicates = b.value("replicates", 10000);
    cfg.level = b.value("level", 0.95);
  }
  if (j.contains("weights")) {
    const json& w = j.at("weights");
    cfg.weight_threshold = w.value("threshold", 10.0);
    cfg.weight_bin_width = w.value("bin_width", 0.5);
  }
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file '" + path + "'");
  out << text;
}

json provenance(const RunConfig& cfg) {
  return json{{"version", kVersion},
              {"config_hash", config_hash_hex(cfg.config_text)}};
}

std::string csv_header_comment(const RunConfig& cfg) {
  return "# imed " + std::string(kVersion) +
         " config=" + config_hash_hex(cfg.config_text) + "\n";
}

json estimates_to_json(const EffectEstimates& est) {
  json params = json::object();
  for (std::size_t i = 0; i < est.params.names.size(); ++i) {
    params[est.params.names[i]] =
        est.params.values[static_cast<Eigen::Index>(i)];
  }
  json derived = json::array();
  for (const auto& d : est.derived) {
    json level = json::object();
    for (const auto& [name, value] : d.level) level[name] = value;
    json effects = json::object();
    for (const auto& [name, value] : d.effects) effects[name] = value;
    derived.push_back(json{{"level", level},
                           {"suffix", d.suffix},
                           {"effects", effects}});
  }
  return json{{"parameters", params},
              {"derived", derived},
              {"converged", est.converged}};
}

void run_analyze(const RunConfig& cfg, const ObservedDataset& data) {
  const EffectEstimates est = estimate(data, cfg.estimator);
  json out = provenance(cfg);
  out.update(estimates_to_json(est));
  write_text(cfg.output + ".json", out.dump(2) + "\n");

  std::ostringstream csv;
  csv << csv_header_comment(cfg) << "quantity,value\n";
  char buf[40];
  for (const auto& [name, value] : est.flattened()) {
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    csv << name << ',' << buf << "\n";
  }
  write_text(cfg.output + ".csv", csv.str());
}

void run_bootstrap(const RunConfig& cfg, const ObservedDataset& data) {
  const BootstrapReport report = bootstrap(
      data, cfg.estimator, cfg.bootstrap_replicates, cfg.level, cfg.seed);
  json quantities = json::array();
  for (std::size_t i = 0; i < report.names.size(); ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    quantities.push_back(json{{"name", report.names[i]},
                              {"point", report.point[idx]},
                              {"lower", report.lower[idx]},
                              {"upper", report.upper[idx]}});
  }
  json out = provenance(cfg);
  out.update(json{{"B", report.B},
                  {"level", report.level},
                  {"failures", report.failures},
                  {"degraded", report.degraded},
                  {"quantities", quantities}});
  write_text(cfg.output + ".json", out.dump(2) + "\n");
}

void run_sensitivity(const RunConfig& cfg, const ObservedDataset& data) {
  const int B = cfg.bootstrap_replicates;
  const PermutationReport report =
      permutation_sensitivity(data, cfg.estimator, B, cfg.level);
  std::ostringstream csv;
  csv << csv_header_comment(cfg)
      << "effect,est_min,est_max,ci_lower_min,ci_lower_max,ci_upper_min,ci_upper_max\n";
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    csv << ',' << buf;
  };
  for (const auto& row : report.table) {
    csv << row.label;
    put(row.est_min);
    put(row.est_max);
    if (row.has_ci) {
      put(row.ci_lower_min);
      put(row.ci_lower_max);
      put(row.ci_upper_min);
      put(row.ci_upper_max);
    } else {
      csv << ",,,,";
    }
    csv << "\n";
  }
  write_text(cfg.output + ".csv", csv.str());
}

void run_simulate(const RunConfig& cfg) {
  StudyConfig study = cfg.study;
  study.threads = resolve_threads(cfg.threads);
  const StudyResults results = run_study(study);
  write_text(cfg.output + ".csv", csv_header_comment(cfg) + results.to_csv());
}

void run_diagnose_weights(const RunConfig& cfg, const ObservedDataset& data) {
  EstimatorConfig est = cfg.estimator;
  if (est.method != Method::iw) {
    throw DataError("diagnose-weights requires estimator.method 'iw'");
  }
  const DuplicatedDataset dup = build_duplicated(data, est);
  const WeightDiagnostics diag =
      weight_diagnostics(dup, cfg.weight_threshold, cfg.weight_bin_width);

  std::ostringstream summary;
  summary << csv_header_comment(cfg)
          << "row,n_nonzero,n_zero,mean,sd,max,n_above_threshold\n";
  char buf[40];
  for (const auto& row : diag.rows) {
    summary << row.row << ',' << row.n_nonzero << ',' << row.n_zero;
    std::snprintf(buf, sizeof(buf), ",%.6g", row.mean);
    summary << buf;
    std::snprintf(buf, sizeof(buf), ",%.6g", row.sd);
    summary << buf;
    std::snprintf(buf, sizeof(buf), ",%.6g", row.max);
    summary << buf << ',' << row.n_above_threshold << "\n";
  }
  write_text(cfg.output + "_summary.csv", summary.str());

  std::ostringstream hist;
  hist << csv_header_comment(cfg) << "row,log10_left,log10_right,count\n";
  for (const auto& bin : diag.histogram) {
    hist << bin.row;
    std::snprintf(buf, sizeof(buf), ",%.6g,%.6g,", bin.log10_left,
                  bin.log10_right);
    hist << buf << bin.count << "\n";
  }
  write_text(cfg.output + "_hist.csv", hist.str());
}

}  // namespace

void run_command(const RunConfig& cfg) {
  if (cfg.command == Command::simulate) {
    run_simulate(cfg);
    return;
  }
  ObservedDataset data = load_csv(cfg.data_path, cfg.schema);
  EstimatorConfig est = cfg.estimator;
  est.threads = resolve_threads(cfg.threads);
  RunConfig resolved = cfg;
  resolved.estimator = est;
  switch (cfg.command) {
    case Command::analyze:
      run_analyze(resolved, data);
      break;
    case Command::bootstrap_ci:
      run_bootstrap(resolved, data);
      break;
    case Command::sensitivity:
      run_sensitivity(resolved, data);
      break;
    case Command::diagnose_weights:
      run_diagnose_weights(resolved, data);
      break;
    case Command::simulate:
      break;
  }
}

int cli_main(int argc, const char* const* argv) {
  auto fail = [](int code, const std::string& type, const std::string& message) {
    const json err{{"error", {{"type", type}, {"message", message}}}};
    std::cout << err.dump() << std::endl;
    return code;
  };

  std::vector<std::string> args(argv + 1, argv + argc);
  if (!args.empty() && (args[0] == "--version" || args[0] == "version")) {
    std::cout << "imed " << kVersion << std::endl;
    return 0;
  }
  if (args.empty() || args[0] != "run" || args.size() < 2) {
    std::cerr << "usage: imed run <config.json> [--force] [--threads N]\n";
    return 2;
  }

  bool force = false;
  int threads_override = -1;
  for (std::size_t i = 2; i < args.size(); ++i) {
    if (args[i] == "--force") {
      force = true;
    } else if (args[i] == "--threads" && i + 1 < args.size()) {
      try {
        threads_override = std::stoi(args[++i]);
      } catch (const std::exception&) {
        return fail(2, "config", "--threads expects an integer");
      }
    } else {
      return fail(2, "config", "unknown flag '" + args[i] + "'");
    }
  }

  try {
    RunConfig cfg = parse_config_file(args[1]);
    if (threads_override >= 0) cfg.threads = threads_override;
    if (force) cfg.estimator.force_weights = true;
    run_command(cfg);
    return 0;
  } catch (const DataError& e) {
    return fail(2, "data", e.what());
  } catch (const EstimationError& e) {
    return fail(1, "estimation", e.what());
  } catch (const std::exception& e) {
    return fail(1, "internal", e.what());
  }
}

}  // namespace imed
