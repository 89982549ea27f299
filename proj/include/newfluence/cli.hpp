#pragma once

#include "newfluence/io.hpp"

#include <CLI11.hpp>

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace newfluence {

enum class Subcommand { fit, influence, experiment, tables };

struct CliInvocation {
  Subcommand subcommand = Subcommand::experiment;
  ExperimentConfig config{};
  std::string preset;  // tables only
  int rows = 0;        // tables only: keep the first `rows` preset rows; 0 = all
  std::filesystem::path out;
  std::filesystem::path records_out;
  OutputFormat format = OutputFormat::csv;
};

struct ParseResult {
  std::optional<CliInvocation> invocation;  // empty when help was requested
  std::string help;                         // populated on --help
};

inline EstimatorSet parse_estimators(const std::string& list) {
  EstimatorSet set{false, false, false, false};
  std::string::size_type start = 0;
  bool any = false;
  while (start <= list.size()) {
    const auto comma = list.find(',', start);
    const std::string token =
        list.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (token == "true")
      set.with_true = true;
    else if (token == "if")
      set.with_if = true;
    else if (token == "corrected_if")
      set.with_corrected = true;
    else if (token == "new")
      set.with_new = true;
    else
      throw UsageError("--estimators: unknown estimator '" + token +
                       "' (expected a comma list over {true, if, corrected_if, new})");
    any = true;
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (!any) throw UsageError("--estimators: empty estimator list");
  return set;
}

namespace detail {

inline std::string single_line(std::string message) {
  for (char& c : message)
    if (c == '\n' || c == '\r') c = ' ';
  return message;
}

}  // namespace detail

// Parses a full argument vector (without the program name). Throws UsageError
// on any malformed invocation; --help yields a ParseResult carrying the usage
// text instead of an invocation.
inline ParseResult parse_args(const std::vector<std::string>& args) {
  CLI::App app{"Influence analysis for penalized generalized linear models"};
  app.name("newfluence");
  app.require_subcommand(1);

  CliInvocation inv;
  std::string estimators_list = "true,if,corrected_if,new";
  std::string out_path, records_path;

  const std::map<std::string, LossKind> loss_names{{"logistic", LossKind::logistic},
                                                   {"squared", LossKind::squared}};
  const std::map<std::string, RidgeConvention> convention_names{
      {"paper", RidgeConvention::sq_norm}, {"half", RidgeConvention::half_sq_norm}};
  const std::map<std::string, OutputFormat> format_names{{"csv", OutputFormat::csv},
                                                         {"json", OutputFormat::json}};

  auto add_data_flags = [&](CLI::App* sub) {
    sub->add_option("--n", inv.config.n, "training samples")->check(CLI::PositiveNumber);
    sub->add_option("--p", inv.config.p, "feature dimension")->check(CLI::PositiveNumber);
    sub->add_option("--lambda", inv.config.lambda, "penalty strength")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", inv.config.seed, "RNG seed");
    sub->add_option("--loss", inv.config.loss, "per-sample loss")
        ->transform(CLI::CheckedTransformer(loss_names, CLI::ignore_case));
  };
  auto add_run_flags = [&](CLI::App* sub) {
    sub->add_option("--ridge-convention", inv.config.ridge_convention,
                    "ridge penalty as the squared norm (paper) or half of it (half)")
        ->transform(CLI::CheckedTransformer(convention_names, CLI::ignore_case));
    sub->add_option("--threads", inv.config.threads,
                    "worker threads for the exact refits (<= 0 uses all cores)")
        ->envname("NEWFLUENCE_THREADS");
    sub->add_option("--format", inv.format, "output file format")
        ->transform(CLI::CheckedTransformer(format_names, CLI::ignore_case));
  };

  CLI::App* fit = app.add_subcommand("fit", "fit one synthetic instance and report diagnostics");
  add_data_flags(fit);
  add_run_flags(fit);
  fit->add_option("--out", out_path, "write a JSON fit summary here");

  CLI::App* influence =
      app.add_subcommand("influence", "per-pair influence records for one instance");
  add_data_flags(influence);
  add_run_flags(influence);
  influence->add_option("--tests", inv.config.num_tests, "number of test points (m)")
      ->check(CLI::PositiveNumber);
  influence->add_option("--estimators", estimators_list,
                        "comma list over {true, if, corrected_if, new}");
  influence->add_option("--records-out", records_path, "destination for the records file")
      ->required();

  CLI::App* experiment =
      app.add_subcommand("experiment", "one summary row: fit, estimators, rank correlations");
  add_data_flags(experiment);
  add_run_flags(experiment);
  experiment->add_option("--tests", inv.config.num_tests, "number of test points (m)")
      ->check(CLI::PositiveNumber);
  experiment->add_option("--estimators", estimators_list,
                         "comma list over {true, if, corrected_if, new}; must include true");
  experiment->add_option("--replicates", inv.config.replicates, "independent data draws to pool")
      ->check(CLI::PositiveNumber);
  experiment->add_option("--out", out_path, "destination for the summary row")->required();
  experiment->add_option("--records-out", records_path,
                         "optional destination for the raw records of the first replicate");

  CLI::App* tables = app.add_subcommand("tables", "preset experiment grids");
  add_run_flags(tables);
  tables
      ->add_option("--preset", inv.preset,
                   "one of {paper-table-1, paper-table-2} (lambda 0.01 / 10 on the standard grid)")
      ->required();
  tables->add_option("--rows", inv.rows, "run only the first N of the 3 preset rows")
      ->check(CLI::Range(0, 3));
  tables->add_option("--tests", inv.config.num_tests, "number of test points (m) per row")
      ->check(CLI::PositiveNumber);
  tables->add_option("--seed", inv.config.seed, "RNG seed (each row derives its own)");
  tables->add_option("--replicates", inv.config.replicates, "independent data draws per row")
      ->check(CLI::PositiveNumber);
  tables->add_option("--out", out_path, "destination for the summary table")->required();
  tables->add_option("--records-out", records_path,
                     "optional destination for the first row's raw records");

  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.push_back("newfluence");
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  argv.reserve(storage.size());
  for (std::string& s : storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    const auto parsed = app.get_subcommands();
    return {std::nullopt, parsed.empty() ? app.help() : parsed.front()->help()};
  } catch (const CLI::ParseError& e) {
    throw UsageError(detail::single_line(e.what()));
  }

  if (fit->parsed())
    inv.subcommand = Subcommand::fit;
  else if (influence->parsed())
    inv.subcommand = Subcommand::influence;
  else if (experiment->parsed())
    inv.subcommand = Subcommand::experiment;
  else
    inv.subcommand = Subcommand::tables;

  inv.config.estimators = parse_estimators(estimators_list);
  inv.out = out_path;
  inv.records_out = records_path;
  return {inv, {}};
}

// The preset grid: three (n, p) sizes at fixed n/p = 0.5, full estimator set,
// logistic loss. Each row derives a well-separated seed from the base seed.
inline std::vector<ExperimentConfig> expand_tables_preset(const CliInvocation& inv) {
  double lambda = 0.0;
  if (inv.preset == "paper-table-1")
    lambda = 0.01;
  else if (inv.preset == "paper-table-2")
    lambda = 10.0;
  else
    throw UsageError("--preset: unknown preset '" + inv.preset +
                     "' (expected paper-table-1 or paper-table-2)");

  constexpr std::pair<Index, Index> kGrid[] = {{250, 500}, {500, 1000}, {1000, 2000}};
  const int keep = inv.rows <= 0 ? 3 : inv.rows;
  std::vector<ExperimentConfig> configs;
  for (int k = 0; k < keep; ++k) {
    ExperimentConfig config = inv.config;
    config.n = kGrid[k].first;
    config.p = kGrid[k].second;
    config.lambda = lambda;
    config.loss = LossKind::logistic;
    config.estimators = EstimatorSet{};
    config.seed = inv.config.seed + 1000003ULL * static_cast<std::uint64_t>(k);
    configs.push_back(config);
  }
  return configs;
}

namespace detail {

inline void write_fit_summary(const std::filesystem::path& path, const ExperimentConfig& config,
                              const FitResult& fit, const EffectiveDf& df) {
  std::ostringstream out;
  out << "{\n"
      << "  \"n\": " << config.n << ",\n  \"p\": " << config.p << ",\n"
      << "  \"lambda\": " << format_real(config.lambda) << ",\n"
      << "  \"converged\": " << (fit.converged ? "true" : "false") << ",\n"
      << "  \"iterations\": " << fit.iterations << ",\n"
      << "  \"grad_norm\": " << format_real(fit.grad_norm) << ",\n"
      << "  \"objective_value\": " << format_real(fit.objective_value) << ",\n"
      << "  \"df\": " << format_real(df.df) << ",\n"
      << "  \"df_ratio\": " << format_real(df.df_ratio) << "\n}\n";
  write_atomic(path, out.str());
}

}  // namespace detail

// Executes a parsed invocation; human-readable progress goes to `out`, all
// machine-readable results to the requested files. Returns the exit status.
inline int run_invocation(const CliInvocation& inv, std::ostream& out) {
  switch (inv.subcommand) {
    case Subcommand::fit: {
      inv.config.validate();
      SyntheticInstance instance = generate_synthetic(inv.config);
      const ObjectiveSpec spec(std::move(instance.train), LossModel{inv.config.loss},
                               RegularizerModel::ridge(inv.config.ridge_convention),
                               inv.config.lambda);
      const FitResult fit = newton_fit(spec, inv.config.solver);
      if (!fit.converged) throw std::runtime_error("fit did not converge within max_iter");
      const FittedModel model(spec, fit);
      const HatDiagnostics hat = hat_diagonal(model);
      const EffectiveDf df = effective_df(hat, spec.p());
      out << "n=" << inv.config.n << " p=" << inv.config.p << " lambda=" << inv.config.lambda
          << " iterations=" << fit.iterations << " grad_norm=" << fit.grad_norm
          << " objective=" << fit.objective_value << " df=" << df.df
          << " df_ratio=" << df.df_ratio << "\n";
      if (!inv.out.empty()) detail::write_fit_summary(inv.out, inv.config, fit, df);
      return 0;
    }
    case Subcommand::influence: {
      const RecordRun run = influence_records(inv.config);
      write_records(inv.records_out, run.records, inv.format);
      out << "records=" << run.records.size() << " df_ratio=" << run.df_ratio << " -> "
          << inv.records_out.string() << "\n";
      return 0;
    }
    case Subcommand::experiment: {
      const ExperimentResult result = run_experiment(inv.config);
      write_results(result.rows, result.records, inv.format, inv.out, inv.records_out);
      const TableRow& row = result.rows.front();
      out << "n=" << row.n << " p=" << row.p << " lambda=" << row.lambda
          << " df_ratio=" << row.df_ratio << " tau_new=" << row.tau_new_mean
          << " tau_if=" << row.tau_if_mean << " -> " << inv.out.string() << "\n";
      return 0;
    }
    case Subcommand::tables: {
      const std::vector<ExperimentConfig> configs = expand_tables_preset(inv);
      std::vector<TableRow> rows;
      std::vector<InfluenceRecord> first_records;
      for (std::size_t k = 0; k < configs.size(); ++k) {
        ExperimentResult result = run_experiment(configs[k]);
        rows.push_back(result.rows.front());
        if (k == 0) first_records = std::move(result.records);
        const TableRow& row = rows.back();
        out << "row " << (k + 1) << "/" << configs.size() << ": n=" << row.n << " p=" << row.p
            << " df_ratio=" << row.df_ratio << " tau_new=" << row.tau_new_mean
            << " tau_if=" << row.tau_if_mean << "\n";
      }
      write_tables(inv.out, rows, inv.format);
      if (!inv.records_out.empty()) write_records(inv.records_out, first_records, inv.format);
      out << "wrote " << rows.size() << " rows -> " << inv.out.string() << "\n";
      return 0;
    }
  }
  return 1;  // unreachable
}

// Full CLI driver: parse, run, map failures to a single-line stderr message.
// Exit codes: 0 success, 2 usage error, 1 runtime failure.
inline int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    const ParseResult parsed = parse_args(args);
    if (!parsed.invocation) {
      out << parsed.help;
      return 0;
    }
    return run_invocation(*parsed.invocation, out);
  } catch (const UsageError& e) {
    err << "error: " << detail::single_line(e.what()) << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << detail::single_line(e.what()) << "\n";
    return 1;
  }
}

inline int cli_main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return cli_run(args, std::cout, std::cerr);
}

}  // namespace newfluence
