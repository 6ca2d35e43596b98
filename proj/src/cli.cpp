#include "beamcast/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>

#include "beamcast/config.hpp"
#include "beamcast/error.hpp"
#include "beamcast/harness.hpp"
#include "beamcast/io.hpp"
#include "beamcast/plot.hpp"

namespace beamcast::cli {
namespace fs = std::filesystem;
namespace {

constexpr const char* kPrecedence =
    "Settings are resolved as: built-in defaults < --config file < --set key=value (in order) < dedicated flags "
    "such as --seed, --values, --k, --jobs.";

struct Common {
  std::string config;
  std::string out = "out";
  std::uint64_t seed = 0;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "key = value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "output directory")->capture_default_str();
  cmd->add_option("--seed", c.seed, "seed for every stochastic stage");
  cmd->add_option("--set", c.sets, "override one config key (key=value); repeatable")->allow_extra_args(false);
}

// `cmd` is the subcommand that was parsed; every subcommand has its own --seed.
RunConfig resolve(const Common& c, const CLI::App& cmd) {
  RunConfig rc;
  if (!c.config.empty()) apply_config(rc, load_config(c.config));
  for (const auto& s : c.sets) {
    const auto [k, v] = parse_assignment(s);
    apply_entry(rc, k, v);
  }
  if (cmd.get_option("--seed")->count()) rc.set_seed(c.seed);
  return rc;
}

fs::path prepare_out(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + out + ": " + ec.message());
  return fs::path(out);
}

Eigen::MatrixXd load_or_generate(const std::string& series_path, const RunConfig& rc) {
  if (!series_path.empty()) return read_series_csv(series_path);
  return generate_dataset(rc.scenario).series.channels;
}

void write_stats(const fs::path& path, const StandardizationStats& s) {
  std::string text = "channel,mean,std\n";
  for (Eigen::Index c = 0; c < s.mean.size(); ++c)
    text += std::to_string(c) + "," + format_double(s.mean(c)) + "," + format_double(s.std(c)) + "\n";
  write_text(path, text);
}

StandardizationStats read_stats(const fs::path& path) {
  const CsvTable t = read_csv(path);
  if (t.header != std::vector<std::string>{"channel", "mean", "std"})
    throw Error(Errc::IoError, path.string() + ": not a standardization table");
  StandardizationStats s;
  s.mean.resize(static_cast<Eigen::Index>(t.rows.size()));
  s.std.resize(s.mean.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    s.mean(static_cast<Eigen::Index>(r)) = parse_double(t.rows[r][1]);
    s.std(static_cast<Eigen::Index>(r)) = parse_double(t.rows[r][2]);
  }
  return s;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"beamcast: ULA/MVDR beamforming simulation with LSTM and NAR one-step forecasting"};
  app.footer(kPrecedence);
  app.require_subcommand(1);

  Common common;

  auto* gen = app.add_subcommand("generate", "synthesize snapshots, MVDR weights and the beamformed series");
  add_common(gen, common);

  std::string model_name, series_path, params_path, stats_path;
  auto* train = app.add_subcommand("train", "train one forecaster on the training split");
  add_common(train, common);
  train->add_option("--model", model_name, "lstm | nar")->required()->check(CLI::IsMember({"lstm", "nar"}));
  train->add_option("--series", series_path, "series CSV (default: generate from the scenario)")
      ->check(CLI::ExistingFile);

  auto* forecast = app.add_subcommand("forecast", "forecast the test split with trained parameters");
  add_common(forecast, common);
  forecast->add_option("--model", model_name, "lstm | nar")->required()->check(CLI::IsMember({"lstm", "nar"}));
  forecast->add_option("--params", params_path, "parameter file written by train")->required()->check(CLI::ExistingFile);
  forecast->add_option("--series", series_path, "series CSV (default: generate from the scenario)")
      ->check(CLI::ExistingFile);
  forecast->add_option("--stats", stats_path, "standardization CSV (default: refit on the training split)")
      ->check(CLI::ExistingFile);
  bool normalized = false;
  forecast->add_flag("--normalized", normalized, "also print RMSE divided by the test-target std");

  std::string axis_name, sweep_model;
  std::vector<double> values;
  int k = 0, jobs = 0;
  auto* sweep = app.add_subcommand("sweep", "k-fold RMSE sweep over one scenario axis");
  add_common(sweep, common);
  auto* axis_opt = sweep->add_option("--axis", axis_name, "incident | span | antennas")
                       ->check(CLI::IsMember({"incident", "span", "antennas"}));
  auto* values_opt = sweep->add_option("--values", values, "comma-separated axis values")->delimiter(',');
  auto* k_opt = sweep->add_option("--k", k, "number of folds")->check(CLI::Range(2, 1000000));
  auto* jobs_opt = sweep->add_option("--jobs", jobs, "worker threads (0: available processors)")
                       ->check(CLI::NonNegativeNumber);
  auto* model_opt = sweep->add_option("--model", sweep_model, "lstm | nar | both")
                        ->check(CLI::IsMember({"lstm", "nar", "both"}));

  std::string weights_kind = "mvdr";
  double grid_step = 0.5;
  auto* pattern = app.add_subcommand("beampattern", "beampattern of the scenario's weights");
  add_common(pattern, common);
  pattern->add_option("--weights", weights_kind, "mvdr | bartlett")
      ->capture_default_str()
      ->check(CLI::IsMember({"mvdr", "bartlett"}));
  pattern->add_option("--grid-step", grid_step, "azimuth grid step in degrees")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  RunConfig rc;
  try {
    rc = resolve(common, *app.get_subcommands().front());
    if (sweep->parsed()) {
      if (axis_opt->count()) rc.sweep.axis = parse_axis(axis_name);
      if (values_opt->count()) rc.sweep.values = values;
      if (rc.sweep.values.empty()) rc.sweep.values = default_sweep_values(rc.sweep.axis);
      if (k_opt->count()) rc.sweep.k = k;
      if (jobs_opt->count()) rc.jobs = jobs;
      if (model_opt->count()) rc.sweep.model = parse_model_choice(sweep_model);
      rc.sweep.validate();
    }
    rc.scenario.validate();
    rc.lstm.validate();
    rc.nar.validate();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    if (gen->parsed()) {
      const fs::path dir = prepare_out(common.out);
      const Dataset d = generate_dataset(rc.scenario);
      write_snapshots_csv(dir / "snapshots.csv", d.snapshots);
      write_series_csv(dir / "series.csv", d.series.channels);
      write_weights_csv(dir / "weights.csv", d.weights);
      out << "wrote " << d.snapshots.num_samples() << " snapshots x " << d.snapshots.num_elements()
          << " sensors to " << dir.string() << "\n";
    } else if (train->parsed()) {
      const Model model = parse_model(model_name);
      const Eigen::MatrixXd channels = load_or_generate(series_path, rc);
      Series raw;
      raw.channels = channels;
      const auto [head, tail] = split_train_test(raw, rc.train_fraction);
      const auto stats = fit_standardization(head.channels, ConstantChannelPolicy::UnitScale);
      const Eigen::MatrixXd z = apply_standardization(head, stats).channels;
      const fs::path dir = prepare_out(common.out);
      if (model == Model::Lstm) {
        const auto r = train_lstm(make_supervised(z), rc.lstm);
        save_lstm(dir / "lstm.bin", r.params);
        write_curve_csv(dir / "loss_curve.csv", "epoch", "loss", r.loss_curve);
        out << "LSTM trained on " << z.cols() << " steps, final loss " << format_double(r.loss_curve.back()) << "\n";
      } else {
        const auto r = train_lm(make_lagged(z, rc.nar.delays), rc.nar);
        save_nar(dir / "nar.bin", r.params);
        write_curve_csv(dir / "loss_curve.csv", "iteration", "sse", r.sse);
        out << "NAR trained on " << z.cols() << " steps, final SSE " << format_double(r.sse.back()) << " ("
            << to_string(r.stop) << ")\n";
      }
      write_stats(dir / "standardization.csv", stats);
    } else if (forecast->parsed()) {
      const Model model = parse_model(model_name);
      Series raw;
      raw.channels = load_or_generate(series_path, rc);
      const auto [head, tail] = split_train_test(raw, rc.train_fraction);
      const auto stats = stats_path.empty() ? fit_standardization(head.channels, ConstantChannelPolicy::UnitScale)
                                            : read_stats(stats_path);
      const Eigen::MatrixXd z = apply_standardization(raw, stats).channels;
      const HoldoutForecast f = model == Model::Lstm ? forecast_holdout(load_lstm(params_path), z, head.length())
                                                     : forecast_holdout(load_nar(params_path), z, head.length());
      const Eigen::MatrixXd actual = z.rightCols(tail.length());
      const fs::path dir = prepare_out(common.out);
      std::string csv = "t";
      for (const char* part : {"actual", "updating", "closed_loop"})
        for (Eigen::Index c = 0; c < z.rows(); ++c) csv += std::string(",") + part + "_ch" + std::to_string(c);
      csv += "\n";
      for (Eigen::Index j = 0; j < actual.cols(); ++j) {
        csv += std::to_string(head.length() + j);
        for (const Eigen::MatrixXd* m : {&actual, &f.updating, &f.closed_loop})
          for (Eigen::Index c = 0; c < z.rows(); ++c) csv += "," + format_double((*m)(c, j));
        csv += "\n";
      }
      write_text(dir / "predictions.csv", csv);
      out << "rmse_updating " << format_double(rmse(f.updating, actual)) << "\n";
      out << "rmse_closed_loop " << format_double(rmse(f.closed_loop, actual)) << "\n";
      if (normalized) {
        out << "nrmse_updating " << format_double(normalized_rmse(f.updating, actual)) << "\n";
        out << "nrmse_closed_loop " << format_double(normalized_rmse(f.closed_loop, actual)) << "\n";
      }
    } else if (sweep->parsed()) {
      const SweepResult r = run_sweep(rc.sweep, rc.scenario, rc.lstm, rc.nar, rc.jobs);
      const auto files = write_results(r, prepare_out(common.out));
      out << "axis " << to_string(r.axis) << ", k = " << rc.sweep.k << "\n";
      out << "value       model  min         mean        max\n";
      for (const auto& s : r.summaries)
        out << fmt("%-11g ", s.value) << (s.model == Model::Lstm ? "LSTM " : "NAR  ") << fmt("  %-11.4g", s.min)
            << fmt(" %-11.4g", s.mean) << fmt(" %-11.4g", s.max) << "\n";
      // Ratio of mean RMSEs per value, reported (not judged) when both models ran.
      for (std::size_t i = 0; i + 1 < r.summaries.size(); ++i)
        if (r.summaries[i].value == r.summaries[i + 1].value && r.summaries[i].model == Model::Lstm &&
            r.summaries[i + 1].model == Model::Nar)
          out << "NAR/LSTM mean RMSE ratio at " << fmt("%g", r.summaries[i].value) << ": "
              << fmt("%.3g", r.summaries[i + 1].mean / r.summaries[i].mean) << "\n";
      for (const auto& f : files) out << "wrote " << f.string() << "\n";
    } else if (pattern->parsed()) {
      const Dataset d = generate_dataset(rc.scenario);
      const BeamWeights<double> V = weights_kind == "mvdr" ? d.weights : bartlett_weights(d.steering);
      std::vector<double> grid;
      for (double a = -90.0; a <= 90.0 + 1e-9; a += grid_step) grid.push_back(a);
      const auto gain = beampattern(V, rc.scenario.array, grid, rc.scenario.elevation_deg);
      const fs::path dir = prepare_out(common.out);
      write_beampattern_csv(dir / "beampattern.csv", grid, gain);
      write_weights_csv(dir / "weights.csv", V);
      PlotOptions opt;
      opt.title = weights_kind + " beampattern, N = " + std::to_string(rc.scenario.array.num_elements);
      opt.x_label = "azimuth (deg)";
      opt.y_label = "normalized gain (dB)";
      PlotSeries s;
      s.name = weights_kind;
      s.x = grid;
      for (double g : gain) s.y.push_back(std::max(g, -80.0));
      write_text(dir / "beampattern.svg", svg_line_chart({s}, opt));
      out << "wrote beampattern over " << grid.size() << " angles to " << dir.string() << "\n";
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"beamcast"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace beamcast::cli
