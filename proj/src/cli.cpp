#include "bicm/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>

#include "bicm/constellation.hpp"
#include "bicm/error.hpp"
#include "bicm/montecarlo.hpp"
#include "bicm/powerfill.hpp"

namespace bicm::cli {

namespace {

struct SnrRange {
  double start = 0.0;
  double stop = 0.0;
  int steps = 1;
};

SnrRange parse_range(const std::string& text) {
  SnrRange r;
  std::istringstream ss(text);
  std::string a, b, c, extra;
  if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, c, ':') ||
      std::getline(ss, extra)) {
    throw std::invalid_argument("snr range '" + text + "' is not start:stop:steps");
  }
  std::size_t used = 0;
  try {
    r.start = std::stod(a, &used);
    if (used != a.size()) throw std::invalid_argument(a);
    r.stop = std::stod(b, &used);
    if (used != b.size()) throw std::invalid_argument(b);
    r.steps = std::stoi(c, &used);
    if (used != c.size()) throw std::invalid_argument(c);
  } catch (const std::exception&) {
    throw std::invalid_argument("snr range '" + text + "' is not start:stop:steps");
  }
  if (r.steps < 1) throw std::invalid_argument("snr range needs steps >= 1");
  if (r.steps == 1 ? r.start != r.stop : !(r.start < r.stop)) {
    throw std::invalid_argument("snr range '" + text +
                                "' needs start < stop (or start == stop with one step)");
  }
  return r;
}

// "--snr-db -10:20:31" would otherwise read the value as a short flag.
std::vector<std::string> join_range_values(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (args[k] == "--snr-db" && k + 1 < args.size()) {
      out.push_back(args[k] + "=" + args[k + 1]);
      ++k;
    } else {
      out.push_back(args[k]);
    }
  }
  return out;
}

Constellation make_constellation(const RunConfig& config) {
  if (!config.constellation_file.empty()) return load_constellation_file(config.constellation_file);
  return build_constellation(config.constellation_id);
}

std::vector<double> linear_values(const std::vector<Snr>& grid) {
  std::vector<double> v;
  for (auto s : grid) v.push_back(s.linear());
  return v;
}

std::vector<double> db_values(const std::vector<Snr>& grid) {
  std::vector<double> v;
  for (auto s : grid) v.push_back(s.db());
  return v;
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Table snr_table(const std::vector<Snr>& grid) {
  Table t;
  t.add("snr_db", db_values(grid));
  t.add("snr_linear", linear_values(grid));
  return t;
}

void rescale(Table& t, const std::vector<std::string>& keep, double factor) {
  for (std::size_t c = 0; c < t.names.size(); ++c) {
    if (std::find(keep.begin(), keep.end(), t.names[c]) != keep.end()) continue;
    if (t.names[c].ends_with("_pass")) continue;
    for (auto& v : t.columns[c]) v *= factor;
  }
}

void add_mc_columns(Table& t, const std::string& name, const std::vector<double>& quadrature,
                    const std::vector<McEstimate>& mc) {
  std::vector<double> mean, se, pass;
  for (std::size_t k = 0; k < mc.size(); ++k) {
    mean.push_back(mc[k].mean);
    se.push_back(mc[k].std_error);
    pass.push_back(std::abs(mc[k].mean - quadrature[k]) <= 3.0 * mc[k].std_error ? 1.0 : 0.0);
  }
  t.add(name + "_quadrature", quadrature);
  t.add(name + "_mc_mean", std::move(mean));
  t.add(name + "_mc_std_error", std::move(se));
  t.add(name + "_pass", std::move(pass));
}

template <typename Fn>
void with_output(const std::string& path, std::ostream& fallback, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(fallback);
    return;
  }
  std::ofstream file(path);
  if (!file) throw InvalidArgument("cannot write '" + path + "'");
  fn(file);
  if (!file) throw InvalidArgument("error writing '" + path + "'");
}

}  // namespace

void Table::add(std::string name, std::vector<double> values) {
  if (!columns.empty() && values.size() != rows()) {
    throw InvalidArgument("column '" + name + "' length mismatch");
  }
  names.push_back(std::move(name));
  columns.push_back(std::move(values));
}

RunConfig parse_args(const std::vector<std::string>& raw_args) {
  CLI::App app{"BICM/CM mutual information, MMSE and power allocation over Gaussian channels.\n"
               "SNR is linear in y = sqrt(snr) x + z; snr_dB = 10 log10(snr).",
               "bicm"};
  app.require_subcommand(1);
  RunConfig config;
  std::string range_text;
  std::string units_text = "nats";
  std::optional<std::int64_t> mc_samples;
  std::uint64_t mc_seed = 1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--units", units_text, "nats or bits (information columns only)")
        ->check(CLI::IsMember({"nats", "bits"}));
    sub->add_option("--order", config.order, "Gauss-Hermite order per dimension")
        ->check(CLI::Range(1, kMaxQuadratureOrder));
    sub->add_option("-o,--output", config.output, "output CSV path (default stdout)");
  };
  auto add_constellation = [&](CLI::App* sub) {
    auto* id = sub->add_option("-c,--constellation", config.constellation_id,
                               "built-in family,m,labeling, e.g. qam,4,gray");
    auto* file = sub->add_option("--constellation-file", config.constellation_file,
                                 "constellation file: '<re> <im> <bits>' per line");
    id->excludes(file);
  };
  auto add_range = [&](CLI::App* sub, bool required) {
    auto* opt = sub->add_option("--snr-db", range_text, "start:stop:steps in dB, inclusive");
    if (required) opt->required();
  };
  auto add_mc = [&](CLI::App* sub) {
    sub->add_option("--mc-samples", mc_samples, "also run a Monte Carlo check with N samples");
    sub->add_option("--mc-seed", mc_seed, "Monte Carlo seed");
    sub->add_option("--mc-output", config.mc_output, "Monte Carlo CSV (default <output>.mc.csv)");
  };

  auto* mi = app.add_subcommand("mi", "CM and BICM mutual information over an snr grid");
  auto* mmse = app.add_subcommand("mmse", "CM MMSE over an snr grid");
  auto* derivative = app.add_subcommand("derivative", "BICM mutual-information derivative");
  auto* slope = app.add_subcommand("slope", "low-snr limit of the BICM derivative");
  auto* alloc = app.add_subcommand("allocate", "power allocation over parallel channels");
  auto* fig = app.add_subcommand("figure1", "Gaussian, 16-QAM CM and 16-QAM BICM derivative curves");

  for (auto* sub : {mi, mmse, derivative, slope, alloc, fig}) add_common(sub);
  for (auto* sub : {mi, mmse, derivative, slope}) add_constellation(sub);
  for (auto* sub : {mi, mmse, derivative}) add_range(sub, true);
  add_range(fig, false);
  for (auto* sub : {mi, mmse}) add_mc(sub);
  alloc->add_option("--problem", config.problem_file, "problem file")->required();
  alloc->add_option("--tol", config.tol, "KKT tolerance")->check(CLI::PositiveNumber);

  const auto args = join_range_values(raw_args);
  std::vector<const char*> argv{"bicm"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested{app.help("", CLI::AppFormatMode::All)};
  } catch (const CLI::CallForAllHelp&) {
    throw HelpRequested{app.help("", CLI::AppFormatMode::All)};
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what(), app.help());
  }

  if (mi->parsed()) config.command = Command::mi;
  if (mmse->parsed()) config.command = Command::mmse;
  if (derivative->parsed()) config.command = Command::derivative;
  if (slope->parsed()) config.command = Command::slope;
  if (alloc->parsed()) config.command = Command::allocate;
  if (fig->parsed()) config.command = Command::figure1;
  config.units = units_text == "bits" ? Units::bits : Units::nats;

  const bool needs_constellation = config.command == Command::mi ||
                                   config.command == Command::mmse ||
                                   config.command == Command::derivative ||
                                   config.command == Command::slope;
  if (needs_constellation) {
    if (config.constellation_id.empty() && config.constellation_file.empty()) {
      throw UsageError("missing --constellation or --constellation-file", app.help());
    }
    if (!config.constellation_id.empty()) {
      try {
        build_constellation(config.constellation_id);
      } catch (const InvalidArgument& e) {
        throw UsageError(e.what(), app.help());
      }
    }
  }
  if (config.command == Command::figure1 && range_text.empty()) range_text = "-20:30:101";
  if (!range_text.empty()) {
    try {
      const auto r = parse_range(range_text);
      config.start_db = r.start;
      config.stop_db = r.stop;
      config.steps = r.steps;
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what(), app.help());
    }
  }
  if (mc_samples) {
    if (*mc_samples < 1) throw UsageError("--mc-samples must be positive", app.help());
    if ((config.output.empty() || config.output == "-") && config.mc_output.empty()) {
      throw UsageError("--mc-samples needs --output or --mc-output", app.help());
    }
    config.mc_check = McCheck{*mc_samples, mc_seed};
    if (config.mc_output.empty()) config.mc_output = config.output + ".mc.csv";
  }
  return config;
}

Table figure1_table(const std::vector<Snr>& grid, const QuadratureRuled& rule) {
  const auto gray = build_constellation(Family::qam, 4, Labeling::gray);
  const auto sp = build_constellation(Family::qam, 4, Labeling::set_partitioning);
  Table t = snr_table(grid);
  std::vector<double> gaussian;
  for (auto s : grid) gaussian.push_back(gaussian_mmse(s));
  t.add("gaussian_mmse", std::move(gaussian));
  t.add("cm_mmse_16qam", to_vector(sweep(gray, grid, CurveKind::mmse, rule).values));
  t.add("bicm_derivative_16qam_gray",
        to_vector(sweep(gray, grid, CurveKind::bicm_derivative, rule).values));
  t.add("bicm_derivative_16qam_sp",
        to_vector(sweep(sp, grid, CurveKind::bicm_derivative, rule).values));
  return t;
}

void write_csv(std::ostream& out, const Table& table) {
  for (const auto& c : table.comments) out << "# " << c << '\n';
  for (std::size_t c = 0; c < table.names.size(); ++c) {
    out << (c ? "," : "") << table.names[c];
  }
  out << '\n';
  char buf[64];
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      std::snprintf(buf, sizeof buf, "%.12g", table.columns[c][r]);
      out << (c ? "," : "") << buf;
    }
    out << '\n';
  }
}

Table read_csv(std::istream& in) {
  Table t;
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.starts_with("#")) {
      t.comments.push_back(line.size() > 2 ? line.substr(2) : "");
      continue;
    }
    std::vector<std::string> cells;
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!header) {
      t.names = cells;
      t.columns.assign(cells.size(), {});
      header = true;
      continue;
    }
    if (cells.size() != t.names.size()) throw ParseError(lineno, "wrong number of fields");
    for (std::size_t c = 0; c < cells.size(); ++c) {
      try {
        t.columns[c].push_back(std::stod(cells[c]));
      } catch (const std::exception&) {
        throw ParseError(lineno, "invalid number '" + cells[c] + "'");
      }
    }
  }
  if (!header) throw ParseError(lineno, "missing header row");
  return t;
}

void run(const RunConfig& config, std::ostream& out) {
  const auto rule = gauss_hermite(config.order);
  const double unit = config.units == Units::bits ? 1.0 / std::numbers::ln2 : 1.0;
  const std::vector<std::string> snr_columns = {"snr_db", "snr_linear"};
  Table table;
  std::optional<Table> mc_table;

  switch (config.command) {
    case Command::mi:
    case Command::mmse:
    case Command::derivative: {
      const auto c = make_constellation(config);
      const auto grid = db_grid(config.start_db, config.stop_db, config.steps);
      table = snr_table(grid);
      if (config.command == Command::mi) {
        table.add("mi_cm", to_vector(sweep(c, grid, CurveKind::mi_cm, rule).values));
        table.add("mi_bicm", to_vector(sweep(c, grid, CurveKind::mi_bicm, rule).values));
      } else if (config.command == Command::mmse) {
        table.add("mmse_cm", to_vector(sweep(c, grid, CurveKind::mmse, rule).values));
      } else {
        table.add("bicm_derivative",
                  to_vector(sweep(c, grid, CurveKind::bicm_derivative, rule).values));
      }
      if (config.mc_check) {
        const auto& mc = *config.mc_check;
        mc_table = snr_table(grid);
        std::vector<McEstimate> a, b;
        for (auto s : grid) {
          if (config.command == Command::mi) {
            a.push_back(mc_mi_cm(c.points(), s, mc.samples, mc.seed));
            b.push_back(mc_mi_bicm(c, s, mc.samples, mc.seed));
          } else {
            a.push_back(mc_mmse(c.points(), s, mc.samples, mc.seed));
          }
        }
        if (config.command == Command::mi) {
          add_mc_columns(*mc_table, "mi_cm", table.columns[2], a);
          add_mc_columns(*mc_table, "mi_bicm", table.columns[3], b);
        } else {
          add_mc_columns(*mc_table, "mmse_cm", table.columns[2], a);
        }
        rescale(*mc_table, snr_columns, unit);
      }
      break;
    }
    case Command::slope: {
      const auto c = make_constellation(config);
      table.add("low_snr_slope", {low_snr_slope(c)});
      break;
    }
    case Command::figure1:
      table = figure1_table(db_grid(config.start_db, config.stop_db, config.steps), rule);
      break;
    case Command::allocate: {
      const auto set = load_problem_file(config.problem_file);
      const auto alloc = allocate(set, config.tol, rule);
      std::vector<double> index, gain, power, utility, info;
      for (std::size_t k = 0; k < set.channels.size(); ++k) {
        const auto& ch = set.channels[k];
        index.push_back(static_cast<double>(k));
        gain.push_back(ch.gain);
        power.push_back(alloc.powers[k]);
        utility.push_back(marginal_utility(ch, alloc.powers[k], rule));
        info.push_back(channel_information(ch, alloc.powers[k], rule));
        table.comments.push_back("channel " + std::to_string(k) + ": " + ch.name + " " +
                                 to_string(ch.mode));
      }
      std::ostringstream summary;
      summary.precision(12);
      summary << "budget=" << set.budget << " multiplier=" << alloc.multiplier * unit
              << " objective=" << alloc.objective * unit
              << " kkt_residual=" << alloc.kkt_residual * unit
              << " units=" << (config.units == Units::bits ? "bits" : "nats");
      table.comments.push_back(summary.str());
      table.add("channel", std::move(index));
      table.add("gain", std::move(gain));
      table.add("power", std::move(power));
      table.add("marginal_utility", std::move(utility));
      table.add("mi", std::move(info));
      rescale(table, {"channel", "gain", "power"}, unit);
      break;
    }
  }
  if (config.command != Command::allocate) rescale(table, snr_columns, unit);

  with_output(config.output, out, [&](std::ostream& os) { write_csv(os, table); });
  if (mc_table) {
    with_output(config.mc_output, out, [&](std::ostream& os) { write_csv(os, *mc_table); });
  }
}

int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig config;
  try {
    config = parse_args(args);
  } catch (const HelpRequested& h) {
    out << h.text;
    return kExitOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n" << e.usage();
    return kExitUsage;
  }
  try {
    run(config, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitComputation;
  }
  return kExitOk;
}

}  // namespace bicm::cli
