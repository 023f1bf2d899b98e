#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bicm/infotheory.hpp"
#include "bicm/quadrature.hpp"

namespace bicm::cli {

enum class Command { mi, mmse, derivative, slope, allocate, figure1 };
enum class Units { nats, bits };

struct McCheck {
  std::int64_t samples = 1'000'000;
  std::uint64_t seed = 1;
};

struct RunConfig {
  Command command = Command::mi;
  std::string constellation_id;    // family,m,labeling
  std::string constellation_file;  // alternative to the id
  std::string problem_file;        // allocate only
  double start_db = 0.0;
  double stop_db = 0.0;
  int steps = 1;
  Units units = Units::nats;
  int order = kDefaultQuadratureOrder;
  double tol = 1e-6;
  std::optional<McCheck> mc_check;
  std::string output;     // empty or "-" means stdout
  std::string mc_output;  // defaults to <output>.mc.csv
};

/// Bad command line; `what()` holds the diagnostic, `usage()` the help text.
class UsageError : public std::runtime_error {
 public:
  UsageError(const std::string& what, std::string usage)
      : std::runtime_error(what), usage_(std::move(usage)) {}
  const std::string& usage() const { return usage_; }

 private:
  std::string usage_;
};

/// Thrown by parse_args for --help; carries the help text.
struct HelpRequested {
  std::string text;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitComputation = 2;

RunConfig parse_args(const std::vector<std::string>& args);

/// Columns of doubles with names; rows share the column length.
struct Table {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  std::vector<std::string> comments;  // written as leading "# " lines

  void add(std::string name, std::vector<double> values);
  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

/// snr_db, snr_linear and the four curves of the 16-QAM comparison:
/// Gaussian-input MMSE, 16-QAM CM MMSE, and the BICM derivative under Gray
/// and set-partitioning labelings. Values in nats.
Table figure1_table(const std::vector<Snr>& grid, const QuadratureRuled& rule);

inline const std::vector<std::string> kFigure1Columns = {
    "snr_db", "snr_linear", "gaussian_mmse", "cm_mmse_16qam", "bicm_derivative_16qam_gray",
    "bicm_derivative_16qam_sp"};

/// CSV with a mandatory header row and values at 12 significant digits.
void write_csv(std::ostream& out, const Table& table);
Table read_csv(std::istream& in);

/// Executes the command; writes results to config.output (or `out`).
void run(const RunConfig& config, std::ostream& out);

/// Parses, runs, and maps failures to exit codes (0 ok, 1 usage, 2 computation).
int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bicm::cli
