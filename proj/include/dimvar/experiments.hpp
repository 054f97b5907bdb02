#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dimvar/bodies.hpp"
#include "dimvar/symbols.hpp"
#include "dimvar/variation.hpp"

namespace dimvar {

// INI-style configuration: [section] then key = value. Lists are comma separated; integer
// lists also accept ranges "a..b".
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  bool has_section(const std::string& section) const { return data_.count(section) > 0; }
  std::string str(const std::string& section, const std::string& key, const std::string& fallback) const;
  double number(const std::string& section, const std::string& key, double fallback) const;
  long integer(const std::string& section, const std::string& key, long fallback) const;
  bool flag(const std::string& section, const std::string& key, bool fallback) const;
  std::vector<double> numbers(const std::string& section, const std::string& key,
                              std::vector<double> fallback) const;
  std::vector<int> integers(const std::string& section, const std::string& key, std::vector<int> fallback) const;
  std::vector<std::string> words(const std::string& section, const std::string& key,
                                 std::vector<std::string> fallback) const;

  void set(const std::string& section, const std::string& key, const std::string& value);
  // Unknown sections or keys are domain errors.
  void check_schema(const std::map<std::string, std::vector<std::string>>& allowed) const;

 private:
  std::map<std::string, std::map<std::string, std::string>> data_;
};

// Body names accepted in configs: B1, B2, Binf, or Bq with a number (e.g. B3).
BodySpec body_from_name(const std::string& name, int d);

struct ReportRow {
  std::string experiment;
  std::vector<std::pair<std::string, std::string>> params;
  double measured = 0.0;
  double threshold = kInf;
  bool pass = true;
  double runtime_s = 0.0;

  // Sets pass = measured <= threshold.
  void finalize();
  std::string param_string() const;  // k=v;k=v
};

ReportRow make_row(std::string experiment, std::vector<std::pair<std::string, std::string>> params,
                   double measured, double threshold);

struct Threshold {
  std::string name;
  double value;
  std::string invariant;
};
const std::vector<Threshold>& threshold_registry();
double threshold_value(const std::string& name);

enum class ReportFormat { Csv, Jsonl };
ReportFormat parse_format(const std::string& s);

// Sorted by experiment id, then parameter string. Runtimes are written only when
// `with_runtime`, so that reports are byte-identical across reruns.
std::string format_report(std::vector<ReportRow> rows, ReportFormat format, bool with_runtime = false);
void emit_report(const std::vector<ReportRow>& rows, ReportFormat format, const std::string& path,
                 bool with_runtime = false);
std::vector<ReportRow> parse_report(const std::string& text, ReportFormat format);

bool all_pass(const std::vector<ReportRow>& rows);
std::string fmt_num(double x);

// Sweeps: R(d) = max over trials of |V_r(M_t f)|_p / |f|_p for each (body, family), plus
// the stability statistic max_d R / min_d R. The lacunary sweep uses t = 2^n only and
// checks lacunary <= full trial by trial.
std::vector<ReportRow> run_dimension_sweep(const Config& cfg);
std::vector<ReportRow> run_lacunary_sweep(const Config& cfg);
// Both at once over the same trial fields.
std::vector<ReportRow> run_sweeps(const Config& cfg);

std::vector<ReportRow> run_decay_certification(const Config& cfg);
std::vector<ReportRow> run_multiplier_certification(const Config& cfg);
std::vector<ReportRow> run_transference_demo(const Config& cfg);

// Two or three columns t,re[,im] with a header line; times ascending.
SamplePath read_path_csv(const std::string& path);

// Dispatch for the CLI subcommands: variation, decompose, body-invariants,
// certify-multiplier, operator-run, sweep, transfer. Checks the config schema first.
std::vector<ReportRow> run_command(const std::string& command, const Config& cfg);

// Schema (sections and keys) accepted by each CLI subcommand.
const std::map<std::string, std::vector<std::string>>& config_schema(const std::string& command);

}  // namespace dimvar
