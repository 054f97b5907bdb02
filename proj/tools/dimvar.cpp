// dimvar: command-line front end for the experiment harness.
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include "dimvar/error.hpp"
#include "dimvar/experiments.hpp"

namespace {

void list_thresholds() {
  for (const auto& t : dimvar::threshold_registry())
    std::printf("%-32s %-14s %s\n", t.name.c_str(), dimvar::fmt_num(t.value).c_str(), t.invariant.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dimvar: dimension-free variation experiments"};
  app.require_subcommand(0, 1);

  bool thresholds = false;
  app.add_flag("--list-thresholds", thresholds, "Print the threshold registry and exit");

  std::string config, out, format = "csv";
  long seed = -1;
  bool timings = false;
  const char* commands[] = {"variation", "decompose", "body-invariants", "certify-multiplier",
                            "operator-run", "sweep", "transfer"};
  for (const char* name : commands) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "INI config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Override [run] seed");
    sub->add_option("--out", out, "Report path (default: stdout)");
    sub->add_option("--format", format, "Report format")->check(CLI::IsMember({"csv", "jsonl"}));
    sub->add_flag("--timings", timings, "Add a runtime column (reports are then not reproducible)");
    sub->add_flag("--list-thresholds", thresholds, "Print the threshold registry and exit");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (thresholds) {
    list_thresholds();
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    auto cfg = dimvar::Config::load(config);
    if (seed >= 0) cfg.set("run", "seed", std::to_string(seed));
    if (out.empty()) out = cfg.str("run", "out", "");
    if (!app.get_subcommands().front()->count("--format")) format = cfg.str("run", "format", format);
    timings = timings || cfg.flag("run", "timings", false);
    const auto fmt = dimvar::parse_format(format);

    const auto rows = dimvar::run_command(command, cfg);
    if (out.empty() || out == "-")
      std::cout << dimvar::format_report(rows, fmt, timings);
    else
      dimvar::emit_report(rows, fmt, out, timings);
    const bool ok = dimvar::all_pass(rows);
    if (!ok)
      for (const auto& r : rows)
        if (!r.pass)
          std::cerr << "FAIL " << r.experiment << " " << r.param_string() << " measured=" << dimvar::fmt_num(r.measured)
                    << " threshold=" << dimvar::fmt_num(r.threshold) << "\n";
    return ok ? 0 : 1;
  } catch (const dimvar::DomainError& e) {
    std::cerr << "dimvar: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "dimvar: " << e.what() << "\n";
    return 2;
  }
}
