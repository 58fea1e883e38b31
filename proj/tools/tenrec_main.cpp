// Command-line driver.  All behaviour lives in cli_support.hpp; this file
// only maps outcomes onto the exit-code contract: 0 when every internal
// assertion passes, 2 when the configuration is rejected, 1 when a
// computation runs but an assertion fails (the first failing invariant is
// named on stderr).

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "tenrec/cli_support.hpp"

int main(int argc, char** argv) {
  tenrec::cli::RunConfig rc;
  CLI::App app{"verification lab for symmetric-tensor recovery and semiclassical correctors"};
  tenrec::cli::attach_options(app, rc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  rc.subcommand = tenrec::cli::selected_subcommand(app);

  try {
    tenrec::cli::validate(rc);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  }

  try {
    const tenrec::cli::RunReport rep = tenrec::cli::run(rc);
    std::fputs(rep.body.c_str(), stdout);
    if (const char* dir = std::getenv("TENREC_REPORT_DIR")) {
      const std::string path = std::string(dir) + "/" + rc.subcommand + "." + rep.ext;
      std::ofstream out(path, std::ios::binary);
      if (!out) {
        std::fprintf(stderr, "config error: cannot write report to %s\n", path.c_str());
        return 2;
      }
      out << rep.body;
    }
    if (!rep.pass) {
      std::fprintf(stderr, "assertion failed: %s\n", rep.first_failure.c_str());
      return 1;
    }
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "assertion failed: %s\n", e.what());
    return 1;
  }
}
