#include "sparse_risk/cli.hpp"

#include <iostream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
  namespace cli = sparse_risk::cli;
  const std::vector<std::string> args(argv + 1, argv + argc);
  cli::RunConfig cfg;
  try {
    cfg = cli::parse_config(args);
  } catch (const cli::HelpRequested& h) {
    std::cout << h.what();
    return cli::kExitOk;
  } catch (const cli::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\nrun with --help for the list of options\n";
    return cli::kExitUsage;
  }
  return cli::execute(cfg, std::cout, std::cerr);
}
