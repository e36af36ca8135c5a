#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace splitdom::acceptance {

struct Outcome {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Runs every acceptance criterion; exceptions count as failures.
std::vector<Outcome> run();

/// Prints one PASS/FAIL line per criterion; true when all pass.
bool run_all(std::ostream& out);

}  // namespace splitdom::acceptance
