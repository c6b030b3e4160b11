// Regenerates the bundled Wyckoff table (data/wyckoff_table.v1) from the
// space-group reference data. Run once; the output is committed.

#include <cstdio>
#include <string>

#include "xtalgen/wyckoff_derive.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: wyckoff_table_gen <output-path>\n");
    return 1;
  }
  try {
    int total_positions = 0;
    xtalgen::WyckoffTable table;
    for (int n = 1; n <= 230; ++n) {
      auto positions = xtalgen::derive::derive_wyckoff_positions(n);
      total_positions += int(positions.size());
      std::printf("sg %3d: %2zu positions, general multiplicity %d\n",
                  n, positions.size(), positions.back().multiplicity);
      table.set_positions(n, std::move(positions));
    }
    std::printf("total Wyckoff positions: %d\n", total_positions);
    table.save(argv[1]);
    std::printf("wrote %s\n", argv[1]);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
