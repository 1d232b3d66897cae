#include <iostream>

#include "support/fixture_transcripts.hpp"

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: make_fixture_transcripts <corpus-dir> <out.jsonl>\n";
    return 1;
  }
  try {
    ibe::text::write_file(argv[2], ibe::testing::build_fixture_transcripts(argv[1]));
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  return 0;
}
