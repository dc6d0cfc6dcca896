// Regenerates the synthetic evaluation set shipped under data/synthetic.
#include <iostream>

#include "flowqa/error.hpp"
#include "flowqa/synthetic.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_synthetic_manifest <out_dir>\n";
    return 1;
  }
  try {
    const auto manifest = flowqa::WriteSyntheticManifest(argv[1]);
    std::cout << "wrote " << manifest.rows.size() << " rows to " << argv[1] << "\n";
  } catch (const flowqa::Error& e) {
    std::cerr << "make_synthetic_manifest: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
