// Writes a deterministic synthetic sentiment dataset (train/dev/test.tsv,
// synonyms.tsv, embeddings.vec) for smoke runs and experiments.
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fadv/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"fadv-datagen: synthetic sentiment corpus generator"};
  std::string out_dir = "data/toy";
  fadv::ToySpec spec;
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--train", spec.n_train, "train examples")->capture_default_str();
  app.add_option("--dev", spec.n_dev, "dev examples")->capture_default_str();
  app.add_option("--test", spec.n_test, "test examples")->capture_default_str();
  app.add_option("--dim", spec.dim, "embedding dimensionality")->capture_default_str();
  app.add_option("--min-len", spec.min_len, "min sentence length")->capture_default_str();
  app.add_option("--max-len", spec.max_len, "max sentence length")->capture_default_str();
  app.add_option("--seed", spec.seed, "generator seed")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    fadv::write_toy_dataset(out_dir, spec);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  std::cout << "wrote " << out_dir << " (train=" << spec.n_train << " dev=" << spec.n_dev
            << " test=" << spec.n_test << " seed=" << spec.seed << ")\n";
  return 0;
}
