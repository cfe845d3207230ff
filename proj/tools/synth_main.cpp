// Writes a templated synthetic corpus, its declared split counts and
// matching hash-seeded word vectors.
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "adshield/error.hpp"
#include "adshield/synth.hpp"

int main(int argc, char** argv) {
  using namespace adshield;
  CLI::App app{"Generate a synthetic labeled corpus", "adshield-synth"};
  synth::SynthConfig cfg;
  std::string out, counts, embeddings;
  int dim = 32;
  app.add_option("--records", cfg.n_records, "Number of responses")->capture_default_str();
  app.add_option("--positive-rate", cfg.positive_rate, "Share of responses with an ad")->capture_default_str();
  app.add_option("--validation-fraction", cfg.validation_fraction)->capture_default_str();
  app.add_option("--test-fraction", cfg.test_fraction)->capture_default_str();
  app.add_option("--mention-rate", cfg.organic_mention_rate, "Organic product mentions")->capture_default_str();
  app.add_option("--id-prefix", cfg.id_prefix)->capture_default_str();
  app.add_option("--seed", cfg.seed)->capture_default_str();
  app.add_option("--out", out, "Corpus output")->required();
  app.add_option("--counts", counts, "Declared split counts (JSON)");
  app.add_option("--embeddings", embeddings, "Word vector output");
  app.add_option("--dim", dim, "Word vector dimension")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    const auto data = synth::generate_corpus(cfg);
    corpus::write_corpus(data, out);
    if (!counts.empty()) {
      nlohmann::ordered_json j;
      for (const auto& [sp, c] : corpus::count_by_split(data))
        j[std::string(corpus::to_string(sp))] = {{"total", c.total}, {"positive", c.positive}};
      std::ofstream(counts) << j.dump(2) << '\n';
    }
    if (!embeddings.empty())
      features::write_embeddings(synth::synthetic_embeddings(data, dim, cfg.seed), embeddings);
    std::cout << data.size() << " records (" << data.count_positive() << " with ads) -> " << out
              << '\n';
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
