#include <cstdint>
#include <iostream>
#include <string>

#include "beyondwords/errors.hpp"
#include "beyondwords/pipeline.hpp"
#include "beyondwords/synth.hpp"

#include "CLI11.hpp"

namespace bw = beyondwords;

namespace {

int fail(int code, const std::string& kind, const std::exception& e) {
  std::cerr << "beyondwords: " << kind << ": " << e.what() << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Embedding, clustering and agentic theme extraction over short-text corpora"};
  app.require_subcommand(1);

  std::string config;
  std::string stage;
  bool force = false;

  auto* run = app.add_subcommand("run", "Run every stage in order");
  run->add_option("--config", config, "Pipeline config file")->required();
  run->add_flag("--force", force, "Rerun stages even when their artifacts are current");

  auto* one = app.add_subcommand("stage", "Run a single stage");
  one->add_option("name", stage, "ingest, embed, compress, factorize, cluster, sample, themes or report")->required();
  one->add_option("--config", config, "Pipeline config file")->required();
  one->add_flag("--force", force, "Rerun even when the artifact is current");

  int posts = 300;
  int topics = 3;
  std::uint64_t seed = 7;
  std::string out;
  auto* synth = app.add_subcommand("synth", "Write a synthetic corpus with planted topics");
  synth->add_option("--posts", posts, "Number of posts")->required();
  synth->add_option("--topics", topics, "Number of planted topics")->required();
  synth->add_option("--out", out, "Output JSONL path")->required();
  synth->add_option("--seed", seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) {
      const bw::Corpus c = bw::synthesize_corpus(posts, topics, seed);
      bw::write_synthetic_jsonl(c, out);
      std::cout << "wrote " << c.size() << " posts to " << out << std::endl;
      return 0;
    }
    bw::Pipeline pipeline(bw::load_config(config), &std::cout);
    if (run->parsed()) {
      pipeline.run_all(force);
    } else {
      pipeline.run_stage(bw::parse_stage(stage), force);
    }
    std::cout << "run directory: " << pipeline.run_dir().string() << std::endl;
    return 0;
  } catch (const bw::ConfigError& e) {
    return fail(1, "config error", e);
  } catch (const bw::ServiceError& e) {
    return fail(3, "external service failure", e);
  } catch (const std::exception& e) {
    return fail(2, "stage failure", e);
  }
}
