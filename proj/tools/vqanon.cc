// tools/vqanon.cc

// Copyright 2026  The vqanon Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Command-line entry point.  Exit status: 0 success, 1 validation or
// runtime failure, 2 usage error.

#include <iostream>

#include "CLI11.hpp"
#include "vqanon/pipeline.h"

namespace {

using namespace vqanon;

int Run(int argc, char **argv) {
  CLI::App app{"Attribute-conditioned voice anonymization on a synthetic corpus"};
  app.set_version_flag("--version", std::string(kVersion));
  std::string config_path, preset = "toy", out = "run", setting_name;
  std::optional<uint64_t> seed;
  app.add_option("--config", config_path, "Config file applied over the preset")
      ->check(CLI::ExistingFile);
  app.add_option("--preset", preset, "Base preset")->check(CLI::IsMember({"toy", "full"}));
  app.add_option("--seed", seed, "Run seed (overrides the config)");
  app.add_option("--out", out, "Run directory");
  app.require_subcommand(1);
  app.fallthrough();
  std::vector<CLI::App *> commands{
      app.add_subcommand("corpus", "Generate the toy corpus"),
      app.add_subcommand("train", "Train encoder, codebook, conditioner and vocoder"),
      app.add_subcommand("attackers", "Train the gender, speaker and content attackers"),
      app.add_subcommand("anonymize", "Anonymize the evaluation split"),
      app.add_subcommand("evaluate", "Emit the evaluation report"),
      app.add_subcommand("all", "Run every stage"),
  };
  commands[3]->add_option("--setting", setting_name, "SI, RI, RG, SIRG or RISG")->required();
  try {
    app.parse(argc, argv);
  } catch (const CLI::Success &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 2;
  }

  try {
    RunConfig config = RunConfig::Preset(preset);
    if (!config_path.empty()) config = LoadConfigFile(config_path, config);
    if (seed) {
      config.seed = *seed;
      config.Finalize();
    }
    RunDirectory run(out, config);
    run.progress = [](const std::string &line) { std::cerr << line << '\n'; };
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "corpus") run.Corpus();
    else if (cmd == "train") run.Train();
    else if (cmd == "attackers") run.Attackers();
    else if (cmd == "anonymize") run.Anonymize(ParseSetting(setting_name));
    else if (cmd == "evaluate") std::cout << run.Evaluate().FormatTable();
    else if (cmd == "all") std::cout << run.All().FormatTable();
    return 0;
  } catch (const vqanon::Error &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char **argv) { return Run(argc, argv); }
