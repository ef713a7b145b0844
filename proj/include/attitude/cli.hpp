#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "attitude/model.hpp"

namespace attitude::cli {

enum class Mode : std::uint8_t { Cv3, TrainTest };

struct Paths {
  std::filesystem::path corpus;
  std::filesystem::path opinions;
  std::filesystem::path lexicons;
  std::filesystem::path embeddings;
  std::filesystem::path manifest;
  std::filesystem::path cache;
  std::filesystem::path model;
  std::filesystem::path out;
};

struct ExperimentConfig {
  Paths paths;
  ModelConfig model;
  TrainConfig train;
  Mode mode = Mode::Cv3;
  std::size_t jobs = 1;
  std::size_t folds = 3;
  std::size_t gradcheck_trials = 20;
  std::size_t heatmaps = 5;
  std::size_t synth_documents = 60;
};

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNumericFailure = 3 };

/// Parses arguments (argv[0] is the program name) and runs the subcommand.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// `key=value` lines naming the model options, read back by eval/analyze.
void write_model_config(const ExperimentConfig& cfg, const std::filesystem::path& path);

}  // namespace attitude::cli
