#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fcdbn/fusion.hpp"
#include "fcdbn/kvrl.hpp"

namespace fcdbn {

struct SynthSettings {
    std::size_t families = 40;
    std::size_t members = 8;
    double separability = 0.8;
    std::size_t corpus_families = 60;
    std::size_t corpus_members = 4;
};

struct FusionSettings {
    FusionMethod method = FusionMethod::plr;
    std::size_t components = 2;
    double threshold = 0.0;
    SvmConfig svm;
    ScoreSynthConfig synth;
};

/// Absolute paths after loading; relative entries in the file are resolved
/// against the directory holding the config.
struct RunPaths {
    std::string data_dir;
    std::string output_dir;
    std::string manifest;      // default <data_dir>/pairs.csv
    std::string corpus;        // default <data_dir>/corpus.txt
    std::string pretrained;    // default <output_dir>/pretrained.json
    std::string model;         // default <output_dir>/model.json
    std::string counts;        // default <config dir>/counts.csv
    std::string scores_train;  // empty: synthesize
    std::string scores_test;   // empty: synthesize
    std::string encode_list;   // empty: every image in the manifest
};

struct RunConfig {
    std::uint64_t seed = 0;
    RunPaths paths;
    SynthSettings synth;
    KvrlConfig kvrl;
    double kin_threshold = 0.5;
    FusionSettings fusion;

    void validate() const;
};

/// Parses a JSON config; unknown keys and out-of-range values throw config.
RunConfig parse_config(std::string_view text, const std::string& base_dir);
RunConfig load_config(const std::string& path);

/// Process exit code for an error: 2 for usage, configuration and input
/// validation failures, 3 for failures during computation.
int exit_code_for(Errc code) noexcept;

/// Runs one CLI invocation (args exclude the program name). Returns the exit
/// code; artifacts are written only when the command succeeds.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fcdbn
