#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "switching/classical.hpp"
#include "switching/grid.hpp"
#include "switching/policy_iteration.hpp"
#include "switching/rl.hpp"

namespace switching {

// ValueField -> <stem>.json (grid metadata, model hash, layout) plus
// <stem>.bin (raw little-endian doubles, [regime][time][node]).
void save_value_field(const ValueField& field, const std::string& stem,
                      std::uint64_t model_hash);
ValueField load_value_field(const std::string& stem, std::uint64_t* model_hash_out = nullptr);

// stable CSV schemas (documented in the README)
void write_iteration_report_csv(const IterationReport& report, const std::string& path);
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);
void write_training_log_csv(const std::vector<TrainLogEntry>& log, const std::string& path);

// value slice at fixed time: column 0 the varied coordinate, then one value
// column per regime
void write_value_slice_csv(const std::string& path, const std::vector<double>& coords,
                           const std::vector<std::vector<double>>& per_regime_values);

// switching probabilities pi_ij * dt: header p{i}_{j} for i != j
void write_probability_slice_csv(const std::string& path, const std::vector<double>& coords,
                                 int num_regimes,
                                 const std::vector<std::vector<double>>& per_pair_probs);

void write_paths_csv(const std::string& path, const std::vector<EpisodePath>& paths);

// Network checkpoint: flat parameters (bit-exact hex), architecture
// descriptor, model hash and seed lineage, integrity checksum.
struct Checkpoint {
    VectorXd params;
    nlohmann::json architecture;  // as written
    std::uint64_t model_hash = 0;
    std::vector<std::uint64_t> seeds;
};

void save_checkpoint(const std::string& path, const ValueApproximator& net,
                     const VectorXd& params, std::uint64_t model_hash,
                     const std::vector<std::uint64_t>& seeds);
Checkpoint load_checkpoint(const std::string& path);
// throws ValidationError when the stored architecture does not match `expected`
VectorXd load_checkpoint_params(const std::string& path, const ValueApproximator& expected);

nlohmann::json architecture_json(const ValueApproximator& net);

// run manifest: config snapshot, seeds, version, output file hashes
void write_manifest(const std::string& path, const nlohmann::json& config_snapshot,
                    std::uint64_t seed, std::uint64_t model_hash,
                    const std::vector<std::string>& output_files);

std::uint64_t file_hash(const std::string& path);

extern const char* const kVersion;

}  // namespace switching
