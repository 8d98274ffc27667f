#pragma once

#include <map>
#include <string>

#include "imfas/meta_data.hpp"
#include "imfas/trainer.hpp"

namespace imfas {

// Flat "key = value" files; '#' starts a comment.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_kv_text(const std::string& text);
KeyValues parse_kv_file(const std::string& path);

// Unknown keys are rejected so typos cannot silently fall back to defaults.
SyntheticSpec synthetic_spec_from(const KeyValues& kv);
TrainConfig train_config_from(const KeyValues& kv);
ExperimentConfig experiment_config_from(const KeyValues& kv);

// Canonical "key = value" rendering (sorted keys); hash input and manifest
// payload.
std::string canonical_text(const KeyValues& kv);

KeyValues to_key_values(const SyntheticSpec& spec);
KeyValues to_key_values(const TrainConfig& cfg);
KeyValues to_key_values(const ExperimentConfig& cfg);

}  // namespace imfas
