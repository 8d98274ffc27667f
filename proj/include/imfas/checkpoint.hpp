#pragma once

#include <string>

#include "imfas/meta_data.hpp"
#include "imfas/model.hpp"

namespace imfas {

// Everything needed to reuse a trained model on new data: the parameters and
// the meta-feature scaler fitted on the training split.
struct TrainedModel {
    ImfasParams params;
    FeatureScaler scaler;
};

// Versioned binary container of named f64 tensors; round-trips bitwise.
void save_checkpoint(const TrainedModel& model, const std::string& path);
TrainedModel load_checkpoint(const std::string& path);

}  // namespace imfas
