#pragma once

#include <filesystem>
#include <memory>

#include "agcn/model.hpp"

namespace agcn {

// Directory with one "<param name>.agt" per registry entry and a
// manifest.txt holding the model config followed by "# param <name> <shape>"
// comment lines.
void save_checkpoint(const std::filesystem::path& dir, const AgcnModel& model);

// Rebuilds the model from the manifest's config, then loads every weight.
// Missing or mis-shaped tensors are a DataError.
std::unique_ptr<AgcnModel> load_checkpoint(const std::filesystem::path& dir);

}  // namespace agcn
