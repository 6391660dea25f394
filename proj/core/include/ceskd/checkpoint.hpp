#pragma once

#include <string>

#include "ceskd/model.hpp"

namespace ceskd {

// Versioned container: text header (format version, layer specs, depth_tag,
// seed, float count, checksum) followed by the flat little-endian f32
// parameter blocks in layer order. Byte-exact round-trip.
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

// Short hex identity of a model's parameters.
std::string checkpoint_id(const Model& model);

}  // namespace ceskd
