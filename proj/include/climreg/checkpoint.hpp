#pragma once

#include "climreg/encoder.hpp"
#include "climreg/grid_data.hpp"
#include "climreg/msn.hpp"
#include "climreg/views.hpp"

#include <filesystem>

namespace climreg {

/// Everything needed to run inference: both encoder instances, the
/// prototype bank, the training-split channel statistics and the view
/// configuration the encoder was trained with.
struct Checkpoint {
    EncoderParams anchor;
    EncoderParams target;
    PrototypeBank bank;
    ChannelStats stats;
    ViewConfig view;
};

/// packed_binary framing: one-line JSON header (tensor names/shapes, dtype
/// f32, meta) then a newline, then the concatenated little-endian payload.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace climreg
