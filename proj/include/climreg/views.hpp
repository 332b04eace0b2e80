#pragma once

#include "climreg/grid_data.hpp"
#include "climreg/rng.hpp"

#include <cstdint>
#include <vector>

namespace climreg {

enum class ViewKind { target, anchor };

/// Source rectangle of a crop, in cell indices of the input grid.
struct CropBox {
    int top = 0;
    int left = 0;
    int height = 0;
    int width = 0;
};

/// A resampled square view of one daily field. Values are stored
/// [channel][row][col]; the patch mask has one flag per non-overlapping
/// patch_size x patch_size tile, row-major over tiles.
struct View {
    int side = 0;     // S
    int channels = 0; // V
    std::vector<double> values;          // V*S*S
    std::vector<std::uint8_t> patch_mask; // (S/P)^2 once masked; empty = unmasked
    int patch_size = 0;                  // P used for the mask (0 until masked)
    CropBox crop_box;
    ViewKind kind = ViewKind::target;

    int n_patches() const {
        if (patch_size == 0) {
            return 0;
        }
        const int per_side = side / patch_size;
        return per_side * per_side;
    }
};

struct ScaleRange {
    double lo = 0.0;
    double hi = 1.0;
};

struct ViewConfig {
    int out_size = 32;  // S
    int patch_size = 4; // P, must divide S
    int n_anchors = 2;  // M >= 1
    ScaleRange target_scale{0.6, 1.0};
    ScaleRange anchor_scale{0.2, 0.6};
    double mask_ratio = 0.15;

    void validate() const; // throws ConfigError
};

/// Random area fraction from `scale`, aspect ratio uniform in [3/4, 4/3]
/// clipped to fit, resampled to out_size x out_size by bilinear
/// interpolation (corner-aligned). Rectangles never shrink below 2x2.
View random_resized_crop(const DailyField& field, const GridGeometry& geometry,
                         int n_channels, ScaleRange scale, int out_size, Rng& rng);

/// Marks round(ratio * n_patches) distinct patches, chosen uniformly without
/// replacement, and zeroes their values.
View mask_patches(View view, int patch_size, double ratio, Rng& rng);

/// Deterministic full-extent "crop": the whole grid resampled to out_size.
/// Used at inference time.
View full_view(const DailyField& field, const GridGeometry& geometry,
               int n_channels, int out_size, int patch_size);

struct SampleViews {
    View target;
    std::vector<View> anchors;
};

/// One unmasked target plus cfg.n_anchors independently masked anchors.
/// All randomness comes from substreams of `rng`.
SampleViews make_views(const DailyField& field, const GridGeometry& geometry,
                       int n_channels, const ViewConfig& cfg, const Rng& rng);

} // namespace climreg
