#include "climreg/views.hpp"
#include "climreg/errors.hpp"

#include <algorithm>
#include <cmath>

namespace climreg {

void ViewConfig::validate() const {
    if (out_size < 2 || patch_size < 1 || out_size % patch_size != 0) {
        throw ConfigError("view out_size must be >= 2 and divisible by patch_size");
    }
    if (n_anchors < 1) {
        throw ConfigError("need at least one anchor view");
    }
    if (mask_ratio < 0.0 || mask_ratio >= 1.0) {
        throw ConfigError("mask_ratio must be in [0, 1)");
    }
    auto check = [](const ScaleRange& s, const char* name) {
        if (!(s.lo > 0.0 && s.lo <= s.hi && s.hi <= 1.0)) {
            throw ConfigError(std::string(name) + " scale must satisfy 0 < lo <= hi <= 1");
        }
    };
    check(target_scale, "target");
    check(anchor_scale, "anchor");
}

namespace {

/// Corner-aligned bilinear resample of one crop rectangle to side x side.
/// Exact for fields linear in the coordinates, and the identity when the
/// crop already has the output size.
void resample_crop(const DailyField& field, const GridGeometry& geom, int n_channels,
                   const CropBox& box, int side, std::vector<double>& out) {
    const std::size_t cells = static_cast<std::size_t>(geom.height) * geom.width;
    out.assign(static_cast<std::size_t>(n_channels) * side * side, 0.0);
    const double sy = side > 1 ? static_cast<double>(box.height - 1) / (side - 1) : 0.0;
    const double sx = side > 1 ? static_cast<double>(box.width - 1) / (side - 1) : 0.0;
    for (int c = 0; c < n_channels; ++c) {
        const double* src = field.values.data() + static_cast<std::size_t>(c) * cells;
        double* dst = out.data() + static_cast<std::size_t>(c) * side * side;
        for (int i = 0; i < side; ++i) {
            const double y = box.top + i * sy;
            const int y0 = std::min(static_cast<int>(y), box.top + box.height - 2);
            const double fy = y - y0;
            for (int j = 0; j < side; ++j) {
                const double x = box.left + j * sx;
                const int x0 = std::min(static_cast<int>(x), box.left + box.width - 2);
                const double fx = x - x0;
                const double v00 = src[static_cast<std::size_t>(y0) * geom.width + x0];
                const double v01 = src[static_cast<std::size_t>(y0) * geom.width + x0 + 1];
                const double v10 = src[static_cast<std::size_t>(y0 + 1) * geom.width + x0];
                const double v11 = src[static_cast<std::size_t>(y0 + 1) * geom.width + x0 + 1];
                dst[static_cast<std::size_t>(i) * side + j] =
                    (1.0 - fy) * ((1.0 - fx) * v00 + fx * v01) +
                    fy * ((1.0 - fx) * v10 + fx * v11);
            }
        }
    }
}

} // namespace

View random_resized_crop(const DailyField& field, const GridGeometry& geometry,
                         int n_channels, ScaleRange scale, int out_size, Rng& rng) {
    if (out_size < 2) {
        throw ConfigError("crop out_size must be >= 2");
    }
    if (geometry.height < 2 || geometry.width < 2) {
        throw DataError("input grid must be at least 2x2 for cropping");
    }
    const double area_fraction = rng.uniform(scale.lo, scale.hi);
    const double aspect = rng.uniform(0.75, 4.0 / 3.0); // width / height
    const double target_area = area_fraction * geometry.height * geometry.width;

    // Clip to the grid while preserving the drawn area where possible, so an
    // area fraction of 1 always yields the full grid.
    double ch = std::sqrt(target_area / aspect);
    double cw = std::sqrt(target_area * aspect);
    if (cw > geometry.width) {
        cw = geometry.width;
        ch = target_area / cw;
    }
    if (ch > geometry.height) {
        ch = geometry.height;
        cw = std::min(target_area / ch, static_cast<double>(geometry.width));
    }
    const int crop_h = std::clamp(static_cast<int>(std::lround(ch)), 2, geometry.height);
    const int crop_w = std::clamp(static_cast<int>(std::lround(cw)), 2, geometry.width);

    View view;
    view.side = out_size;
    view.channels = n_channels;
    view.kind = ViewKind::target;
    view.crop_box.height = crop_h;
    view.crop_box.width = crop_w;
    view.crop_box.top = static_cast<int>(rng.uniform_int(geometry.height - crop_h + 1));
    view.crop_box.left = static_cast<int>(rng.uniform_int(geometry.width - crop_w + 1));
    resample_crop(field, geometry, n_channels, view.crop_box, out_size, view.values);
    return view;
}

View mask_patches(View view, int patch_size, double ratio, Rng& rng) {
    if (patch_size < 1 || view.side % patch_size != 0) {
        throw ConfigError("view side must be divisible by patch_size");
    }
    const int per_side = view.side / patch_size;
    const int n_patches = per_side * per_side;
    const int n_masked =
        std::clamp(static_cast<int>(std::llround(ratio * n_patches)), 0, n_patches);

    view.patch_size = patch_size;
    view.patch_mask.assign(n_patches, 0);
    view.kind = ViewKind::anchor;

    // Partial Fisher-Yates: the first n_masked entries are a uniform sample
    // without replacement.
    std::vector<int> order(n_patches);
    for (int i = 0; i < n_patches; ++i) {
        order[i] = i;
    }
    for (int i = 0; i < n_masked; ++i) {
        const int j = i + static_cast<int>(rng.uniform_int(n_patches - i));
        std::swap(order[i], order[j]);
        view.patch_mask[order[i]] = 1;
    }

    for (int p = 0; p < n_patches; ++p) {
        if (!view.patch_mask[p]) {
            continue;
        }
        const int pi = (p / per_side) * patch_size;
        const int pj = (p % per_side) * patch_size;
        for (int c = 0; c < view.channels; ++c) {
            double* plane = view.values.data() + static_cast<std::size_t>(c) * view.side * view.side;
            for (int i = pi; i < pi + patch_size; ++i) {
                for (int j = pj; j < pj + patch_size; ++j) {
                    plane[static_cast<std::size_t>(i) * view.side + j] = 0.0;
                }
            }
        }
    }
    return view;
}

View full_view(const DailyField& field, const GridGeometry& geometry, int n_channels,
               int out_size, int patch_size) {
    if (geometry.height < 2 || geometry.width < 2) {
        throw DataError("input grid must be at least 2x2 for resampling");
    }
    View view;
    view.side = out_size;
    view.channels = n_channels;
    view.kind = ViewKind::target;
    view.crop_box = CropBox{0, 0, geometry.height, geometry.width};
    resample_crop(field, geometry, n_channels, view.crop_box, out_size, view.values);
    view.patch_size = patch_size;
    view.patch_mask.assign(view.n_patches(), 0);
    return view;
}

SampleViews make_views(const DailyField& field, const GridGeometry& geometry,
                       int n_channels, const ViewConfig& cfg, const Rng& rng) {
    cfg.validate();
    SampleViews out;

    Rng target_rng = rng.fork(0);
    out.target = random_resized_crop(field, geometry, n_channels, cfg.target_scale,
                                     cfg.out_size, target_rng);
    out.target.kind = ViewKind::target;
    out.target.patch_size = cfg.patch_size;
    out.target.patch_mask.assign(out.target.n_patches(), 0);

    out.anchors.reserve(cfg.n_anchors);
    for (int m = 0; m < cfg.n_anchors; ++m) {
        Rng crop_rng = rng.fork(1 + 2 * static_cast<std::uint64_t>(m));
        Rng mask_rng = rng.fork(2 + 2 * static_cast<std::uint64_t>(m));
        View anchor = random_resized_crop(field, geometry, n_channels, cfg.anchor_scale,
                                          cfg.out_size, crop_rng);
        out.anchors.push_back(
            mask_patches(std::move(anchor), cfg.patch_size, cfg.mask_ratio, mask_rng));
    }
    return out;
}

} // namespace climreg
