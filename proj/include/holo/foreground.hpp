#pragma once

#include "holo/geometry.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace holo {

struct DimensionMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MissingFrame : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Row-major image; 1 channel (gray/depth) or 3 (RGB). Color data uses the
/// 0..255 range, depth data is in meters.
struct Frame {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<float> data;

    Frame() = default;
    Frame(int w, int h, int c, float fill = 0.0f)
        : width(w), height(h), channels(c),
          data(static_cast<std::size_t>(w) * h * c, fill) {}

    float& at(int x, int y, int c = 0) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    float at(int x, int y, int c = 0) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    bool same_shape(const Frame& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
};

/// Binary per-pixel labels: 0 background, 1 foreground.
struct SegMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> labels;

    SegMask() = default;
    SegMask(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), labels(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t& at(int x, int y) { return labels[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
};

/// Per-pixel, per-channel temporal median. Even frame counts average the two
/// central order statistics.
Frame median_background(std::span<const Frame> frames);

/// Foreground where the max-over-channels absolute difference exceeds the
/// threshold (0..255 scale for color input).
SegMask subtract_threshold(const Frame& frame, const Frame& background, double threshold);

enum class MorphOp { erode, dilate };

/// Binary morphology with a square structuring element of side 2*radius+1.
/// Pixels outside the image do not participate (border pixels see a smaller
/// window).
SegMask morph(const SegMask& mask, MorphOp op, int radius);

/// erode then dilate.
SegMask opening(const SegMask& mask, int radius);

/// Pluggable mask refiner: takes the input image, the background model, and
/// the previous foreground estimate, returns an improved estimate. This is
/// the seam where a learned segmenter can be dropped in.
class Segmenter {
public:
    virtual ~Segmenter() = default;
    virtual SegMask segment(const Frame& frame, const Frame& background,
                            const SegMask& estimate) const = 0;
};

/// Default classical refiner: morphological opening of the estimate.
class OpeningRefiner final : public Segmenter {
public:
    explicit OpeningRefiner(int radius = 1) : radius_(radius) {}
    SegMask segment(const Frame&, const Frame&, const SegMask& estimate) const override {
        return opening(estimate, radius_);
    }

private:
    int radius_;
};

/// Passes the incoming estimate through unchanged.
class IdentityRefiner final : public Segmenter {
public:
    SegMask segment(const Frame&, const Frame&, const SegMask& estimate) const override {
        return estimate;
    }
};

/// Seeds an estimate by subtract+threshold, then applies the refiner
/// `iterations` times, feeding each output back in.
SegMask segment_iterative(const Frame& frame, const Frame& background,
                          const Segmenter& segmenter, int iterations,
                          double threshold = 25.0);

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + fp + tn + fn; }
    ConfusionCounts& operator+=(const ConfusionCounts& o) {
        tp += o.tp;
        fp += o.fp;
        tn += o.tn;
        fn += o.fn;
        return *this;
    }
};

struct ClassWeights {
    double w_background = 1.0;
    double w_foreground = 1.0;
    // Set when a class never occurs; its weight is then 0.
    bool zero_background = false;
    bool zero_foreground = false;
};

/// Weight per class: median of the class frequencies divided by the class
/// frequency (even-count median = mean of the two central values).
ClassWeights class_weights(std::span<const SegMask> masks);

struct LossValue {
    double value = 0.0;
    Vec2 grad = Vec2::Zero();  // d(loss)/d(logits)
};

/// Class-balanced cross entropy over two logits:
/// w[c] * (-x[c] + log(sum_j exp(x[j]))), computed with max subtraction.
LossValue balanced_ce_loss(const Vec2& logits, int target_class, const ClassWeights& w);

/// Pixel tallies of pred against truth, optionally restricted to roi
/// (roi label 0 = excluded).
ConfusionCounts confusion(const SegMask& pred, const SegMask& truth,
                          const SegMask* roi = nullptr);

struct Metrics {
    double recall = 0.0;
    double specificity = 0.0;
    double fpr = 0.0;
    double fnr = 0.0;
    double pbc = 0.0;
    double precision = 0.0;
    double f1 = 0.0;
};

/// Standard confusion-count metrics. Any 0/0 ratio comes back as NaN rather
/// than 0. `literal_f1` switches F1 from the harmonic mean 2PR/(P+R) to the
/// plain ratio PR/(P+R) for comparison runs.
Metrics metrics(const ConfusionCounts& counts, bool literal_f1 = false);

struct SequenceReport {
    std::vector<std::string> frame_names;
    std::vector<ConfusionCounts> per_frame;
    ConfusionCounts aggregate;
    Metrics aggregate_metrics;
};

/// Evaluates index-aligned mask directories: counts are accumulated over all
/// frames first, metrics computed once on the totals.
SequenceReport evaluate_sequence(const std::filesystem::path& pred_dir,
                                 const std::filesystem::path& truth_dir,
                                 const std::optional<std::filesystem::path>& roi_dir = {},
                                 bool literal_f1 = false);

struct CategoryRow {
    std::string name;
    Metrics metrics;
};

/// Fixed-width report table; one row per category plus an Overall row when
/// more than one category is present.
std::string format_metrics_table(std::span<const CategoryRow> rows);
std::string format_metrics_csv(std::span<const CategoryRow> rows);

}  // namespace holo
